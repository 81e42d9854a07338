#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "w2eit/circle_ot.hpp"
#include "w2eit/fem_disk.hpp"

namespace w2eit::eit {

// --- conductivity scenes -------------------------------------------------

struct Inclusion {
    enum class Kind { disk, ellipse };
    Kind kind = Kind::disk;
    double cx = 0.0, cy = 0.0;
    double ax = 0.0, ay = 0.0;  ///< radius (disk uses ax) or semi-axes
    double value = 1.0;
};

struct ConductivityScene {
    double background = 1.0;
    std::vector<Inclusion> inclusions;
    double value_at(double x, double y) const;
};

fem::NodalField scene_to_field(const fem::DiskMesh& mesh,
                               const ConductivityScene& scene);

// --- data synthesis ------------------------------------------------------

/// Trigonometric current patterns sin(n theta), cos(n theta), n = 1..n_max,
/// sampled at the boundary node angles and mean-subtracted.
struct CurrentBasis {
    int n_max = 0;
    std::vector<fem::BoundaryFunction> patterns;
    std::vector<std::string> names;
};

CurrentBasis make_currents(const fem::DiskMesh& mesh, int n_max);

struct MeasurementSet {
    std::vector<fem::BoundaryFunction> traces;  ///< as measured (noise included)
    std::vector<fem::BoundaryFunction> clean;   ///< noiseless reference
    double eps = 0.0;
    std::uint64_t seed = 0;
    std::string data_mesh_id;
    std::string mesh_id;
};

/// Solves the forward problem for every basis pattern on the (refined) data
/// mesh, restricts the traces to the inversion-mesh boundary by linear
/// interpolation in the angle, and adds iid per-node Gaussian noise scaled
/// by eps times the largest clean trace amplitude. Deterministic given seed.
MeasurementSet synthesize_data(const fem::DiskMesh& data_mesh,
                               const fem::NodalField& sigma_true_data,
                               const fem::DiskMesh& inv_mesh,
                               const CurrentBasis& basis, double eps,
                               std::uint64_t seed);

// --- misfit --------------------------------------------------------------

enum class Misfit { w2, l2 };

struct InversionConfig {
    Misfit misfit = Misfit::w2;
    double a = 2.0;           ///< trace-to-density normalization constant
    double beta = 0.0;        ///< total-variation regularization weight
    double s_min = 1.0;
    double s_max = 1000.0;
    double s_stop = 1e-3;
    int memory = 5;           ///< nonmonotone window M
    double tau = 1e-5;
    double rho1 = 0.4;
    double rho2 = 0.6;
    int i_max = 500;
    double c0 = 0.1;
    double c1 = 10.0;
    int warm_start_m = 0;     ///< leading iterations run with the L2 misfit
    double newton_eps = 1e-12;
    void validate() const;
};

/// Shifts a boundary trace to zero mean, rescales by 1/a and lifts by one:
/// the resulting samples on t = theta/(2 pi) form a unit-mass density.
ot::PeriodicDensity normalize_trace(const fem::DiskMesh& mesh,
                                    const fem::BoundaryFunction& phi,
                                    double a);

struct MisfitResult {
    double value = 0.0;
    fem::BoundaryFunction grad;  ///< zero-mean boundary function
};

/// W2 branch: W2^2 of the normalized densities with the Kantorovich
/// potential mapped back to the boundary (scaled by 1/(2 pi a) so that it
/// pairs with the arclength inner product). L2 branch: squared L2 misfit
/// with gradient u - phi. Both gradients are mean-subtracted.
MisfitResult misfit_and_boundary_gradient(const fem::DiskMesh& mesh,
                                          const fem::BoundaryFunction& u,
                                          const fem::BoundaryFunction& phi,
                                          const InversionConfig& cfg);

// --- objective and gradient ----------------------------------------------

struct ObjectiveEval {
    double value = 0.0;                        ///< misfit sum + beta R
    std::vector<double> pattern_misfit;
    std::vector<fem::NodalField> forwards;
    std::vector<fem::BoundaryFunction> traces;
    std::vector<fem::BoundaryFunction> boundary_grads;
    std::shared_ptr<const fem::NeumannSolver> solver;
};

ObjectiveEval eval_objective(const fem::DiskMesh& mesh,
                             const fem::NodalField& sigma,
                             const MeasurementSet& data,
                             const CurrentBasis& basis,
                             const InversionConfig& cfg);

struct GradientEval {
    std::vector<double> density;  ///< pre-smoothing gradient (nodal density)
    fem::NodalField smoothed;     ///< Sobolev gradient, zero on the boundary
};

/// Adjoint solves against the misfit boundary gradients, accumulated to the
/// gradient density and smoothed by the homogeneous-Dirichlet Helmholtz
/// preconditioner.
GradientEval eval_gradient(const fem::DiskMesh& mesh, const ObjectiveEval& fe,
                           const fem::NodalField& sigma,
                           const InversionConfig& cfg);

std::pair<double, fem::NodalField> objective_and_gradient(
    const fem::DiskMesh& mesh, const fem::NodalField& sigma,
    const MeasurementSet& data, const CurrentBasis& basis,
    const InversionConfig& cfg);

/// Smoothed total variation sum_T area_T sqrt(|grad sigma|^2 + kappa^2).
double tv_value(const fem::DiskMesh& mesh, const std::vector<double>& sigma,
                double kappa = 1e-6);
std::vector<double> tv_gradient(const fem::DiskMesh& mesh,
                                const std::vector<double>& sigma,
                                double kappa = 1e-6);

// --- Barzilai-Borwein inversion ------------------------------------------

struct IterRecord {
    int k = 0;
    double phi = 0.0;    ///< accepted objective value
    double step = 0.0;   ///< accepted step s_k
    int backtracks = 0;
    char branch = 'W';   ///< 'W' or 'L' misfit used at this iteration
};

struct InversionRun {
    std::vector<std::vector<double>> sigma_history;  ///< [0] is sigma0
    std::vector<IterRecord> records;
    std::string stop_reason;
    const std::vector<double>& final_sigma() const {
        return sigma_history.back();
    }
};

/// Nonmonotone Barzilai-Borwein descent with H1 step quantities, pointwise
/// clipping proxy for beta = 0 and a short projected-gradient proxy solve
/// for beta > 0. Optional warm start runs the first iterations with the L2
/// misfit before switching to W2.
InversionRun bb_invert(const fem::DiskMesh& mesh, const fem::NodalField& sigma0,
                       const MeasurementSet& data, const CurrentBasis& basis,
                       const InversionConfig& cfg);

// --- landscape scans -------------------------------------------------------

struct PolarGrid {
    std::vector<double> radii;
    std::vector<double> angles;
};

struct LandscapePoint {
    double r = 0.0;
    double theta = 0.0;
    double j_w2 = 0.0;
    double j_l2 = 0.0;
};

/// Objective value per candidate inclusion center (no inversion), for both
/// misfit branches. Candidates are independent; the scan runs under OpenMP.
std::vector<LandscapePoint> landscape_scan(const fem::DiskMesh& mesh,
                                           const MeasurementSet& data,
                                           const CurrentBasis& basis,
                                           const InversionConfig& cfg,
                                           const PolarGrid& grid,
                                           double incl_radius,
                                           double incl_value);
/// Serial reference kept for testing.
std::vector<LandscapePoint> landscape_scan_serial(const fem::DiskMesh& mesh,
                                                  const MeasurementSet& data,
                                                  const CurrentBasis& basis,
                                                  const InversionConfig& cfg,
                                                  const PolarGrid& grid,
                                                  double incl_radius,
                                                  double incl_value);

/// L2(disk) relative error between nodal fields (mass-matrix norm).
double relative_l2_error(const fem::DiskMesh& mesh,
                         const std::vector<double>& sigma,
                         const std::vector<double>& sigma_ref);

}  // namespace w2eit::eit
