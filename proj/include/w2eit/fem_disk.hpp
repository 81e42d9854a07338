#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace w2eit::fem {

/// Structured polar triangulation of the unit disk: concentric rings of
/// 6j nodes at radius j/R, fan-connected, so refinement r gives R = 5*2^r
/// rings and exactly 6 R^2 triangles. Boundary nodes are ordered by polar
/// angle starting at theta = 0.
struct DiskMesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> tris;  ///< CCW connectivity
    std::vector<double> tri_area;
    std::vector<int> boundary;             ///< node ids ordered by angle
    std::vector<double> boundary_angle;    ///< strictly increasing in [0,2pi)
    std::vector<double> boundary_edge;     ///< chord length boundary[i]->boundary[i+1]
    std::vector<double> boundary_weight;   ///< lumped arclength weight per boundary node
    int refinement = 0;

    int n_nodes() const { return static_cast<int>(nodes.size()); }
    int n_tris() const { return static_cast<int>(tris.size()); }
    int n_boundary() const { return static_cast<int>(boundary.size()); }
    double circumference() const;
    std::string id() const { return "disk-polar-r" + std::to_string(refinement); }
};

DiskMesh generate_disk_mesh(int refinement);

enum class FieldRole { conductivity, potential, gradient_density };

/// One real coefficient per mesh node.
struct NodalField {
    std::vector<double> values;
    FieldRole role = FieldRole::potential;
};

/// One real value per ordered boundary node.
struct BoundaryFunction {
    std::vector<double> values;
};

// --- assembly ---------------------------------------------------------

/// P1 stiffness matrix for -div(sigma grad u); sigma is interpolated to the
/// triangle centroid (one-point quadrature). Element loop runs under OpenMP.
Eigen::SparseMatrix<double> assemble_stiffness(const DiskMesh& mesh,
                                               const NodalField& sigma);
/// Serial reference assembly kept for testing the parallel kernel.
Eigen::SparseMatrix<double> assemble_stiffness_serial(const DiskMesh& mesh,
                                                      const NodalField& sigma);
Eigen::SparseMatrix<double> assemble_mass(const DiskMesh& mesh);
/// One third of the incident triangle area per node.
std::vector<double> lumped_node_area(const DiskMesh& mesh);

// --- boundary quadrature ----------------------------------------------

/// Load vector of the boundary current j (consistent P1 edge-mass quadrature).
Eigen::VectorXd boundary_load(const DiskMesh& mesh, const BoundaryFunction& j);
/// L2(boundary) inner product through the same edge-mass quadrature.
double boundary_inner(const DiskMesh& mesh, const BoundaryFunction& a,
                      const BoundaryFunction& b);
double boundary_mean(const DiskMesh& mesh, const BoundaryFunction& f);
/// Subtracts the arclength-weighted mean in place.
void make_zero_mean(const DiskMesh& mesh, BoundaryFunction& f);

// --- forward / adjoint solver ------------------------------------------

/// Neumann problem -div(sigma grad u) = 0, sigma du/dn = j, with the
/// zero-boundary-mean constraint enforced by a scalar Lagrange multiplier.
/// The factorization is cached, so repeated solves against the same sigma
/// (forward patterns and adjoint loads) reuse it.
class NeumannSolver {
  public:
    NeumannSolver(const DiskMesh& mesh, const NodalField& sigma);
    NodalField solve(const BoundaryFunction& j) const;
    std::vector<NodalField> solve_many(
        std::span<const BoundaryFunction> currents) const;
    const DiskMesh& mesh() const { return *mesh_; }

  private:
    const DiskMesh* mesh_;
    Eigen::SparseMatrix<double> system_;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

NodalField solve_forward(const DiskMesh& mesh, const NodalField& sigma,
                         const BoundaryFunction& j);

/// Restriction of u to the ordered boundary nodes, mean-subtracted against
/// the arclength weights.
BoundaryFunction boundary_trace(const DiskMesh& mesh, const NodalField& u);

/// -grad(u_tilde) . grad(u), constant per triangle, lumped to nodes by area
/// weighting.
NodalField adjoint_gradient_density(const DiskMesh& mesh, const NodalField& u,
                                    const NodalField& u_tilde);

/// Sum of -grad(ut_p) . grad(u_p) over pattern pairs; triangle loop under
/// OpenMP with a race-free per-triangle buffer.
std::vector<double> gradient_density_accumulate(
    const DiskMesh& mesh, std::span<const NodalField> us,
    std::span<const NodalField> uts);
/// Serial reference (pattern-outer loop) kept for testing.
std::vector<double> gradient_density_accumulate_serial(
    const DiskMesh& mesh, std::span<const NodalField> us,
    std::span<const NodalField> uts);

/// Solves -lap(w) + w = g with homogeneous Dirichlet data; the returned
/// field vanishes on boundary nodes exactly.
NodalField sobolev_smooth(const DiskMesh& mesh, const NodalField& g);

/// Periodic linear interpolation of boundary data in the angle variable.
std::vector<double> interpolate_trace(const std::vector<double>& src_angles,
                                      const std::vector<double>& src_values,
                                      const std::vector<double>& dst_angles);

}  // namespace w2eit::fem
