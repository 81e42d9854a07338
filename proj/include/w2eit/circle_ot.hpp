#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace w2eit::ot {

/// Thrown when the Newton iteration for the shift parameter fails to
/// converge within the iteration cap. Carries the last iterate.
struct ConvergenceError : std::runtime_error {
    ConvergenceError(const std::string& msg, double alpha, int iterations)
        : std::runtime_error(msg), last_alpha(alpha), iterations(iterations) {}
    double last_alpha;
    int iterations;
};

/// Strictly positive density on [0,1), sampled at tau_i = i/N and
/// periodically extended. Stored with unit mass (sum values / N == 1).
class PeriodicDensity {
  public:
    /// Lower bound enforced on the normalized samples.
    static constexpr double floor = 1e-6;

    /// Validates and normalizes raw samples. Rejects non-positive samples
    /// (identifying the offending index) and samples that fall below the
    /// floor after normalization; no silent clipping.
    static PeriodicDensity from_samples(std::vector<double> raw);

    const std::vector<double>& values() const { return values_; }
    int size() const { return static_cast<int>(values_.size()); }
    double grid_step() const { return 1.0 / size(); }
    /// Mass of the raw input per period (the rescale parameter).
    double raw_mass() const { return raw_mass_; }

  private:
    PeriodicDensity() = default;
    std::vector<double> values_;
    double raw_mass_ = 1.0;
};

/// Piecewise-constant staggered-grid density model on the extended window
/// [-1,2] and its piecewise-linear cumulative table. Breakpoints sit at
/// t_i = (2i-1)h/2 (the sample nodes are cell midpoints), with the window
/// ends clamped to -1 and 2. Index range: i in [-n, 2n] for cells,
/// [-n, 2n+1] for breakpoints. Values are generated on demand from the
/// one-period arrays, so periodicity F(t+1) = F(t)+1 holds exactly.
class CdfTable {
  public:
    int n = 0;
    double h = 0.0;
    double mass = 1.0;  ///< raw input mass per period

    double breakpoint(int i) const;       ///< t_i
    double slope(int i) const;            ///< f_i, cell i density value
    double cum(int i) const;              ///< F_i = F_h(t_i)
    double cum_at_sample(int j) const;    ///< F_h(tau_j), tau_j = j*h, j in [0,n)

    double cdf(double t) const;           ///< F_h(t), t in [-1, 2)
    double inv(double y) const;           ///< F_h^{-1}(y), y in [-1, 2)
    int locate_cum(double y) const;       ///< i with F_i <= y < F_{i+1}

  private:
    friend CdfTable build_cdf(const PeriodicDensity& density);
    std::vector<double> values_;    // normalized samples, one period
    std::vector<double> cum_base_;  // F_i for i = 1..n (index 0 unused)
};

/// Staggered piecewise-constant extension of the density and its
/// cumulative table over [-1,2].
CdfTable build_cdf(const PeriodicDensity& density);

struct DerivativeTriple {
    double value;   ///< I(alpha)
    double first;   ///< I'(alpha)  = 2*int F^{-1}(G(t)+alpha) dt - 1
    double second;  ///< I''(alpha) = 2*int dt / f(F^{-1}(G(t)+alpha)) > 0
};

/// Exact (to rounding) evaluation of I(alpha) = int |F^{-1}-(G^alpha)^{-1}|^2
/// and its first two alpha-derivatives, by merging the two cumulative
/// sequences into one increasing sequence of segment boundaries. O(n).
/// Sign convention follows strict convexity: I'' > 0 and I'(alpha) increasing.
DerivativeTriple eval_I_derivatives(const CdfTable& F, const CdfTable& G,
                                    double alpha);

struct AlphaSolution {
    double alpha_star = 0.0;
    double w2_squared = 0.0;
    int newton_iterations = 0;
    double residual = 0.0;  ///< |I'(alpha_star)|
};

/// Newton iteration for I'(alpha) = 0, started at alpha = 0 and safeguarded
/// by bisection on the sign bracket I'(-1) < 0 < I'(1). Stops when
/// successive iterates differ by less than eps; throws ConvergenceError
/// after 100 iterations.
AlphaSolution solve_alpha(const CdfTable& F, const CdfTable& G, double eps);

/// Quadratic Wasserstein distance (squared) between two densities on the
/// circle: W2^2(f,g) = inf_alpha int |F^{-1} - (G^alpha)^{-1}|^2 dt.
AlphaSolution w2_circle(const PeriodicDensity& f, const PeriodicDensity& g,
                        double eps = 1e-12);

/// Optimal transport map T = (G^{alpha*})^{-1} o F evaluated on the lifted
/// line; monotone with T(t+1) = T(t) + 1.
class TransportMap {
  public:
    TransportMap(CdfTable source, CdfTable target, double alpha_star)
        : F_(std::move(source)), G_(std::move(target)), alpha_(alpha_star) {}
    double operator()(double t) const;
    double alpha_star() const { return alpha_; }

  private:
    CdfTable F_, G_;
    double alpha_;
};

/// Builds the transport map pushing f forward to g. The solution must have
/// been produced from the same pair; a stale solution is rejected.
TransportMap optimal_map(const PeriodicDensity& f, const PeriodicDensity& g,
                         const AlphaSolution& sol);

struct PotentialGrid {
    std::vector<double> values;  ///< phi at tau_k = k*h, zero grid mean
    double c = 0.0;              ///< additive constant chosen for zero mean
};

/// Kantorovich potential phi(t) = 2 int_0^t (tau - T(tau)) dtau + c, the
/// Frechet derivative of W2^2 with respect to f. Displacements are taken on
/// the lifted line with representative |tau - T(tau)| < 1; left-endpoint
/// Riemann sum on the sample grid; c fixed by zero grid mean.
PotentialGrid kantorovich_potential(const PeriodicDensity& f,
                                    const PeriodicDensity& g,
                                    const AlphaSolution& sol);

}  // namespace w2eit::ot
