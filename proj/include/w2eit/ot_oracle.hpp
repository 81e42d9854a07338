#pragma once

#include <utility>
#include <vector>

#include "w2eit/circle_ot.hpp"

namespace w2eit::oracle {

/// Independent piecewise-constant CDF model used only by the oracle code
/// paths. Rebuilt from the normalized samples with the same staggered-cell
/// convention as the production tables, but with its own representation and
/// evaluation routines so the two paths share no code.
class OracleCdf {
  public:
    explicit OracleCdf(const ot::PeriodicDensity& density);

    int cells() const { return n_; }
    double cell_value(int i) const;   ///< density on cell i (periodic)
    double cell_left(int i) const;    ///< left breakpoint of cell i
    double cum(int i) const;          ///< cumulative value at cell_left(i)
    double inv(double y) const;       ///< inverse CDF, y in (-1, 2)
    int locate(double y) const;       ///< cell i with cum(i) <= y < cum(i+1)

  private:
    int n_ = 0;
    double h_ = 0.0;
    std::vector<double> vals_;
    std::vector<double> cum_;  // cumulative at cell_left(i), i = 0..n
};

/// Exact transport cost between the two staggered piecewise-constant models
/// at shift alpha, integrated in the mass variable:
///   I(alpha) = int_0^1 (F^{-1}(y) - G^{-1}(y - alpha))^2 dy.
double transport_cost_exact(const OracleCdf& F, const OracleCdf& G,
                            double alpha);

/// Composite-trapezoid estimate of the same integral on an oversampled mass
/// grid (oversample * n points); secondary cross-check of the exact route.
double transport_cost_trapezoid(const OracleCdf& F, const OracleCdf& G,
                                double alpha, int oversample = 8);

/// 1-D (line, no wraparound) quadratic transport cost
///   W2^2 = int_0^1 |F^{-1}(t) - G^{-1}(t)|^2 dt,
/// exact for the piecewise-constant density models on [0,1].
double w2_line(const ot::PeriodicDensity& f, const ot::PeriodicDensity& g);

struct GridSearchResult {
    double alpha = 0.0;
    double w2sq = 0.0;
    long index = 0;  ///< grid index of the minimizer
};

/// Minimum of I(alpha) over a uniform alpha-grid of `grid_points` cell
/// midpoints on (-1, 1). For large grids the scan runs coarse-then-refine,
/// which returns the same grid minimizer as the full scan for convex I;
/// see alpha_grid_search_full for the literal scan.
GridSearchResult alpha_grid_search(const ot::PeriodicDensity& f,
                                   const ot::PeriodicDensity& g,
                                   long grid_points);

/// Literal full scan over every grid point (serial reference).
GridSearchResult alpha_grid_search_full(const ot::PeriodicDensity& f,
                                        const ot::PeriodicDensity& g,
                                        long grid_points);

/// Equal-mass atom locations drawn as midpoint quantiles of the densities.
struct DiscreteSamplePoints {
    std::vector<double> x;  ///< quantiles of f, sorted ascending in [0,1)
    std::vector<double> y;  ///< quantiles of g, sorted ascending in [0,1)
};

DiscreteSamplePoints quantile_samples(const ot::PeriodicDensity& f,
                                      const ot::PeriodicDensity& g, int n);

struct BruteForceResult {
    double cost = 0.0;              ///< min over permutations of (1/n) sum d^2
    std::vector<int> permutation;   ///< optimal assignment x_i -> y_perm[i]
    bool cyclic_shift_optimal = false;
    double best_cyclic_cost = 0.0;  ///< min over the n cyclic shifts only
};

/// Exhaustive n! matching with the circular geodesic distance; n <= 8.
BruteForceResult brute_force_circle_w2(const DiscreteSamplePoints& samples);

}  // namespace w2eit::oracle
