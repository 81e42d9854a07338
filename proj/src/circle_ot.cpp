#include "w2eit/circle_ot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace w2eit::ot {

PeriodicDensity PeriodicDensity::from_samples(std::vector<double> raw) {
    const int n = static_cast<int>(raw.size());
    if (n < 2) throw std::domain_error("density needs at least 2 samples");
    for (int i = 0; i < n; ++i) {
        if (!(raw[i] > 0.0) || !std::isfinite(raw[i]))
            throw std::domain_error("non-positive density sample at index " +
                                    std::to_string(i));
    }
    const double h = 1.0 / n;
    const double mass = h * std::accumulate(raw.begin(), raw.end(), 0.0);
    for (int i = 0; i < n; ++i) {
        raw[i] /= mass;
        if (raw[i] < floor)
            throw std::domain_error("density sample at index " + std::to_string(i) +
                                    " falls below the positivity floor after "
                                    "normalization");
    }
    PeriodicDensity d;
    d.values_ = std::move(raw);
    d.raw_mass_ = mass;
    return d;
}

CdfTable build_cdf(const PeriodicDensity& density) {
    CdfTable table;
    table.n = density.size();
    table.h = density.grid_step();
    table.mass = density.raw_mass();
    table.values_ = density.values();
    // F_1 = (h/2) f_0, F_{i+1} = F_i + h f_i; one period, extended exactly
    // via F_{i+n} = F_i + 1.
    table.cum_base_.assign(table.n + 1, 0.0);
    double run = 0.5 * table.h * table.values_[0];
    for (int i = 1; i <= table.n; ++i) {
        table.cum_base_[i] = run;
        if (i < table.n) run += table.h * table.values_[i];
    }
    return table;
}

double CdfTable::breakpoint(int i) const {
    if (i == -n) return -1.0;
    if (i == 2 * n + 1) return 2.0;
    return (2 * i - 1) * 0.5 * h;
}

double CdfTable::slope(int i) const {
    int j = i % n;
    if (j < 0) j += n;
    return values_[j];
}

double CdfTable::cum(int i) const {
    if (i == -n) return -1.0;
    if (i == 2 * n + 1) return 2.0;
    // q full periods plus base index r in [1, n]
    const int q = (i - 1 >= 0) ? (i - 1) / n : -(((-(i - 1)) + n - 1) / n);
    const int r = i - q * n;
    return cum_base_[r] + q;
}

double CdfTable::cum_at_sample(int j) const {
    // tau_j is the midpoint of cell j
    return cum(j) + 0.5 * h * slope(j);
}

double CdfTable::cdf(double t) const {
    int i = static_cast<int>(std::floor(t / h + 0.5));
    i = std::clamp(i, -n, 2 * n);
    return slope(i) * (t - breakpoint(i)) + cum(i);
}

int CdfTable::locate_cum(double y) const {
    // largest i in [-n, 2n] with cum(i) <= y
    int lo = -n, hi = 2 * n + 1;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (cum(mid) <= y)
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

double CdfTable::inv(double y) const {
    const int i = locate_cum(y);
    return (y - cum(i)) / slope(i) + breakpoint(i);
}

DerivativeTriple eval_I_derivatives(const CdfTable& F, const CdfTable& G,
                                    double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0))
        throw std::domain_error("alpha must lie in (-1, 1)");
    if (F.n != G.n)
        throw std::invalid_argument("cumulative tables have mismatched sizes");
    const int n = F.n;
    const int ia = F.locate_cum(alpha);  // alpha in [F_{ia}, F_{ia+1})

    // Merge {G_i}_{i=1..n} and {F_{ia+i} - alpha}_{i=1..n} into one increasing
    // sequence of segment boundaries T_0=0 < T_1 <= ... <= T_{2n} < T_{2n+1}=1.
    // On segment s the composite F^{-1}(G(t)+alpha) is K t + B with the G-cell
    // index l0 and F-cell index ia+l1. Ties emit the G-side value first, giving
    // a deterministic zero-length segment.
    const double inf = std::numeric_limits<double>::infinity();
    int l0 = 0, l1 = 0;  // cells active on the current segment
    int pg = 1, pf = 1;  // next unmerged entry on each side
    double t_lo = 0.0;
    double val = 0.0, integral = 0.0, curvature = 0.0;
    for (int seg = 0; seg <= 2 * n; ++seg) {
        const double gs = G.slope(l0);
        const double fs = F.slope(ia + l1);
        const double g_cum = G.cum(l0);
        const double g_brk = G.breakpoint(l0);
        const double K = gs / fs;
        const double B =
            (alpha + g_cum - gs * g_brk - F.cum(ia + l1)) / fs + F.breakpoint(ia + l1);

        double t_hi;
        bool take_g = false;
        if (seg == 2 * n) {
            t_hi = 1.0;
        } else {
            const double hg = (pg <= n) ? G.cum(pg) : inf;
            const double hf = (pf <= n) ? F.cum(ia + pf) - alpha : inf;
            take_g = hg <= hf;
            t_hi = take_g ? G.breakpoint(pg) : (hf - g_cum) / gs + g_brk;
        }

        const double dt = t_hi - t_lo;
        if (dt < -1e-12)
            throw std::runtime_error("degenerate segment in cumulative merge");
        if (dt > 0.0) {
            const double a = K - 1.0;
            const double p1 = 0.5 * (t_hi * t_hi - t_lo * t_lo);
            const double p2 =
                (t_hi * t_hi * t_hi - t_lo * t_lo * t_lo) / 3.0;
            // I: integrand |F^{-1}(G(t)+alpha) - t|^2 g(t) after the change of
            // variables y = G(t) + alpha (valid by periodicity of the integrand)
            val += gs * (a * a * p2 + 2.0 * a * B * p1 + B * B * dt);
            integral += K * p1 + B * dt;
            curvature += dt / fs;
        }
        if (seg < 2 * n) {
            if (take_g)
                l0 = pg++;
            else
                l1 = pf++;
            t_lo = t_hi;
        }
    }
    return {val, 2.0 * integral - 1.0, 2.0 * curvature};
}

AlphaSolution solve_alpha(const CdfTable& F, const CdfTable& G, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
    constexpr int cap = 100;
    constexpr double margin = 1e-9;
    double lo = -1.0 + margin, hi = 1.0 - margin;

    double alpha = 0.0;  // interior start; same fixed point as the boundary start
    DerivativeTriple d = eval_I_derivatives(F, G, alpha);
    int it = 0;
    while (true) {
        if (d.first > 0.0)
            hi = alpha;
        else
            lo = alpha;
        double next = alpha - d.first / d.second;
        if (!std::isfinite(next) || !(next > lo && next < hi))
            next = 0.5 * (lo + hi);  // bisection fallback keeps iterates in (-1,1)
        const double step = std::abs(next - alpha);
        alpha = next;
        d = eval_I_derivatives(F, G, alpha);
        ++it;
        if (step < eps) break;
        if (it >= cap)
            throw ConvergenceError("alpha iteration exceeded " +
                                       std::to_string(cap) + " steps",
                                   alpha, it);
    }
    return {alpha, d.value, it, std::abs(d.first)};
}

AlphaSolution w2_circle(const PeriodicDensity& f, const PeriodicDensity& g,
                        double eps) {
    return solve_alpha(build_cdf(f), build_cdf(g), eps);
}

namespace {

void check_pair_consistency(const CdfTable& F, const CdfTable& G,
                            const AlphaSolution& sol) {
    if (!(sol.alpha_star > -1.0 && sol.alpha_star < 1.0))
        throw std::invalid_argument("solution alpha outside (-1,1)");
    const DerivativeTriple d = eval_I_derivatives(F, G, sol.alpha_star);
    const double tol = std::max(1e-6, 16.0 * sol.residual + 4.0 * d.second * 1e-9);
    if (std::abs(d.first) > tol)
        throw std::invalid_argument(
            "alpha solution does not match this density pair");
}

}  // namespace

double TransportMap::operator()(double t) const {
    const double k = std::floor(t);
    const double tr = t - k;
    return G_.inv(F_.cdf(tr) - alpha_) + k;
}

TransportMap optimal_map(const PeriodicDensity& f, const PeriodicDensity& g,
                         const AlphaSolution& sol) {
    CdfTable F = build_cdf(f);
    CdfTable G = build_cdf(g);
    check_pair_consistency(F, G, sol);
    return TransportMap(std::move(F), std::move(G), sol.alpha_star);
}

PotentialGrid kantorovich_potential(const PeriodicDensity& f,
                                    const PeriodicDensity& g,
                                    const AlphaSolution& sol) {
    const CdfTable F = build_cdf(f);
    const CdfTable G = build_cdf(g);
    check_pair_consistency(F, G, sol);

    const int n = F.n;
    const double h = F.h;
    std::vector<double> disp(n);
    for (int k = 0; k < n; ++k) {
        const double tau = k * h;
        const double target = G.inv(F.cum_at_sample(k) - sol.alpha_star);
        double d = tau - target;
        // lifted-line representative of the geodesic displacement
        while (d >= 1.0) d -= 1.0;
        while (d <= -1.0) d += 1.0;
        disp[k] = d;
    }
    // phi(tau_k) = 2 int_0^{tau_k} (tau - T) dtau, trapezoid over the
    // midpoint samples (the displacement is piecewise linear, so the
    // left-endpoint sum would bias the gradient by half a cell)
    PotentialGrid out;
    out.values.resize(n);
    out.values[0] = 0.0;
    for (int k = 1; k < n; ++k)
        out.values[k] = out.values[k - 1] + h * (disp[k - 1] + disp[k]);
    double mean = std::accumulate(out.values.begin(), out.values.end(), 0.0) / n;
    out.c = -mean;
    for (double& v : out.values) v += out.c;
    return out;
}

}  // namespace w2eit::ot
