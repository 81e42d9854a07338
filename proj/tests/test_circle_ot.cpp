#include "w2eit/circle_ot.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_support.hpp"

using namespace w2eit;
using testutil::rough_density;
using testutil::sine_density;
using testutil::uniform_density;

namespace {

double l1_distance(const ot::PeriodicDensity& a, const ot::PeriodicDensity& b) {
    double s = 0.0;
    for (int i = 0; i < a.size(); ++i)
        s += std::abs(a.values()[i] - b.values()[i]);
    return s / a.size();
}

}  // namespace

TEST_CASE("density validation and normalization") {
    CHECK_THROWS_AS(ot::PeriodicDensity::from_samples({1.0, -0.5, 2.0}),
                    std::domain_error);
    CHECK_THROWS_AS(ot::PeriodicDensity::from_samples({1.0, 0.0}),
                    std::domain_error);
    // below the positivity floor after normalization
    CHECK_THROWS_AS(ot::PeriodicDensity::from_samples({1.0, 1e-9, 1.0, 1.0}),
                    std::domain_error);
    // error message names the offending row
    try {
        ot::PeriodicDensity::from_samples({1.0, 1.0, -2.0});
        CHECK(false);
    } catch (const std::domain_error& e) {
        CHECK(std::string(e.what()).find("index 2") != std::string::npos);
    }

    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = rough_density(rng, 3 + rep * 17);
        double mass = 0.0;
        for (double v : d.values()) mass += v;
        mass /= d.size();
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(*std::min_element(d.values().begin(), d.values().end()) >=
              ot::PeriodicDensity::floor);
    }
}

TEST_CASE("cdf table: uniform density gives the identity") {
    auto table = ot::build_cdf(uniform_density(4));
    for (double t : {0.0, 0.1, 0.37, 0.5, 0.93}) {
        CHECK(table.cdf(t) == doctest::Approx(t).epsilon(1e-14));
        CHECK(table.inv(t) == doctest::Approx(t).epsilon(1e-14));
    }
    CHECK(table.cdf(-0.25) == doctest::Approx(-0.25));
    CHECK(table.cdf(1.75) == doctest::Approx(1.75));
}

TEST_CASE("cdf table: hand-summed two-sample density") {
    // raw (1,3), mass 2 -> normalized slopes (0.5, 1.5)
    auto table = ot::build_cdf(ot::PeriodicDensity::from_samples({1.0, 3.0}));
    CHECK(table.slope(0) == doctest::Approx(0.5));
    CHECK(table.slope(1) == doctest::Approx(1.5));
    CHECK(table.cdf(0.0) == doctest::Approx(0.0));
    // breakpoints at 0.25 and 0.75: F(0.25) = 0.5*0.25, F(0.75) = F(0.25)+1.5*0.5
    CHECK(table.cum(1) == doctest::Approx(0.125));
    CHECK(table.cum(2) == doctest::Approx(0.875));
    CHECK(table.cdf(1.0) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("cdf table: periodic extension and mutual inverses") {
    std::mt19937_64 rng(11);
    auto table = ot::build_cdf(rough_density(rng, 101));
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        const double t = ut(rng);
        CHECK(table.cdf(t + 1.0) - table.cdf(t) ==
              doctest::Approx(1.0).epsilon(1e-12));
        const double y = ut(rng);
        CHECK(table.cdf(table.inv(y)) == doctest::Approx(y).epsilon(1e-12));
        CHECK(table.inv(y + 1.0) - table.inv(y) ==
              doctest::Approx(1.0).epsilon(1e-12));
    }
    for (int i = -101; i <= 2 * 101 + 1; ++i) {
        CHECK(table.inv(table.cum(i)) ==
              doctest::Approx(table.breakpoint(i)).epsilon(1e-12));
    }
}

TEST_CASE("derivatives: uniform closed form I = alpha^2") {
    auto table = ot::build_cdf(uniform_density(1024));
    for (double alpha : {-0.9, -0.5, -0.1, 0.0, 0.3, 0.7, 0.99}) {
        const auto d = ot::eval_I_derivatives(table, table, alpha);
        CHECK(std::abs(d.value - alpha * alpha) <= 1e-10);
        CHECK(std::abs(d.first - 2.0 * alpha) <= 1e-10);
        CHECK(std::abs(d.second - 2.0) <= 1e-10);
    }
    CHECK_THROWS_AS(ot::eval_I_derivatives(table, table, 1.0),
                    std::domain_error);
    CHECK_THROWS_AS(ot::eval_I_derivatives(table, table, -1.2),
                    std::domain_error);
}

TEST_CASE("derivatives: identical densities at alpha 0") {
    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 10; ++rep) {
        auto table = ot::build_cdf(rough_density(rng, 64 + 97 * rep));
        const auto d = ot::eval_I_derivatives(table, table, 0.0);
        CHECK(std::abs(d.value) <= 1e-18);
        CHECK(std::abs(d.first) <= 1e-12);
        CHECK(d.second > 0.0);
    }
}

TEST_CASE("derivatives: finite-difference consistency") {
    auto F = ot::build_cdf(sine_density(4096, 0.5));
    auto G = ot::build_cdf(uniform_density(4096));
    const double alpha = 0.1, step = 1e-6;
    const auto d = ot::eval_I_derivatives(F, G, alpha);
    const auto dp = ot::eval_I_derivatives(F, G, alpha + step);
    const auto dm = ot::eval_I_derivatives(F, G, alpha - step);
    const double fd1 = (dp.value - dm.value) / (2.0 * step);
    CHECK(std::abs(fd1 - d.first) / std::abs(d.first) <= 1e-4);
    const double fd2 = (dp.first - dm.first) / (2.0 * step);
    CHECK(std::abs(fd2 - d.second) / d.second <= 1e-4);
}

TEST_CASE("strict convexity and positive curvature") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> ua(-0.9, 0.9);
    for (int rep = 0; rep < 100; ++rep) {
        auto F = ot::build_cdf(rough_density(rng, 128));
        auto G = ot::build_cdf(rough_density(rng, 128));
        double a1 = ua(rng), a2 = ua(rng);
        if (std::abs(a1 - a2) < 0.01) a2 = a1 + 0.05;
        const double mid = 0.5 * (a1 + a2);
        const double im = ot::eval_I_derivatives(F, G, mid).value;
        const double i1 = ot::eval_I_derivatives(F, G, a1).value;
        const double i2 = ot::eval_I_derivatives(F, G, a2).value;
        CHECK(im < 0.5 * (i1 + i2) - 1e-12);
        CHECK(ot::eval_I_derivatives(F, G, ua(rng)).second > 0.0);
    }
}

TEST_CASE("root bracketing near the interval ends") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        auto F = ot::build_cdf(rough_density(rng, 128));
        auto G = ot::build_cdf(rough_density(rng, 128));
        CHECK(ot::eval_I_derivatives(F, G, -1.0 + 1e-6).first < 0.0);
        CHECK(ot::eval_I_derivatives(F, G, 1.0 - 1e-6).first > 0.0);
    }
}

TEST_CASE("solve_alpha: trivial cases") {
    std::mt19937_64 rng(17);
    auto f = rough_density(rng, 256);
    const auto same = ot::w2_circle(f, f);
    CHECK(std::abs(same.alpha_star) <= 1e-12);
    CHECK(same.w2_squared <= 1e-18);

    const auto uni = ot::w2_circle(uniform_density(64), uniform_density(64));
    CHECK(std::abs(uni.alpha_star) <= 1e-12);
    CHECK(uni.w2_squared <= 1e-18);
}

TEST_CASE("w2_circle: symmetry and metric axioms") {
    std::mt19937_64 rng(29);
    for (int rep = 0; rep < 10; ++rep) {
        auto f = rough_density(rng, 200);
        auto g = rough_density(rng, 200);
        auto h = rough_density(rng, 200);
        const double fg = ot::w2_circle(f, g).w2_squared;
        const double gf = ot::w2_circle(g, f).w2_squared;
        CHECK(std::abs(fg - gf) <= 1e-10);
        const double fh = ot::w2_circle(f, h).w2_squared;
        const double gh = ot::w2_circle(g, h).w2_squared;
        CHECK(std::sqrt(fh) <=
              std::sqrt(fg) + std::sqrt(gh) + 1e-8);  // triangle inequality
        CHECK(fg > 0.0);
    }
}

TEST_CASE("w2_circle: rotation feasibility bound") {
    const int n = 512;
    auto f = sine_density(n, 0.6);
    for (int k : {51, 128, 205, 250}) {
        const double delta = static_cast<double>(k) / n;
        std::vector<double> rotated(n);
        for (int i = 0; i < n; ++i)
            rotated[i] = f.values()[((i - k) % n + n) % n];
        auto g = ot::PeriodicDensity::from_samples(std::move(rotated));
        const double w2sq = ot::w2_circle(f, g).w2_squared;
        CHECK(w2sq <= delta * delta + 1e-12);
    }
}

TEST_CASE("w2_circle: high-frequency perturbations shrink like 1/n") {
    // amplitude slightly below 1 keeps the samples above the positivity floor
    const auto uni = uniform_density(4096);
    std::vector<double> scaled;
    for (int n : {1, 2, 4, 8}) {
        auto f = sine_density(4096, 0.999, n);
        scaled.push_back(n * std::sqrt(ot::w2_circle(f, uni).w2_squared));
    }
    // scaled stores n*W2; the raw distances must decrease with n
    for (size_t i = 1; i < scaled.size(); ++i)
        CHECK(scaled[i] / (1 << i) < scaled[i - 1] / (1 << (i - 1)));
    const auto [mn, mx] = std::minmax_element(scaled.begin(), scaled.end());
    CHECK(*mx / *mn <= 1.5);  // n * W2(f_n, 1) stays bounded
}

TEST_CASE("stability estimate for the shift parameter") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int rep = 0; rep < 100; ++rep) {
        const int n = 128;
        auto f1 = rough_density(rng, n, 0.4, 3.0);
        auto g1 = rough_density(rng, n, 0.4, 3.0);
        auto perturb = [&](const ot::PeriodicDensity& d) {
            std::vector<double> v = d.values();
            for (double& x : v) x = std::max(0.2, x + 0.3 * u(rng));
            return ot::PeriodicDensity::from_samples(std::move(v));
        };
        auto f2 = perturb(f1);
        auto g2 = perturb(g1);
        const double a1 = ot::w2_circle(f1, g1).alpha_star;
        const double a2 = ot::w2_circle(f2, g2).alpha_star;
        const double bound =
            0.5 * (l1_distance(f1, f2) + l1_distance(g1, g2)) + 1e-8;
        CHECK(std::abs(a1 - a2) <= bound);
    }
}

TEST_CASE("optimal_map: identity cases and measure preservation") {
    std::mt19937_64 rng(53);
    auto f = rough_density(rng, 256);
    const auto self = ot::w2_circle(f, f);
    auto id_map = ot::optimal_map(f, f, self);
    for (int i = 0; i < 256; i += 7) {
        const double t = i / 256.0;
        CHECK(std::abs(id_map(t) - t) <= 1e-10);
    }

    auto uni = uniform_density(4096);
    auto g = sine_density(4096, 0.5);
    const auto sol = ot::w2_circle(uni, g);
    auto map = ot::optimal_map(uni, g, sol);
    auto G = ot::build_cdf(g);
    auto F = ot::build_cdf(uni);
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    double prev = map(0.0);
    for (int k = 1; k <= 64; ++k) {
        const double t = k / 64.0 - 1e-9;
        const double cur = map(t);
        CHECK(cur >= prev - 1e-12);  // monotone
        prev = cur;
    }
    for (int rep = 0; rep < 20; ++rep) {
        double a = ut(rng), b = ut(rng);
        if (a > b) std::swap(a, b);
        const double lhs = G.cdf(map(b)) - G.cdf(map(a));
        const double rhs = F.cdf(b) - F.cdf(a);
        CHECK(std::abs(lhs - rhs) <= 1e-8);
    }
    CHECK(std::abs(map(0.3 + 1.0) - map(0.3) - 1.0) <= 1e-12);

    // a solution from a different pair is rejected
    auto other = rough_density(rng, 4096, 0.5, 2.0);
    CHECK_THROWS_AS(ot::optimal_map(uni, other, sol), std::invalid_argument);
}

TEST_CASE("kantorovich potential: trivial cases and zero mean") {
    std::mt19937_64 rng(59);
    auto f = rough_density(rng, 256);
    const auto self = ot::w2_circle(f, f);
    auto phi = ot::kantorovich_potential(f, f, self);
    for (double v : phi.values) CHECK(std::abs(v) <= 1e-10);

    auto g = sine_density(256, 0.4);
    const auto sol = ot::w2_circle(f, g);
    auto pg = ot::kantorovich_potential(f, g, sol);
    double mean = 0.0;
    for (double v : pg.values) mean += v;
    CHECK(std::abs(mean / 256.0) <= 1e-10);
}

TEST_CASE("kantorovich potential: directional derivative of W2^2") {
    const int n = 4096;
    auto f = uniform_density(n);
    auto g = sine_density(n, 0.3);
    const auto sol = ot::w2_circle(f, g);
    const auto phi = ot::kantorovich_potential(f, g, sol);

    std::mt19937_64 rng(61);
    const double eps = 1e-5;
    for (int rep = 0; rep < 3; ++rep) {
        const auto delta = testutil::zero_mean_fourier(rng, n, 5);
        std::vector<double> up(n), dn(n);
        for (int i = 0; i < n; ++i) {
            up[i] = f.values()[i] + eps * delta[i];
            dn[i] = f.values()[i] - eps * delta[i];
        }
        const double wp =
            ot::w2_circle(ot::PeriodicDensity::from_samples(up), g).w2_squared;
        const double wm =
            ot::w2_circle(ot::PeriodicDensity::from_samples(dn), g).w2_squared;
        const double fd = (wp - wm) / (2.0 * eps);
        double pairing = 0.0;
        for (int i = 0; i < n; ++i) pairing += phi.values[i] * delta[i];
        pairing /= n;
        CHECK(std::abs(fd - pairing) / std::abs(fd) <= 1e-3);
    }
}
