#include "w2eit/fem_disk.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"

using namespace w2eit;
constexpr double pi = std::numbers::pi;

namespace {

fem::NodalField constant_field(const fem::DiskMesh& mesh, double v,
                               fem::FieldRole role = fem::FieldRole::conductivity) {
    return {std::vector<double>(mesh.n_nodes(), v), role};
}

fem::BoundaryFunction harmonic_current(const fem::DiskMesh& mesh, int n,
                                       bool cosine) {
    fem::BoundaryFunction j;
    j.values.resize(mesh.n_boundary());
    for (int k = 0; k < mesh.n_boundary(); ++k)
        j.values[k] = cosine ? std::cos(n * mesh.boundary_angle[k])
                             : std::sin(n * mesh.boundary_angle[k]);
    fem::make_zero_mean(mesh, j);
    return j;
}

double rel_trace_error(const fem::DiskMesh& mesh, const fem::BoundaryFunction& got,
                       const fem::BoundaryFunction& want) {
    fem::BoundaryFunction diff = got;
    for (int k = 0; k < mesh.n_boundary(); ++k) diff.values[k] -= want.values[k];
    return std::sqrt(fem::boundary_inner(mesh, diff, diff) /
                     fem::boundary_inner(mesh, want, want));
}

double min_angle_deg(const fem::DiskMesh& mesh) {
    double worst = 180.0;
    for (const auto& tri : mesh.tris) {
        for (int a = 0; a < 3; ++a) {
            const auto& p = mesh.nodes[tri[a]];
            const auto& q = mesh.nodes[tri[(a + 1) % 3]];
            const auto& r = mesh.nodes[tri[(a + 2) % 3]];
            const double v1x = q[0] - p[0], v1y = q[1] - p[1];
            const double v2x = r[0] - p[0], v2y = r[1] - p[1];
            const double ang =
                std::acos((v1x * v2x + v1y * v2y) /
                          (std::hypot(v1x, v1y) * std::hypot(v2x, v2y)));
            worst = std::min(worst, ang * 180.0 / pi);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("mesh audit: counts, areas, boundary, quality") {
    CHECK_THROWS_AS(fem::generate_disk_mesh(0), std::invalid_argument);
    const auto m1 = fem::generate_disk_mesh(1);
    const auto m2 = fem::generate_disk_mesh(2);
    CHECK(m1.n_tris() == 600);
    CHECK(m2.n_tris() == 2400);  // default resolution from the experiments
    CHECK(m2.n_tris() == 4 * m1.n_tris());
    CHECK(m2.n_boundary() == 120);
    CHECK(m2.n_boundary() >= 60);

    double area = 0.0;
    for (double a : m2.tri_area) {
        CHECK(a > 0.0);
        area += a;
    }
    CHECK(area == doctest::Approx(pi).epsilon(0.005));

    for (int k = 0; k < m2.n_boundary(); ++k) {
        const auto& p = m2.nodes[m2.boundary[k]];
        CHECK(std::abs(std::hypot(p[0], p[1]) - 1.0) <= 1e-12);
        if (k > 0) CHECK(m2.boundary_angle[k] > m2.boundary_angle[k - 1]);
    }
    CHECK(min_angle_deg(m2) >= 20.0);
    CHECK(m2.circumference() == doctest::Approx(2 * pi).epsilon(1e-3));
}

TEST_CASE("stiffness matrix annihilates constants") {
    const auto mesh = fem::generate_disk_mesh(1);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 2.0);
    fem::NodalField sigma = constant_field(mesh, 1.0);
    for (double& v : sigma.values) v = u(rng);
    const auto A = fem::assemble_stiffness(mesh, sigma);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.n_nodes());
    CHECK((A * ones).lpNorm<Eigen::Infinity>() <= 1e-10);

    fem::NodalField bad = sigma;
    bad.values[3] = -1.0;
    CHECK_THROWS_AS(fem::assemble_stiffness(mesh, bad), std::domain_error);
}

TEST_CASE("forward solve: harmonic polynomials for constant conductivity") {
    const auto mesh = fem::generate_disk_mesh(2);
    const auto sigma = constant_field(mesh, 1.0);
    const fem::NeumannSolver solver(mesh, sigma);
    for (int n = 1; n <= 5; ++n) {
        const auto u = solver.solve(harmonic_current(mesh, n, true));
        const auto trace = fem::boundary_trace(mesh, u);
        fem::BoundaryFunction want;
        want.values.resize(mesh.n_boundary());
        for (int k = 0; k < mesh.n_boundary(); ++k)
            want.values[k] = std::cos(n * mesh.boundary_angle[k]) / n;
        fem::make_zero_mean(mesh, want);
        CHECK(rel_trace_error(mesh, trace, want) <= 0.01);
        CHECK(std::abs(fem::boundary_mean(mesh, trace)) <= 1e-10);
    }
    // interior field for j = sin(theta): u = r sin(theta)
    const auto u = solver.solve(harmonic_current(mesh, 1, false));
    double num = 0.0, den = 0.0;
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const double want = mesh.nodes[i][1];
        num += (u.values[i] - want) * (u.values[i] - want);
        den += want * want;
    }
    CHECK(std::sqrt(num / den) <= 0.02);
}

TEST_CASE("forward solve: concentric inclusion closed form") {
    const auto mesh = fem::generate_disk_mesh(2);
    const double rho = 0.5, sigma1 = 2.0;
    const double mu = (1.0 - sigma1) / (1.0 + sigma1);
    fem::NodalField sigma = constant_field(mesh, 1.0);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const double r = std::hypot(mesh.nodes[i][0], mesh.nodes[i][1]);
        // nodes on the interface carry the jump midvalue
        if (r < rho - 1e-9)
            sigma.values[i] = sigma1;
        else if (r < rho + 1e-9)
            sigma.values[i] = 0.5 * (sigma1 + 1.0);
    }
    const fem::NeumannSolver solver(mesh, sigma);
    for (int n = 1; n <= 3; ++n) {
        const auto trace =
            fem::boundary_trace(mesh, solver.solve(harmonic_current(mesh, n, true)));
        const double gain = (1.0 + mu * std::pow(rho, 2 * n)) /
                            (1.0 - mu * std::pow(rho, 2 * n)) / n;
        fem::BoundaryFunction want;
        want.values.resize(mesh.n_boundary());
        for (int k = 0; k < mesh.n_boundary(); ++k)
            want.values[k] = gain * std::cos(n * mesh.boundary_angle[k]);
        fem::make_zero_mean(mesh, want);
        CHECK(rel_trace_error(mesh, trace, want) <= 0.02);
    }
}

TEST_CASE("forward solve: galerkin error falls like h^2") {
    double prev = 0.0;
    for (int r = 1; r <= 3; ++r) {
        const auto mesh = fem::generate_disk_mesh(r);
        const auto trace = fem::boundary_trace(
            mesh, fem::solve_forward(mesh, constant_field(mesh, 1.0),
                                     harmonic_current(mesh, 1, true)));
        fem::BoundaryFunction want;
        want.values.resize(mesh.n_boundary());
        for (int k = 0; k < mesh.n_boundary(); ++k)
            want.values[k] = std::cos(mesh.boundary_angle[k]);
        fem::make_zero_mean(mesh, want);
        const double err = rel_trace_error(mesh, trace, want);
        if (r > 1) {
            const double ratio = prev / err;
            CHECK(ratio >= 3.3);
            CHECK(ratio <= 4.8);
        }
        prev = err;
    }
}

TEST_CASE("forward solve: rejects currents with nonzero mean") {
    const auto mesh = fem::generate_disk_mesh(1);
    fem::BoundaryFunction j;
    j.values.assign(mesh.n_boundary(), 1.0);
    CHECK_THROWS_AS(fem::solve_forward(mesh, constant_field(mesh, 1.0), j),
                    std::domain_error);
}

TEST_CASE("boundary trace: constants vanish, zero mean holds") {
    const auto mesh = fem::generate_disk_mesh(1);
    const auto t = fem::boundary_trace(mesh, constant_field(mesh, 3.7));
    for (double v : t.values) CHECK(std::abs(v) <= 1e-12);

    std::mt19937_64 rng(9);
    fem::NodalField u = constant_field(mesh, 0.0, fem::FieldRole::potential);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (double& v : u.values) v = d(rng);
    CHECK(std::abs(fem::boundary_mean(mesh, fem::boundary_trace(mesh, u))) <=
          1e-10);
}

TEST_CASE("adjoint gradient density: constants and linear fields") {
    const auto mesh = fem::generate_disk_mesh(1);
    fem::NodalField x_field = constant_field(mesh, 0.0, fem::FieldRole::potential);
    for (int i = 0; i < mesh.n_nodes(); ++i) x_field.values[i] = mesh.nodes[i][0];
    const auto zero = fem::adjoint_gradient_density(
        mesh, x_field, constant_field(mesh, 0.0, fem::FieldRole::potential));
    for (double v : zero.values) CHECK(std::abs(v) <= 1e-14);

    const auto minus_one = fem::adjoint_gradient_density(mesh, x_field, x_field);
    for (double v : minus_one.values) CHECK(v == doctest::Approx(-1.0));
}

TEST_CASE("neumann-to-dirichlet map is self-adjoint and positive definite") {
    const auto mesh = fem::generate_disk_mesh(2);
    fem::NodalField sigma = constant_field(mesh, 1.0);
    for (int i = 0; i < mesh.n_nodes(); ++i)
        sigma.values[i] += 0.4 * std::sin(2.0 * mesh.nodes[i][0]) *
                           std::cos(1.5 * mesh.nodes[i][1]);
    const fem::NeumannSolver solver(mesh, sigma);
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int rep = 0; rep < 5; ++rep) {
        fem::BoundaryFunction h, j;
        h.values.resize(mesh.n_boundary());
        j.values.resize(mesh.n_boundary());
        for (int k = 0; k < mesh.n_boundary(); ++k) {
            h.values[k] = d(rng);
            j.values[k] = d(rng);
        }
        fem::make_zero_mean(mesh, h);
        fem::make_zero_mean(mesh, j);
        const auto lj = fem::boundary_trace(mesh, solver.solve(j));
        const auto lh = fem::boundary_trace(mesh, solver.solve(h));
        const double a = fem::boundary_inner(mesh, h, lj);
        const double b = fem::boundary_inner(mesh, lh, j);
        CHECK(std::abs(a - b) / std::max(std::abs(a), std::abs(b)) <= 1e-8);
        CHECK(fem::boundary_inner(mesh, j, lj) > 0.0);
    }
}

TEST_CASE("sobolev smoothing: bessel closed form and exact boundary zeros") {
    const auto mesh = fem::generate_disk_mesh(2);
    const auto zero = fem::sobolev_smooth(mesh, constant_field(mesh, 0.0));
    for (double v : zero.values) CHECK(std::abs(v) <= 1e-14);

    const auto w = fem::sobolev_smooth(mesh, constant_field(mesh, 1.0));
    for (int b : mesh.boundary) CHECK(w.values[b] == 0.0);
    // exact solution 1 - I0(r)/I0(1); node 0 is the center
    const double center_exact = 1.0 - 1.0 / std::cyl_bessel_i(0.0, 1.0);
    CHECK(w.values[0] == doctest::Approx(center_exact).epsilon(0.01));
    CHECK(w.values[0] > 0.0);
    CHECK(w.values[0] < 1.0);
    for (double v : w.values) CHECK(v <= w.values[0] + 1e-12);
}

TEST_CASE("boundary interpolation in the angle variable") {
    const auto fine = fem::generate_disk_mesh(2);
    const auto coarse = fem::generate_disk_mesh(1);
    std::vector<double> src(fine.n_boundary());
    for (int k = 0; k < fine.n_boundary(); ++k)
        src[k] = 0.3 + 0.7 * std::cos(fine.boundary_angle[k]);
    const auto dst =
        fem::interpolate_trace(fine.boundary_angle, src, coarse.boundary_angle);
    // every coarse angle coincides with a fine angle, so values restrict
    for (int k = 0; k < coarse.n_boundary(); ++k)
        CHECK(dst[k] ==
              doctest::Approx(0.3 + 0.7 * std::cos(coarse.boundary_angle[k]))
                  .epsilon(1e-12));
}
