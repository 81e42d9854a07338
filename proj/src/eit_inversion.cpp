#include "w2eit/eit_inversion.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <random>
#include <stdexcept>

namespace w2eit::eit {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;
using SpMat = Eigen::SparseMatrix<double>;

double normal_sample(std::mt19937_64& rng) {
    // Box-Muller on 53-bit uniforms; keeps the draw sequence independent of
    // the standard library's distribution implementation
    const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace

double ConductivityScene::value_at(double x, double y) const {
    for (const Inclusion& inc : inclusions) {
        const double dx = x - inc.cx, dy = y - inc.cy;
        const bool inside =
            inc.kind == Inclusion::Kind::disk
                ? dx * dx + dy * dy <= inc.ax * inc.ax
                : (dx * dx) / (inc.ax * inc.ax) + (dy * dy) / (inc.ay * inc.ay) <=
                      1.0;
        if (inside) return inc.value;
    }
    return background;
}

fem::NodalField scene_to_field(const fem::DiskMesh& mesh,
                               const ConductivityScene& scene) {
    fem::NodalField f;
    f.role = fem::FieldRole::conductivity;
    f.values.resize(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i)
        f.values[i] = scene.value_at(mesh.nodes[i][0], mesh.nodes[i][1]);
    return f;
}

CurrentBasis make_currents(const fem::DiskMesh& mesh, int n_max) {
    if (n_max < 1) throw std::invalid_argument("n_max must be at least 1");
    CurrentBasis basis;
    basis.n_max = n_max;
    for (int n = 1; n <= n_max; ++n) {
        for (int c = 0; c < 2; ++c) {
            fem::BoundaryFunction p;
            p.values.resize(mesh.n_boundary());
            for (int k = 0; k < mesh.n_boundary(); ++k)
                p.values[k] = c ? std::cos(n * mesh.boundary_angle[k])
                                : std::sin(n * mesh.boundary_angle[k]);
            fem::make_zero_mean(mesh, p);
            basis.patterns.push_back(std::move(p));
            basis.names.push_back((c ? "cos" : "sin") + std::to_string(n));
        }
    }
    return basis;
}

MeasurementSet synthesize_data(const fem::DiskMesh& data_mesh,
                               const fem::NodalField& sigma_true_data,
                               const fem::DiskMesh& inv_mesh,
                               const CurrentBasis& basis, double eps,
                               std::uint64_t seed) {
    MeasurementSet out;
    out.eps = eps;
    out.seed = seed;
    out.data_mesh_id = data_mesh.id();
    out.mesh_id = inv_mesh.id();

    const CurrentBasis data_basis = make_currents(data_mesh, basis.n_max);
    const fem::NeumannSolver solver(data_mesh, sigma_true_data);
    const auto fields = solver.solve_many(data_basis.patterns);

    double amp = 0.0;
    for (const auto& u : fields) {
        const auto tr = fem::boundary_trace(data_mesh, u);
        fem::BoundaryFunction restricted;
        restricted.values = fem::interpolate_trace(
            data_mesh.boundary_angle, tr.values, inv_mesh.boundary_angle);
        fem::make_zero_mean(inv_mesh, restricted);
        for (double v : restricted.values) amp = std::max(amp, std::abs(v));
        out.clean.push_back(std::move(restricted));
    }

    std::mt19937_64 rng(seed);
    out.traces = out.clean;
    if (eps > 0.0) {
        for (auto& tr : out.traces)
            for (double& v : tr.values) v += normal_sample(rng) * eps * amp;
    }
    return out;
}

void InversionConfig::validate() const {
    if (!(a > 0.0)) throw std::invalid_argument("normalization constant a must be positive");
    if (!(0.0 < rho1 && rho1 < rho2 && rho2 < 1.0))
        throw std::invalid_argument("need 0 < rho1 < rho2 < 1");
    if (!(0.0 < s_min && s_min <= s_max))
        throw std::invalid_argument("need 0 < s_min <= s_max");
    if (!(s_stop > 0.0)) throw std::invalid_argument("s_stop must be positive");
    if (memory < 1) throw std::invalid_argument("memory M must be at least 1");
    if (!(tau > 0.0 && tau < 1.0)) throw std::invalid_argument("tau must lie in (0,1)");
    if (i_max < 0) throw std::invalid_argument("i_max must be nonnegative");
    if (!(0.0 < c0 && c0 < c1)) throw std::invalid_argument("need 0 < c0 < c1");
    if (warm_start_m < 0) throw std::invalid_argument("warm_start_m must be nonnegative");
    if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
    if (!(newton_eps > 0.0)) throw std::invalid_argument("newton_eps must be positive");
}

ot::PeriodicDensity normalize_trace(const fem::DiskMesh& mesh,
                                    const fem::BoundaryFunction& phi,
                                    double a) {
    if (!(a > 0.0)) throw std::invalid_argument("normalization constant a must be positive");
    if (static_cast<int>(phi.values.size()) != mesh.n_boundary())
        throw std::invalid_argument("boundary function does not match the mesh");
    fem::BoundaryFunction shifted = phi;
    fem::make_zero_mean(mesh, shifted);  // noise breaks the exact zero mean
    std::vector<double> density(shifted.values.size());
    for (size_t i = 0; i < density.size(); ++i)
        density[i] = shifted.values[i] / a + 1.0;
    try {
        return ot::PeriodicDensity::from_samples(std::move(density));
    } catch (const std::domain_error& e) {
        throw std::range_error(std::string(e.what()) +
                               "; increase the normalization constant a");
    }
}

MisfitResult misfit_and_boundary_gradient(const fem::DiskMesh& mesh,
                                          const fem::BoundaryFunction& u,
                                          const fem::BoundaryFunction& phi,
                                          const InversionConfig& cfg) {
    MisfitResult out;
    if (cfg.misfit == Misfit::l2) {
        fem::BoundaryFunction diff;
        diff.values.resize(u.values.size());
        for (size_t i = 0; i < u.values.size(); ++i)
            diff.values[i] = u.values[i] - phi.values[i];
        out.value = 0.5 * fem::boundary_inner(mesh, diff, diff);
        fem::make_zero_mean(mesh, diff);
        out.grad = std::move(diff);
        return out;
    }
    const ot::PeriodicDensity f = normalize_trace(mesh, u, cfg.a);
    const ot::PeriodicDensity g = normalize_trace(mesh, phi, cfg.a);
    const ot::AlphaSolution sol = ot::w2_circle(f, g, cfg.newton_eps);
    out.value = sol.w2_squared;
    const ot::PotentialGrid pot = ot::kantorovich_potential(f, g, sol);
    // frechet gradient 1/a * potential, expressed per unit arclength
    out.grad.values.resize(pot.values.size());
    for (size_t i = 0; i < pot.values.size(); ++i)
        out.grad.values[i] = pot.values[i] / (cfg.a * two_pi);
    fem::make_zero_mean(mesh, out.grad);
    return out;
}

ObjectiveEval eval_objective(const fem::DiskMesh& mesh,
                             const fem::NodalField& sigma,
                             const MeasurementSet& data,
                             const CurrentBasis& basis,
                             const InversionConfig& cfg) {
    if (data.traces.size() != basis.patterns.size())
        throw std::invalid_argument("measurement set does not match the basis");
    ObjectiveEval fe;
    fe.solver = std::make_shared<fem::NeumannSolver>(mesh, sigma);
    fe.forwards = fe.solver->solve_many(basis.patterns);
    const int p = static_cast<int>(basis.patterns.size());
    fe.pattern_misfit.resize(p);
    fe.traces.resize(p);
    fe.boundary_grads.resize(p);
    std::string error;
#pragma omp parallel for schedule(static)
    for (int n = 0; n < p; ++n) {
        try {
            fe.traces[n] = fem::boundary_trace(mesh, fe.forwards[n]);
            MisfitResult m =
                misfit_and_boundary_gradient(mesh, fe.traces[n], data.traces[n], cfg);
            fe.pattern_misfit[n] = m.value;
            fe.boundary_grads[n] = std::move(m.grad);
        } catch (const std::exception& e) {
#pragma omp critical
            if (error.empty())
                error = "pattern " + basis.names[n] + ": " + e.what();
        }
    }
    if (!error.empty()) throw std::runtime_error(error);
    fe.value = 0.0;
    for (double v : fe.pattern_misfit) fe.value += v;
    if (cfg.beta > 0.0) fe.value += cfg.beta * tv_value(mesh, sigma.values);
    return fe;
}

namespace {

struct TriGrad {
    double gx, gy, bx[3], by[3];  // grad sigma and the scaled hat gradients
};

TriGrad triangle_gradients(const fem::DiskMesh& mesh, int t,
                           const std::vector<double>& v) {
    const auto& tri = mesh.tris[t];
    const double x1 = mesh.nodes[tri[0]][0], y1 = mesh.nodes[tri[0]][1];
    const double x2 = mesh.nodes[tri[1]][0], y2 = mesh.nodes[tri[1]][1];
    const double x3 = mesh.nodes[tri[2]][0], y3 = mesh.nodes[tri[2]][1];
    TriGrad g;
    const double b[3] = {y2 - y3, y3 - y1, y1 - y2};
    const double c[3] = {x3 - x2, x1 - x3, x2 - x1};
    const double s = 0.5 / mesh.tri_area[t];
    g.gx = g.gy = 0.0;
    for (int a = 0; a < 3; ++a) {
        g.bx[a] = b[a] * s;
        g.by[a] = c[a] * s;
        g.gx += v[tri[a]] * g.bx[a];
        g.gy += v[tri[a]] * g.by[a];
    }
    return g;
}

}  // namespace

double tv_value(const fem::DiskMesh& mesh, const std::vector<double>& sigma,
                double kappa) {
    double r = 0.0;
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const TriGrad g = triangle_gradients(mesh, t, sigma);
        r += mesh.tri_area[t] * std::sqrt(g.gx * g.gx + g.gy * g.gy + kappa * kappa);
    }
    return r;
}

std::vector<double> tv_gradient(const fem::DiskMesh& mesh,
                                const std::vector<double>& sigma,
                                double kappa) {
    std::vector<double> grad(mesh.n_nodes(), 0.0);
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const TriGrad g = triangle_gradients(mesh, t, sigma);
        const double w = mesh.tri_area[t] /
                         std::sqrt(g.gx * g.gx + g.gy * g.gy + kappa * kappa);
        for (int a = 0; a < 3; ++a)
            grad[mesh.tris[t][a]] += w * (g.gx * g.bx[a] + g.gy * g.by[a]);
    }
    return grad;
}

GradientEval eval_gradient(const fem::DiskMesh& mesh, const ObjectiveEval& fe,
                           const fem::NodalField& sigma,
                           const InversionConfig& cfg) {
    const auto adjoints = fe.solver->solve_many(fe.boundary_grads);
    GradientEval ge;
    ge.density = fem::gradient_density_accumulate(mesh, fe.forwards, adjoints);
    if (cfg.beta > 0.0) {
        const std::vector<double> lump = fem::lumped_node_area(mesh);
        const std::vector<double> tvg = tv_gradient(mesh, sigma.values);
        for (int i = 0; i < mesh.n_nodes(); ++i)
            ge.density[i] += cfg.beta * tvg[i] / lump[i];
    }
    fem::NodalField d{ge.density, fem::FieldRole::gradient_density};
    ge.smoothed = fem::sobolev_smooth(mesh, d);
    return ge;
}

std::pair<double, fem::NodalField> objective_and_gradient(
    const fem::DiskMesh& mesh, const fem::NodalField& sigma,
    const MeasurementSet& data, const CurrentBasis& basis,
    const InversionConfig& cfg) {
    const ObjectiveEval fe = eval_objective(mesh, sigma, data, basis, cfg);
    const GradientEval ge = eval_gradient(mesh, fe, sigma, cfg);
    return {fe.value, ge.smoothed};
}

namespace {

double h1_inner(const SpMat& G, const std::vector<double>& a,
                const std::vector<double>& b) {
    Eigen::Map<const Eigen::VectorXd> va(a.data(), a.size());
    Eigen::Map<const Eigen::VectorXd> vb(b.data(), b.size());
    return va.dot(G * vb);
}

double power_iteration_lambda_max(const SpMat& G) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(G.rows());
    v.normalize();
    double lam = 1.0;
    for (int it = 0; it < 30; ++it) {
        v = G * v;
        lam = v.norm();
        if (lam <= 0) break;
        v /= lam;
    }
    return lam;
}

// proxy problem argmin over the admissible set of
//   1/(2s) ||sigma - gamma||_H1^2 + beta R(sigma);
// pointwise clipping when beta = 0, a short projected-gradient descent
// otherwise. Boundary nodes stay pinned to their initial values.
std::vector<double> solve_proxy(const fem::DiskMesh& mesh, const SpMat& G,
                                double lambda_max,
                                const std::vector<double>& gamma, double s,
                                const InversionConfig& cfg,
                                const std::vector<char>& on_boundary,
                                const std::vector<double>& pin) {
    auto project = [&](std::vector<double> v) {
        for (int i = 0; i < static_cast<int>(v.size()); ++i) {
            v[i] = std::clamp(v[i], cfg.c0, cfg.c1);
            if (on_boundary[i]) v[i] = pin[i];
        }
        return v;
    };
    std::vector<double> sig = project(gamma);
    if (cfg.beta == 0.0) return sig;

    auto psi = [&](const std::vector<double>& v) {
        std::vector<double> d(v.size());
        for (size_t i = 0; i < v.size(); ++i) d[i] = v[i] - gamma[i];
        return h1_inner(G, d, d) / (2.0 * s) + cfg.beta * tv_value(mesh, v);
    };
    double cur = psi(sig);
    double eta = s / std::max(lambda_max, 1e-12);
    const int n = static_cast<int>(sig.size());
    for (int it = 0; it < 10; ++it) {
        std::vector<double> d(n);
        for (int i = 0; i < n; ++i) d[i] = sig[i] - gamma[i];
        Eigen::Map<const Eigen::VectorXd> vd(d.data(), n);
        Eigen::VectorXd gq = G * vd / s;
        std::vector<double> tvg = tv_gradient(mesh, sig);
        std::vector<double> step(n);
        for (int i = 0; i < n; ++i) step[i] = gq[i] + cfg.beta * tvg[i];
        std::vector<double> cand;
        double val = 0.0;
        int halvings = 0;
        for (;;) {
            std::vector<double> trial(n);
            for (int i = 0; i < n; ++i) trial[i] = sig[i] - eta * step[i];
            cand = project(std::move(trial));
            val = psi(cand);
            if (val <= cur || ++halvings > 8) break;
            eta *= 0.5;
        }
        if (val > cur) break;
        sig = std::move(cand);
        cur = val;
    }
    return sig;
}

struct PhaseState {
    std::vector<double> sigma;
    int k_global = 0;
};

std::string bb_phase(const fem::DiskMesh& mesh, const MeasurementSet& data,
                     const CurrentBasis& basis, const InversionConfig& cfg,
                     int budget, char branch, const SpMat& G,
                     double lambda_max, const std::vector<char>& on_boundary,
                     const std::vector<double>& pin, PhaseState& st,
                     InversionRun& run) {
    if (budget <= 0) return "iteration_cap";
    const int n = mesh.n_nodes();
    fem::NodalField sf{st.sigma, fem::FieldRole::conductivity};
    ObjectiveEval fe = eval_objective(mesh, sf, data, basis, cfg);
    GradientEval ge = eval_gradient(mesh, fe, sf, cfg);
    std::deque<double> hist{fe.value};
    double s = cfg.s_max;
    for (int done = 0; done < budget; ++done) {
        const double phimax = *std::max_element(hist.begin(), hist.end());
        double strial = s;
        int backtracks = 0;
        std::vector<double> trial;
        ObjectiveEval fe_trial;
        bool accepted = false;
        while (true) {
            trial.resize(n);
            for (int i = 0; i < n; ++i)
                trial[i] = st.sigma[i] - strial * ge.smoothed.values[i];
            trial = solve_proxy(mesh, G, lambda_max, trial, strial, cfg,
                                on_boundary, pin);
            if (trial == st.sigma) return "stationary";
            fem::NodalField tf{trial, fem::FieldRole::conductivity};
            fe_trial = eval_objective(mesh, tf, data, basis, cfg);
            std::vector<double> d(n);
            for (int i = 0; i < n; ++i) d[i] = trial[i] - st.sigma[i];
            const double dn2 = h1_inner(G, d, d);
            if (backtracks == 0) {
                // full-step update below meaningful precision: converged
                const double scale = std::max(1.0, h1_inner(G, st.sigma, st.sigma));
                if (dn2 <= 1e-18 * scale) return "stationary";
            }
            if (std::isfinite(fe_trial.value) &&
                fe_trial.value < phimax - cfg.tau / (2.0 * strial) * dn2) {
                accepted = true;
                break;
            }
            strial *= 0.5 * (cfg.rho1 + cfg.rho2);
            ++backtracks;
            if (strial <= cfg.s_stop) return "step_below_s_stop";
            if (backtracks >= 60) return "stagnation";
        }
        if (!accepted) return "stagnation";
        fem::NodalField tf{trial, fem::FieldRole::conductivity};
        GradientEval ge_trial = eval_gradient(mesh, fe_trial, tf, cfg);

        std::vector<double> dsig(n), dgrad(n);
        for (int i = 0; i < n; ++i) {
            dsig[i] = trial[i] - st.sigma[i];
            dgrad[i] = ge_trial.smoothed.values[i] - ge.smoothed.values[i];
        }
        const double xk = h1_inner(G, dsig, dsig);
        const double yk = h1_inner(G, dsig, dgrad);
        s = (yk <= 0.0) ? cfg.s_max
                        : std::min(cfg.s_max, std::max(cfg.s_min, xk / yk));

        st.sigma = trial;
        fe = std::move(fe_trial);
        ge = std::move(ge_trial);
        hist.push_back(fe.value);
        if (static_cast<int>(hist.size()) > cfg.memory) hist.pop_front();
        ++st.k_global;
        run.sigma_history.push_back(st.sigma);
        run.records.push_back(
            {st.k_global, fe.value, strial, backtracks, branch});
    }
    return "iteration_cap";
}

}  // namespace

InversionRun bb_invert(const fem::DiskMesh& mesh, const fem::NodalField& sigma0,
                       const MeasurementSet& data, const CurrentBasis& basis,
                       const InversionConfig& cfg) {
    cfg.validate();
    if (static_cast<int>(sigma0.values.size()) != mesh.n_nodes())
        throw std::invalid_argument("initial conductivity does not match the mesh");
    for (double v : sigma0.values)
        if (!(cfg.c0 <= v && v <= cfg.c1))
            throw std::domain_error("initial conductivity violates the bounds");

    const fem::NodalField ones{std::vector<double>(mesh.n_nodes(), 1.0),
                               fem::FieldRole::conductivity};
    const SpMat G = fem::assemble_stiffness(mesh, ones) + fem::assemble_mass(mesh);
    const double lambda_max =
        cfg.beta > 0.0 ? power_iteration_lambda_max(G) : 1.0;
    std::vector<char> on_boundary(mesh.n_nodes(), 0);
    for (int b : mesh.boundary) on_boundary[b] = 1;

    InversionRun run;
    run.sigma_history.push_back(sigma0.values);
    PhaseState st{sigma0.values, 0};

    std::string reason;
    if (cfg.misfit == Misfit::w2 && cfg.warm_start_m > 0) {
        InversionConfig warm = cfg;
        warm.misfit = Misfit::l2;
        warm.beta = 0.0;  // preliminary L2 stage runs unregularized
        reason = bb_phase(mesh, data, basis, warm,
                          std::min(cfg.warm_start_m, cfg.i_max), 'L', G,
                          lambda_max, on_boundary, sigma0.values, st, run);
        const int remaining = cfg.i_max - st.k_global;
        if (remaining > 0)
            reason = bb_phase(mesh, data, basis, cfg, remaining, 'W', G,
                              lambda_max, on_boundary, sigma0.values, st, run);
    } else {
        reason = bb_phase(mesh, data, basis, cfg, cfg.i_max,
                          cfg.misfit == Misfit::w2 ? 'W' : 'L', G, lambda_max,
                          on_boundary, sigma0.values, st, run);
    }
    run.stop_reason = reason;
    return run;
}

namespace {

double misfit_value_only(const fem::DiskMesh& mesh,
                         const fem::BoundaryFunction& u,
                         const fem::BoundaryFunction& phi,
                         const InversionConfig& cfg) {
    if (cfg.misfit == Misfit::l2) {
        fem::BoundaryFunction diff;
        diff.values.resize(u.values.size());
        for (size_t i = 0; i < u.values.size(); ++i)
            diff.values[i] = u.values[i] - phi.values[i];
        return 0.5 * fem::boundary_inner(mesh, diff, diff);
    }
    const ot::PeriodicDensity f = normalize_trace(mesh, u, cfg.a);
    const ot::PeriodicDensity g = normalize_trace(mesh, phi, cfg.a);
    return ot::w2_circle(f, g, cfg.newton_eps).w2_squared;
}

template <typename Body>
std::vector<LandscapePoint> landscape_impl(const fem::DiskMesh& mesh,
                                           const MeasurementSet& data,
                                           const CurrentBasis& basis,
                                           const InversionConfig& cfg,
                                           const PolarGrid& grid,
                                           double incl_radius,
                                           double incl_value, Body&& runner) {
    const int nr = static_cast<int>(grid.radii.size());
    const int na = static_cast<int>(grid.angles.size());
    std::vector<LandscapePoint> out(static_cast<size_t>(nr) * na);
    auto evaluate = [&](int idx) {
        const double r = grid.radii[idx / na];
        const double th = grid.angles[idx % na];
        ConductivityScene scene;
        scene.inclusions.push_back({Inclusion::Kind::disk, r * std::cos(th),
                                    r * std::sin(th), incl_radius, incl_radius,
                                    incl_value});
        const fem::NodalField sigma = scene_to_field(mesh, scene);
        const fem::NeumannSolver solver(mesh, sigma);
        const auto fields = solver.solve_many(basis.patterns);
        double jw = 0.0, jl = 0.0;
        InversionConfig w2cfg = cfg, l2cfg = cfg;
        w2cfg.misfit = Misfit::w2;
        l2cfg.misfit = Misfit::l2;
        for (size_t p = 0; p < fields.size(); ++p) {
            const auto tr = fem::boundary_trace(mesh, fields[p]);
            jw += misfit_value_only(mesh, tr, data.traces[p], w2cfg);
            jl += misfit_value_only(mesh, tr, data.traces[p], l2cfg);
        }
        out[idx] = {r, th, jw, jl};
    };
    runner(static_cast<int>(out.size()), evaluate);
    return out;
}

}  // namespace

std::vector<LandscapePoint> landscape_scan(const fem::DiskMesh& mesh,
                                           const MeasurementSet& data,
                                           const CurrentBasis& basis,
                                           const InversionConfig& cfg,
                                           const PolarGrid& grid,
                                           double incl_radius,
                                           double incl_value) {
    return landscape_impl(mesh, data, basis, cfg, grid, incl_radius, incl_value,
                          [](int count, auto&& evaluate) {
                              std::string error;
#pragma omp parallel for schedule(dynamic)
                              for (int i = 0; i < count; ++i) {
                                  try {
                                      evaluate(i);
                                  } catch (const std::exception& e) {
#pragma omp critical
                                      if (error.empty()) error = e.what();
                                  }
                              }
                              if (!error.empty())
                                  throw std::runtime_error(error);
                          });
}

std::vector<LandscapePoint> landscape_scan_serial(const fem::DiskMesh& mesh,
                                                  const MeasurementSet& data,
                                                  const CurrentBasis& basis,
                                                  const InversionConfig& cfg,
                                                  const PolarGrid& grid,
                                                  double incl_radius,
                                                  double incl_value) {
    return landscape_impl(mesh, data, basis, cfg, grid, incl_radius, incl_value,
                          [](int count, auto&& evaluate) {
                              for (int i = 0; i < count; ++i) evaluate(i);
                          });
}

double relative_l2_error(const fem::DiskMesh& mesh,
                         const std::vector<double>& sigma,
                         const std::vector<double>& sigma_ref) {
    const SpMat M = fem::assemble_mass(mesh);
    const int n = mesh.n_nodes();
    Eigen::VectorXd d(n), r(n);
    for (int i = 0; i < n; ++i) {
        d[i] = sigma[i] - sigma_ref[i];
        r[i] = sigma_ref[i];
    }
    return std::sqrt(d.dot(M * d) / r.dot(M * r));
}

}  // namespace w2eit::eit
