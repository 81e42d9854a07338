#include "w2eit/fem_disk.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>

namespace w2eit::fem {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

struct TriGeom {
    double b[3], c[3];  // grad lambda_a = (b[a], c[a]) / (2 area)
    double area;
};

TriGeom tri_geometry(const DiskMesh& mesh, int t) {
    const auto& tri = mesh.tris[t];
    const double x1 = mesh.nodes[tri[0]][0], y1 = mesh.nodes[tri[0]][1];
    const double x2 = mesh.nodes[tri[1]][0], y2 = mesh.nodes[tri[1]][1];
    const double x3 = mesh.nodes[tri[2]][0], y3 = mesh.nodes[tri[2]][1];
    TriGeom g;
    g.b[0] = y2 - y3;
    g.b[1] = y3 - y1;
    g.b[2] = y1 - y2;
    g.c[0] = x3 - x2;
    g.c[1] = x1 - x3;
    g.c[2] = x2 - x1;
    g.area = mesh.tri_area[t];
    return g;
}

void tri_gradient(const DiskMesh& mesh, const TriGeom& g, int t,
                  const std::vector<double>& u, double& gx, double& gy) {
    const auto& tri = mesh.tris[t];
    gx = gy = 0.0;
    for (int a = 0; a < 3; ++a) {
        gx += u[tri[a]] * g.b[a];
        gy += u[tri[a]] * g.c[a];
    }
    const double s = 0.5 / g.area;
    gx *= s;
    gy *= s;
}

}  // namespace

double DiskMesh::circumference() const {
    double L = 0.0;
    for (double e : boundary_edge) L += e;
    return L;
}

DiskMesh generate_disk_mesh(int refinement) {
    if (refinement < 1)
        throw std::invalid_argument("mesh refinement must be at least 1");
    const int rings = 5 << refinement;

    DiskMesh mesh;
    mesh.refinement = refinement;
    mesh.nodes.push_back({0.0, 0.0});
    std::vector<int> ring_start(rings + 1, 0);
    for (int j = 1; j <= rings; ++j) {
        ring_start[j] = static_cast<int>(mesh.nodes.size());
        const double r = static_cast<double>(j) / rings;
        const int m = 6 * j;
        for (int k = 0; k < m; ++k) {
            const double th = two_pi * k / m;
            mesh.nodes.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }

    auto push_tri = [&mesh](int a, int b, int c) {
        const double ax = mesh.nodes[a][0], ay = mesh.nodes[a][1];
        const double cross = (mesh.nodes[b][0] - ax) * (mesh.nodes[c][1] - ay) -
                             (mesh.nodes[c][0] - ax) * (mesh.nodes[b][1] - ay);
        if (cross < 0.0) std::swap(b, c);
        mesh.tris.push_back({a, b, c});
        mesh.tri_area.push_back(0.5 * std::abs(cross));
    };

    // center fan
    for (int k = 0; k < 6; ++k)
        push_tri(0, ring_start[1] + k, ring_start[1] + (k + 1) % 6);

    // zigzag between consecutive rings, advancing the pointer whose next
    // node comes first in angle (ties go to the outer ring)
    for (int j = 2; j <= rings; ++j) {
        const int m0 = 6 * (j - 1), m1 = 6 * j;
        const int s0 = ring_start[j - 1], s1 = ring_start[j];
        int i = 0, o = 0;
        while (i < m0 || o < m1) {
            const double ai =
                (i < m0) ? two_pi * (i + 1) / m0 : std::numeric_limits<double>::infinity();
            const double ao =
                (o < m1) ? two_pi * (o + 1) / m1 : std::numeric_limits<double>::infinity();
            if (ao <= ai) {
                push_tri(s1 + o % m1, s1 + (o + 1) % m1, s0 + i % m0);
                ++o;
            } else {
                push_tri(s0 + i % m0, s1 + o % m1, s0 + (i + 1) % m0);
                ++i;
            }
        }
    }

    const int nb = 6 * rings;
    mesh.boundary.resize(nb);
    mesh.boundary_angle.resize(nb);
    for (int k = 0; k < nb; ++k) {
        mesh.boundary[k] = ring_start[rings] + k;
        mesh.boundary_angle[k] = two_pi * k / nb;
    }
    mesh.boundary_edge.resize(nb);
    mesh.boundary_weight.assign(nb, 0.0);
    for (int k = 0; k < nb; ++k) {
        const auto& p = mesh.nodes[mesh.boundary[k]];
        const auto& q = mesh.nodes[mesh.boundary[(k + 1) % nb]];
        mesh.boundary_edge[k] = std::hypot(q[0] - p[0], q[1] - p[1]);
    }
    for (int k = 0; k < nb; ++k)
        mesh.boundary_weight[k] =
            0.5 * (mesh.boundary_edge[k] + mesh.boundary_edge[(k + nb - 1) % nb]);
    return mesh;
}

namespace {

void check_sigma(const DiskMesh& mesh, const NodalField& sigma) {
    if (static_cast<int>(sigma.values.size()) != mesh.n_nodes())
        throw std::invalid_argument("conductivity field does not match the mesh");
    for (double v : sigma.values)
        if (!(v > 0.0)) throw std::domain_error("conductivity must be positive");
}

void element_stiffness(const DiskMesh& mesh, const NodalField& sigma, int t,
                       double out[9]) {
    const TriGeom g = tri_geometry(mesh, t);
    const auto& tri = mesh.tris[t];
    const double st =
        (sigma.values[tri[0]] + sigma.values[tri[1]] + sigma.values[tri[2]]) / 3.0;
    const double scale = st / (4.0 * g.area);
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
            out[3 * a + b] = scale * (g.b[a] * g.b[b] + g.c[a] * g.c[b]);
}

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const DiskMesh& mesh,
                                               const NodalField& sigma) {
    check_sigma(mesh, sigma);
    const int nt = mesh.n_tris();
    std::vector<Eigen::Triplet<double>> trip(9 * static_cast<size_t>(nt));
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
        double k[9];
        element_stiffness(mesh, sigma, t, k);
        const auto& tri = mesh.tris[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trip[9 * static_cast<size_t>(t) + 3 * a + b] =
                    Eigen::Triplet<double>(tri[a], tri[b], k[3 * a + b]);
    }
    Eigen::SparseMatrix<double> A(mesh.n_nodes(), mesh.n_nodes());
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::SparseMatrix<double> assemble_stiffness_serial(const DiskMesh& mesh,
                                                      const NodalField& sigma) {
    check_sigma(mesh, sigma);
    std::vector<std::map<int, double>> rows(mesh.n_nodes());
    for (int t = 0; t < mesh.n_tris(); ++t) {
        double k[9];
        element_stiffness(mesh, sigma, t, k);
        const auto& tri = mesh.tris[t];
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) rows[tri[a]][tri[b]] += k[3 * a + b];
    }
    Eigen::SparseMatrix<double> A(mesh.n_nodes(), mesh.n_nodes());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<size_t>(mesh.n_tris()));
    for (int i = 0; i < mesh.n_nodes(); ++i)
        for (const auto& [j, v] : rows[i]) trip.emplace_back(i, j, v);
    A.setFromTriplets(trip.begin(), trip.end());
    return A;
}

Eigen::SparseMatrix<double> assemble_mass(const DiskMesh& mesh) {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(9 * static_cast<size_t>(mesh.n_tris()));
    for (int t = 0; t < mesh.n_tris(); ++t) {
        const auto& tri = mesh.tris[t];
        const double s = mesh.tri_area[t] / 12.0;
        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
                trip.emplace_back(tri[a], tri[b], (a == b ? 2.0 : 1.0) * s);
    }
    Eigen::SparseMatrix<double> M(mesh.n_nodes(), mesh.n_nodes());
    M.setFromTriplets(trip.begin(), trip.end());
    return M;
}

std::vector<double> lumped_node_area(const DiskMesh& mesh) {
    std::vector<double> lump(mesh.n_nodes(), 0.0);
    for (int t = 0; t < mesh.n_tris(); ++t)
        for (int a = 0; a < 3; ++a)
            lump[mesh.tris[t][a]] += mesh.tri_area[t] / 3.0;
    return lump;
}

namespace {

// Boundary quadrature bands: integral of v against each P1 hat over the
// boundary arc, with v reconstructed per edge by the cubic through the four
// surrounding nodes. Fourth-order in the angular spacing, which keeps the
// data-interpolation error out of the Neumann loads. Stored as a 5-band
// matrix (offsets -2..2 around each node) and symmetrized so the quadrature
// equals its transpose; the load map and the inner product then share one
// operator and the discrete NtD map stays exactly self-adjoint.
std::vector<std::array<double, 5>> boundary_quad_bands(const DiskMesh& mesh) {
    const int nb = mesh.n_boundary();
    std::vector<std::array<double, 5>> band(nb, {0, 0, 0, 0, 0});
    auto gap = [&](int a, int b) {
        double d = mesh.boundary_angle[b % nb] - mesh.boundary_angle[a % nb];
        d = std::fmod(d, two_pi);
        if (d <= 0) d += two_pi;
        return d;
    };
    for (int k = 0; k < nb; ++k) {
        const double d = gap(k, k + 1);  // edge arc, unit circle
        // stencil node positions in edge-local coordinates
        const double xs[4] = {-gap(k - 1 + nb, k) / d, 0.0, 1.0,
                              1.0 + gap(k + 1, k + 2) / d};
        for (int m = 0; m < 4; ++m) {
            // expand l_m(x) = prod_{j != m} (x - xs[j]) / (xs[m] - xs[j])
            double coef[4] = {1.0, 0.0, 0.0, 0.0};
            double denom = 1.0;
            int deg = 0;
            for (int j = 0; j < 4; ++j) {
                if (j == m) continue;
                denom *= xs[m] - xs[j];
                for (int p = deg; p >= 0; --p) {
                    coef[p + 1] += coef[p];
                    coef[p] *= -xs[j];
                }
                ++deg;
            }
            double i0 = 0.0, i1 = 0.0;  // moments against (1-x) and x
            for (int p = 0; p <= 3; ++p) {
                i1 += coef[p] / (p + 2.0);
                i0 += coef[p] * (1.0 / (p + 1.0) - 1.0 / (p + 2.0));
            }
            i0 *= d / denom;
            i1 *= d / denom;
            band[k][m - 1 + 2] += i0;              // hat at node k
            band[(k + 1) % nb][m - 2 + 2] += i1;   // hat at node k+1
        }
    }
    auto sym = band;
    for (int i = 0; i < nb; ++i)
        for (int o = -2; o <= 2; ++o)
            sym[i][o + 2] = 0.5 * (band[i][o + 2] +
                                   band[(i + o + nb) % nb][-o + 2]);
    return sym;
}

std::vector<double> apply_boundary_quadrature(const DiskMesh& mesh,
                                              const std::vector<double>& v) {
    const int nb = mesh.n_boundary();
    const auto band = boundary_quad_bands(mesh);
    std::vector<double> out(nb, 0.0);
    for (int i = 0; i < nb; ++i)
        for (int o = -2; o <= 2; ++o)
            out[i] += band[i][o + 2] * v[(i + o + nb) % nb];
    return out;
}

}  // namespace

Eigen::VectorXd boundary_load(const DiskMesh& mesh, const BoundaryFunction& j) {
    if (static_cast<int>(j.values.size()) != mesh.n_boundary())
        throw std::invalid_argument("boundary function does not match the mesh");
    Eigen::VectorXd load = Eigen::VectorXd::Zero(mesh.n_nodes());
    const std::vector<double> q = apply_boundary_quadrature(mesh, j.values);
    for (int k = 0; k < mesh.n_boundary(); ++k) load[mesh.boundary[k]] = q[k];
    return load;
}

double boundary_inner(const DiskMesh& mesh, const BoundaryFunction& a,
                      const BoundaryFunction& b) {
    const std::vector<double> qb = apply_boundary_quadrature(mesh, b.values);
    double s = 0.0;
    for (int k = 0; k < mesh.n_boundary(); ++k) s += a.values[k] * qb[k];
    return s;
}

double boundary_mean(const DiskMesh& mesh, const BoundaryFunction& f) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        num += mesh.boundary_weight[k] * f.values[k];
        den += mesh.boundary_weight[k];
    }
    return num / den;
}

void make_zero_mean(const DiskMesh& mesh, BoundaryFunction& f) {
    const double m = boundary_mean(mesh, f);
    for (double& v : f.values) v -= m;
}

NeumannSolver::NeumannSolver(const DiskMesh& mesh, const NodalField& sigma)
    : mesh_(&mesh) {
    Eigen::SparseMatrix<double> A = assemble_stiffness(mesh, sigma);
    const int n = mesh.n_nodes();
    // bordered system [[A, w], [w^T, 0]] with w_i = int phi_i ds on the boundary
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(A.nonZeros() + 2 * mesh.n_boundary() + 1);
    for (int c = 0; c < A.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, c); it; ++it)
            trip.emplace_back(static_cast<int>(it.row()), c, it.value());
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        const int i = mesh.boundary[k];
        const double w = mesh.boundary_weight[k];
        trip.emplace_back(i, n, w);
        trip.emplace_back(n, i, w);
    }
    system_.resize(n + 1, n + 1);
    system_.setFromTriplets(trip.begin(), trip.end());
    system_.makeCompressed();
    lu_.compute(system_);
    if (lu_.info() != Eigen::Success)
        throw std::runtime_error("forward operator factorization failed");
}

namespace {

void check_current(const DiskMesh& mesh, const BoundaryFunction& j) {
    double total = 0.0, peak = 0.0;
    for (int k = 0; k < mesh.n_boundary(); ++k) {
        total += mesh.boundary_weight[k] * j.values[k];
        peak = std::max(peak, std::abs(j.values[k]));
    }
    if (std::abs(total) > 1e-10 * std::max(1.0, peak))
        throw std::domain_error("boundary current must have zero mean");
}

}  // namespace

std::vector<NodalField> NeumannSolver::solve_many(
    std::span<const BoundaryFunction> currents) const {
    const int n = mesh_->n_nodes();
    const int p = static_cast<int>(currents.size());
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, p);
    for (int c = 0; c < p; ++c) {
        check_current(*mesh_, currents[c]);
        rhs.col(c).head(n) = boundary_load(*mesh_, currents[c]);
    }
    Eigen::MatrixXd x = lu_.solve(rhs);
    const double rel = (system_ * x - rhs).norm() / std::max(rhs.norm(), 1e-300);
    if (!(rel <= 1e-10))
        throw std::runtime_error("forward solve residual " + std::to_string(rel) +
                                 " exceeds tolerance");
    std::vector<NodalField> out(p);
    for (int c = 0; c < p; ++c) {
        out[c].role = FieldRole::potential;
        out[c].values.assign(x.col(c).data(), x.col(c).data() + n);
    }
    return out;
}

NodalField NeumannSolver::solve(const BoundaryFunction& j) const {
    return solve_many(std::span<const BoundaryFunction>(&j, 1)).front();
}

NodalField solve_forward(const DiskMesh& mesh, const NodalField& sigma,
                         const BoundaryFunction& j) {
    return NeumannSolver(mesh, sigma).solve(j);
}

BoundaryFunction boundary_trace(const DiskMesh& mesh, const NodalField& u) {
    if (static_cast<int>(u.values.size()) != mesh.n_nodes())
        throw std::invalid_argument("potential field does not match the mesh");
    BoundaryFunction t;
    t.values.resize(mesh.n_boundary());
    for (int k = 0; k < mesh.n_boundary(); ++k)
        t.values[k] = u.values[mesh.boundary[k]];
    make_zero_mean(mesh, t);
    return t;
}

NodalField adjoint_gradient_density(const DiskMesh& mesh, const NodalField& u,
                                    const NodalField& u_tilde) {
    if (static_cast<int>(u.values.size()) != mesh.n_nodes() ||
        static_cast<int>(u_tilde.values.size()) != mesh.n_nodes())
        throw std::invalid_argument("fields do not match the mesh");
    std::span<const NodalField> us(&u, 1), uts(&u_tilde, 1);
    NodalField out;
    out.role = FieldRole::gradient_density;
    out.values = gradient_density_accumulate(mesh, us, uts);
    return out;
}

std::vector<double> gradient_density_accumulate(
    const DiskMesh& mesh, std::span<const NodalField> us,
    std::span<const NodalField> uts) {
    if (us.size() != uts.size())
        throw std::invalid_argument("pattern sets have different sizes");
    const int nt = mesh.n_tris();
    std::vector<double> per_tri(nt, 0.0);
#pragma omp parallel for schedule(static)
    for (int t = 0; t < nt; ++t) {
        const TriGeom g = tri_geometry(mesh, t);
        double acc = 0.0;
        for (size_t p = 0; p < us.size(); ++p) {
            double gx, gy, hx, hy;
            tri_gradient(mesh, g, t, us[p].values, gx, gy);
            tri_gradient(mesh, g, t, uts[p].values, hx, hy);
            acc -= hx * gx + hy * gy;
        }
        per_tri[t] = acc;
    }
    std::vector<double> dens(mesh.n_nodes(), 0.0);
    std::vector<double> lump = lumped_node_area(mesh);
    for (int t = 0; t < nt; ++t)
        for (int a = 0; a < 3; ++a)
            dens[mesh.tris[t][a]] += mesh.tri_area[t] / 3.0 * per_tri[t];
    for (int i = 0; i < mesh.n_nodes(); ++i) dens[i] /= lump[i];
    return dens;
}

std::vector<double> gradient_density_accumulate_serial(
    const DiskMesh& mesh, std::span<const NodalField> us,
    std::span<const NodalField> uts) {
    if (us.size() != uts.size())
        throw std::invalid_argument("pattern sets have different sizes");
    std::vector<double> dens(mesh.n_nodes(), 0.0);
    for (size_t p = 0; p < us.size(); ++p) {
        for (int t = 0; t < mesh.n_tris(); ++t) {
            const TriGeom g = tri_geometry(mesh, t);
            double gx, gy, hx, hy;
            tri_gradient(mesh, g, t, us[p].values, gx, gy);
            tri_gradient(mesh, g, t, uts[p].values, hx, hy);
            const double d = -(hx * gx + hy * gy) * mesh.tri_area[t] / 3.0;
            for (int a = 0; a < 3; ++a) dens[mesh.tris[t][a]] += d;
        }
    }
    const std::vector<double> lump = lumped_node_area(mesh);
    for (int i = 0; i < mesh.n_nodes(); ++i) dens[i] /= lump[i];
    return dens;
}

NodalField sobolev_smooth(const DiskMesh& mesh, const NodalField& g) {
    if (static_cast<int>(g.values.size()) != mesh.n_nodes())
        throw std::invalid_argument("field does not match the mesh");
    const int n = mesh.n_nodes();
    std::vector<char> on_boundary(n, 0);
    for (int b : mesh.boundary) on_boundary[b] = 1;

    NodalField ones{std::vector<double>(n, 1.0), FieldRole::conductivity};
    Eigen::SparseMatrix<double> K = assemble_stiffness(mesh, ones);
    Eigen::SparseMatrix<double> M = assemble_mass(mesh);
    Eigen::SparseMatrix<double> H = K + M;

    Eigen::VectorXd rhs =
        M * Eigen::Map<const Eigen::VectorXd>(g.values.data(), n);

    // homogeneous Dirichlet rows/columns
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(H.nonZeros());
    for (int c = 0; c < H.outerSize(); ++c)
        for (Eigen::SparseMatrix<double>::InnerIterator it(H, c); it; ++it) {
            const int r = static_cast<int>(it.row());
            if (on_boundary[r] || on_boundary[c]) continue;
            trip.emplace_back(r, c, it.value());
        }
    for (int i = 0; i < n; ++i)
        if (on_boundary[i]) trip.emplace_back(i, i, 1.0);
    Eigen::SparseMatrix<double> Hd(n, n);
    Hd.setFromTriplets(trip.begin(), trip.end());
    for (int i = 0; i < n; ++i)
        if (on_boundary[i]) rhs[i] = 0.0;

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Hd);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("smoothing operator factorization failed");
    Eigen::VectorXd x = ldlt.solve(rhs);

    NodalField out;
    out.role = FieldRole::gradient_density;
    out.values.assign(x.data(), x.data() + n);
    for (int i = 0; i < n; ++i)
        if (on_boundary[i]) out.values[i] = 0.0;
    return out;
}

std::vector<double> interpolate_trace(const std::vector<double>& src_angles,
                                      const std::vector<double>& src_values,
                                      const std::vector<double>& dst_angles) {
    const int m = static_cast<int>(src_angles.size());
    std::vector<double> out(dst_angles.size());
    for (size_t k = 0; k < dst_angles.size(); ++k) {
        double th = std::fmod(dst_angles[k], two_pi);
        if (th < 0) th += two_pi;
        // segment [src_angles[i], src_angles[i+1]) containing th, with wrap
        const auto it =
            std::upper_bound(src_angles.begin(), src_angles.end(), th);
        const int i =
            (static_cast<int>(it - src_angles.begin()) - 1 + m) % m;
        const double a0 = src_angles[i];
        double a1 = src_angles[(i + 1) % m];
        double tloc = th - a0;
        if (tloc < 0) tloc += two_pi;
        double span = a1 - a0;
        if (span <= 0) span += two_pi;
        const double w = tloc / span;
        out[k] = (1.0 - w) * src_values[i] + w * src_values[(i + 1) % m];
    }
    return out;
}

}  // namespace w2eit::fem
