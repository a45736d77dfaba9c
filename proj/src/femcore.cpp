#include "fscm/femcore.hpp"

#include <cmath>

namespace fscm {

QuadratureRule quad_rule(int degree) {
    QuadratureRule rule;
    if (degree == 6) {
        // seven-point Gauss-Hammer rule, exact through total degree 5,
        // all points strictly inside the triangle
        const double s15 = std::sqrt(15.0);
        const double a = (6.0 - s15) / 21.0, wa = (155.0 - s15) / 1200.0;
        const double b = (6.0 + s15) / 21.0, wb = (155.0 + s15) / 1200.0;
        rule.exactness = 5;
        rule.bary = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0},
                     {a, a, 1 - 2 * a},
                     {1 - 2 * a, a, a},
                     {a, 1 - 2 * a, a},
                     {b, b, 1 - 2 * b},
                     {1 - 2 * b, b, b},
                     {b, 1 - 2 * b, b}};
        rule.w = {9.0 / 80.0, wa / 2, wa / 2, wa / 2, wb / 2, wb / 2, wb / 2};
        return rule;
    }
    if (degree == 2) {
        rule.exactness = 2;
        const double a = 1.0 / 6.0;
        rule.bary = {{a, a, 1 - 2 * a}, {1 - 2 * a, a, a}, {a, 1 - 2 * a, a}};
        rule.w = {1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0};
        return rule;
    }
    if (degree == 1) {
        rule.exactness = 1;
        rule.bary = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
        rule.w = {0.5};
        return rule;
    }
    throw Error("quad_rule: unsupported degree " + std::to_string(degree));
}

DofMap DofMap::build(const TriMesh& mesh, Space space) {
    DofMap d;
    d.space = space;
    d.node_to_dof.assign(mesh.n_nodes(), -1);
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        const NodeTag t = mesh.node_tags[i];
        bool free = false;
        switch (space) {
            case Space::Full: free = true; break;
            case Space::VanishAllBoundary: free = t == NodeTag::Interior; break;
            case Space::VanishDirichletOnly:
                free = t == NodeTag::Interior || t == NodeTag::OnAxis;
                break;
        }
        if (free) {
            d.node_to_dof[i] = static_cast<int>(d.free_nodes.size());
            d.free_nodes.push_back(i);
        }
    }
    d.n_free = static_cast<int>(d.free_nodes.size());
    return d;
}

bool DofMap::has_axis_dofs(const TriMesh& mesh) const {
    for (const int n : free_nodes)
        if (mesh.node_tags[n] == NodeTag::OnAxis || mesh.node_tags[n] == NodeTag::OnAxisEnd)
            return true;
    return false;
}

double SparseSymMatrix::symmetry_error() const {
    Eigen::SparseMatrix<double> d = Eigen::SparseMatrix<double>(m.transpose()) - m;
    double worst = 0.0, scale = 0.0;
    for (int k = 0; k < m.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
            scale = std::max(scale, std::abs(it.value()));
    for (int k = 0; k < d.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator it(d, k); it; ++it)
            worst = std::max(worst, std::abs(it.value()));
    return scale > 0 ? worst / scale : 0.0;
}

CholeskySolver::CholeskySolver(SparseSymMatrix A) : A_(std::move(A)) {
    llt_.compute(A_.m);
    if (llt_.info() != Eigen::Success)
        throw Error("solve_spd: Cholesky factorization failed (matrix not SPD?)");
}

Eigen::VectorXd CholeskySolver::solve(const Eigen::VectorXd& b) const {
    Eigen::VectorXd x = llt_.solve(b);
    x += llt_.solve(b - A_.m * x).eval();  // one refinement step
    const double bn = b.norm();
    if (bn > 0.0) {
        const double rel = (A_.m * x - b).norm() / bn;
        if (!(rel <= 1e-12))
            throw Error("solve_spd: residual " + std::to_string(rel) + " exceeds 1e-12");
    }
    return x;
}

Eigen::VectorXcd CholeskySolver::solve(const Eigen::VectorXcd& b) const {
    // operators have real coefficients: solve real and imaginary parts apart
    Eigen::VectorXcd x(b.size());
    x.real() = solve(Eigen::VectorXd(b.real()));
    if (b.imag().norm() == 0.0)
        x.imag().setZero();
    else
        x.imag() = solve(Eigen::VectorXd(b.imag()));
    return x;
}

Eigen::VectorXcd solve_spd(const SparseSymMatrix& A, const Eigen::VectorXcd& b) {
    return CholeskySolver(A).solve(b);
}

QuadGeom::QuadGeom(const TriMesh& m, const QuadratureRule& rule) : mesh(&m) {
    ne = m.n_triangles();
    npt = static_cast<int>(rule.bary.size());
    nq = ne * npt;
    qr.resize(nq);
    qz.resize(nq);
    qw.resize(nq);
    lam.resize(npt * 3);
    glam.resize(ne);
    for (int q = 0; q < npt; ++q)
        for (int i = 0; i < 3; ++i) lam[q * 3 + i] = rule.bary[q][i];

    for (int e = 0; e < ne; ++e) {
        const auto& t = m.triangles[e];
        const Vec2 p0 = m.nodes[t[0]], p1 = m.nodes[t[1]], p2 = m.nodes[t[2]];
        const double area2 = cross(p1 - p0, p2 - p0);  // = 2 |T|
        glam[e] = {(p1.z - p2.z) / area2, (p2.r - p1.r) / area2,
                   (p2.z - p0.z) / area2, (p0.r - p2.r) / area2,
                   (p0.z - p1.z) / area2, (p1.r - p0.r) / area2};
        for (int q = 0; q < npt; ++q) {
            const auto& b = rule.bary[q];
            qr[e * npt + q] = b[0] * p0.r + b[1] * p1.r + b[2] * p2.r;
            qz[e * npt + q] = b[0] * p0.z + b[1] * p1.z + b[2] * p2.z;
            qw[e * npt + q] = rule.w[q] * area2;  // physical weight
        }
    }
}

// --- assembly ----------------------------------------------------------------

namespace {

using Local = std::array<double, 9>;

void local_ak(const QuadGeom& qg, int k, int e, Local& loc) {
    const auto& t = qg.mesh->triangles[e];
    const Vec2 p0 = qg.mesh->nodes[t[0]], p1 = qg.mesh->nodes[t[1]], p2 = qg.mesh->nodes[t[2]];
    const double area = 0.5 * cross(p1 - p0, p2 - p0);
    const double rbar = (p0.r + p1.r + p2.r) / 3.0;
    const auto& g = qg.glam[e];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double v = area * rbar * (g[2 * i] * g[2 * j] + g[2 * i + 1] * g[2 * j + 1]);
            if (k != 0) {
                double mass = 0.0;
                for (int q = 0; q < qg.npt; ++q) {
                    const int iq = e * qg.npt + q;
                    mass += qg.qw[iq] / qg.qr[iq] * qg.lam[q * 3 + i] * qg.lam[q * 3 + j];
                }
                v += static_cast<double>(k) * k * mass;
            }
            loc[3 * i + j] = v;
        }
}

void local_mass(const QuadGeom& qg, int tau, int e, Local& loc) {
    loc.fill(0.0);
    for (int q = 0; q < qg.npt; ++q) {
        const int iq = e * qg.npt + q;
        const double w = qg.qw[iq] * std::pow(qg.qr[iq], tau);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) loc[3 * i + j] += w * qg.lam[q * 3 + i] * qg.lam[q * 3 + j];
    }
}

template <typename LocalFn>
SparseSymMatrix assemble_from_locals(const QuadGeom& qg, const DofMap& dofs, LocalFn&& fn,
                                     bool parallel) {
    std::vector<Local> locals(qg.ne);
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int e = 0; e < qg.ne; ++e) fn(e, locals[e]);
    } else {
        for (int e = 0; e < qg.ne; ++e) fn(e, locals[e]);
    }

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<size_t>(qg.ne) * 9);
    for (int e = 0; e < qg.ne; ++e) {
        const auto& t = qg.mesh->triangles[e];
        for (int i = 0; i < 3; ++i) {
            const int di = dofs.node_to_dof[t[i]];
            if (di < 0) continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = dofs.node_to_dof[t[j]];
                if (dj < 0) continue;
                trips.emplace_back(di, dj, locals[e][3 * i + j]);
            }
        }
    }
    SparseSymMatrix A;
    A.m.resize(dofs.n_free, dofs.n_free);
    A.m.setFromTriplets(trips.begin(), trips.end());
    A.m.makeCompressed();
    return A;
}

void check_ak_space(int k, const DofMap& dofs) {
    if (k != 0 && dofs.space != Space::VanishAllBoundary)
        throw Error("assemble_ak: |k| >= 1 requires the space vanishing on all of the boundary");
    if (k == 0 && dofs.space == Space::VanishAllBoundary)
        throw Error("assemble_ak: k = 0 uses the space vanishing on gamma_b only");
}

}  // namespace

SparseSymMatrix assemble_ak(const QuadGeom& qg, int k, const DofMap& dofs) {
    check_ak_space(k, dofs);
    return assemble_from_locals(
        qg, dofs, [&](int e, Local& loc) { local_ak(qg, k, e, loc); }, true);
}

SparseSymMatrix assemble_ak_serial(const QuadGeom& qg, int k, const DofMap& dofs) {
    check_ak_space(k, dofs);
    return assemble_from_locals(
        qg, dofs, [&](int e, Local& loc) { local_ak(qg, k, e, loc); }, false);
}

SparseSymMatrix assemble_mass_w(const QuadGeom& qg, int tau, const DofMap& dofs) {
    if (tau != 1 && tau != -1 && tau != -3) throw Error("assemble_mass_w: tau must be 1, -1 or -3");
    if (tau < 0 && dofs.has_axis_dofs(*qg.mesh))
        throw Error("assemble_mass_w: tau < 0 with axis dofs present");
    return assemble_from_locals(
        qg, dofs, [&](int e, Local& loc) { local_mass(qg, tau, e, loc); }, true);
}

SparseSymMatrix assemble_mass_w_serial(const QuadGeom& qg, int tau, const DofMap& dofs) {
    if (tau != 1 && tau != -1 && tau != -3) throw Error("assemble_mass_w: tau must be 1, -1 or -3");
    if (tau < 0 && dofs.has_axis_dofs(*qg.mesh))
        throw Error("assemble_mass_w: tau < 0 with axis dofs present");
    return assemble_from_locals(
        qg, dofs, [&](int e, Local& loc) { local_mass(qg, tau, e, loc); }, false);
}

Eigen::VectorXcd assemble_load(const QuadGeom& qg, const Eigen::VectorXcd& f_at_qp,
                               const DofMap& dofs) {
    if (f_at_qp.size() != qg.nq) throw Error("assemble_load: sample size mismatch");
    Eigen::VectorXcd b = Eigen::VectorXcd::Zero(dofs.n_free);
    for (int e = 0; e < qg.ne; ++e) {
        const auto& t = qg.mesh->triangles[e];
        for (int q = 0; q < qg.npt; ++q) {
            const int iq = e * qg.npt + q;
            const Complex wf = qg.qw[iq] * qg.qr[iq] * f_at_qp[iq];
            for (int i = 0; i < 3; ++i) {
                const int d = dofs.node_to_dof[t[i]];
                if (d >= 0) b[d] += wf * qg.lam[q * 3 + i];
            }
        }
    }
    return b;
}

Eigen::VectorXcd assemble_load(const QuadGeom& qg, const ComplexField& f, const DofMap& dofs) {
    return assemble_load(qg, sample_field(qg, f), dofs);
}

// --- composite sampling -------------------------------------------------------

namespace {

Sampled sample_impl(const QuadGeom& qg, const Composite& u, bool with_grad, bool parallel) {
    Sampled s;
    s.v = Eigen::VectorXcd::Zero(qg.nq);
    if (with_grad) {
        s.dr = Eigen::VectorXcd::Zero(qg.nq);
        s.dz = Eigen::VectorXcd::Zero(qg.nq);
    }
    const bool has_fe = u.fe.size() > 0;
    if (has_fe && u.fe.size() != qg.mesh->n_nodes())
        throw Error("sample: FE vector size mismatch");

    auto body = [&](int e) {
        const auto& t = qg.mesh->triangles[e];
        Complex un[3] = {0, 0, 0};
        if (has_fe)
            for (int i = 0; i < 3; ++i) un[i] = u.fe[t[i]];
        for (int q = 0; q < qg.npt; ++q) {
            const int iq = e * qg.npt + q;
            Complex v = 0, gr = 0, gz = 0;
            if (has_fe) {
                for (int i = 0; i < 3; ++i) v += qg.lam[q * 3 + i] * un[i];
                if (with_grad) {
                    const auto& g = qg.glam[e];
                    for (int i = 0; i < 3; ++i) {
                        gr += g[2 * i] * un[i];
                        gz += g[2 * i + 1] * un[i];
                    }
                }
            }
            for (const ClosedTerm& term : u.terms) {
                const Jet j = term.jet({qg.qr[iq], qg.qz[iq]});
                v += term.coeff * j.v;
                if (with_grad) {
                    gr += term.coeff * j.dr;
                    gz += term.coeff * j.dz;
                }
            }
            s.v[iq] = v;
            if (with_grad) {
                s.dr[iq] = gr;
                s.dz[iq] = gz;
            }
        }
    };
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int e = 0; e < qg.ne; ++e) body(e);
    } else {
        for (int e = 0; e < qg.ne; ++e) body(e);
    }
    return s;
}

}  // namespace

Sampled sample(const QuadGeom& qg, const Composite& u, bool with_grad) {
    return sample_impl(qg, u, with_grad, true);
}

Sampled sample_serial(const QuadGeom& qg, const Composite& u, bool with_grad) {
    return sample_impl(qg, u, with_grad, false);
}

Eigen::VectorXcd sample_field(const QuadGeom& qg, const ComplexField& f) {
    Eigen::VectorXcd out(qg.nq);
#pragma omp parallel for schedule(static)
    for (int q = 0; q < qg.nq; ++q) out[q] = f({qg.qr[q], qg.qz[q]});
    return out;
}

Eigen::VectorXcd sample_field(const QuadGeom& qg, const RealField& f) {
    Eigen::VectorXcd out(qg.nq);
#pragma omp parallel for schedule(static)
    for (int q = 0; q < qg.nq; ++q) out[q] = f({qg.qr[q], qg.qz[q]});
    return out;
}

Sampled sample_remote(const QuadGeom& fine, const Composite& u, const TriMesh& coarse,
                      const TriLocator& loc, bool with_grad) {
    Sampled s;
    s.v = Eigen::VectorXcd::Zero(fine.nq);
    if (with_grad) {
        s.dr = Eigen::VectorXcd::Zero(fine.nq);
        s.dz = Eigen::VectorXcd::Zero(fine.nq);
    }
    const bool has_fe = u.fe.size() > 0;
    if (has_fe && u.fe.size() != coarse.n_nodes())
        throw Error("sample_remote: FE vector size mismatch");

#pragma omp parallel for schedule(static)
    for (int q = 0; q < fine.nq; ++q) {
        const Vec2 p{fine.qr[q], fine.qz[q]};
        Complex v = 0, gr = 0, gz = 0;
        if (has_fe) {
            const auto hit = loc.locate(p);
            const auto& t = coarse.triangles[hit.tri];
            const Vec2 p0 = coarse.nodes[t[0]], p1 = coarse.nodes[t[1]], p2 = coarse.nodes[t[2]];
            const double area2 = cross(p1 - p0, p2 - p0);
            for (int i = 0; i < 3; ++i) v += hit.bary[i] * u.fe[t[i]];
            if (with_grad) {
                const double g[6] = {(p1.z - p2.z) / area2, (p2.r - p1.r) / area2,
                                     (p2.z - p0.z) / area2, (p0.r - p2.r) / area2,
                                     (p0.z - p1.z) / area2, (p1.r - p0.r) / area2};
                for (int i = 0; i < 3; ++i) {
                    gr += g[2 * i] * u.fe[t[i]];
                    gz += g[2 * i + 1] * u.fe[t[i]];
                }
            }
        }
        for (const ClosedTerm& term : u.terms) {
            const Jet j = term.jet(p);
            v += term.coeff * j.v;
            if (with_grad) {
                gr += term.coeff * j.dr;
                gz += term.coeff * j.dz;
            }
        }
        s.v[q] = v;
        if (with_grad) {
            s.dr[q] = gr;
            s.dz[q] = gz;
        }
    }
    return s;
}

Complex inner_w(const QuadGeom& qg, const Eigen::VectorXcd& f, const Eigen::VectorXcd& g,
                int tau) {
    if (f.size() != qg.nq || g.size() != qg.nq) throw Error("inner_w: sample size mismatch");
    Complex acc = 0;
    for (int q = 0; q < qg.nq; ++q)
        acc += qg.qw[q] * std::pow(qg.qr[q], tau) * f[q] * std::conj(g[q]);
    return acc;
}

WeightedNorms weighted_norms_from_samples(const QuadGeom& qg, const Sampled& s, int k) {
    if (!s.has_grad()) throw Error("weighted_norms: gradient samples required");
    double sem2 = 0, n01_2 = 0, n0m1_2 = 0;
    for (int q = 0; q < qg.nq; ++q) {
        const double w = qg.qw[q], r = qg.qr[q];
        const double g2 = std::norm(s.dr[q]) + std::norm(s.dz[q]);
        const double v2 = std::norm(s.v[q]);
        sem2 += w * r * g2;
        n01_2 += w * r * v2;
        n0m1_2 += w / r * v2;
    }
    WeightedNorms n;
    n.sem11 = std::sqrt(sem2);
    n.n01 = std::sqrt(n01_2);
    n.n0m1 = std::sqrt(n0m1_2);
    n.normk = std::sqrt(sem2 + static_cast<double>(k) * k * n0m1_2);
    return n;
}

WeightedNorms weighted_norms(const QuadGeom& qg, const Composite& u, int k) {
    if (k != 0 && u.fe.size() > 0) {
        double scale = 0.0, axis = 0.0;
        for (int i = 0; i < qg.mesh->n_nodes(); ++i) {
            scale = std::max(scale, std::abs(u.fe[i]));
            const NodeTag t = qg.mesh->node_tags[i];
            if (t == NodeTag::OnAxis || t == NodeTag::OnAxisEnd)
                axis = std::max(axis, std::abs(u.fe[i]));
        }
        if (axis > 1e-12 * std::max(scale, 1e-300))
            throw Error("weighted_norms: k != 0 with nonzero axis trace");
    }
    return weighted_norms_from_samples(qg, sample(qg, u, true), k);
}

void ak_closed_action(const QuadGeom& qg, const Sampled& g, const DofMap& dofs,
                      Eigen::VectorXcd& stiff, Eigen::VectorXcd& mass) {
    if (!g.has_grad()) throw Error("ak_closed_action: gradient samples required");
    stiff = Eigen::VectorXcd::Zero(dofs.n_free);
    mass = Eigen::VectorXcd::Zero(dofs.n_free);
    for (int e = 0; e < qg.ne; ++e) {
        const auto& t = qg.mesh->triangles[e];
        const auto& gl = qg.glam[e];
        for (int q = 0; q < qg.npt; ++q) {
            const int iq = e * qg.npt + q;
            const double w = qg.qw[iq], r = qg.qr[iq];
            for (int i = 0; i < 3; ++i) {
                const int d = dofs.node_to_dof[t[i]];
                if (d < 0) continue;
                stiff[d] += w * r * (g.dr[iq] * gl[2 * i] + g.dz[iq] * gl[2 * i + 1]);
                mass[d] += w / r * g.v[iq] * qg.lam[q * 3 + i];
            }
        }
    }
}

// --- FemContext ---------------------------------------------------------------

FemContext::FemContext(const TriMesh& mesh)
    : mesh_(&mesh),
      qg_(mesh),
      dof_full_(DofMap::build(mesh, Space::Full)),
      dof_o_(DofMap::build(mesh, Space::VanishAllBoundary)),
      dof_d_(DofMap::build(mesh, Space::VanishDirichletOnly)) {
    // full-node stiffness and 1/r mass, combined per mode as S + k^2 M
    auto S = assemble_from_locals(
        qg_, dof_full_, [&](int e, Local& loc) { local_ak(qg_, 0, e, loc); }, true);
    auto M = assemble_from_locals(
        qg_, dof_full_, [&](int e, Local& loc) { local_mass(qg_, -1, e, loc); }, true);
    S_full_ = std::move(S.m);
    Mneg_full_ = std::move(M.m);
}

const DofMap& FemContext::dofs(Space s) const {
    switch (s) {
        case Space::Full: return dof_full_;
        case Space::VanishAllBoundary: return dof_o_;
        case Space::VanishDirichletOnly: return dof_d_;
    }
    throw Error("dofs: bad space");
}

SparseSymMatrix FemContext::ak_matrix(int k, Space s) const {
    const DofMap& d = dofs(s);
    std::vector<Eigen::Triplet<double>> trips;
    const double k2 = static_cast<double>(k) * k;
    for (int c = 0; c < S_full_.outerSize(); ++c) {
        const int dc = d.node_to_dof[c];
        if (dc < 0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(S_full_, c); it; ++it) {
            const int di = d.node_to_dof[it.row()];
            if (di >= 0) trips.emplace_back(di, dc, it.value());
        }
        if (k != 0)
            for (Eigen::SparseMatrix<double>::InnerIterator it(Mneg_full_, c); it; ++it) {
                const int di = d.node_to_dof[it.row()];
                if (di >= 0) trips.emplace_back(di, dc, k2 * it.value());
            }
    }
    SparseSymMatrix A;
    A.m.resize(d.n_free, d.n_free);
    A.m.setFromTriplets(trips.begin(), trips.end());
    A.m.makeCompressed();
    return A;
}

const CholeskySolver& FemContext::solver(int k, Space s) {
    const auto key = std::make_pair(k, static_cast<int>(s));
    auto it = cache_.find(key);
    if (it == cache_.end())
        it = cache_.emplace(key, std::make_unique<CholeskySolver>(ak_matrix(k, s))).first;
    return *it->second;
}

Eigen::VectorXcd FemContext::ak_apply_restrict(int k, const Eigen::VectorXcd& x_full,
                                               Space s) const {
    if (x_full.size() != mesh_->n_nodes()) throw Error("ak_apply_restrict: size mismatch");
    Eigen::VectorXcd y = S_full_.cast<Complex>() * x_full;
    if (k != 0) {
        // 1/r rows are meaningless against axis-supported data
        for (int i = 0; i < mesh_->n_nodes(); ++i) {
            const NodeTag t = mesh_->node_tags[i];
            if ((t == NodeTag::OnAxis || t == NodeTag::OnAxisEnd) && std::abs(x_full[i]) != 0.0)
                throw Error("ak_apply_restrict: k != 0 with nonzero axis values");
        }
        y += static_cast<double>(k) * k * (Mneg_full_.cast<Complex>() * x_full);
    }
    const DofMap& d = dofs(s);
    Eigen::VectorXcd out(d.n_free);
    for (int i = 0; i < d.n_free; ++i) out[i] = y[d.free_nodes[i]];
    return out;
}

Eigen::VectorXcd FemContext::expand(const Eigen::VectorXcd& free_vals, Space s) const {
    const DofMap& d = dofs(s);
    if (free_vals.size() != d.n_free) throw Error("expand: size mismatch");
    Eigen::VectorXcd full = Eigen::VectorXcd::Zero(mesh_->n_nodes());
    for (int i = 0; i < d.n_free; ++i) full[d.free_nodes[i]] = free_vals[i];
    return full;
}

}  // namespace fscm
