#include "fscm/singular.hpp"

#include <cmath>

#include "fscm/dual.hpp"
#include "fscm/specfun.hpp"

namespace fscm {

namespace {

constexpr double kRhoTol = 1e-12;

/// Local polar frame of an edge corner in dual arithmetic. phi follows the
/// same branch as local_coords: measured from the corner's first side,
/// folded into [0, 2 pi).
struct EdgeFrame {
    Dual2 rho, phi, phip;  // phip = phi + phi0 is the polar angle from +r
};

EdgeFrame edge_frame(const CornerInfo& c, Vec2 p) {
    const Dual2 dr = Dual2::var_r(p.r) - c.location.r;
    const Dual2 dz = Dual2::var_z(p.z) - c.location.z;
    EdgeFrame f;
    f.rho = sqrt(dr * dr + dz * dz);
    f.phip = atan2(dz, dr);
    double phi = std::fmod(f.phip.v - c.phi0 + 4.0 * M_PI, 2.0 * M_PI);
    if (phi > 2.0 * M_PI - 1e-9) phi = 0.0;
    f.phi = Dual2{phi, f.phip.dr, f.phip.dz};
    return f;
}

Dual2 legendre_dual(double nu, Dual2 x) {
    const double v = specfun::legendre_p(nu, x.v);
    const double d = (x.v > 1.0 - 1e-12) ? 0.5 * nu * (nu + 1.0)  // series limit at x = 1
                                         : specfun::legendre_p_dx(nu, x.v);
    return {v, d * x.dr, d * x.dz};
}

struct ConeFrame {
    Dual2 rho, phi;  // phi measured from the axis direction into the domain
};

ConeFrame cone_frame(const CornerInfo& c, Vec2 p) {
    const Dual2 dr = Dual2::var_r(p.r) - c.location.r;
    const Dual2 dz = Dual2::var_z(p.z) - c.location.z;
    ConeFrame f;
    f.rho = sqrt(dr * dr + dz * dz);
    f.phi = atan2(dr, c.cone_axis_dz * dz);  // r >= 0 keeps this in [0, pi]
    return f;
}

int family_mode(FamilyId id) {
    switch (id) {
        case FamilyId::Edge2: return 2;
        case FamilyId::Edge1: return 1;
        case FamilyId::Edge0:
        case FamilyId::Cone0: return 0;
    }
    throw Error("family_mode: bad id");
}

}  // namespace

const char* family_name(FamilyId id) {
    switch (id) {
        case FamilyId::Edge2: return "Edge2";
        case FamilyId::Edge1: return "Edge1";
        case FamilyId::Edge0: return "Edge0";
        case FamilyId::Cone0: return "Cone0";
    }
    return "?";
}

Family Family::make(FamilyId id, const CornerInfo& corner) {
    if (id == FamilyId::Cone0) {
        if (corner.kind != CornerKind::ConicalVertex || !corner.sharp)
            throw Error("Family: Cone0 requires a sharp conical vertex");
    } else if (corner.kind != CornerKind::ReentrantEdge) {
        throw Error("Family: edge families require a reentrant edge");
    }
    return Family{id, family_mode(id), corner};
}

Space family_space(FamilyId id) {
    return (id == FamilyId::Edge2 || id == FamilyId::Edge1) ? Space::VanishAllBoundary
                                                            : Space::VanishDirichletOnly;
}

PrincipalPair principal_pair(const Family& fam) {
    PrincipalPair pp;
    const CornerInfo c = fam.corner;

    if (fam.id == FamilyId::Cone0) {
        const double nu = c.nu;
        pp.dual_pp = [c, nu](Vec2 p) {
            const ConeFrame f = cone_frame(c, p);
            if (f.rho.v < kRhoTol) throw Error("principal: rho = 0");
            return (pow(f.rho, -nu - 1.0) * legendre_dual(nu, cos(f.phi))).jet();
        };
        pp.primal_phiP = [c, nu](Vec2 p) {
            const ConeFrame f = cone_frame(c, p);
            if (f.rho.v < kRhoTol) throw Error("principal: rho = 0");
            return (pow(f.rho, nu) * legendre_dual(nu, cos(f.phi))).jet();
        };
        pp.dual_lap = [](Vec2) { return 0.0; };
        pp.primal_psiP = [](Vec2) { return 0.0; };
        return pp;
    }

    const int k = fam.k;
    const double alpha = c.alpha, a = c.a, phi0 = c.phi0;
    const double ce = 2.0 * k + 1.0;  // enrichment coefficient of the family

    pp.dual_pp = [c, k, alpha, a, ce](Vec2 p) {
        const EdgeFrame f = edge_frame(c, p);
        if (f.rho.v < kRhoTol) throw Error("principal: rho = 0");
        const Dual2 radial = pow(Dual2::var_r(p.r) / a, double(k));
        const Dual2 enrich = 1.0 - (ce / (2.0 * a)) * f.rho * cos(f.phip);
        return (radial * enrich * pow(f.rho, -alpha) * sin(alpha * f.phi)).jet();
    };
    pp.dual_lap = [c, k, alpha, a, ce](Vec2 p) {
        const EdgeFrame f = edge_frame(c, p);
        if (f.rho.v < kRhoTol) throw Error("principal: rho = 0");
        if (k == 0 && std::abs(p.r) < kRhoTol) throw Error("principal: 1/r at r = 0");
        const double pref = std::pow(p.r, k - 1) / std::pow(a, k + 1);
        const double s = std::sin(alpha * f.phi.v);
        const double smix = std::sin(alpha * f.phi.v + f.phip.v);
        return pref * std::pow(f.rho.v, -alpha) *
               (-0.5 * ce * ce * s + 0.5 * ce * (ce + 2.0) * alpha * std::cos(f.phip.v) * smix);
    };
    pp.primal_phiP = [c, k, alpha, a](Vec2 p) {
        const EdgeFrame f = edge_frame(c, p);
        if (f.rho.v < kRhoTol) return Jet{0, 0, 0};  // phi_P -> 0 at the corner
        const Dual2 radial = pow(Dual2::var_r(p.r) / a, double(k));
        return (radial * pow(f.rho, alpha) * sin(alpha * f.phi)).jet();
    };
    pp.primal_psiP = [c, k, alpha, a, ce, phi0](Vec2 p) {
        const EdgeFrame f = edge_frame(c, p);
        if (f.rho.v < kRhoTol) throw Error("principal: rho = 0");
        if (k == 0 && std::abs(p.r) < kRhoTol) throw Error("principal: 1/r at r = 0");
        return ce * std::pow(p.r, k - 1) / std::pow(a, k) * alpha *
               std::pow(f.rho.v, alpha - 1.0) * std::sin((alpha - 1.0) * f.phi.v - phi0);
    };
    return pp;
}

PrincipalValues principal_eval(const Family& fam, Vec2 p) {
    const PrincipalPair parts = principal_pair(fam);
    PrincipalValues v;
    v.pp = parts.dual_pp(p);
    v.theta = parts.dual_lap(p);
    v.phiP = parts.primal_phiP(p);
    v.psiP = parts.primal_psiP(p);
    return v;
}

namespace {

/// Nodal lifting of -scale * g on the constrained nodes of the family space;
/// exact zeros on the axis for the modes that require them.
Eigen::VectorXd boundary_lifting(const FemContext& ctx, const Family& fam,
                                 const RealJetField& g, double scale) {
    const TriMesh& mesh = ctx.mesh();
    const DofMap& dofs = ctx.dofs(family_space(fam.id));
    Eigen::VectorXd lift = Eigen::VectorXd::Zero(mesh.n_nodes());
    for (int i = 0; i < mesh.n_nodes(); ++i) {
        if (dofs.node_to_dof[i] >= 0) continue;  // free node
        const NodeTag tag = mesh.node_tags[i];
        if (fam.k != 0 && (tag == NodeTag::OnAxis || tag == NodeTag::OnAxisEnd)) continue;
        const Vec2 p = mesh.nodes[i];
        if (norm(p - fam.corner.location) < 1e-9) continue;  // trace extends by 0
        lift[i] = -scale * g(p).v;
    }
    return lift;
}

Eigen::VectorXd solve_real(const CholeskySolver& solver, const Eigen::VectorXcd& rhs) {
    return solver.solve(Eigen::VectorXd(rhs.real()));
}

}  // namespace

void compute_dual(const Family& fam, FemContext& ctx, DiscreteSingularPair& out) {
    const Space space = family_space(fam.id);
    const DofMap& dofs = ctx.dofs(space);
    const QuadGeom& qg = ctx.qg();

    out.family = fam;
    out.parts = principal_pair(fam);

    const Eigen::VectorXd lift = boundary_lifting(ctx, fam, out.parts.dual_pp, 1.0);

    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dofs.n_free);
    if (fam.id != FamilyId::Cone0)
        rhs = assemble_load(qg, sample_field(qg, out.parts.dual_lap), dofs);
    rhs -= ctx.ak_apply_restrict(fam.k, lift.cast<Complex>(), space);

    const Eigen::VectorXd p_circ = solve_real(ctx.solver(fam.k, space), rhs);
    out.dual_fe = lift + ctx.expand(p_circ.cast<Complex>(), space).real();

    // composite samples and the L^2_1 norm of p_s^h
    Composite dual;
    dual.fe = out.dual_fe.cast<Complex>();
    dual.terms.push_back({Complex(1.0, 0.0), out.parts.dual_pp});
    const Sampled s = sample(qg, dual, false);
    out.dual_vals = s.v.real();
    out.dual_norm_sq = inner_w(qg, s.v, s.v, 1).real();
}

double compute_delta(const Family& fam, double dual_norm_sq) {
    if (fam.id == FamilyId::Cone0)
        return dual_norm_sq /
               specfun::delta0c_normalizer(fam.corner.nu, fam.corner.beta_aperture);
    return dual_norm_sq / (fam.corner.a * M_PI);
}

void compute_primal(const Family& fam, FemContext& ctx, DiscreteSingularPair& out) {
    const Space space = family_space(fam.id);
    const DofMap& dofs = ctx.dofs(space);
    const QuadGeom& qg = ctx.qg();

    const Eigen::VectorXd lift = boundary_lifting(ctx, fam, out.parts.primal_phiP, out.delta_h);

    Eigen::VectorXcd rhs = assemble_load(qg, Eigen::VectorXcd(out.dual_vals.cast<Complex>()), dofs);
    if (fam.id != FamilyId::Cone0)
        rhs += out.delta_h * assemble_load(qg, sample_field(qg, out.parts.primal_psiP), dofs);
    rhs -= ctx.ak_apply_restrict(fam.k, lift.cast<Complex>(), space);

    const Eigen::VectorXd phi_circ = solve_real(ctx.solver(fam.k, space), rhs);
    out.primal_fe = lift + ctx.expand(phi_circ.cast<Complex>(), space).real();

    // closed-part action vectors, reused by every mode solve on this mesh
    Composite phiP;
    phiP.terms.push_back({Complex(1.0, 0.0), out.parts.primal_phiP});
    Eigen::VectorXcd stiff, mass;
    ak_closed_action(qg, sample(qg, phiP, true), dofs, stiff, mass);
    out.phiP_stiff = stiff.real();
    out.phiP_mass = mass.real();
}

DiscreteSingularPair build_family(const Family& fam, FemContext& ctx) {
    DiscreteSingularPair pair;
    compute_dual(fam, ctx, pair);
    pair.delta_h = compute_delta(fam, pair.dual_norm_sq);
    if (!(pair.delta_h > 0.0)) throw Error("build_family: delta_h must be positive");
    compute_primal(fam, ctx, pair);
    return pair;
}

Composite DiscreteSingularPair::dual_composite() const {
    Composite c;
    c.fe = dual_fe.cast<Complex>();
    c.terms.push_back({Complex(1.0, 0.0), parts.dual_pp});
    return c;
}

Composite DiscreteSingularPair::primal_composite() const {
    Composite c;
    c.fe = primal_fe.cast<Complex>();
    c.terms.push_back({Complex(delta_h, 0.0), parts.primal_phiP});
    return c;
}

Eigen::VectorXcd DiscreteSingularPair::ak_primal_action(const FemContext& ctx, int k) const {
    const Space space = family_space(family.id);
    Eigen::VectorXcd v = ctx.ak_apply_restrict(k, primal_fe.cast<Complex>(), space);
    const double k2 = static_cast<double>(k) * k;
    v += delta_h * (phiP_stiff + k2 * phiP_mass).cast<Complex>();
    return v;
}

}  // namespace fscm
