#pragma once

#include "fscm/femcore.hpp"

namespace fscm {

/// The four singularity families: edge families attached to the reentrant
/// edge for operator modes 2, 1, 0, and the conical family for mode 0.
enum class FamilyId { Edge2, Edge1, Edge0, Cone0 };

const char* family_name(FamilyId id);

struct Family {
    FamilyId id;
    int k = 0;  // operator mode of the family's forms
    CornerInfo corner;

    static Family make(FamilyId id, const CornerInfo& corner);
};

/// Space carrying the family's dual/primal solves: modes >= 1 vanish on all
/// of the boundary, mode 0 only on gamma_b.
Space family_space(FamilyId id);

/// Closed-form enriched principal parts: dual p_p with Delta_k p_p = theta_p
/// in L^2_1, and primal phi_P with Delta_k phi_P = psi_P.
struct PrincipalPair {
    RealJetField dual_pp;
    RealField dual_lap;      // theta_p (identically 0 for Cone0)
    RealJetField primal_phiP;
    RealField primal_psiP;   // psi_P (identically 0 for Cone0)
};

PrincipalPair principal_pair(const Family& fam);

struct PrincipalValues {
    Jet pp;
    double theta = 0;
    Jet phiP;
    double psiP = 0;
};

/// All principal-part values at one point; throws at rho = 0 and where a
/// 1/r factor meets r = 0.
PrincipalValues principal_eval(const Family& fam, Vec2 p);

/// Discrete dual/primal singular pair on one mesh. The dual is the composite
/// p_s^h = p_p + lifting + p_circ_h; the primal is phi_s^h = phi_tilde_h +
/// delta_h phi_P.
struct DiscreteSingularPair {
    Family family;
    PrincipalPair parts;

    Eigen::VectorXd dual_fe;    // nodal lifting + interior solution
    double dual_norm_sq = 0;    // || p_s^h ||_{0,1}^2
    double delta_h = 0;
    Eigen::VectorXd primal_fe;  // nodal phi_tilde_h

    // cached per-mesh data for the mode solves
    Eigen::VectorXd dual_vals;                  // p_s^h at the quadrature points
    Eigen::VectorXd phiP_stiff, phiP_mass;      // closed-part a_k action vectors

    Composite dual_composite() const;
    Composite primal_composite() const;

    /// a_k(phi_s^h, phi_i) over the free dofs of the family space.
    Eigen::VectorXcd ak_primal_action(const FemContext& ctx, int k) const;
};

/// Dual stage: lifting of -p_p on the constrained boundary, interior solve of
/// a_k(p_circ, v) = (theta_p | v) - a_k(lifting, v), composite norm.
void compute_dual(const Family& fam, FemContext& ctx, DiscreteSingularPair& out);

/// delta_h from the dual norm: edge families ||p_s^h||^2/(a pi), cone family
/// normalized by (1+2nu) * int P_nu(cos phi)^2 sin phi dphi.
double compute_delta(const Family& fam, double dual_norm_sq);

/// Primal stage: lifting of -delta_h phi_P, interior solve of
/// a_k(phi_tilde, v) = (p_s^h | v) + delta_h (psi_P | v) - a_k(lifting, v).
void compute_primal(const Family& fam, FemContext& ctx, DiscreteSingularPair& out);

DiscreteSingularPair build_family(const Family& fam, FemContext& ctx);

/// The singular pairs needed by the mode solves on one mesh.
struct SingularSet {
    const DiscreteSingularPair* edge2 = nullptr;
    const DiscreteSingularPair* edge1 = nullptr;
    const DiscreteSingularPair* edge0 = nullptr;
    const DiscreteSingularPair* cone0 = nullptr;
};

}  // namespace fscm
