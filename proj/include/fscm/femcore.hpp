#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <map>
#include <memory>

#include "fscm/mesh.hpp"

namespace fscm {

/// Symmetric interior quadrature on the reference triangle; weights sum to
/// the reference area 1/2. degree is the polynomial exactness order of the
/// underlying family (6 selects the 7-point rule, exact through degree 5).
struct QuadratureRule {
    int exactness = 0;
    std::vector<std::array<double, 3>> bary;
    std::vector<double> w;
};

QuadratureRule quad_rule(int degree);

enum class Space { Full, VanishAllBoundary, VanishDirichletOnly };

struct DofMap {
    Space space = Space::Full;
    std::vector<int> free_nodes;
    std::vector<int> node_to_dof;  // -1 for constrained nodes
    int n_free = 0;

    static DofMap build(const TriMesh& mesh, Space space);
    bool has_axis_dofs(const TriMesh& mesh) const;
};

struct SparseSymMatrix {
    Eigen::SparseMatrix<double> m;
    int dim() const { return static_cast<int>(m.rows()); }
    double symmetry_error() const;
};

/// Direct Cholesky with one step of iterative refinement; enforces the
/// relative residual contract ||Ax - b|| / ||b|| <= 1e-12.
class CholeskySolver {
  public:
    explicit CholeskySolver(SparseSymMatrix A);
    Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
    Eigen::VectorXcd solve(const Eigen::VectorXcd& b) const;
    const SparseSymMatrix& matrix() const { return A_; }

  private:
    SparseSymMatrix A_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

Eigen::VectorXcd solve_spd(const SparseSymMatrix& A, const Eigen::VectorXcd& b);

/// Per-mesh quadrature geometry: physical quadrature points/weights and the
/// constant P1 hat gradients of every element.
class QuadGeom {
  public:
    QuadGeom(const TriMesh& mesh, const QuadratureRule& rule = quad_rule(6));

    const TriMesh* mesh = nullptr;
    int ne = 0, npt = 0, nq = 0;    // elements, points per element, total points
    std::vector<double> qr, qz, qw;  // per quad point; qw includes the Jacobian
    std::vector<double> lam;         // npt x 3 reference hat values
    std::vector<std::array<double, 6>> glam;  // per element: (dr,dz) of the 3 hats

    Vec2 point(int q) const { return {qr[q], qz[q]}; }
};

// --- assembly ---------------------------------------------------------------

/// Matrix of a_k(u, v) = iint [ r grad u . grad v + (k^2/r) u v ] domega on the
/// free nodes of `space`. The stiffness part is exact (affine data), the 1/r
/// mass part uses the interior rule. |k| >= 1 requires VanishAllBoundary,
/// k = 0 requires VanishDirichletOnly.
SparseSymMatrix assemble_ak(const QuadGeom& qg, int k, const DofMap& dofs);
SparseSymMatrix assemble_ak_serial(const QuadGeom& qg, int k, const DofMap& dofs);

/// Matrix of (u | v)_{0,tau} with tau in {1, -1, -3}; tau < 0 requires a space
/// without axis dofs.
SparseSymMatrix assemble_mass_w(const QuadGeom& qg, int tau, const DofMap& dofs);
SparseSymMatrix assemble_mass_w_serial(const QuadGeom& qg, int tau, const DofMap& dofs);

/// Load vector b_i = iint f phi_i r domega over the free nodes.
Eigen::VectorXcd assemble_load(const QuadGeom& qg, const Eigen::VectorXcd& f_at_qp,
                               const DofMap& dofs);
Eigen::VectorXcd assemble_load(const QuadGeom& qg, const ComplexField& f, const DofMap& dofs);

// --- composite fields (FE part + weighted closed-form parts) ----------------

struct ClosedTerm {
    Complex coeff;
    RealJetField jet;
};

struct Composite {
    Eigen::VectorXcd fe;  // nodal values over all mesh nodes; empty means 0
    std::vector<ClosedTerm> terms;
};

/// Field values (and optionally gradients) at the quadrature points.
struct Sampled {
    Eigen::VectorXcd v, dr, dz;
    bool has_grad() const { return dr.size() > 0; }
};

Sampled sample(const QuadGeom& qg, const Composite& u, bool with_grad);
Sampled sample_serial(const QuadGeom& qg, const Composite& u, bool with_grad);

/// Values of f at all quadrature points.
Eigen::VectorXcd sample_field(const QuadGeom& qg, const ComplexField& f);
Eigen::VectorXcd sample_field(const QuadGeom& qg, const RealField& f);

/// Evaluates a composite living on `coarse` at the quadrature points of a
/// different mesh (reference-vs-solution comparisons).
Sampled sample_remote(const QuadGeom& fine, const Composite& u, const TriMesh& coarse,
                      const TriLocator& loc, bool with_grad);

/// iint f conj(g) r^tau domega by the interior rule.
Complex inner_w(const QuadGeom& qg, const Eigen::VectorXcd& f_at_qp,
                const Eigen::VectorXcd& g_at_qp, int tau);

struct WeightedNorms {
    double sem11 = 0;  // | . |_{1,1}
    double n01 = 0;    // || . ||_{0,1}
    double n0m1 = 0;   // || . ||_{0,-1}
    double normk = 0;  // ( sem11^2 + k^2 n0m1^2 )^{1/2}
};

WeightedNorms weighted_norms_from_samples(const QuadGeom& qg, const Sampled& s, int k);
WeightedNorms weighted_norms(const QuadGeom& qg, const Composite& u, int k);

/// Action of a_k on a closed-form field g against the free hat functions:
/// stiff_i = iint r grad g . grad phi_i, mass_i = iint (1/r) g phi_i.
/// a_k(g, phi_i) = stiff_i + k^2 mass_i.
void ak_closed_action(const QuadGeom& qg, const Sampled& g, const DofMap& dofs,
                      Eigen::VectorXcd& stiff, Eigen::VectorXcd& mass);

// --- per-mesh context --------------------------------------------------------

/// Owns the quadrature geometry, dof maps, the stiffness and 1/r-mass
/// matrices over all nodes, and a factorization cache keyed by (k, space).
class FemContext {
  public:
    explicit FemContext(const TriMesh& mesh);

    const TriMesh& mesh() const { return *mesh_; }
    const QuadGeom& qg() const { return qg_; }
    const DofMap& dofs(Space s) const;

    SparseSymMatrix ak_matrix(int k, Space s) const;
    const CholeskySolver& solver(int k, Space s);

    /// y = restriction to free dofs of (S_full + k^2 M_full) x, for a full
    /// nodal vector x (boundary liftings). x must vanish on the axis if k != 0.
    Eigen::VectorXcd ak_apply_restrict(int k, const Eigen::VectorXcd& x_full, Space s) const;

    /// Scatter free-dof values into a full nodal vector (zeros elsewhere).
    Eigen::VectorXcd expand(const Eigen::VectorXcd& free_vals, Space s) const;

  private:
    const TriMesh* mesh_;
    QuadGeom qg_;
    DofMap dof_full_, dof_o_, dof_d_;
    Eigen::SparseMatrix<double> S_full_, Mneg_full_;
    std::map<std::pair<int, int>, std::unique_ptr<CholeskySolver>> cache_;
};

}  // namespace fscm
