// Hamiltonian vector fields of (n-1)-forms, the internal and external
// p-brackets, Grassmann superforms with their sbracket, admissibility,
// the {Hω, .} bracket and Noether currents.
#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pata/phase.hpp"

namespace pata {

using Points = std::vector<std::vector<double>>;

// Membership threshold on da + ξ⨼Ω coefficients.
inline constexpr double kMembershipTol = 1e-9;
inline constexpr int kMembershipProbes = 50;

class NotInPn1 : public std::runtime_error {
 public:
  explicit NotInPn1(double residual, const std::string& what = "form has no Hamiltonian vector field")
      : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Some dx^S ∧ a has no Hamiltonian vector field.
class NotInPp1 : public NotInPn1 {
 public:
  explicit NotInPp1(double residual) : NotInPn1(residual, "superform component has no Hamiltonian vector field") {}
};

class NotAdmissible : public std::runtime_error {
 public:
  NotAdmissible() : std::runtime_error("form is not admissible: Ξ has dx components") {}
};

// Seeded sample on the chart (density kept positive).
Points probe_points(const PataChart& chart, std::uint64_t seed, int count = kMembershipProbes);

struct HamiltonianPair {
  Form a;
  Multivector xi;  // da = -xi ⨼ Ω
};

// max |da + ξ⨼Ω| over the points.
double xi_residual(const PataChart& chart, const HamiltonianPair& h, const Points& pts);

// Rank of X ↦ X⨼Ω at a point; kernel = dim - rank. Ξ is unique iff kernel = 0.
struct OmegaRank {
  int rank = 0;
  int kernel = 0;
};
OmegaRank omega_rank(const PataChart& chart, std::span<const double> pt);

// Solve da = -ξ⨼Ω by least squares: the dp-part fixes the q components, the
// pure-dq part then fixes the momentum components. Throws NotInPn1 when the
// residual at the points exceeds kMembershipTol.
HamiltonianPair xi_general(const PataChart& chart, const Form& a, const Points& pts);

// Vertical field V with V⨼Ω = beta, beta a pure dq n-form. Unrepresentable
// components are dropped (callers check the residual).
Multivector lift_vertical(const PataChart& chart, const Form& beta);
// E = Σ q_c ∂/∂q_c over momentum coordinates; E⨼Ω = θ.
Multivector euler_field(const PataChart& chart);
// Π^ν_μ: vertical, Π^ν_μ ⨼ Ω = dq^ν ∧ (∂_μ ⨼ θ).
Multivector pi_field(const PataChart& chart, int nu, int mu);

// Position observable: zeta an (n-1)-form in q only.
HamiltonianPair xi_Q(const PataChart& chart, const Form& zeta, const Points& pts);
// Momentum observable P_ξ = ξ⨼θ for a field on X×Y:
// Ξ = ξ - ξ(ln g) E - Σ ∂_ν ξ^μ Π^ν_μ.
HamiltonianPair xi_P(const PataChart& chart, const Multivector& xi, const Points& pts);

// y^i Σ_α f^α ∂_α⨼ω
Form observable_Q(const PataChart& chart, int i, const std::vector<Expr>& f);
// g ∂_μ⨼θ
Form observable_P(const PataChart& chart, int mu, const Expr& g);
// ξ⨼θ
Form observable_P(const PataChart& chart, const Multivector& xi);
// g ∂_μ⨼(θ - Hω)
Form observable_P_star(const PataChart& chart, int mu, const Expr& g, const Expr& H);
// -∂_0⨼(θ - Hω)
Form eta0(const PataChart& chart, const Expr& H);

// {a,b} = Ξ(b)⨼Ξ(a)⨼Ω
Form internal_bracket(const PataChart& chart, const HamiltonianPair& a, const HamiltonianPair& b);
// {a,b} = -Ξ(b)⨼da for any form a
Form external_bracket(const PataChart& chart, const Form& a, const HamiltonianPair& b);

// Σ_S τ_S F_S over subsets S of the x indices; τ monomials kept in
// increasing order.
class SuperForm {
 public:
  using Terms = std::map<Mask, Form, MaskLess>;

  SuperForm() = default;
  explicit SuperForm(int n) : n_(n) {}

  int n() const { return n_; }
  const Terms& terms() const { return terms_; }
  Form at(Mask S) const;
  // τ_S F, S given as a sorted subset mask.
  void add(Mask S, const Form& f);

  SuperForm& operator+=(const SuperForm& o);
  SuperForm& operator-=(const SuperForm& o);

 private:
  int n_ = 0;
  Terms terms_;
};

SuperForm operator+(SuperForm a, const SuperForm& b);
SuperForm operator-(SuperForm a, const SuperForm& b);
// A · Σ_α c_α τ_α, the τ factor on the right.
SuperForm times_tau(const SuperForm& a, const std::vector<Expr>& c);
double max_abs(const SuperForm& a, const Points& pts);

// Sign and union of τ_S τ_T (sign 0 on overlap).
int tau_merge_sign(Mask S, Mask T);

struct SuperPair {
  SuperForm form;
  std::map<Mask, Multivector, MaskLess> xi;
};

using XiSolver = std::function<HamiltonianPair(const Form&)>;

// ^s a without Ξ data.
SuperForm superform(const PataChart& chart, const Form& a);
// ^s a with Ξ(dx^S∧a) per component, by the given solver (default
// xi_general on pts). Throws NotInPp1.
SuperPair superize(const PataChart& chart, const Form& a, const Points& pts, const XiSolver& solver = {});
// Degree n-1: ^s a = a.
SuperPair superize(const HamiltonianPair& a, int n);

// {A,B}_s = Σ τ_S τ_T Ξ(B_T)⨼Ξ(A_S)⨼Ω
SuperForm sbracket(const PataChart& chart, const SuperPair& A, const SuperPair& B);

// Σ_α dx^α(Ξ(a)) τ_α as coefficients
std::vector<Expr> xi_tau(const PataChart& chart, const Multivector& xi);

// Ξ(^s a) has no dx components at the points (≤ 1e-10).
bool is_admissible(const PataChart& chart, const SuperPair& a, const Points& pts);
bool is_admissible(const PataChart& chart, const Form& a, const Points& pts);

// {Hω, a} = -Σ_S (∂_S ∧ Ξ(dx^S∧a))⨼d(Hω); throws NotAdmissible.
Form h_omega_bracket(const PataChart& chart, const Expr& H, const SuperPair& a, const Points& pts);
Form h_omega_bracket(const PataChart& chart, const Expr& H, const Form& a, const Points& pts);

// Both sides of {Hω, P_ξ} = L_Ξ(θ - Hω) + d(ξ⨼Hω).
struct NoetherSides {
  Form lhs;
  Form rhs;
  Form symmetry_defect;  // L_Ξ(θ - Hω)
};
NoetherSides noether_check(const PataChart& chart, const Multivector& xi, const Expr& H, const Points& pts);

// Cartan form of the Hamilton condition for normalized n-vectors
// X = X_1∧..∧X_n with dx^β(X_α) = δ: "mod dx" residual of (-1)^n X⨼Ω - dH
// against |X⨼(Ω - d(Hω))|, for a Hamiltonian X and for a random one.
struct CartanCheck {
  double hamiltonian_mod_dx = 0.0;
  double hamiltonian_cartan = 0.0;
  double random_mod_dx = 0.0;
  double random_cartan = 0.0;
  double identity_gap = 0.0;  // X⨼d(Hω) = (-1)^n (dH - Σ dH(X_α)dx^α)
};
CartanCheck cartan_check(const PataChart& chart, const Expr& H, std::span<const double> pt, std::mt19937_64& rng);

}  // namespace pata
