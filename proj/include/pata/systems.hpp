// Ready-made systems: interacting scalar fields, the bosonic string and the
// electromagnetic field, with their charts, Lagrangians, Hamiltonians,
// observables and the closed-form fields used as oracles.
#pragma once

#include <Eigen/Dense>

#include <json.hpp>

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pata/brackets.hpp"
#include "pata/legendre.hpp"

namespace pata {

class SingularMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CurrentNotConserved : public std::runtime_error {
 public:
  explicit CurrentNotConserved(double div)
      : std::runtime_error("current is not conserved (max |dj| " + std::to_string(div) + ")"), div_(div) {}
  double divergence() const { return div_; }

 private:
  double div_;
};

class ConstraintViolated : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric g_{αβ}(x) on the base; entries are expressions in coordinates 0..n-1,
// which are the x coordinates of every chart.
struct BaseMetric {
  int n = 0;
  std::vector<std::vector<Expr>> lower;  // g_{αβ}
  std::vector<std::vector<Expr>> upper;  // g^{αβ}
  Expr det;
  Expr density;  // sqrt|det g|
  // det sign at the reference point: +1 Riemannian, -1 Lorentzian for n even.
  int signature_sign = 1;
};

// Symmetric check, cofactor inverse, density. Throws SingularMetric when
// |det| < 1e-12 at x = 0.
BaseMetric make_metric(std::vector<std::vector<Expr>> g);
BaseMetric euclidean_metric(int n);
// diag(1, -1, .., -1), so ½g^{αβ}∂φ∂φ - ½m²φ² is the Klein-Gordon Lagrangian
BaseMetric minkowski_metric(int n);

// (1/g) ∂_α(g ∂L/∂v^i_α) - ∂L/∂y^i along u(x), one entry per field; computed
// straight from the Lagrangian. u[i] is an expression in x.
std::vector<Expr> euler_lagrange(const Lagrangian& lag, const Expr& density, const std::vector<Expr>& u);

struct ScalarFieldSystem {
  BaseMetric metric;
  PataChart chart;  // Weyl chart with the metric density
  Lagrangian lagrangian;
  Expr potential;  // V(x, φ) in chart coordinates
  Expr H;          // ε + ½ g_{αβ} p^α_i p^β_i + V

  int n() const { return chart.n(); }
  int k() const { return chart.k(); }
  // P_{i,f} = f p^α_i ω_α
  Form P(int i, const Expr& f) const;
  // f ∂/∂φ^i - ∂_α f p^α_i ∂/∂ε
  Multivector xi_P(int i, const Expr& f) const;
  // Graph of a field: φ from u, p^α_i = g^{αβ} ∂_β u^i, ε = 0.
  std::vector<Expr> graph(const std::vector<Expr>& u) const;
  // Coefficient of dx^1..n in d(P_{i,f}) - {Hω, P_{i,f}} pulled back along
  // the graph of u. Equals f g EL_i(u).
  Expr momentum_equation(int i, const Expr& f, const std::vector<Expr>& u) const;
  // ∂_α u^i - ∂H/∂p^α_i along the graph of u (zero by construction).
  Expr position_equation(int i, int alpha, const std::vector<Expr>& u) const;
};

// Throws SingularMetric. V is parsed against x1..xn, y1..yk.
ScalarFieldSystem scalar_field_system(const BaseMetric& g, const std::string& V, int k);
ScalarFieldSystem scalar_field_system(const BaseMetric& g, const Expr& V, int k);

// Bosonic string on a 2-dimensional base: M^{αβ}_{ij} = G^{αβ}_{ij} - p_ij ε^{αβ}
// with G = h g^{αβ} + b ε^{αβ}/g. Row/column index of (α,i) is i*2 + α.
struct StringSystem {
  BaseMetric metric;
  std::vector<std::vector<Expr>> h, b;  // k×k in y
  PataChart chart;                      // full chart, n = 2
  Lagrangian lagrangian;
  std::vector<std::vector<Expr>> M;  // 2k × 2k, symbolic
  std::vector<std::vector<Expr>> K;  // 2k × 2k, opaque jets
  Expr H;                            // ε + ½ K p p

  int k() const { return chart.k(); }
  static int row(int alpha, int i) { return i * 2 + alpha; }
  Expr p_weyl(int alpha, int i) const { return chart.p_weyl(alpha, i); }
  Expr p_pair(int i, int j) const;  // p_ij, antisymmetric
  Eigen::MatrixXd M_at(std::span<const double> pt) const;
  Eigen::MatrixXd K_at(std::span<const double> pt) const;  // throws SingularHessian outside O
  // v^i_α = K p
  Eigen::MatrixXd velocity(std::span<const double> pt) const;
  // Point of R: p_ij = b_ij / g at the given x, y, with p^α_i = M v.
  std::vector<double> point_on_R(std::span<const double> x, std::span<const double> y, const Eigen::MatrixXd& v) const;
  // P_i = ∂_{y^i}⨼θ
  Form P(int i) const;
  // ½ ∂_i M (K p)(K p), the value of -∂H/∂y^i by the inverse-derivative identity.
  double momentum_force(int i, std::span<const double> pt) const;
};

StringSystem string_system(const BaseMetric& g, const std::vector<std::vector<std::string>>& h,
                           const std::vector<std::vector<std::string>>& b);
StringSystem string_system(const BaseMetric& g, std::vector<std::vector<Expr>> h, std::vector<std::vector<Expr>> b);

// Electromagnetic field on the antisymmetric-momentum chart.
//
// The Hamiltonian H = ε - ¼ g_{αγ} g_{βδ} p^{A_αβ} p^{A_γδ} + j^α A_α is only
// meaningful through the (A, π) brackets. Plugging it into the De Donder-Weyl
// equations ∂_β A_α = ∂H/∂p^{A_αβ}, with the p^{A_αβ} treated as independent,
// also forces ∂_α A_β + ∂_β A_α = 0, which is not a field equation. That path
// sits behind allow_naive and is kept for demonstration.
struct MaxwellSystem {
  BaseMetric metric;
  std::vector<Expr> current;  // j^α(x)
  PataChart chart;
  Expr H;
  bool allow_naive = false;

  int n() const { return chart.n(); }
  // p^{A_αβ} with the constraint built in (0 on the diagonal).
  Expr p(int alpha, int beta) const;
  Form A() const;   // A_α dx^α
  Form pi() const;  // ½ Σ p^{A_αβ} ∂_α⨼∂_β⨼ω
  Form current_form() const;  // j^α ω_α
  // df ∧ π and its field Σ ∂_α f ∂/∂A_α
  Form gauge_generator(const Expr& f) const;
  Multivector gauge_field(const Expr& f) const;
  // Σ τ_α ∂/∂A_α, component per single-index subset
  SuperPair super_pi(const Points& pts) const;
  SuperPair super_A(const Points& pts) const;

  // Chart point from a full n×n momentum matrix p(α,β) = p^{A_αβ}; throws
  // ConstraintViolated when p + pᵀ ≠ 0 (1e-12).
  std::vector<double> point(std::span<const double> x, std::span<const double> A, const Eigen::MatrixXd& p,
                            double eps = 0.0) const;

  // ∂_β A_α - ∂H/∂p^{A_αβ} for α ≠ β along a graph. Throws std::logic_error
  // unless allow_naive.
  std::vector<Expr> naive_residual(const std::vector<Expr>& graph) const;
};

// Throws CurrentNotConserved when |d(j^α ω_α)| > 1e-9 at the sample.
MaxwellSystem maxwell_system(const BaseMetric& g, std::vector<Expr> j, bool allow_naive = false);
MaxwellSystem maxwell_system(const BaseMetric& g, const std::vector<std::string>& j, bool allow_naive = false);

// c with {^sπ, ^sA}_s = ^s(c), plus the largest deviation from that shape.
struct MaxwellBracket {
  double value = 0.0;
  double shape_residual = 0.0;
  // Ξ(^sπ)⨼d(^sA): the same bracket without Ξ(^sA)
  double value_from_pi = 0.0;
};
MaxwellBracket maxwell_bracket(int n, std::uint64_t seed);

// Manufactured field A(x): F^{αβ} from A, j^β = (1/g)∂_α(g F^{αβ}),
// graph with p^{A_αβ} = F^{αβ}. Residuals at the x points.
struct MaxwellManufactured {
  double current_divergence = 0.0;  // |dj|
  double field_equation = 0.0;      // |dπ|_Γ - j|
  double dA_bracket = 0.0;          // |dA - {Hω, A}|_Γ|
  double dpi_bracket = 0.0;         // |dπ|_Γ - {Hω, π}|_Γ|
  double naive_residual = 0.0;      // max |naive Hamilton residual|, nonzero in general
  std::vector<Expr> current;
};
MaxwellManufactured maxwell_manufactured(const BaseMetric& g, const std::vector<Expr>& A, const Points& xs);

// Registry for configuration files.
using System = std::variant<ScalarFieldSystem, StringSystem, MaxwellSystem>;
const std::vector<std::string>& system_names();
// JSON schema of the parameter block.
const nlohmann::json& system_schema(const std::string& name);
// Throws std::invalid_argument on unknown names or malformed blocks.
System build_system(const std::string& name, const nlohmann::json& params);

}  // namespace pata
