// Legendre correspondence between velocities v^i_α and multimomenta p_I:
// pairing, generating function W, Newton solve for V(q,p), the Hamiltonian
// with envelope gradient, and the Hamiltonian / stress-energy tensors.
#pragma once

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pata/phase.hpp"

namespace pata {

class SingularHessian : public std::runtime_error {
 public:
  explicit SingularHessian(double cond)
      : std::runtime_error("velocity Hessian singular (condition " + std::to_string(cond) + ")"),
        cond_(cond) {}
  double condition() const { return cond_; }

 private:
  double cond_;
};

class NoConvergence : public std::runtime_error {
 public:
  explicit NoConvergence(double residual)
      : std::runtime_error("Legendre solve did not converge (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// L(x, y, v) over its own table: x (n), y (k), v^i_α at n + k + i*n + α,
// named "v{i}_{α}" (1-based), plus "v{α}" when k = 1.
class Lagrangian {
 public:
  Lagrangian(int n, int k, std::vector<std::string> x_names = {}, std::vector<std::string> y_names = {});
  Lagrangian& set(const Expr& e);
  Lagrangian& set(const std::string& text);

  int n() const { return n_; }
  int k() const { return k_; }
  int dim() const { return n_ + k_ + n_ * k_; }
  int x(int a) const { return a; }
  int y(int i) const { return n_ + i; }
  int v(int i, int a) const { return n_ + k_ + i * n_ + a; }
  const SymbolTable& symbols() const { return symbols_; }
  const Expr& expr() const { return expr_; }
  // Jet point (x, y, v) with v indexed [i][α].
  std::vector<double> jet_point(std::span<const double> x, std::span<const double> y,
                                const Eigen::MatrixXd& v) const;

 private:
  int n_, k_;
  SymbolTable symbols_;
  Expr expr_;
};

struct LegendreOptions {
  double tol = 1e-10;
  int max_iter = 50;
  double cond_max = 1e12;
};

struct LegendreSolve {
  Eigen::MatrixXd v;  // k × n, v(i, α)
  int iterations = 0;
  double residual = 0.0;
  double condition = 0.0;  // velocity Hessian at the solution
};

// Σ_I p_I det(minor_I(z)) for a k × n velocity, numeric. p is a chart point.
double pairing(const PataChart& chart, std::span<const double> pt, const Eigen::MatrixXd& v);

class Legendre {
 public:
  using Seed = std::function<Eigen::MatrixXd(std::span<const double>)>;

  Legendre(PataChart chart, Lagrangian lag, LegendreOptions opt = {});

  const PataChart& chart() const { return chart_; }
  const Lagrangian& lagrangian() const { return lag_; }
  const LegendreOptions& options() const { return opt_; }
  void set_seed(Seed s) { seed_ = std::move(s); }

  // Jet table: chart coordinates, then v^i_α at chart.dim() + i*n + α.
  int jet_dim() const { return chart_.dim() + lag_.n() * lag_.k(); }
  int v_index(int i, int a) const { return chart_.dim() + i * lag_.n() + a; }
  std::vector<double> jet_point(std::span<const double> pt, const Eigen::MatrixXd& v) const;

  const Expr& pairing_expr() const { return pairing_; }
  const Expr& lagrangian_expr() const { return lag_jet_; }
  Expr W() const { return pairing_ - lag_jet_; }

  double generating_W(std::span<const double> pt, const Eigen::MatrixXd& v) const;
  // Max |∂W/∂v| at (pt, v).
  double residual(std::span<const double> pt, const Eigen::MatrixXd& v) const;

  LegendreSolve solve(std::span<const double> pt) const;
  LegendreSolve solve(std::span<const double> pt, const Eigen::MatrixXd& v0) const;

  double hamiltonian(std::span<const double> pt) const;
  // dH by the envelope identities: ∂W/∂(coordinate) at v = V(q,p).
  std::vector<double> hamiltonian_gradient(std::span<const double> pt) const;
  std::shared_ptr<const OpaqueJet> hamiltonian_jet() const;

  // H^α_β = δ^α_β H - <p, Z_1 ∧ .. ∂/∂x^β (slot α) .. ∧ Z_n>
  Eigen::MatrixXd hamiltonian_tensor(std::span<const double> pt) const;

 private:
  PataChart chart_;
  Lagrangian lag_;
  LegendreOptions opt_;
  Seed seed_;
  Expr pairing_, lag_jet_;
  std::vector<Expr> grad_v_;               // ∂W/∂v, k*n entries
  std::vector<std::vector<Expr>> hess_v_;  // ∂²W/∂v∂v
  std::vector<Expr> grad_chart_;           // ∂W/∂(chart coordinate)
};

// Weyl momenta from a velocity: p^α_i = ∂L/∂v^i_α, ε = w + L - Σ p v.
// Returns a point of the Weyl chart with the given x, y.
std::vector<double> weyl_legendre(const Lagrangian& lag, const PataChart& weyl,
                                  std::span<const double> x, std::span<const double> y,
                                  const Eigen::MatrixXd& v, double w = 0.0);

// S^α_β = δ^α_β L - ∂L/∂v^i_α ∂_β u^i for the jet (x, u, du), du(i, β).
Eigen::MatrixXd stress_energy(const Lagrangian& lag, std::span<const double> x,
                              std::span<const double> u, const Eigen::MatrixXd& du);

}  // namespace pata
