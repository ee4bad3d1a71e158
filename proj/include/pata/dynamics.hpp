// Explicit integration of the De Donder-Weyl equations for scalar fields on a
// periodic n = 2 grid (or n = 1, no spatial axis), and discrete checks of the
// dynamical identities along the computed graph.
#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pata/systems.hpp"

namespace pata {

class CflViolation : public std::runtime_error {
 public:
  explicit CflViolation(double ratio)
      : std::runtime_error("CFL violation: c*ht/hx = " + std::to_string(ratio) + " > 1"), ratio_(ratio) {}
  double ratio() const { return ratio_; }

 private:
  double ratio_;
};

// [0,T] × [0,X) with nt steps in time and nx periodic nodes in space.
struct Grid {
  int n = 2;  // 1: time only
  double T = 1.0;
  double X = 1.0;
  int nt = 64;
  int nx = 64;
  double ht() const { return T / nt; }
  double hx() const { return n == 1 ? 1.0 : X / nx; }
  int space_nodes() const { return n == 1 ? 1 : nx; }
};

enum class Gauge { None, H0 };

// Initial slice: y^i(x) and p^0_i(x) as expressions in the chart coordinates
// (t = coordinate 0 is set to 0).
struct InitialData {
  std::vector<Expr> y;
  std::vector<Expr> p0;
};

struct FieldSolution {
  std::shared_ptr<const ScalarFieldSystem> system;
  Grid grid;
  Gauge gauge = Gauge::None;
  // Per field, (nt+1) × nodes arrays.
  std::vector<Eigen::MatrixXd> y, p0, p1;
  Eigen::MatrixXd eps;

  double t(int s) const { return s * grid.ht(); }
  double x(int j) const { return j * grid.hx(); }
  int wrap(int j) const;
  // Chart point at time step s, node j.
  std::vector<double> point(int s, int j) const;
  // Centered tangent ∂q/∂t and ∂q/∂x at an interior time step.
  std::vector<double> d_time(int s, int j) const;
  std::vector<double> d_space(int s, int j) const;
};

// Leapfrog (kick-drift-kick) in time, centered differences in space. Needs a
// constant diagonal metric with g_00 > 0 > g_11 and a constant density; the
// spatial momenta are rebuilt from ∂_x y = ∂H/∂p^1 after each step. With
// Gauge::H0, ε is carried so that H = 0 along the run.
FieldSolution integrate_weyl(const ScalarFieldSystem& system, const InitialData& init, const Grid& grid,
                             Gauge gauge = Gauge::None);

// Exact field u(t, x) sampled on the grid with p^α = g^{αβ}∂_β u.
FieldSolution sample_solution(const ScalarFieldSystem& system, const std::vector<Expr>& u, const Grid& grid,
                              Gauge gauge = Gauge::None);

// Max over interior nodes of |∂y/∂x^α - ∂H/∂p^α| and |Σ ∂p^α/∂x^α + ∂H/∂y|.
struct HamiltonResidual {
  double position = 0.0;
  double momentum = 0.0;
  double max() const { return std::max(position, momentum); }
};
HamiltonResidual hamilton_residual(const FieldSolution& sol);

// Jacobian form: ∂(q^a, q^b)/∂(x^0, x^1) - ∂H/∂p_{ab} for every pair of q
// coordinates, max over interior nodes.
double determinant_residual(const FieldSolution& sol);

// Σ_α ∂S^α_β/∂x^α against the explicit ∂L/∂x^β, max over interior nodes.
struct StressDivergence {
  double residual = 0.0;   // |div S - ∂L/∂x|
  double divergence = 0.0;  // |div S|
  double explicit_dependence = 0.0;  // |∂L/∂x|
};
StressDivergence stress_divergence(const FieldSolution& sol);

// Closed rectangle of grid indices: time steps [s0, s1], nodes [j0, j1]
// (j1 may pass nx; nodes wrap). s0 ≥ 1 and s1 ≤ nt - 1 so that time
// tangents are centered.
struct Region {
  int s0 = 1, s1 = 1;
  int j0 = 0, j1 = 0;
  bool empty() const { return s1 <= s0 || j1 <= j0; }
};

// ∫_D {Hω, a} against ∫_∂D a for an (n-1)-form a, trapezoid rule on nodes.
struct StokesSides {
  double interior = 0.0;
  double boundary = 0.0;
  double gap() const { return std::abs(interior - boundary); }
};
StokesSides stokes_check(const FieldSolution& sol, const Form& a, const Region& D);
// Lower-degree version for an admissible 0-form along the time segment
// [s0, s1] at node j: ∫ {Hω, a} against a(end) - a(start).
StokesSides line_check(const FieldSolution& sol, const Form& a, int s0, int s1, int j);

// Max over interior nodes of the pulled-back (da - {Hω, a})(∂_t, ∂_x).
double bracket_dynamics_residual(const FieldSolution& sol, const Form& a);

// Slice integrals at time step s for Q^f (f a base vector field, field 0)
// and P_g.
struct SliceBrackets {
  double PQ = 0.0, PQ_target = 0.0;  // ∫{P_g, Q^f}, ∫ g f^0 ω_0
  double QQ = 0.0, PP = 0.0;         // must vanish
  double dQ_dt = 0.0, eta_Q = 0.0, Q_source = 0.0;  // d/dt ∫Q^f = ∫{η0,Q^f} + Φ^{∂f/∂t}
  double dP_dt = 0.0, eta_P = 0.0, P_source = 0.0;  // d/dt ∫P_g = ∫{η0,P_g} + Π_{∂g/∂t}
  double q_gap() const { return std::abs(dQ_dt - eta_Q - Q_source); }
  double p_gap() const { return std::abs(dP_dt - eta_P - P_source); }
};
SliceBrackets slice_bracket_integrals(const FieldSolution& sol, int s, const std::vector<Expr>& f, const Expr& g);

// ∫ H^0_0 ω_0 on a slice, H^0_0 = H - ε - Σ_{a≥1} p^a_i ∂_a y^i.
double slice_energy(const FieldSolution& sol, int s);

// Energy on every step without storing the run: time, value.
struct EnergySeries {
  std::vector<double> t, energy;
  // Least-squares linear trend over the run, relative to the mean.
  double relative_drift() const;
  // max |E - E(0)| / |E(0)|
  double relative_spread() const;
};
EnergySeries energy_series(const ScalarFieldSystem& system, const InitialData& init, const Grid& grid);

// L2 (grid) error against u at the final time.
double l2_error(const FieldSolution& sol, const Expr& u, int field = 0);

// Orders log2(e_i / e_{i+1}) for successive halvings and their mean.
struct OrderEstimate {
  std::vector<double> errors;
  std::vector<double> orders;
  double order = 0.0;
};
OrderEstimate estimate_order(std::vector<double> errors);

}  // namespace pata
