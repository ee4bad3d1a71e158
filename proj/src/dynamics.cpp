#include "pata/dynamics.hpp"

#include <cmath>
#include <numeric>

namespace pata {
namespace {

constexpr std::uint64_t kXiSeed = 0x5eed;

struct Coefficients {
  double a = 1.0;  // g_00
  double b = -1.0;  // g_11 (n = 2)
  double density = 1.0;
};

Coefficients scheme_coefficients(const ScalarFieldSystem& sys) {
  const BaseMetric& m = sys.metric;
  if (m.n != 1 && m.n != 2) throw std::invalid_argument("time integration needs n = 1 or n = 2");
  Coefficients c;
  if (!m.density.is_const()) throw std::invalid_argument("time integration needs a constant density");
  c.density = m.density.const_value();
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) {
      const Expr& e = m.lower[i][j];
      if (!e.is_const()) throw std::invalid_argument("time integration needs a constant metric");
      if (i != j && e.const_value() != 0.0) throw std::invalid_argument("time integration needs a diagonal metric");
    }
  c.a = m.lower[0][0].const_value();
  if (c.a <= 0.0) throw std::invalid_argument("time integration needs g_00 > 0");
  if (m.n == 2) {
    c.b = m.lower[1][1].const_value();
    if (c.b >= 0.0) throw std::invalid_argument("time integration needs g_11 < 0 (Lorentzian)");
  }
  return c;
}

void check_grid(const Grid& g) {
  if (g.n != 1 && g.n != 2) throw std::invalid_argument("grid n must be 1 or 2");
  if (!(g.T > 0.0) || g.nt < 1) throw std::invalid_argument("grid needs T > 0 and nt ≥ 1");
  if (g.n == 2 && (!(g.X > 0.0) || g.nx < 3)) throw std::invalid_argument("grid needs X > 0 and nx ≥ 3");
}

// Leapfrog state on one slice.
class Stepper {
 public:
  Stepper(const ScalarFieldSystem& sys, const Grid& grid) : sys_(sys), grid_(grid), c_(scheme_coefficients(sys)) {
    check_grid(grid);
    if (grid.n != sys.n()) throw std::invalid_argument("grid and system disagree on n");
    if (grid.n == 2) {
      const double ratio = std::sqrt(-c_.a / c_.b) * grid.ht() / grid.hx();
      if (ratio > 1.0 + 1e-12) throw CflViolation(ratio);
    }
    const int k = sys.k();
    for (int i = 0; i < k; ++i) dV_.push_back(differentiate(sys.potential, sys.chart.y(i)));
    y_.assign(k, Eigen::VectorXd::Zero(grid.space_nodes()));
    p0_ = y_;
    pt_.assign(sys.chart.dim(), 0.0);
  }

  void init(const InitialData& d) {
    const int k = sys_.k();
    if (static_cast<int>(d.y.size()) != k || static_cast<int>(d.p0.size()) != k)
      throw std::invalid_argument("initial data needs y and p0 for every field");
    for (int j = 0; j < grid_.space_nodes(); ++j) {
      std::fill(pt_.begin(), pt_.end(), 0.0);
      if (grid_.n == 2) pt_[1] = j * grid_.hx();
      for (int i = 0; i < k; ++i) {
        y_[i][j] = evaluate(d.y[i], pt_);
        p0_[i][j] = evaluate(d.p0[i], pt_);
      }
    }
  }

  void step(double t) {
    const double h = grid_.ht();
    kick(t, 0.5 * h);
    for (auto i = 0u; i < y_.size(); ++i) y_[i] += h * c_.a * p0_[i];
    kick(t + h, 0.5 * h);
  }

  // p^1 from ∂_x y = g_11 p^1, centered.
  double p1(int i, int j) const {
    if (grid_.n == 1) return 0.0;
    const int nx = grid_.nx;
    return (y_[i][(j + 1) % nx] - y_[i][(j + nx - 1) % nx]) / (2.0 * grid_.hx() * c_.b);
  }

  const std::vector<Eigen::VectorXd>& y() const { return y_; }
  const std::vector<Eigen::VectorXd>& p0() const { return p0_; }
  const Coefficients& coefficients() const { return c_; }

  // Chart point of node j at time t; ε left at 0.
  const std::vector<double>& point(double t, int j) {
    std::fill(pt_.begin(), pt_.end(), 0.0);
    const PataChart& ch = sys_.chart;
    pt_[0] = t;
    if (grid_.n == 2) pt_[1] = j * grid_.hx();
    for (int i = 0; i < sys_.k(); ++i) {
      pt_[ch.y(i)] = y_[i][j];
      pt_[ch.weyl_coord(0, i)] = p0_[i][j];
      if (grid_.n == 2) pt_[ch.weyl_coord(1, i)] = p1(i, j);
    }
    return pt_;
  }

 private:
  void kick(double t, double dt) {
    const int nx = grid_.space_nodes();
    const double hx2 = grid_.hx() * grid_.hx();
    std::vector<double> pt(sys_.chart.dim(), 0.0);
    std::vector<Eigen::VectorXd> force(y_.size(), Eigen::VectorXd::Zero(nx));
    for (int j = 0; j < nx; ++j) {
      pt[0] = t;
      if (grid_.n == 2) pt[1] = j * grid_.hx();
      for (int i = 0; i < sys_.k(); ++i) pt[sys_.chart.y(i)] = y_[i][j];
      for (int i = 0; i < sys_.k(); ++i) {
        double f = -evaluate(dV_[i], pt);
        if (grid_.n == 2) {
          const double lap = y_[i][(j + 1) % nx] - 2.0 * y_[i][j] + y_[i][(j + nx - 1) % nx];
          f -= lap / (hx2 * c_.b);
        }
        force[i][j] = f;
      }
    }
    for (auto i = 0u; i < y_.size(); ++i) p0_[i] += dt * force[i];
  }

  const ScalarFieldSystem& sys_;
  Grid grid_;
  Coefficients c_;
  std::vector<Expr> dV_;
  std::vector<Eigen::VectorXd> y_, p0_;
  std::vector<double> pt_;
};

FieldSolution empty_solution(const ScalarFieldSystem& sys, const Grid& grid, Gauge gauge) {
  FieldSolution sol;
  sol.system = std::make_shared<const ScalarFieldSystem>(sys);
  sol.grid = grid;
  sol.gauge = gauge;
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(grid.nt + 1, grid.space_nodes());
  sol.y.assign(sys.k(), zero);
  sol.p0 = sol.y;
  sol.p1 = sol.y;
  sol.eps = zero;
  return sol;
}

void apply_gauge(FieldSolution& sol) {
  if (sol.gauge != Gauge::H0) return;
  for (int s = 0; s <= sol.grid.nt; ++s)
    for (int j = 0; j < sol.grid.space_nodes(); ++j) {
      sol.eps(s, j) = 0.0;
      sol.eps(s, j) = -evaluate(sol.system->H, sol.point(s, j));
    }
}

// Value of a form's coefficients on the given tangent vectors.
double on_vectors(const std::map<Mask, double, MaskLess>& coeffs, const std::vector<std::vector<double>>& v) {
  double total = 0.0;
  const int p = v.size();
  for (const auto& [m, c] : coeffs) {
    if (c == 0.0) continue;
    const auto idx = mask_indices(m);
    if (static_cast<int>(idx.size()) != p) continue;
    if (p == 0) {
      total += c;
      continue;
    }
    Eigen::MatrixXd a(p, p);
    for (int r = 0; r < p; ++r)
      for (int s = 0; s < p; ++s) a(r, s) = v[r][idx[s]];
    total += c * a.determinant();
  }
  return total;
}

double form_on(const Form& f, const std::vector<double>& pt, const std::vector<std::vector<double>>& v) {
  return on_vectors(evaluate(f, pt), v);
}

Form h_omega(const FieldSolution& sol, const Form& a) {
  const auto& sys = *sol.system;
  return h_omega_bracket(sys.chart, sys.H, a, probe_points(sys.chart, kXiSeed));
}

// ∫_{S_s} a over the slice, a an (n-1)-form; n = 1 evaluates at the point.
double slice_integral(const FieldSolution& sol, const Form& a, int s) {
  if (sol.grid.n == 1) return form_on(a, sol.point(s, 0), {});
  double total = 0.0;
  for (int j = 0; j < sol.grid.nx; ++j) total += form_on(a, sol.point(s, j), {sol.d_space(s, j)});
  return total * sol.grid.hx();
}

double trapezoid_weight(int i, int lo, int hi) { return (i == lo || i == hi) ? 0.5 : 1.0; }

// H^0_0 = H - ε - Σ_{a≥1} p^a_i ∂H/∂p^a_i, with ∂_a y = ∂H/∂p^a.
Expr energy_density(const ScalarFieldSystem& sys) {
  const PataChart& ch = sys.chart;
  Expr h00 = sys.H - Expr::symbol(ch.eps());
  for (int i = 0; i < sys.k(); ++i)
    for (int a = 1; a < sys.n(); ++a)
      h00 -= Expr::symbol(ch.weyl_coord(a, i)) * differentiate(sys.H, ch.weyl_coord(a, i));
  return h00;
}

void require_interior(const FieldSolution& sol) {
  if (sol.grid.nt < 2) throw std::invalid_argument("need at least two time steps");
}

}  // namespace

int FieldSolution::wrap(int j) const {
  const int nx = grid.space_nodes();
  return ((j % nx) + nx) % nx;
}

std::vector<double> FieldSolution::point(int s, int j) const {
  const PataChart& ch = system->chart;
  std::vector<double> pt(ch.dim(), 0.0);
  j = wrap(j);
  pt[0] = t(s);
  if (grid.n == 2) pt[1] = x(j);
  pt[ch.eps()] = eps(s, j);
  for (int i = 0; i < system->k(); ++i) {
    pt[ch.y(i)] = y[i](s, j);
    pt[ch.weyl_coord(0, i)] = p0[i](s, j);
    if (grid.n == 2) pt[ch.weyl_coord(1, i)] = p1[i](s, j);
  }
  return pt;
}

std::vector<double> FieldSolution::d_time(int s, int j) const {
  if (s < 1 || s >= grid.nt) throw std::out_of_range("time tangent needs an interior step");
  const auto a = point(s + 1, j), b = point(s - 1, j);
  std::vector<double> v(a.size());
  for (auto c = 0u; c < v.size(); ++c) v[c] = (a[c] - b[c]) / (2.0 * grid.ht());
  if (grid.n == 2) v[1] = 0.0;  // x is exact
  return v;
}

std::vector<double> FieldSolution::d_space(int s, int j) const {
  if (grid.n == 1) throw std::logic_error("no spatial axis");
  const auto a = point(s, j + 1), b = point(s, j - 1);
  std::vector<double> v(a.size());
  for (auto c = 0u; c < v.size(); ++c) v[c] = (a[c] - b[c]) / (2.0 * grid.hx());
  v[0] = 0.0;
  v[1] = 1.0;  // wrap-around would spoil the x difference
  return v;
}

FieldSolution integrate_weyl(const ScalarFieldSystem& system, const InitialData& init, const Grid& grid, Gauge gauge) {
  Stepper st(system, grid);
  st.init(init);
  FieldSolution sol = empty_solution(system, grid, gauge);
  auto store = [&](int s) {
    for (int i = 0; i < system.k(); ++i) {
      sol.y[i].row(s) = st.y()[i].transpose();
      sol.p0[i].row(s) = st.p0()[i].transpose();
      for (int j = 0; j < grid.space_nodes(); ++j) sol.p1[i](s, j) = st.p1(i, j);
    }
  };
  store(0);
  for (int s = 0; s < grid.nt; ++s) {
    st.step(s * grid.ht());
    store(s + 1);
  }
  apply_gauge(sol);
  return sol;
}

FieldSolution sample_solution(const ScalarFieldSystem& system, const std::vector<Expr>& u, const Grid& grid,
                              Gauge gauge) {
  check_grid(grid);
  if (grid.n != system.n()) throw std::invalid_argument("grid and system disagree on n");
  if (static_cast<int>(u.size()) != system.k()) throw std::invalid_argument("need one expression per field");
  FieldSolution sol = empty_solution(system, grid, gauge);
  const auto g = system.graph(u);
  const PataChart& ch = system.chart;
  std::vector<double> pt(ch.dim(), 0.0);
  for (int s = 0; s <= grid.nt; ++s)
    for (int j = 0; j < grid.space_nodes(); ++j) {
      pt[0] = sol.t(s);
      if (grid.n == 2) pt[1] = sol.x(j);
      for (int i = 0; i < system.k(); ++i) {
        sol.y[i](s, j) = evaluate(g[ch.y(i)], pt);
        sol.p0[i](s, j) = evaluate(g[ch.weyl_coord(0, i)], pt);
        if (grid.n == 2) sol.p1[i](s, j) = evaluate(g[ch.weyl_coord(1, i)], pt);
      }
    }
  apply_gauge(sol);
  return sol;
}

HamiltonResidual hamilton_residual(const FieldSolution& sol) {
  require_interior(sol);
  const auto& sys = *sol.system;
  const PataChart& ch = sys.chart;
  const int n = sol.grid.n;
  std::vector<std::vector<Expr>> dHdp(sys.k());
  std::vector<Expr> dHdy;
  for (int i = 0; i < sys.k(); ++i) {
    for (int a = 0; a < n; ++a) dHdp[i].push_back(differentiate(sys.H, ch.weyl_coord(a, i)));
    dHdy.push_back(differentiate(sys.H, ch.y(i)));
  }
  HamiltonResidual r;
  for (int s = 1; s < sol.grid.nt; ++s)
    for (int j = 0; j < sol.grid.space_nodes(); ++j) {
      const auto pt = sol.point(s, j);
      const auto vt = sol.d_time(s, j);
      std::vector<double> vx;
      if (n == 2) vx = sol.d_space(s, j);
      for (int i = 0; i < sys.k(); ++i) {
        r.position = std::max(r.position, std::abs(vt[ch.y(i)] - evaluate(dHdp[i][0], pt)));
        double div = vt[ch.weyl_coord(0, i)];
        if (n == 2) {
          r.position = std::max(r.position, std::abs(vx[ch.y(i)] - evaluate(dHdp[i][1], pt)));
          div += vx[ch.weyl_coord(1, i)];
        }
        r.momentum = std::max(r.momentum, std::abs(div + evaluate(dHdy[i], pt)));
      }
    }
  return r;
}

double determinant_residual(const FieldSolution& sol) {
  require_interior(sol);
  if (sol.grid.n != 2) throw std::invalid_argument("determinant form is checked for n = 2");
  const auto& sys = *sol.system;
  const PataChart& ch = sys.chart;
  struct Pair {
    int a, b;
    Expr dH;
  };
  std::vector<Pair> pairs;
  for (int a = 0; a < ch.q_dim(); ++a)
    for (int b = a + 1; b < ch.q_dim(); ++b) {
      const Mask I = (Mask{1} << a) | (Mask{1} << b);
      const auto slot = ch.slot(I);
      // Pinned pairs (two fibre directions) carry no equation on this chart.
      if (!slot) continue;
      pairs.push_back({a, b, Expr(slot->sign) * differentiate(sys.H, slot->coord)});
    }
  double worst = 0.0;
  for (int s = 1; s < sol.grid.nt; ++s)
    for (int j = 0; j < sol.grid.nx; ++j) {
      const auto pt = sol.point(s, j);
      const auto vt = sol.d_time(s, j), vx = sol.d_space(s, j);
      for (const auto& p : pairs) {
        const double jac = vt[p.a] * vx[p.b] - vt[p.b] * vx[p.a];
        worst = std::max(worst, std::abs(jac - evaluate(p.dH, pt)));
      }
    }
  return worst;
}

StressDivergence stress_divergence(const FieldSolution& sol) {
  require_interior(sol);
  const auto& sys = *sol.system;
  const Lagrangian& lag = sys.lagrangian;
  const int n = sol.grid.n, k = sys.k();
  const Coefficients c = scheme_coefficients(sys);
  const int nx = sol.grid.space_nodes();
  std::vector<Expr> dLdx;
  for (int b = 0; b < n; ++b) dLdx.push_back(differentiate(lag.expr(), lag.x(b)));

  // S and the jet at every node.
  std::vector<Eigen::MatrixXd> S((sol.grid.nt + 1) * nx);
  std::vector<std::vector<double>> jets(S.size());
  for (int s = 0; s <= sol.grid.nt; ++s)
    for (int j = 0; j < nx; ++j) {
      std::vector<double> x{sol.t(s)}, u(k);
      if (n == 2) x.push_back(sol.x(j));
      Eigen::MatrixXd du(k, n);
      for (int i = 0; i < k; ++i) {
        u[i] = sol.y[i](s, j);
        du(i, 0) = c.a * sol.p0[i](s, j);
        if (n == 2) du(i, 1) = c.b * sol.p1[i](s, j);
      }
      S[s * nx + j] = stress_energy(lag, x, u, du);
      jets[s * nx + j] = lag.jet_point(x, u, du);
    }
  StressDivergence out;
  for (int s = 1; s < sol.grid.nt; ++s)
    for (int j = 0; j < nx; ++j) {
      for (int b = 0; b < n; ++b) {
        double div = (S[(s + 1) * nx + j](0, b) - S[(s - 1) * nx + j](0, b)) / (2.0 * sol.grid.ht());
        if (n == 2) {
          div += (S[s * nx + sol.wrap(j + 1)](1, b) - S[s * nx + sol.wrap(j - 1)](1, b)) / (2.0 * sol.grid.hx());
        }
        const double explicit_part = evaluate(dLdx[b], jets[s * nx + j]);
        out.residual = std::max(out.residual, std::abs(div - explicit_part));
        out.divergence = std::max(out.divergence, std::abs(div));
        out.explicit_dependence = std::max(out.explicit_dependence, std::abs(explicit_part));
      }
    }
  return out;
}

StokesSides stokes_check(const FieldSolution& sol, const Form& a, const Region& D) {
  if (sol.grid.n != 2) throw std::invalid_argument("stokes_check works on n = 2 grids; use line_check for n = 1");
  StokesSides out;
  if (D.empty()) return out;
  if (D.s0 < 1 || D.s1 > sol.grid.nt - 1) throw std::out_of_range("region needs interior time steps");
  if (D.j0 < 0 || D.j1 - D.j0 > sol.grid.nx) throw std::out_of_range("region wider than the grid");
  if (a.degree() != 1) throw std::invalid_argument("stokes_check needs an (n-1)-form");
  const Form bracket = h_omega(sol, a);
  const double ht = sol.grid.ht(), hx = sol.grid.hx();
  for (int s = D.s0; s <= D.s1; ++s)
    for (int j = D.j0; j <= D.j1; ++j) {
      const double w = trapezoid_weight(s, D.s0, D.s1) * trapezoid_weight(j, D.j0, D.j1);
      out.interior += w * form_on(bracket, sol.point(s, j), {sol.d_time(s, j), sol.d_space(s, j)});
    }
  out.interior *= ht * hx;
  // Counterclockwise in the (t, x) plane: up the t axis at x0, along x at t1,
  // back down at x1, back along x at t0.
  double along_t = 0.0, along_x = 0.0;
  for (int s = D.s0; s <= D.s1; ++s) {
    const double w = trapezoid_weight(s, D.s0, D.s1);
    along_t += w * (form_on(a, sol.point(s, D.j0), {sol.d_time(s, D.j0)}) -
                    form_on(a, sol.point(s, D.j1), {sol.d_time(s, D.j1)}));
  }
  for (int j = D.j0; j <= D.j1; ++j) {
    const double w = trapezoid_weight(j, D.j0, D.j1);
    along_x += w * (form_on(a, sol.point(D.s1, j), {sol.d_space(D.s1, j)}) -
                    form_on(a, sol.point(D.s0, j), {sol.d_space(D.s0, j)}));
  }
  out.boundary = along_t * ht + along_x * hx;
  return out;
}

StokesSides line_check(const FieldSolution& sol, const Form& a, int s0, int s1, int j) {
  StokesSides out;
  if (s1 <= s0) return out;
  if (s0 < 1 || s1 > sol.grid.nt - 1) throw std::out_of_range("segment needs interior time steps");
  if (a.degree() != sol.grid.n - 2) throw std::invalid_argument("line_check needs an (n-2)-form");
  const Form bracket = h_omega(sol, a);
  for (int s = s0; s <= s1; ++s)
    out.interior += trapezoid_weight(s, s0, s1) * form_on(bracket, sol.point(s, j), {sol.d_time(s, j)});
  out.interior *= sol.grid.ht();
  out.boundary = form_on(a, sol.point(s1, j), {}) - form_on(a, sol.point(s0, j), {});
  return out;
}

double bracket_dynamics_residual(const FieldSolution& sol, const Form& a) {
  require_interior(sol);
  if (a.degree() != sol.grid.n - 1) throw std::invalid_argument("need an (n-1)-form");
  const Form r = d(a) - h_omega(sol, a);
  double worst = 0.0;
  for (int s = 1; s < sol.grid.nt; ++s)
    for (int j = 0; j < sol.grid.space_nodes(); ++j) {
      std::vector<std::vector<double>> v{sol.d_time(s, j)};
      if (sol.grid.n == 2) v.push_back(sol.d_space(s, j));
      worst = std::max(worst, std::abs(form_on(r, sol.point(s, j), v)));
    }
  return worst;
}

SliceBrackets slice_bracket_integrals(const FieldSolution& sol, int s, const std::vector<Expr>& f, const Expr& g) {
  if (s < 1 || s > sol.grid.nt - 1) throw std::out_of_range("slice needs neighbours in time");
  const auto& sys = *sol.system;
  const PataChart& ch = sys.chart;
  const int n = sol.grid.n;
  if (static_cast<int>(f.size()) != n) throw std::invalid_argument("f needs n components");
  const Points pts = probe_points(ch, kXiSeed);

  const Form Qf = observable_Q(ch, 0, f);
  std::vector<Expr> f2(n), df(n);
  f2[0] = g;
  for (int a = 0; a < n; ++a) df[a] = differentiate(f[a], 0);
  const Form Qf2 = observable_Q(ch, 0, f2);
  const Form Pg = observable_P(ch, ch.y(0), g);
  const Form Pg2 = observable_P(ch, ch.y(0), f[0]);

  const auto q = xi_Q(ch, Qf, pts), q2 = xi_Q(ch, Qf2, pts);
  const auto p = xi_P(ch, g * ch.coord_vector(ch.y(0)), pts);
  const auto p2 = xi_P(ch, f[0] * ch.coord_vector(ch.y(0)), pts);
  const Form eta = eta0(ch, sys.H);

  SliceBrackets out;
  out.PQ = slice_integral(sol, internal_bracket(ch, p, q), s);
  out.PQ_target = slice_integral(sol, g * f[0] * ch.volume_alpha(0), s);
  out.QQ = slice_integral(sol, internal_bracket(ch, q, q2), s);
  out.PP = slice_integral(sol, internal_bracket(ch, p, p2), s);

  const double ht = sol.grid.ht();
  out.dQ_dt = (slice_integral(sol, Qf, s + 1) - slice_integral(sol, Qf, s - 1)) / (2.0 * ht);
  out.eta_Q = slice_integral(sol, external_bracket(ch, eta, q), s);
  out.Q_source = slice_integral(sol, observable_Q(ch, 0, df), s);
  out.dP_dt = (slice_integral(sol, Pg, s + 1) - slice_integral(sol, Pg, s - 1)) / (2.0 * ht);
  out.eta_P = slice_integral(sol, external_bracket(ch, eta, p), s);
  out.P_source = slice_integral(sol, observable_P(ch, ch.y(0), differentiate(g, 0)), s);
  return out;
}

double slice_energy(const FieldSolution& sol, int s) {
  const Form density = energy_density(*sol.system) * sol.system->chart.volume_alpha(0);
  return slice_integral(sol, density, s);
}

EnergySeries energy_series(const ScalarFieldSystem& system, const InitialData& init, const Grid& grid) {
  Stepper st(system, grid);
  st.init(init);
  const Expr h00 = energy_density(system);
  const double w = st.coefficients().density * grid.hx();
  EnergySeries out;
  out.t.reserve(grid.nt + 1);
  out.energy.reserve(grid.nt + 1);
  auto record = [&](int s) {
    const double t = s * grid.ht();
    double e = 0.0;
    for (int j = 0; j < grid.space_nodes(); ++j) e += evaluate(h00, st.point(t, j));
    out.t.push_back(t);
    out.energy.push_back(e * w);
  };
  record(0);
  for (int s = 0; s < grid.nt; ++s) {
    st.step(s * grid.ht());
    record(s + 1);
  }
  return out;
}

double EnergySeries::relative_drift() const {
  const int m = t.size();
  if (m < 2) return 0.0;
  const double tm = std::accumulate(t.begin(), t.end(), 0.0) / m;
  const double em = std::accumulate(energy.begin(), energy.end(), 0.0) / m;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < m; ++i) {
    sxy += (t[i] - tm) * (energy[i] - em);
    sxx += (t[i] - tm) * (t[i] - tm);
  }
  const double slope = sxy / sxx;
  return std::abs(slope * (t.back() - t.front()) / em);
}

double EnergySeries::relative_spread() const {
  double worst = 0.0;
  for (double e : energy) worst = std::max(worst, std::abs(e - energy.front()));
  return worst / std::abs(energy.front());
}

double l2_error(const FieldSolution& sol, const Expr& u, int field) {
  const int s = sol.grid.nt;
  double sum = 0.0;
  std::vector<double> pt(sol.system->chart.dim(), 0.0);
  for (int j = 0; j < sol.grid.space_nodes(); ++j) {
    pt[0] = sol.t(s);
    if (sol.grid.n == 2) pt[1] = sol.x(j);
    const double e = sol.y[field](s, j) - evaluate(u, pt);
    sum += e * e;
  }
  return std::sqrt(sum * sol.grid.hx());
}

OrderEstimate estimate_order(std::vector<double> errors) {
  OrderEstimate out;
  out.errors = std::move(errors);
  for (auto i = 0u; i + 1 < out.errors.size(); ++i)
    out.orders.push_back(std::log2(out.errors[i] / out.errors[i + 1]));
  if (!out.orders.empty())
    out.order = std::accumulate(out.orders.begin(), out.orders.end(), 0.0) / out.orders.size();
  return out;
}

}  // namespace pata
