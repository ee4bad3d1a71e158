#include "pata/brackets.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace pata {

namespace {

int momentum_count(const PataChart& chart, Mask m) { return popcount(m >> chart.eps()); }

bool q_only(const PataChart& chart, CoordMask deps) { return (deps & ~chart.q_mask()) == 0; }

// Pseudo-inverse entries are small rationals for these charts; pull them back
// onto the grid so exact cases stay exact.
double snap(double v) {
  const double r = std::round(v * 840.0) / 840.0;
  return std::abs(v - r) < 1e-12 ? r : v;
}

// Dense matrix from columns of sparse forms; rows are the union of masks.
struct ColumnMatrix {
  std::vector<Mask> rows;
  std::map<Mask, int, MaskLess> row_of;
  Eigen::MatrixXd m;
};

ColumnMatrix assemble(const std::vector<std::map<Mask, double, MaskLess>>& cols) {
  ColumnMatrix out;
  for (const auto& c : cols)
    for (const auto& [mask, v] : c)
      if (!out.row_of.count(mask)) out.row_of.emplace(mask, 0);
  for (auto& [mask, idx] : out.row_of) {
    idx = static_cast<int>(out.rows.size());
    out.rows.push_back(mask);
  }
  out.m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (const auto& [mask, v] : cols[j]) out.m(out.row_of.at(mask), static_cast<Eigen::Index>(j)) = v;
  return out;
}

Eigen::MatrixXd pinv(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return Eigen::MatrixXd::Zero(m.cols(), m.rows());
  Eigen::MatrixXd p = m.completeOrthogonalDecomposition().pseudoInverse();
  return p.unaryExpr([](double v) { return snap(v); });
}

std::map<Mask, double, MaskLess> constant_terms(const Form& f) {
  std::map<Mask, double, MaskLess> out;
  for (const auto& [m, c] : f.terms()) out.emplace(m, c.const_value());
  return out;
}

// Σ s dq_c ∧ dq^I: Ω with g = 1 and no dg terms.
Form omega_flat(const PataChart& chart) {
  Form out(chart.dim(), chart.n() + 1);
  for (std::size_t j = 0; j < chart.momenta().size(); ++j) {
    const int c = chart.eps() + static_cast<int>(j);
    for (const auto& t : chart.momenta()[j]) {
      std::vector<int> idx{c};
      for (int i : mask_indices(t.I)) idx.push_back(i);
      out += Form::basis(chart.dim(), idx, Expr(t.sign));
    }
  }
  return out;
}

// Columns ∂_c⨼Ω for momentum c, with g factored out: Σ s dq^I.
ColumnMatrix vertical_matrix(const PataChart& chart) {
  std::vector<std::map<Mask, double, MaskLess>> cols;
  for (const auto& terms : chart.momenta()) {
    std::map<Mask, double, MaskLess> col;
    for (const auto& t : terms) col[t.I] += t.sign;
    cols.push_back(std::move(col));
  }
  return assemble(cols);
}

// Columns ∂_μ⨼Ω for q coordinates μ, dp part only, with g factored out.
ColumnMatrix horizontal_matrix(const PataChart& chart) {
  const Form flat = omega_flat(chart);
  std::vector<std::map<Mask, double, MaskLess>> cols;
  for (int mu = 0; mu < chart.q_dim(); ++mu) cols.push_back(constant_terms(contract(chart.coord_vector(mu), flat)));
  return assemble(cols);
}

Multivector basis_wedge(int dim, const std::vector<int>& coords) {
  Multivector out = Multivector::scalar(dim, Expr(1.0));
  for (int c : coords) out = wedge(out, dvec(dim, c));
  return out;
}

Form dx_wedge(const PataChart& chart, Mask S) {
  Form out = chart.scalar(Expr(1.0));
  for (int a : mask_indices(S)) out = wedge(out, chart.coord_form(chart.x(a)));
  return out;
}

Multivector dx_vectors(const PataChart& chart, Mask S) {
  std::vector<int> coords;
  for (int a : mask_indices(S)) coords.push_back(chart.x(a));
  return basis_wedge(chart.dim(), coords);
}

std::vector<Mask> subsets(int n, int size) {
  std::vector<Mask> out;
  for (Mask S = 0; S < (Mask{1} << n); ++S)
    if (popcount(S) == size) out.push_back(S);
  std::sort(out.begin(), out.end(), MaskLess{});
  return out;
}

HamiltonianPair checked(const PataChart& chart, HamiltonianPair h, const Points& pts) {
  const double r = xi_residual(chart, h, pts);
  if (!(r <= kMembershipTol)) throw NotInPn1(r);
  return h;
}

}  // namespace

Points probe_points(const PataChart& chart, std::uint64_t seed, int count) {
  std::mt19937_64 rng(seed);
  return chart.sample(rng, count);
}

double xi_residual(const PataChart& chart, const HamiltonianPair& h, const Points& pts) {
  Form r = d(h.a);
  if (!h.xi.empty()) r += contract(h.xi, chart.omega());
  return max_abs(r, pts);
}

OmegaRank omega_rank(const PataChart& chart, std::span<const double> pt) {
  const Form om = chart.omega();
  std::vector<std::map<Mask, double, MaskLess>> cols;
  for (int c = 0; c < chart.dim(); ++c) cols.push_back(evaluate(contract(chart.coord_vector(c), om), pt));
  const ColumnMatrix m = assemble(cols);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.m);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > 1e-10 * std::max(1.0, s(0));
  return {rank, chart.dim() - rank};
}

Multivector lift_vertical(const PataChart& chart, const Form& beta) {
  const ColumnMatrix B = vertical_matrix(chart);
  const Eigen::MatrixXd Bp = pinv(B.m);
  const Expr g = chart.density();
  Multivector v(chart.dim(), 1);
  for (Eigen::Index c = 0; c < Bp.rows(); ++c) {
    Expr sum;
    for (const auto& [m, coef] : beta.terms()) {
      auto it = B.row_of.find(m);
      if (it == B.row_of.end()) continue;
      const double w = Bp(c, it->second);
      if (std::abs(w) < 1e-12) continue;
      sum = sum + Expr(w) * coef;
    }
    if (!sum.is_zero()) v.add(Mask{1} << (chart.eps() + c), sum / g);
  }
  return v;
}

HamiltonianPair xi_general(const PataChart& chart, const Form& a, const Points& pts) {
  if (a.dim() != chart.dim()) throw std::invalid_argument("chart mismatch");
  if (a.degree() != chart.n() - 1) throw std::invalid_argument("Hamiltonian forms have degree n-1");
  const Form da = d(a);
  const Expr g = chart.density();
  // q components from the single-dp part of da.
  const ColumnMatrix A = horizontal_matrix(chart);
  const Eigen::MatrixXd Ap = pinv(A.m);
  Multivector xi(chart.dim(), 1);
  for (int mu = 0; mu < chart.q_dim(); ++mu) {
    Expr sum;
    for (const auto& [m, coef] : da.terms()) {
      if (momentum_count(chart, m) != 1) continue;
      auto it = A.row_of.find(m);
      if (it == A.row_of.end()) continue;
      const double w = Ap(mu, it->second);
      if (std::abs(w) < 1e-12) continue;
      sum = sum - Expr(w) * coef;
    }
    if (!sum.is_zero()) xi.add(Mask{1} << mu, sum / g);
  }
  // Momentum components from what is left on pure dq.
  Form rest = da;
  if (!xi.empty()) rest += contract(xi, chart.omega());
  Form dq_part(chart.dim(), chart.n());
  for (const auto& [m, coef] : rest.terms())
    if (momentum_count(chart, m) == 0) dq_part.add(m, -coef);
  xi += lift_vertical(chart, dq_part);
  return checked(chart, {a, xi}, pts);
}

Multivector euler_field(const PataChart& chart) {
  Multivector e(chart.dim(), 1);
  for (int c = chart.eps(); c < chart.dim(); ++c) e.add(Mask{1} << c, Expr::symbol(c));
  return e;
}

Multivector pi_field(const PataChart& chart, int nu, int mu) {
  return lift_vertical(chart, wedge(chart.coord_form(nu), contract(chart.coord_vector(mu), chart.theta())));
}

HamiltonianPair xi_Q(const PataChart& chart, const Form& zeta, const Points& pts) {
  if (zeta.dim() != chart.dim() || zeta.degree() != chart.n() - 1)
    throw std::invalid_argument("position observable must be an (n-1)-form on the chart");
  for (const auto& [m, c] : zeta.terms())
    if (!q_only(chart, m) || !q_only(chart, c.deps()))
      throw std::invalid_argument("position observable depends on momenta");
  return checked(chart, {zeta, lift_vertical(chart, -d(zeta))}, pts);
}

HamiltonianPair xi_P(const PataChart& chart, const Multivector& xi, const Points& pts) {
  if (xi.dim() != chart.dim() || xi.degree() != 1) throw std::invalid_argument("expected a vector field");
  for (const auto& [m, c] : xi.terms())
    if (!q_only(chart, m) || !q_only(chart, c.deps()))
      throw std::invalid_argument("momentum observable needs a field on X×Y");
  const Expr g = chart.density();
  Multivector field = xi;
  Expr xg;
  for (const auto& [m, c] : xi.terms()) xg = xg + c * differentiate(g, std::countr_zero(m));
  if (!xg.is_zero()) field -= (xg / g) * euler_field(chart);
  for (const auto& [m, c] : xi.terms()) {
    const int mu = std::countr_zero(m);
    for (int nu = 0; nu < chart.q_dim(); ++nu) {
      const Expr dxi = differentiate(c, nu);
      if (dxi.is_zero()) continue;
      field -= dxi * pi_field(chart, nu, mu);
    }
  }
  return checked(chart, {contract(xi, chart.theta()), field}, pts);
}

Form observable_Q(const PataChart& chart, int i, const std::vector<Expr>& f) {
  if (static_cast<int>(f.size()) != chart.n()) throw std::invalid_argument("base field needs n components");
  Form out(chart.dim(), chart.n() - 1);
  const Expr y = Expr::symbol(chart.y(i));
  for (int a = 0; a < chart.n(); ++a)
    if (!f[a].is_zero()) out += (y * f[a]) * chart.volume_alpha(a);
  return out;
}

Form observable_P(const PataChart& chart, int mu, const Expr& g) {
  return g * contract(chart.coord_vector(mu), chart.theta());
}

Form observable_P(const PataChart& chart, const Multivector& xi) { return contract(xi, chart.theta()); }

Form observable_P_star(const PataChart& chart, int mu, const Expr& g, const Expr& H) {
  return g * contract(chart.coord_vector(mu), chart.theta() - H * chart.volume());
}

Form eta0(const PataChart& chart, const Expr& H) {
  return -contract(chart.coord_vector(chart.x(0)), chart.theta() - H * chart.volume());
}

Form internal_bracket(const PataChart& chart, const HamiltonianPair& a, const HamiltonianPair& b) {
  if (a.a.dim() != chart.dim() || b.a.dim() != chart.dim()) throw std::invalid_argument("chart mismatch");
  Form out(chart.dim(), chart.n() - 1);
  if (a.xi.empty() || b.xi.empty()) return out;
  return contract(b.xi, contract(a.xi, chart.omega()));
}

Form external_bracket(const PataChart& chart, const Form& a, const HamiltonianPair& b) {
  if (a.dim() != chart.dim() || b.a.dim() != chart.dim()) throw std::invalid_argument("chart mismatch");
  if (b.xi.empty()) return Form(chart.dim(), a.degree());
  return -contract(b.xi, d(a));
}

Form SuperForm::at(Mask S) const {
  auto it = terms_.find(S);
  return it == terms_.end() ? Form() : it->second;
}

void SuperForm::add(Mask S, const Form& f) {
  if (n_ < 64 && (S >> n_)) throw std::out_of_range("τ index outside base");
  if (f.empty()) return;
  auto it = terms_.find(S);
  if (it == terms_.end()) {
    terms_.emplace(S, f);
    return;
  }
  it->second += f;
  if (it->second.empty()) terms_.erase(it);
}

SuperForm& SuperForm::operator+=(const SuperForm& o) {
  if (n_ == 0) n_ = o.n_;
  for (const auto& [S, f] : o.terms_) add(S, f);
  return *this;
}

SuperForm& SuperForm::operator-=(const SuperForm& o) {
  if (n_ == 0) n_ = o.n_;
  for (const auto& [S, f] : o.terms_) add(S, -f);
  return *this;
}

SuperForm operator+(SuperForm a, const SuperForm& b) { return a += b; }
SuperForm operator-(SuperForm a, const SuperForm& b) { return a -= b; }

int tau_merge_sign(Mask S, Mask T) { return shuffle_sign(S, T); }

SuperForm times_tau(const SuperForm& a, const std::vector<Expr>& c) {
  SuperForm out(a.n());
  for (const auto& [S, f] : a.terms())
    for (int al = 0; al < static_cast<int>(c.size()); ++al) {
      if (c[al].is_zero()) continue;
      const Mask bit = Mask{1} << al;
      const int s = tau_merge_sign(S, bit);
      if (s == 0) continue;
      out.add(S | bit, (s > 0 ? c[al] : -c[al]) * f);
    }
  return out;
}

double max_abs(const SuperForm& a, const Points& pts) {
  double m = 0.0;
  for (const auto& [S, f] : a.terms()) m = std::max(m, max_abs(f, pts));
  return m;
}

SuperForm superform(const PataChart& chart, const Form& a) {
  const int size = chart.n() - 1 - a.degree();
  if (size < 0) throw std::invalid_argument("superforms need degree below n");
  SuperForm out(chart.n());
  for (Mask S : subsets(chart.n(), size)) out.add(S, wedge(dx_wedge(chart, S), a));
  return out;
}

SuperPair superize(const PataChart& chart, const Form& a, const Points& pts, const XiSolver& solver) {
  SuperPair out{superform(chart, a), {}};
  const int size = chart.n() - 1 - a.degree();
  for (Mask S : subsets(chart.n(), size)) {
    const Form comp = wedge(dx_wedge(chart, S), a);
    try {
      out.xi[S] = solver ? solver(comp).xi : xi_general(chart, comp, pts).xi;
    } catch (const NotInPn1& e) {
      throw NotInPp1(e.residual());
    }
  }
  return out;
}

SuperPair superize(const HamiltonianPair& a, int n) {
  SuperPair out{SuperForm(n), {}};
  out.form.add(0, a.a);
  out.xi[0] = a.xi;
  return out;
}

SuperForm sbracket(const PataChart& chart, const SuperPair& A, const SuperPair& B) {
  SuperForm out(chart.n());
  const Form om = chart.omega();
  for (const auto& [S, xa] : A.xi) {
    if (xa.empty()) continue;
    const Form inner = contract(xa, om);
    for (const auto& [T, xb] : B.xi) {
      if (xb.empty()) continue;
      const int s = tau_merge_sign(S, T);
      if (s == 0) continue;
      const Form f = contract(xb, inner);
      out.add(S | T, s > 0 ? f : -f);
    }
  }
  return out;
}

std::vector<Expr> xi_tau(const PataChart& chart, const Multivector& xi) {
  std::vector<Expr> c(chart.n());
  for (int a = 0; a < chart.n(); ++a) c[a] = xi.coeff(Mask{1} << chart.x(a));
  return c;
}

bool is_admissible(const PataChart& chart, const SuperPair& a, const Points& pts) {
  for (const auto& [S, xi] : a.xi)
    for (int al = 0; al < chart.n(); ++al) {
      const Expr c = xi.coeff(Mask{1} << chart.x(al));
      for (const auto& p : pts)
        if (!(std::abs(evaluate(c, p)) <= 1e-10)) return false;
    }
  return true;
}

bool is_admissible(const PataChart& chart, const Form& a, const Points& pts) {
  return is_admissible(chart, superize(chart, a, pts), pts);
}

Form h_omega_bracket(const PataChart& chart, const Expr& H, const SuperPair& a, const Points& pts) {
  if (!is_admissible(chart, a, pts)) throw NotAdmissible();
  const Form dpsi = d(H * chart.volume());
  const int degree = chart.n() - popcount(a.xi.empty() ? 0 : a.xi.begin()->first);
  Form out(chart.dim(), degree);
  for (const auto& [S, xi] : a.xi) {
    if (xi.empty()) continue;
    out -= contract(wedge(dx_vectors(chart, S), xi), dpsi);
  }
  return out;
}

Form h_omega_bracket(const PataChart& chart, const Expr& H, const Form& a, const Points& pts) {
  return h_omega_bracket(chart, H, superize(chart, a, pts), pts);
}

NoetherSides noether_check(const PataChart& chart, const Multivector& xi, const Expr& H, const Points& pts) {
  const HamiltonianPair P = xi_P(chart, xi, pts);
  const Form hw = H * chart.volume();
  NoetherSides out{Form(chart.dim(), chart.n()), Form(chart.dim(), chart.n()), Form(chart.dim(), chart.n())};
  if (P.xi.empty()) return out;
  out.lhs = -contract(P.xi, d(hw));
  out.symmetry_defect = lie(P.xi, chart.theta() - hw);
  out.rhs = out.symmetry_defect + d(contract(xi, hw));
  return out;
}

namespace {

Form frozen(const Form& f, std::span<const double> pt) {
  Form out(f.dim(), f.degree());
  for (const auto& [m, v] : evaluate(f, pt)) out.add(m, Expr(v));
  return out;
}

}  // namespace

CartanCheck cartan_check(const PataChart& chart, const Expr& H, std::span<const double> pt, std::mt19937_64& rng) {
  const int n = chart.n(), dim = chart.dim(), m = dim - n;
  const Form om = frozen(chart.omega(), pt);
  const Form dhw = frozen(d(H * chart.volume()), pt);
  const double gval = evaluate(chart.density(), pt);
  std::vector<double> dH(dim);
  for (int c = 0; c < dim; ++c) dH[c] = evaluate(differentiate(H, c), pt);
  const double sign = n % 2 ? -1.0 : 1.0;

  // X_α = ∂_α + Σ_r b(α, r) ∂_{n+r}
  auto build = [&](const Eigen::VectorXd& b) {
    Multivector X = Multivector::scalar(dim, Expr(1.0));
    for (int a = 0; a < n; ++a) {
      Multivector Xa = dvec(dim, chart.x(a));
      for (int r = 0; r < m; ++r)
        if (b(a * m + r) != 0.0) Xa += Multivector::basis(dim, {n + r}, Expr(b(a * m + r)));
      X = wedge(X, Xa);
    }
    return X;
  };
  // Non-dx components of (-1)^n X⨼Ω - ω(X) dH; ω(X) = g for normalized X.
  auto mod_dx = [&](const Eigen::VectorXd& b) {
    const auto v = evaluate(contract(build(b), om), pt);
    Eigen::VectorXd r(m);
    for (int j = 0; j < m; ++j) {
      auto it = v.find(Mask{1} << (n + j));
      r(j) = sign * (it == v.end() ? 0.0 : it->second) - gval * dH[n + j];
    }
    return r;
  };
  auto cartan = [&](const Eigen::VectorXd& b) {
    double mx = 0.0;
    for (const auto& [mask, v] : evaluate(contract(build(b), om - dhw), pt)) mx = std::max(mx, std::abs(v));
    return mx;
  };

  const int unknowns = n * m;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(unknowns);
  const Eigen::VectorXd r0 = mod_dx(zero);
  Eigen::MatrixXd M(m, unknowns);
  for (int j = 0; j < unknowns; ++j) M.col(j) = mod_dx(Eigen::VectorXd::Unit(unknowns, j)) - r0;

  std::normal_distribution<double> N(0.0, 1.0);
  Eigen::VectorXd rnd(unknowns);
  for (int j = 0; j < unknowns; ++j) rnd(j) = N(rng);
  if ((mod_dx(rnd) - (M * rnd + r0)).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + rnd.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("X⨼Ω is not affine in the fibre components on this chart");

  // Hamiltonian X: particular solution plus a random kernel element.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::VectorXd b = svd.solve(-r0);
  const auto& s = svd.singularValues();
  for (int j = 0; j < unknowns; ++j) {
    const bool null = j >= s.size() || s(j) <= 1e-10 * std::max(1.0, s(0));
    if (null) b += N(rng) * svd.matrixV().col(j);
  }

  CartanCheck out;
  out.hamiltonian_mod_dx = mod_dx(b).cwiseAbs().maxCoeff();
  out.hamiltonian_cartan = cartan(b);
  out.random_mod_dx = mod_dx(rnd).cwiseAbs().maxCoeff();
  out.random_cartan = cartan(rnd);

  const auto lhs = evaluate(contract(build(rnd), dhw), pt);
  std::map<Mask, double, MaskLess> rhs;
  for (int c = 0; c < dim; ++c) rhs[Mask{1} << c] += sign * gval * dH[c];
  for (int a = 0; a < n; ++a) {
    double dHX = dH[chart.x(a)];
    for (int r = 0; r < m; ++r) dHX += rnd(a * m + r) * dH[n + r];
    rhs[Mask{1} << chart.x(a)] -= sign * gval * dHX;
  }
  for (const auto& [mask, v] : rhs) {
    auto it = lhs.find(mask);
    out.identity_gap = std::max(out.identity_gap, std::abs(v - (it == lhs.end() ? 0.0 : it->second)));
  }
  return out;
}

}  // namespace pata
