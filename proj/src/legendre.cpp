#include "pata/legendre.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pata {

Lagrangian::Lagrangian(int n, int k, std::vector<std::string> x_names, std::vector<std::string> y_names)
    : n_(n), k_(k) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (x_names.empty())
    for (int a = 0; a < n; ++a) x_names.push_back("x" + std::to_string(a + 1));
  if (y_names.empty())
    for (int i = 0; i < k; ++i) y_names.push_back("y" + std::to_string(i + 1));
  if (static_cast<int>(x_names.size()) != n || static_cast<int>(y_names.size()) != k)
    throw std::invalid_argument("coordinate name count mismatch");
  for (const auto& s : x_names) symbols_.add(s);
  for (const auto& s : y_names) symbols_.add(s);
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) {
      const int idx = symbols_.add("v" + std::to_string(i + 1) + "_" + std::to_string(a + 1));
      if (k == 1) symbols_.alias("v" + std::to_string(a + 1), idx);
    }
}

Lagrangian& Lagrangian::set(const Expr& e) {
  if (e.deps() >> dim()) throw std::invalid_argument("Lagrangian uses symbols outside its table");
  expr_ = e;
  return *this;
}

Lagrangian& Lagrangian::set(const std::string& text) { return set(parse(text, symbols_)); }

std::vector<double> Lagrangian::jet_point(std::span<const double> x, std::span<const double> y,
                                          const Eigen::MatrixXd& v) const {
  std::vector<double> p(dim());
  for (int a = 0; a < n_; ++a) p[a] = x[a];
  for (int i = 0; i < k_; ++i) p[n_ + i] = y[i];
  for (int i = 0; i < k_; ++i)
    for (int a = 0; a < n_; ++a) p[this->v(i, a)] = v(i, a);
  return p;
}

namespace {

// det of the n×n minor of z on the sorted columns I; z row β has δ on the
// x columns and v(i, β) on column n+i.
template <class Entry>
auto minor_det(int n, Mask I, Entry entry) {
  const std::vector<int> cols = mask_indices(I);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  using T = decltype(entry(0, 0));
  T total = T(0.0);
  do {
    int inv = 0;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b) inv += perm[a] > perm[b];
    T prod = T(inv % 2 ? -1.0 : 1.0);
    bool zero = false;
    for (int r = 0; r < n && !zero; ++r) {
      T e = entry(r, cols[perm[r]]);
      if constexpr (std::is_same_v<T, double>) {
        if (e == 0.0) zero = true;
      } else {
        if (e.is_zero()) zero = true;
      }
      prod = prod * e;
    }
    if (!zero) total = total + prod;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return total;
}

double pairing_with(const PataChart& chart, std::span<const double> pt,
                    const std::function<double(int, int)>& z) {
  double total = 0.0;
  for (std::size_t j = 0; j < chart.momenta().size(); ++j) {
    const double pc = pt[chart.eps() + j];
    if (pc == 0.0) continue;
    for (const auto& t : chart.momenta()[j]) total += t.sign * pc * minor_det(chart.n(), t.I, z);
  }
  return total;
}

}  // namespace

double pairing(const PataChart& chart, std::span<const double> pt, const Eigen::MatrixXd& v) {
  const int n = chart.n();
  return pairing_with(chart, pt, [&](int r, int col) -> double {
    return col < n ? (r == col ? 1.0 : 0.0) : v(col - n, r);
  });
}

Legendre::Legendre(PataChart chart, Lagrangian lag, LegendreOptions opt)
    : chart_(std::move(chart)), lag_(std::move(lag)), opt_(opt) {
  if (chart_.n() != lag_.n() || chart_.k() != lag_.k())
    throw std::invalid_argument("Lagrangian and chart dimensions differ");
  const int n = chart_.n(), k = chart_.k();
  if (jet_dim() > kMaxCoords) throw std::invalid_argument("jet table too large");
  // Pairing as an expression on the jet table.
  for (std::size_t j = 0; j < chart_.momenta().size(); ++j) {
    const Expr pc = Expr::symbol(chart_.eps() + static_cast<int>(j));
    for (const auto& t : chart_.momenta()[j]) {
      Expr det = minor_det(n, t.I, [&](int r, int col) -> Expr {
        return col < n ? Expr(r == col ? 1.0 : 0.0) : Expr::symbol(v_index(col - n, r));
      });
      pairing_ += Expr(t.sign) * pc * det;
    }
  }
  // L moved onto the jet table.
  std::vector<Expr> repl(lag_.dim());
  for (int c = 0; c < n + k; ++c) repl[c] = Expr::symbol(c);
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) repl[lag_.v(i, a)] = Expr::symbol(v_index(i, a));
  lag_jet_ = substitute(lag_.expr(), repl);
  const Expr w = W();
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) grad_v_.push_back(differentiate(w, v_index(i, a)));
  for (const auto& g : grad_v_) {
    std::vector<Expr> row;
    for (int i = 0; i < k; ++i)
      for (int a = 0; a < n; ++a) row.push_back(differentiate(g, v_index(i, a)));
    hess_v_.push_back(std::move(row));
  }
  for (int c = 0; c < chart_.dim(); ++c) grad_chart_.push_back(differentiate(w, c));
}

std::vector<double> Legendre::jet_point(std::span<const double> pt, const Eigen::MatrixXd& v) const {
  std::vector<double> j(pt.begin(), pt.begin() + chart_.dim());
  j.resize(jet_dim());
  for (int i = 0; i < chart_.k(); ++i)
    for (int a = 0; a < chart_.n(); ++a) j[v_index(i, a)] = v(i, a);
  return j;
}

double Legendre::generating_W(std::span<const double> pt, const Eigen::MatrixXd& v) const {
  const auto j = jet_point(pt, v);
  return evaluate(pairing_, j) - evaluate(lag_jet_, j);
}

double Legendre::residual(std::span<const double> pt, const Eigen::MatrixXd& v) const {
  const auto j = jet_point(pt, v);
  double r = 0.0;
  for (const auto& g : grad_v_) r = std::max(r, std::abs(evaluate(g, j)));
  return r;
}

LegendreSolve Legendre::solve(std::span<const double> pt) const {
  if (seed_) return solve(pt, seed_(pt));
  return solve(pt, Eigen::MatrixXd::Zero(chart_.k(), chart_.n()));
}

LegendreSolve Legendre::solve(std::span<const double> pt, const Eigen::MatrixXd& v0) const {
  const int n = chart_.n(), k = chart_.k(), m = n * k;
  Eigen::MatrixXd v = v0;
  Eigen::VectorXd r(m);
  Eigen::MatrixXd J(m, m);
  auto hessian_at = [&](const std::vector<double>& j) {
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) J(a, b) = evaluate(hess_v_[a][b], j);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    return smin > 0.0 ? s(0) / smin : std::numeric_limits<double>::infinity();
  };
  double res = 0.0;
  for (int it = 0; it <= opt_.max_iter; ++it) {
    const auto j = jet_point(pt, v);
    for (int a = 0; a < m; ++a) r(a) = evaluate(grad_v_[a], j);
    res = r.cwiseAbs().maxCoeff();
    const double cond = hessian_at(j);
    if (res <= opt_.tol) {
      if (!(cond <= opt_.cond_max)) throw SingularHessian(cond);
      return {v, it, res, cond};
    }
    if (it == opt_.max_iter) break;
    if (!(cond <= opt_.cond_max)) throw SingularHessian(cond);
    const Eigen::VectorXd step = J.colPivHouseholderQr().solve(-r);
    for (int i = 0; i < k; ++i)
      for (int a = 0; a < n; ++a) v(i, a) += step(i * n + a);
    if (!v.allFinite()) break;
  }
  throw NoConvergence(res);
}

double Legendre::hamiltonian(std::span<const double> pt) const {
  return generating_W(pt, solve(pt).v);
}

std::vector<double> Legendre::hamiltonian_gradient(std::span<const double> pt) const {
  const auto j = jet_point(pt, solve(pt).v);
  std::vector<double> g(chart_.dim());
  for (int c = 0; c < chart_.dim(); ++c) g[c] = evaluate(grad_chart_[c], j);
  return g;
}

namespace {

class LegendreHamiltonian : public OpaqueJet {
 public:
  explicit LegendreHamiltonian(std::shared_ptr<const Legendre> l) : l_(std::move(l)) {}
  std::string name() const override { return "H"; }
  CoordMask support() const override {
    const int d = l_->chart().dim();
    return d >= kMaxCoords ? ~CoordMask{0} : (CoordMask{1} << d) - 1;
  }
  double value(std::span<const double> pt) const override { return l_->hamiltonian(pt); }
  void gradient(std::span<const double> pt, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    const auto g = l_->hamiltonian_gradient(pt);
    std::copy(g.begin(), g.end(), grad.begin());
  }

 private:
  std::shared_ptr<const Legendre> l_;
};

}  // namespace

std::shared_ptr<const OpaqueJet> Legendre::hamiltonian_jet() const {
  return std::make_shared<LegendreHamiltonian>(std::make_shared<Legendre>(*this));
}

Eigen::MatrixXd Legendre::hamiltonian_tensor(std::span<const double> pt) const {
  const int n = chart_.n();
  const auto sol = solve(pt);
  const double H = generating_W(pt, sol.v);
  Eigen::MatrixXd T(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const double swapped = pairing_with(chart_, pt, [&](int r, int col) -> double {
        if (r == a) return col == b ? 1.0 : 0.0;
        return col < n ? (r == col ? 1.0 : 0.0) : sol.v(col - n, r);
      });
      T(a, b) = (a == b ? H : 0.0) - swapped;
    }
  return T;
}

std::vector<double> weyl_legendre(const Lagrangian& lag, const PataChart& weyl,
                                  std::span<const double> x, std::span<const double> y,
                                  const Eigen::MatrixXd& v, double w) {
  if (weyl.kind() != ChartKind::Weyl) throw std::invalid_argument("weyl_legendre needs a Weyl chart");
  const int n = lag.n(), k = lag.k();
  const auto j = lag.jet_point(x, y, v);
  const double L = evaluate(lag.expr(), j);
  std::vector<double> pt(weyl.dim(), 0.0);
  for (int a = 0; a < n; ++a) pt[weyl.x(a)] = x[a];
  for (int i = 0; i < k; ++i) pt[weyl.y(i)] = y[i];
  double pv = 0.0;
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) {
      const double p = evaluate(differentiate(lag.expr(), lag.v(i, a)), j);
      pt[weyl.weyl_coord(a, i)] = p;
      pv += p * v(i, a);
    }
  pt[weyl.eps()] = w + L - pv;
  return pt;
}

Eigen::MatrixXd stress_energy(const Lagrangian& lag, std::span<const double> x,
                              std::span<const double> u, const Eigen::MatrixXd& du) {
  const int n = lag.n(), k = lag.k();
  const auto j = lag.jet_point(x, u, du);
  const double L = evaluate(lag.expr(), j);
  Eigen::MatrixXd S = L * Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < k; ++i) {
      const double dl = evaluate(differentiate(lag.expr(), lag.v(i, a)), j);
      for (int b = 0; b < n; ++b) S(a, b) -= dl * du(i, b);
    }
  return S;
}

}  // namespace pata
