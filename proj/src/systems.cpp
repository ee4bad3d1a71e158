#include "pata/systems.hpp"

#include <cmath>
#include <stdexcept>

namespace pata {

namespace {

using Matrix = std::vector<std::vector<Expr>>;

Expr determinant(const Matrix& m) {
  const int n = static_cast<int>(m.size());
  if (n == 1) return m[0][0];
  if (n == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  Expr out;
  for (int c = 0; c < n; ++c) {
    if (m[0][c].is_zero()) continue;
    Matrix minor;
    for (int r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (int cc = 0; cc < n; ++cc)
        if (cc != c) row.push_back(m[r][cc]);
      minor.push_back(std::move(row));
    }
    const Expr term = m[0][c] * determinant(minor);
    out = c % 2 == 0 ? out + term : out - term;
  }
  return out;
}

Expr cofactor(const Matrix& m, int r, int c) {
  const int n = static_cast<int>(m.size());
  if (n == 1) return Expr(1.0);
  Matrix minor;
  for (int rr = 0; rr < n; ++rr) {
    if (rr == r) continue;
    std::vector<Expr> row;
    for (int cc = 0; cc < n; ++cc)
      if (cc != c) row.push_back(m[rr][cc]);
    minor.push_back(std::move(row));
  }
  const Expr det = determinant(minor);
  return (r + c) % 2 == 0 ? det : -det;
}

SymbolTable name_table(int n, int k, const std::string& y_prefix = "y") {
  SymbolTable t;
  for (int a = 0; a < n; ++a) t.add("x" + std::to_string(a + 1));
  for (int i = 0; i < k; ++i) t.add(y_prefix + std::to_string(i + 1));
  return t;
}

Matrix parse_matrix(const std::vector<std::vector<std::string>>& text, const SymbolTable& t) {
  Matrix out;
  for (const auto& row : text) {
    std::vector<Expr> r;
    for (const auto& e : row) r.push_back(parse(e, t));
    out.push_back(std::move(r));
  }
  return out;
}

// Points with only the first n coordinates meaningful.
std::vector<double> padded(std::span<const double> x, int dim) {
  std::vector<double> pt(dim, 0.0);
  for (std::size_t a = 0; a < x.size() && static_cast<int>(a) < dim; ++a) pt[a] = x[a];
  return pt;
}

double max_abs_at(const Form& f, const Points& xs, int dim) {
  Points pts;
  for (const auto& x : xs) pts.push_back(padded(x, dim));
  return max_abs(f, pts);
}

// Sets coordinate values so that p_I equals value.
void set_momentum(const PataChart& chart, std::vector<double>& pt, Mask I, double value) {
  const auto s = chart.slot(I);
  if (!s) throw std::invalid_argument("momentum is pinned on this chart");
  pt[s->coord] = value / s->sign;
}

// K = M⁻¹ entry with gradient -K ∂M K.
struct StringData {
  Matrix M;
  std::vector<std::pair<int, Matrix>> dM;  // (coordinate, ∂M/∂coordinate)
  CoordMask support = 0;
  double cond_max = 1e12;

  Eigen::MatrixXd eval(const Matrix& m, std::span<const double> pt) const {
    const int r = static_cast<int>(m.size());
    Eigen::MatrixXd out(r, r);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) out(i, j) = evaluate(m[i][j], pt);
    return out;
  }
  Eigen::MatrixXd inverse(std::span<const double> pt) const {
    const Eigen::MatrixXd m = eval(M, pt);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& s = svd.singularValues();
    const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1) : INFINITY;
    if (!(cond < cond_max)) throw SingularHessian(cond);
    return m.inverse();
  }
};

class StringInverse : public OpaqueJet {
 public:
  StringInverse(std::shared_ptr<const StringData> data, int r, int c) : data_(std::move(data)), r_(r), c_(c) {}
  std::string name() const override { return "K[" + std::to_string(r_) + "," + std::to_string(c_) + "]"; }
  CoordMask support() const override { return data_->support; }
  double value(std::span<const double> pt) const override { return data_->inverse(pt)(r_, c_); }
  void gradient(std::span<const double> pt, std::span<double> grad) const override {
    std::fill(grad.begin(), grad.end(), 0.0);
    const Eigen::MatrixXd K = data_->inverse(pt);
    for (const auto& [c, dm] : data_->dM) grad[c] = -(K.row(r_) * data_->eval(dm, pt) * K.col(c_))(0, 0);
  }

 private:
  std::shared_ptr<const StringData> data_;
  int r_, c_;
};

Expr epsilon2(int a, int b) { return a == b ? Expr() : Expr(a < b ? 1.0 : -1.0); }

}  // namespace

BaseMetric make_metric(std::vector<std::vector<Expr>> g) {
  const int n = static_cast<int>(g.size());
  if (n < 1) throw SingularMetric("empty metric");
  for (const auto& row : g)
    if (static_cast<int>(row.size()) != n) throw SingularMetric("metric is not square");
  const CoordMask xs = (CoordMask{1} << n) - 1;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> origin(n, 0.0);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      if (g[a][b].deps() & ~xs) throw std::invalid_argument("metric entries may depend on x only");
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> pt(n);
        for (double& v : pt) v = u(rng);
        if (std::abs(evaluate(g[a][b], pt) - evaluate(g[b][a], pt)) > 1e-12)
          throw SingularMetric("metric is not symmetric");
      }
    }
  BaseMetric m;
  m.n = n;
  m.lower = g;
  m.det = determinant(g);
  const double det0 = evaluate(m.det, origin);
  if (!(std::abs(det0) >= 1e-12)) throw SingularMetric("metric is singular at x = 0");
  m.signature_sign = det0 > 0 ? 1 : -1;
  m.density = m.det.is_const() ? Expr(std::sqrt(std::abs(det0))) : sqrt(Expr(m.signature_sign) * m.det);
  m.upper.assign(n, std::vector<Expr>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) m.upper[a][b] = cofactor(g, b, a) / m.det;
  return m;
}

BaseMetric euclidean_metric(int n) {
  Matrix g(n, std::vector<Expr>(n));
  for (int a = 0; a < n; ++a) g[a][a] = Expr(1.0);
  return make_metric(g);
}

BaseMetric minkowski_metric(int n) {
  Matrix g(n, std::vector<Expr>(n));
  for (int a = 0; a < n; ++a) g[a][a] = Expr(a == 0 ? 1.0 : -1.0);
  return make_metric(g);
}

std::vector<Expr> euler_lagrange(const Lagrangian& lag, const Expr& density, const std::vector<Expr>& u) {
  const int n = lag.n(), k = lag.k();
  if (static_cast<int>(u.size()) != k) throw std::invalid_argument("one expression per field");
  std::vector<Expr> repl(lag.dim());
  for (int a = 0; a < n; ++a) repl[lag.x(a)] = Expr::symbol(a);
  for (int i = 0; i < k; ++i) {
    repl[lag.y(i)] = u[i];
    for (int a = 0; a < n; ++a) repl[lag.v(i, a)] = differentiate(u[i], a);
  }
  std::vector<Expr> out;
  for (int i = 0; i < k; ++i) {
    Expr div;
    for (int a = 0; a < n; ++a)
      div += differentiate(density * substitute(differentiate(lag.expr(), lag.v(i, a)), repl), a);
    out.push_back(div / density - substitute(differentiate(lag.expr(), lag.y(i)), repl));
  }
  return out;
}

// Scalar fields

Form ScalarFieldSystem::P(int i, const Expr& f) const { return observable_P(chart, chart.y(i), f); }

Multivector ScalarFieldSystem::xi_P(int i, const Expr& f) const {
  Multivector xi = f * chart.coord_vector(chart.y(i));
  Expr e;
  for (int a = 0; a < n(); ++a) e += differentiate(f, a) * chart.p_weyl(a, i);
  return xi - e * chart.coord_vector(chart.eps());
}

std::vector<Expr> ScalarFieldSystem::graph(const std::vector<Expr>& u) const {
  std::vector<Expr> g(chart.dim());
  for (int a = 0; a < n(); ++a) g[a] = Expr::symbol(a);
  for (int i = 0; i < k(); ++i) {
    g[chart.y(i)] = u[i];
    for (int a = 0; a < n(); ++a) {
      Expr p;
      for (int b = 0; b < n(); ++b) p += metric.upper[a][b] * differentiate(u[i], b);
      g[chart.weyl_coord(a, i)] = p;
    }
  }
  return g;
}

Expr ScalarFieldSystem::momentum_equation(int i, const Expr& f, const std::vector<Expr>& u) const {
  const auto g = graph(u);
  const Form hw = wedge(chart.scalar(H), chart.volume());
  // {Hω, P} = -Ξ(P)⨼d(Hω)
  const Form bracket = -contract(xi_P(i, f), d(hw));
  const Form r = d(pullback(P(i, f), g, n())) - pullback(bracket, g, n());
  return r.coeff(chart.x_mask());
}

Expr ScalarFieldSystem::position_equation(int i, int alpha, const std::vector<Expr>& u) const {
  return differentiate(u[i], alpha) - substitute(differentiate(H, chart.weyl_coord(alpha, i)), graph(u));
}

ScalarFieldSystem scalar_field_system(const BaseMetric& g, const std::string& V, int k) {
  return scalar_field_system(g, parse(V, name_table(g.n, k)), k);
}

ScalarFieldSystem scalar_field_system(const BaseMetric& g, const Expr& V, int k) {
  const int n = g.n;
  if (V.deps() & ~((CoordMask{1} << (n + k)) - 1)) throw std::invalid_argument("potential may depend on x and φ only");
  PataChart chart = PataChart::weyl(n, k, g.density);
  Lagrangian lag(n, k);
  Expr L = -V;
  Expr H = Expr::symbol(chart.eps()) + V;
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) {
        L += Expr(0.5) * g.upper[a][b] * Expr::symbol(lag.v(i, a)) * Expr::symbol(lag.v(i, b));
        H += Expr(0.5) * g.lower[a][b] * chart.p_weyl(a, i) * chart.p_weyl(b, i);
      }
  lag.set(L);
  return ScalarFieldSystem{g, std::move(chart), std::move(lag), V, H};
}

// String

Expr StringSystem::p_pair(int i, int j) const {
  if (i == j) return Expr();
  if (i > j) return -p_pair(j, i);
  return chart.p((Mask{1} << chart.y(i)) | (Mask{1} << chart.y(j)));
}

Eigen::MatrixXd StringSystem::M_at(std::span<const double> pt) const {
  const int r = 2 * k();
  Eigen::MatrixXd m(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) m(a, b) = evaluate(M[a][b], pt);
  return m;
}

Eigen::MatrixXd StringSystem::K_at(std::span<const double> pt) const {
  const int r = 2 * k();
  Eigen::MatrixXd m(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) m(a, b) = evaluate(K[a][b], pt);
  return m;
}

Eigen::MatrixXd StringSystem::velocity(std::span<const double> pt) const {
  Eigen::VectorXd p(2 * k());
  for (int i = 0; i < k(); ++i)
    for (int a = 0; a < 2; ++a) p(row(a, i)) = evaluate(p_weyl(a, i), pt);
  const Eigen::VectorXd v = K_at(pt) * p;
  Eigen::MatrixXd out(k(), 2);
  for (int i = 0; i < k(); ++i)
    for (int a = 0; a < 2; ++a) out(i, a) = v(row(a, i));
  return out;
}

std::vector<double> StringSystem::point_on_R(std::span<const double> x, std::span<const double> y,
                                             const Eigen::MatrixXd& v) const {
  std::vector<double> pt(chart.dim(), 0.0);
  for (int a = 0; a < 2; ++a) pt[chart.x(a)] = x[a];
  for (int i = 0; i < k(); ++i) pt[chart.y(i)] = y[i];
  const double g = evaluate(metric.density, pt);
  for (int i = 0; i < k(); ++i)
    for (int j = i + 1; j < k(); ++j)
      set_momentum(chart, pt, (Mask{1} << chart.y(i)) | (Mask{1} << chart.y(j)), evaluate(b[i][j], pt) / g);
  Eigen::VectorXd vv(2 * k());
  for (int i = 0; i < k(); ++i)
    for (int a = 0; a < 2; ++a) vv(row(a, i)) = v(i, a);
  const Eigen::VectorXd p = M_at(pt) * vv;
  for (int i = 0; i < k(); ++i)
    for (int a = 0; a < 2; ++a) {
      double s = 1.0;
      const Mask I = PataChart::weyl_mask(2, a, i, &s);
      set_momentum(chart, pt, I, p(row(a, i)) / s);
    }
  return pt;
}

Form StringSystem::P(int i) const { return observable_P(chart, chart.y(i), Expr(1.0)); }

double StringSystem::momentum_force(int i, std::span<const double> pt) const {
  const Eigen::MatrixXd v = velocity(pt);
  Eigen::VectorXd vv(2 * k());
  for (int j = 0; j < k(); ++j)
    for (int a = 0; a < 2; ++a) vv(row(a, j)) = v(j, a);
  const int r = 2 * k();
  Eigen::MatrixXd dm(r, r);
  for (int a = 0; a < r; ++a)
    for (int c = 0; c < r; ++c) dm(a, c) = evaluate(differentiate(M[a][c], chart.y(i)), pt);
  return 0.5 * vv.dot(dm * vv);
}

StringSystem string_system(const BaseMetric& g, const std::vector<std::vector<std::string>>& h,
                           const std::vector<std::vector<std::string>>& b) {
  const int k = static_cast<int>(h.size());
  const SymbolTable t = name_table(2, k);
  return string_system(g, parse_matrix(h, t), parse_matrix(b, t));
}

StringSystem string_system(const BaseMetric& g, std::vector<std::vector<Expr>> h, std::vector<std::vector<Expr>> b) {
  if (g.n != 2) throw std::invalid_argument("string base must be 2-dimensional");
  const int k = static_cast<int>(h.size());
  if (k < 1 || static_cast<int>(b.size()) != k) throw std::invalid_argument("h and b must be k×k");
  const CoordMask xy = (CoordMask{1} << (2 + k)) - 1;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < k; ++i) {
    if (static_cast<int>(h[i].size()) != k || static_cast<int>(b[i].size()) != k)
      throw std::invalid_argument("h and b must be k×k");
    for (int j = 0; j < k; ++j) {
      if ((h[i][j].deps() | b[i][j].deps()) & ~xy) throw std::invalid_argument("h and b may depend on x and y only");
      for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> pt(2 + k);
        for (double& v : pt) v = u(rng);
        if (std::abs(evaluate(h[i][j], pt) - evaluate(h[j][i], pt)) > 1e-12)
          throw std::invalid_argument("h must be symmetric");
        if (std::abs(evaluate(b[i][j], pt) + evaluate(b[j][i], pt)) > 1e-12)
          throw std::invalid_argument("b must be antisymmetric");
      }
    }
  }
  StringSystem s{g, std::move(h), std::move(b), PataChart::full(2, k, g.density), Lagrangian(2, k), {}, {}, {}};
  const int r = 2 * k;
  Matrix G(r, std::vector<Expr>(r));
  s.M.assign(r, std::vector<Expr>(r));
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c) {
          const int ra = StringSystem::row(a, i), rc = StringSystem::row(c, j);
          G[ra][rc] = s.h[i][j] * g.upper[a][c] + s.b[i][j] * epsilon2(a, c) / g.density;
          s.M[ra][rc] = G[ra][rc] - s.p_pair(i, j) * epsilon2(a, c);
        }
  Expr L;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
          L += Expr(0.5) * G[StringSystem::row(a, i)][StringSystem::row(c, j)] * Expr::symbol(s.lagrangian.v(i, a)) *
               Expr::symbol(s.lagrangian.v(j, c));
  s.lagrangian.set(L);

  auto data = std::make_shared<StringData>();
  data->M = s.M;
  for (const auto& row : s.M)
    for (const auto& e : row) data->support |= e.deps();
  for (int c = 0; c < s.chart.dim(); ++c) {
    if (!(data->support >> c & 1U)) continue;
    Matrix dm(r, std::vector<Expr>(r));
    for (int a = 0; a < r; ++a)
      for (int bb = 0; bb < r; ++bb) dm[a][bb] = differentiate(s.M[a][bb], c);
    data->dM.emplace_back(c, std::move(dm));
  }
  s.K.assign(r, std::vector<Expr>(r));
  for (int a = 0; a < r; ++a)
    for (int c = 0; c < r; ++c) s.K[a][c] = Expr::jet(std::make_shared<StringInverse>(data, a, c));
  s.H = Expr::symbol(s.chart.eps());
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      for (int a = 0; a < 2; ++a)
        for (int c = 0; c < 2; ++c)
          s.H += Expr(0.5) * s.K[StringSystem::row(a, i)][StringSystem::row(c, j)] * s.p_weyl(a, i) * s.p_weyl(c, j);
  return s;
}

// Electromagnetic field

Expr MaxwellSystem::p(int alpha, int beta) const {
  if (alpha == beta) return Expr();
  if (alpha > beta) return -p(beta, alpha);
  return Expr::symbol(chart.maxwell_coord(alpha, beta));
}

Form MaxwellSystem::A() const {
  Form a(chart.dim(), 1);
  for (int al = 0; al < n(); ++al) a += Expr::symbol(chart.y(al)) * chart.coord_form(chart.x(al));
  return a;
}

Form MaxwellSystem::pi() const {
  Form out(chart.dim(), n() - 2);
  for (int a = 0; a < n(); ++a)
    for (int b = a + 1; b < n(); ++b)
      out += p(a, b) * contract(chart.coord_vector(a), contract(chart.coord_vector(b), chart.volume()));
  return out;
}

Form MaxwellSystem::current_form() const {
  Form out(chart.dim(), n() - 1);
  for (int a = 0; a < n(); ++a) out += current[a] * chart.volume_alpha(a);
  return out;
}

Form MaxwellSystem::gauge_generator(const Expr& f) const { return wedge(d(chart.scalar(f)), pi()); }

Multivector MaxwellSystem::gauge_field(const Expr& f) const {
  Multivector out(chart.dim(), 1);
  for (int a = 0; a < n(); ++a) out += differentiate(f, a) * chart.coord_vector(chart.y(a));
  return out;
}

SuperPair MaxwellSystem::super_pi(const Points& pts) const { return superize(chart, pi(), pts); }
SuperPair MaxwellSystem::super_A(const Points& pts) const { return superize(chart, A(), pts); }

std::vector<double> MaxwellSystem::point(std::span<const double> x, std::span<const double> A,
                                         const Eigen::MatrixXd& pm, double eps) const {
  if (pm.rows() != n() || pm.cols() != n()) throw std::invalid_argument("momentum matrix must be n×n");
  if ((pm + pm.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ConstraintViolated("p^{A_αβ} + p^{A_βα} must vanish");
  std::vector<double> pt(chart.dim(), 0.0);
  for (int a = 0; a < n(); ++a) {
    pt[chart.x(a)] = x[a];
    pt[chart.y(a)] = A[a];
  }
  pt[chart.eps()] = eps;
  for (int a = 0; a < n(); ++a)
    for (int b = a + 1; b < n(); ++b) pt[chart.maxwell_coord(a, b)] = pm(a, b);
  return pt;
}

std::vector<Expr> MaxwellSystem::naive_residual(const std::vector<Expr>& graph) const {
  if (!allow_naive)
    throw std::logic_error("naive Maxwell Hamilton equations are disabled; build the system with allow_naive");
  std::vector<Expr> out;
  for (int a = 0; a < n(); ++a)
    for (int b = 0; b < n(); ++b) {
      if (a == b) continue;
      // ∂H/∂p^{A_ab} with the n² momenta independent: -½ g_{aγ} g_{bδ} p^{A_γδ}
      Expr dH;
      for (int c = 0; c < n(); ++c)
        for (int e = 0; e < n(); ++e) dH -= Expr(0.5) * metric.lower[a][c] * metric.lower[b][e] * p(c, e);
      out.push_back(differentiate(graph[chart.y(a)], b) - substitute(dH, graph));
    }
  return out;
}

MaxwellSystem maxwell_system(const BaseMetric& g, std::vector<Expr> j, bool allow_naive) {
  const int n = g.n;
  if (static_cast<int>(j.size()) != n) throw std::invalid_argument("current needs n components");
  for (const auto& e : j)
    if (e.deps() & ~((CoordMask{1} << n) - 1)) throw std::invalid_argument("current may depend on x only");
  MaxwellSystem s{g, std::move(j), PataChart::maxwell(n, g.density), {}, allow_naive};
  Expr H = Expr::symbol(s.chart.eps());
  for (int a = 0; a < n; ++a) H += s.current[a] * Expr::symbol(s.chart.y(a));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) H -= Expr(0.25) * g.lower[a][c] * g.lower[b][e] * s.p(a, b) * s.p(c, e);
  s.H = H;
  const double div = max_abs(d(s.current_form()), probe_points(s.chart, 11, 20));
  if (div > 1e-9) throw CurrentNotConserved(div);
  return s;
}

MaxwellSystem maxwell_system(const BaseMetric& g, const std::vector<std::string>& j, bool allow_naive) {
  const SymbolTable t = name_table(g.n, 0);
  std::vector<Expr> e;
  for (const auto& s : j) e.push_back(parse(s, t));
  return maxwell_system(g, std::move(e), allow_naive);
}

MaxwellBracket maxwell_bracket(int n, std::uint64_t seed) {
  const MaxwellSystem sys = maxwell_system(euclidean_metric(n), std::vector<Expr>(n));
  const PataChart& c = sys.chart;
  const Points pts = probe_points(c, seed, 8);
  const SuperPair sp = sys.super_pi(pts), sa = sys.super_A(pts);
  const SuperForm br = sbracket(c, sp, sa);
  const SuperForm unit = superform(c, c.scalar(Expr(1.0)));

  // c from the first unit component, then the deviation from c·^s(1)
  auto extract = [&](const SuperForm& s, double* value, double* shape) {
    const auto& [S, f] = *unit.terms().begin();
    const auto& [m, e] = *f.terms().begin();
    *value = evaluate(s.at(S).coeff(m), pts[0]) / evaluate(e, pts[0]);
    if (shape) *shape = max_abs(s - superform(c, c.scalar(Expr(*value))), pts);
  };
  MaxwellBracket out;
  extract(br, &out.value, &out.shape_residual);

  // Ξ(dx^α∧π) = ∂/∂A_α in closed form
  SuperForm alt(n);
  for (const auto& [T, a] : sa.form.terms())
    for (int al = 0; al < n; ++al) {
      const Mask S = Mask{1} << al;
      const int sign = tau_merge_sign(S, T);
      if (sign == 0) continue;
      const Form term = contract(c.coord_vector(c.y(al)), d(a));
      alt.add(S | T, sign > 0 ? term : -term);
    }
  extract(alt, &out.value_from_pi, nullptr);
  return out;
}

MaxwellManufactured maxwell_manufactured(const BaseMetric& g, const std::vector<Expr>& A, const Points& xs) {
  const int n = g.n;
  Matrix F(n, std::vector<Expr>(n)), Fu(n, std::vector<Expr>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) F[a][b] = differentiate(A[b], a) - differentiate(A[a], b);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c)
        for (int e = 0; e < n; ++e) Fu[a][b] += g.upper[a][c] * g.upper[b][e] * F[c][e];
  std::vector<Expr> j(n);
  for (int b = 0; b < n; ++b) {
    for (int a = 0; a < n; ++a) j[b] += differentiate(g.density * Fu[a][b], a);
    j[b] = j[b] / g.density;
  }
  const MaxwellSystem sys = maxwell_system(g, j, true);
  const PataChart& c = sys.chart;
  std::vector<Expr> graph(c.dim());
  for (int a = 0; a < n; ++a) {
    graph[a] = Expr::symbol(a);
    graph[c.y(a)] = A[a];
    for (int b = a + 1; b < n; ++b) graph[c.maxwell_coord(a, b)] = Fu[a][b];
  }
  const Points probes = probe_points(c, 13, 20);
  const Form dpi = d(pullback(sys.pi(), graph, n));
  const Form dA = d(pullback(sys.A(), graph, n));
  const Form j_form = pullback(sys.current_form(), graph, n);

  MaxwellManufactured out;
  out.current = j;
  out.current_divergence = max_abs_at(d(sys.current_form()), xs, c.dim());
  out.field_equation = max_abs_at(dpi - j_form, xs, c.dim());
  out.dA_bracket = max_abs_at(dA - pullback(h_omega_bracket(c, sys.H, sys.A(), probes), graph, n), xs, c.dim());
  out.dpi_bracket = max_abs_at(dpi - pullback(h_omega_bracket(c, sys.H, sys.pi(), probes), graph, n), xs, c.dim());
  for (const Expr& r : sys.naive_residual(graph))
    for (const auto& x : xs) out.naive_residual = std::max(out.naive_residual, std::abs(evaluate(r, padded(x, c.dim()))));
  return out;
}

// Registry

namespace {

Matrix metric_entries(const nlohmann::json& j, int n) {
  const SymbolTable t = name_table(n, 0);
  Matrix g(n, std::vector<Expr>(n));
  if (!j.contains("metric") || (j["metric"].is_string() && j["metric"] == "euclidean")) {
    for (int a = 0; a < n; ++a) g[a][a] = Expr(1.0);
    return g;
  }
  const auto& m = j["metric"];
  if (m.is_string() && m == "minkowski") {
    for (int a = 0; a < n; ++a) g[a][a] = Expr(a == 0 ? 1.0 : -1.0);
    return g;
  }
  if (!m.is_array() || static_cast<int>(m.size()) != n) throw std::invalid_argument("metric must be an n×n array");
  for (int a = 0; a < n; ++a) {
    if (!m[a].is_array() || static_cast<int>(m[a].size()) != n)
      throw std::invalid_argument("metric must be an n×n array");
    for (int b = 0; b < n; ++b) {
      const auto& e = m[a][b];
      if (e.is_number()) g[a][b] = Expr(e.get<double>());
      else if (e.is_string()) g[a][b] = parse(e.get<std::string>(), t);
      else throw std::invalid_argument("metric entries are numbers or expression strings");
    }
  }
  return g;
}

std::string entry_text(const nlohmann::json& e) {
  if (e.is_number()) return std::to_string(e.get<double>());
  if (e.is_string()) return e.get<std::string>();
  throw std::invalid_argument("entries are numbers or expression strings");
}

std::vector<std::vector<std::string>> square_text(const nlohmann::json& j, const char* key, int k, bool identity) {
  std::vector<std::vector<std::string>> out(k, std::vector<std::string>(k, "0"));
  if (!j.contains(key)) {
    if (identity)
      for (int i = 0; i < k; ++i) out[i][i] = "1";
    return out;
  }
  const auto& m = j[key];
  if (!m.is_array() || static_cast<int>(m.size()) != k) throw std::invalid_argument(std::string(key) + " must be k×k");
  for (int i = 0; i < k; ++i) {
    if (!m[i].is_array() || static_cast<int>(m[i].size()) != k)
      throw std::invalid_argument(std::string(key) + " must be k×k");
    for (int c = 0; c < k; ++c) out[i][c] = entry_text(m[i][c]);
  }
  return out;
}

int int_param(const nlohmann::json& j, const char* key, int def, int lo, int hi) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number_integer()) throw std::invalid_argument(std::string(key) + " must be an integer");
  const int v = j[key].get<int>();
  if (v < lo || v > hi) throw std::invalid_argument(std::string(key) + " out of range");
  return v;
}

const nlohmann::json kMetricSchema = {
    {"description", "g_{αβ}(x1..xn): \"euclidean\", \"minkowski\" or an n×n array of numbers/expressions"},
    {"oneOf",
     {{{"type", "string"}, {"enum", {"euclidean", "minkowski"}}},
      {{"type", "array"}, {"items", {{"type", "array"}, {"items", {{"type", {"string", "number"}}}}}}}}}};

const nlohmann::json kSquareSchema = {
    {"type", "array"}, {"items", {{"type", "array"}, {"items", {{"type", {"string", "number"}}}}}}};

}  // namespace

const std::vector<std::string>& system_names() {
  static const std::vector<std::string> names{"scalar_field", "string", "maxwell"};
  return names;
}

const nlohmann::json& system_schema(const std::string& name) {
  static const nlohmann::json scalar = {
      {"type", "object"},
      {"properties",
       {{"n", {{"type", "integer"}, {"minimum", 1}, {"maximum", 4}, {"default", 2}}},
        {"k", {{"type", "integer"}, {"minimum", 1}, {"maximum", 3}, {"default", 1}}},
        {"metric", kMetricSchema},
        {"potential", {{"type", "string"}, {"description", "V(x1..xn, y1..yk)"}, {"default", "0"}}}}},
      {"additionalProperties", false}};
  static const nlohmann::json string = {
      {"type", "object"},
      {"properties",
       {{"k", {{"type", "integer"}, {"minimum", 1}, {"maximum", 3}, {"default", 2}}},
        {"metric", kMetricSchema},
        {"h", kSquareSchema},
        {"b", kSquareSchema}}},
      {"additionalProperties", false}};
  static const nlohmann::json maxwell = {
      {"type", "object"},
      {"properties",
       {{"n", {{"type", "integer"}, {"minimum", 2}, {"maximum", 4}, {"default", 3}}},
        {"metric", kMetricSchema},
        {"current", {{"type", "array"}, {"items", {{"type", {"string", "number"}}}}, {"description", "j^α(x1..xn)"}}},
        {"allow_naive", {{"type", "boolean"}, {"default", false}}}}},
      {"additionalProperties", false}};
  if (name == "scalar_field") return scalar;
  if (name == "string") return string;
  if (name == "maxwell") return maxwell;
  throw std::invalid_argument("unknown system '" + name + "'");
}

System build_system(const std::string& name, const nlohmann::json& params) {
  const nlohmann::json& schema = system_schema(name);
  if (!params.is_object()) throw std::invalid_argument("system parameters must be an object");
  for (const auto& [key, value] : params.items())
    if (!schema["properties"].contains(key)) throw std::invalid_argument("unknown parameter '" + key + "' for " + name);
  if (name == "scalar_field") {
    const int n = int_param(params, "n", 2, 1, 4), k = int_param(params, "k", 1, 1, 3);
    const std::string V = params.contains("potential") ? entry_text(params["potential"]) : "0";
    return scalar_field_system(make_metric(metric_entries(params, n)), V, k);
  }
  if (name == "string") {
    const int k = int_param(params, "k", 2, 1, 3);
    return string_system(make_metric(metric_entries(params, 2)), square_text(params, "h", k, true),
                         square_text(params, "b", k, false));
  }
  const int n = int_param(params, "n", 3, 2, 4);
  std::vector<std::string> j(n, "0");
  if (params.contains("current")) {
    const auto& c = params["current"];
    if (!c.is_array() || static_cast<int>(c.size()) != n) throw std::invalid_argument("current needs n entries");
    for (int a = 0; a < n; ++a) j[a] = entry_text(c[a]);
  }
  const bool naive = params.value("allow_naive", false);
  return maxwell_system(make_metric(metric_entries(params, n)), j, naive);
}

}  // namespace pata
