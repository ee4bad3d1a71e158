#include <gtest/gtest.h>

#include <cmath>

#include "pata/systems.hpp"
#include "test_util.hpp"

using namespace pata;

namespace {

Expr sym(int i) { return Expr::symbol(i); }

// Smooth, non-constant metric with positive determinant near the origin.
BaseMetric curved_metric_2d() {
  return make_metric({{Expr(1.0) + Expr(0.3) * sym(0) * sym(0), Expr(0.2) * sym(0) * sym(1)},
                      {Expr(0.2) * sym(0) * sym(1), Expr(2.0) + Expr(0.1) * sin(sym(1))}});
}

std::vector<std::vector<double>> x_points(std::mt19937_64& rng, int n, int count = 10) {
  return testutil::random_points(rng, count, n, -0.8, 0.8);
}

// Values of graph expressions at x.
std::vector<double> graph_point(const std::vector<Expr>& graph, const std::vector<double>& x) {
  std::vector<double> pt(graph.size());
  std::vector<double> padded(graph.size(), 0.0);
  std::copy(x.begin(), x.end(), padded.begin());
  for (std::size_t c = 0; c < graph.size(); ++c) pt[c] = evaluate(graph[c], padded);
  return pt;
}

double at_x(const Expr& e, const std::vector<double>& x, int dim) {
  std::vector<double> pt(dim, 0.0);
  std::copy(x.begin(), x.end(), pt.begin());
  return evaluate(e, pt);
}

}  // namespace

TEST(Metric, InverseAndDensity) {
  const BaseMetric g = curved_metric_2d();
  std::mt19937_64 rng(1);
  for (const auto& x : x_points(rng, 2)) {
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) {
        double s = 0.0;
        for (int c = 0; c < 2; ++c) s += evaluate(g.lower[a][c], x) * evaluate(g.upper[c][b], x);
        EXPECT_NEAR(s, a == b ? 1.0 : 0.0, 1e-12);
      }
    const double g00 = evaluate(g.lower[0][0], x), g01 = evaluate(g.lower[0][1], x), g11 = evaluate(g.lower[1][1], x);
    EXPECT_NEAR(evaluate(g.density, x), std::sqrt(g00 * g11 - g01 * g01), 1e-12);
  }
  const BaseMetric m = minkowski_metric(4);
  EXPECT_EQ(m.signature_sign, -1);
  EXPECT_DOUBLE_EQ(evaluate(m.density, std::vector<double>(4, 0.0)), 1.0);
  EXPECT_THROW(make_metric({{Expr(1.0), Expr(1.0)}, {Expr(1.0), Expr(1.0)}}), SingularMetric);
  EXPECT_THROW(make_metric({{Expr(1.0), sym(0)}, {Expr(0.0), Expr(1.0)}}), SingularMetric);
}

TEST(EulerLagrange, KleinGordonByHand) {
  // Minkowski n = 2, V = ½m²φ²: EL = φ_tt - φ_xx + m²φ
  const ScalarFieldSystem s = scalar_field_system(minkowski_metric(2), "0.5*1.7*y1^2", 1);
  const Expr u = sin(Expr(0.7) * sym(0)) * cos(Expr(1.3) * sym(1)) + sym(0) * sym(1) * sym(1);
  const Expr el = euler_lagrange(s.lagrangian, s.metric.density, {u})[0];
  const Expr hand = differentiate(differentiate(u, 0), 0) - differentiate(differentiate(u, 1), 1) + Expr(1.7) * u;
  std::mt19937_64 rng(2);
  for (const auto& x : x_points(rng, 2)) EXPECT_NEAR(evaluate(el, x), evaluate(hand, x), 1e-12);
}

TEST(ScalarField, MomentumFieldAndBrackets) {
  for (int k : {1, 2}) {
    const ScalarFieldSystem s = scalar_field_system(curved_metric_2d(), k == 1 ? "y1^4 + x1*y1" : "y1^2*y2 + cos(y2)", k);
    const PataChart& c = s.chart;
    const Points pts = probe_points(c, 3, 30);
    const Expr f = sin(sym(0)) + sym(0) * sym(1) * sym(1);
    for (int i = 0; i < k; ++i) {
      const HamiltonianPair pair{s.P(i, f), s.xi_P(i, f)};
      EXPECT_LE(xi_residual(c, pair, pts), 1e-9);
      // agrees with the general solver
      EXPECT_LE(max_abs(xi_general(c, pair.a, pts).xi - pair.xi, pts), 1e-9);
      for (int j = 0; j < k; ++j) {
        // {P_{i,f}, φ^j} = Ξ(P)⨼dφ^j = f δ
        const Form br = contract(pair.xi, c.coord_form(c.y(j)));
        EXPECT_LE(max_abs(br - c.scalar(i == j ? f : Expr()), pts), 1e-12);
      }
      // {Hω, P_{i,f}} = (-f ∂V/∂φ^i + ∂_α f p^α_i) ω
      const Form hw = wedge(c.scalar(s.H), c.volume());
      Expr coeff = -f * differentiate(s.potential, c.y(i));
      for (int a = 0; a < 2; ++a) coeff += differentiate(f, a) * c.p_weyl(a, i);
      EXPECT_LE(max_abs(-contract(pair.xi, d(hw)) - coeff * c.volume(), pts), 1e-9);
      // {Hω, φ^i} = g_{αβ} p^β_i dx^α
      Form expect(c.dim(), 1);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) expect += (s.metric.lower[a][b] * c.p_weyl(b, i)) * c.coord_form(a);
      EXPECT_LE(max_abs(h_omega_bracket(c, s.H, c.scalar(sym(c.y(i))), pts) - expect, pts), 1e-9);
    }
  }
}

TEST(ScalarField, HamiltonEquationsGiveEulerLagrange) {
  const ScalarFieldSystem s = scalar_field_system(curved_metric_2d(), "0.5*y1^2 + 0.2*y1^4 + x2*y1", 1);
  const std::vector<Expr> fields{
      sym(0) * sym(1),
      sin(sym(0)) * cos(Expr(2.0) * sym(1)),
      exp(Expr(0.3) * sym(0)) + sym(1) * sym(1) * sym(1),
      Expr(0.5) * sym(0) * sym(0) - sym(1),
      cos(sym(0) + sym(1)) * sym(0),
  };
  const Expr f = Expr(1.0) + Expr(0.4) * sym(0) - sym(1) * sym(1);
  std::mt19937_64 rng(4);
  for (const Expr& u : fields) {
    const Expr el = euler_lagrange(s.lagrangian, s.metric.density, {u})[0];
    const Expr r = s.momentum_equation(0, f, {u});
    for (const auto& x : x_points(rng, 2, 5)) {
      EXPECT_NEAR(at_x(r, x, s.chart.dim()), at_x(f * s.metric.density * el, x, s.chart.dim()), 1e-9);
      for (int a = 0; a < 2; ++a) EXPECT_NEAR(at_x(s.position_equation(0, a, {u}), x, s.chart.dim()), 0.0, 1e-12);
    }
  }
}

TEST(ScalarField, HarmonicPolynomialSolvesLaplace) {
  const ScalarFieldSystem s = scalar_field_system(euclidean_metric(2), "0", 1);
  const Expr u = sym(0) * sym(1);
  std::mt19937_64 rng(5);
  for (const auto& x : x_points(rng, 2)) {
    EXPECT_LE(std::abs(at_x(s.momentum_equation(0, Expr(1.0), {u}), x, s.chart.dim())), 1e-10);
    EXPECT_LE(std::abs(evaluate(euler_lagrange(s.lagrangian, s.metric.density, {u})[0], x)), 1e-10);
  }
}

TEST(ScalarField, LegendreRoundTrip) {
  const ScalarFieldSystem s = scalar_field_system(curved_metric_2d(), "0.5*y1^2 + y2^3", 2);
  const Legendre leg(s.chart, s.lagrangian);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) {
    const auto x = testutil::random_point(rng, 2, -0.8, 0.8), y = testutil::random_point(rng, 2);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(2, 2);
    const auto pt = weyl_legendre(s.lagrangian, s.chart, x, y, v, 0.25);
    const auto sol = leg.solve(pt);
    EXPECT_LE((sol.v - v).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(leg.hamiltonian(pt), 0.25, 1e-9);
    EXPECT_NEAR(evaluate(s.H, pt), 0.25, 1e-9);
  }
}

namespace {

StringSystem random_string(int k) {
  // h = I + y-dependent symmetric perturbation, small b
  const SymbolTable t = [&] {
    SymbolTable s;
    s.add("x1");
    s.add("x2");
    for (int i = 0; i < k; ++i) s.add("y" + std::to_string(i + 1));
    return s;
  }();
  std::vector<std::vector<Expr>> h(k, std::vector<Expr>(k)), b(k, std::vector<Expr>(k));
  for (int i = 0; i < k; ++i) {
    h[i][i] = parse("1.5 + 0.2*sin(y" + std::to_string(i + 1) + ")", t);
    for (int j = i + 1; j < k; ++j) {
      h[i][j] = h[j][i] = parse("0.1*y1*y" + std::to_string(j + 1), t);
      b[i][j] = parse("0.3 + 0.2*y" + std::to_string(i + 1), t);
      b[j][i] = -b[i][j];
    }
  }
  return string_system(curved_metric_2d(), h, b);
}

}  // namespace

TEST(String, HarmonicMapCase) {
  const StringSystem s = string_system(euclidean_metric(2), std::vector<std::vector<std::string>>{{"1", "0"}, {"0", "1"}},
                                       std::vector<std::vector<std::string>>{{"0", "0"}, {"0", "0"}});
  std::mt19937_64 rng(7);
  for (int t = 0; t < 5; ++t) {
    const auto pt = s.point_on_R(testutil::random_point(rng, 2), testutil::random_point(rng, 2),
                                 Eigen::MatrixXd::Random(2, 2));
    EXPECT_LE((s.K_at(pt) - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-14);
    double h = pt[s.chart.eps()];
    for (int i = 0; i < 2; ++i)
      for (int a = 0; a < 2; ++a) h += 0.5 * std::pow(evaluate(s.p_weyl(a, i), pt), 2);
    EXPECT_NEAR(evaluate(s.H, pt), h, 1e-12);
  }
}

TEST(String, InverseOnRegionR) {
  for (int k : {1, 2, 3}) {
    const StringSystem s = random_string(k);
    std::mt19937_64 rng(8);
    for (int t = 0; t < 10; ++t) {
      const auto pt = s.point_on_R(testutil::random_point(rng, 2, -0.8, 0.8), testutil::random_point(rng, k),
                                   Eigen::MatrixXd::Random(k, 2));
      const Eigen::MatrixXd km = s.K_at(pt) * s.M_at(pt);
      EXPECT_LE((km - Eigen::MatrixXd::Identity(2 * k, 2 * k)).cwiseAbs().maxCoeff(), 1e-10);
      // on R, g p_ij = b_ij so M reduces to h g^{αβ}
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          EXPECT_NEAR(evaluate(s.M[StringSystem::row(0, i)][StringSystem::row(1, j)], pt),
                      evaluate(s.h[i][j], pt) * evaluate(s.metric.upper[0][1], pt), 1e-12);
    }
  }
}

TEST(String, InverseDerivativeIdentity) {
  const StringSystem s = random_string(2);
  std::mt19937_64 rng(9);
  Points pts;
  for (int t = 0; t < 8; ++t) {
    auto pt = s.point_on_R(testutil::random_point(rng, 2, -0.8, 0.8), testutil::random_point(rng, 2),
                           Eigen::MatrixXd::Random(2, 2));
    pt[s.chart.slot((Mask{1} << s.chart.y(0)) | (Mask{1} << s.chart.y(1)))->coord] += 0.1;  // off R, inside O
    pts.push_back(pt);
  }
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) EXPECT_LE(jet_gradient_error(*s.K[a][b].node().jet, pts), 1e-6);
  // -∂H/∂y^i = ½ ∂_i M v v
  for (const auto& pt : pts)
    for (int i = 0; i < 2; ++i)
      EXPECT_NEAR(-evaluate(differentiate(s.H, s.chart.y(i)), pt), s.momentum_force(i, pt), 1e-9);
}

TEST(String, LegendreRoundTrip) {
  const StringSystem s = random_string(2);
  const Legendre leg(s.chart, s.lagrangian);
  std::mt19937_64 rng(10);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd v = Eigen::MatrixXd::Random(2, 2);
    auto pt = s.point_on_R(testutil::random_point(rng, 2, -0.8, 0.8), testutil::random_point(rng, 2), v);
    EXPECT_LE((s.velocity(pt) - v).cwiseAbs().maxCoeff(), 1e-10);
    const auto sol = leg.solve(pt);
    EXPECT_LE((sol.v - v).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(leg.hamiltonian(pt), evaluate(s.H, pt), 1e-9);
  }
}

TEST(String, MomentumFormsAndGraph) {
  const StringSystem s = random_string(2);
  const PataChart& c = s.chart;
  Points pts;
  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t)
    pts.push_back(s.point_on_R(testutil::random_point(rng, 2, -0.8, 0.8), testutil::random_point(rng, 2),
                               Eigen::MatrixXd::Random(2, 2)));
  for (int i = 0; i < 2; ++i) {
    // Ξ(P_i) = ∂/∂y^i, and {P_i, y^j} = δ
    EXPECT_LE(xi_residual(c, {s.P(i), c.coord_vector(c.y(i))}, pts), 1e-9);
    EXPECT_LE(max_abs(xi_general(c, s.P(i), pts).xi - c.coord_vector(c.y(i)), pts), 1e-9);
  }

  // Graph of y(x) with p_ij(x) arbitrary and p^α_i = M ∂y.
  const std::vector<Expr> y{sin(sym(0)) * sym(1), Expr(0.3) * sym(0) * sym(0) + cos(sym(1))};
  const Expr pij = Expr(0.2) + Expr(0.1) * sym(0) * sym(1);
  std::vector<Expr> graph(c.dim());
  graph[0] = sym(0);
  graph[1] = sym(1);
  for (int i = 0; i < 2; ++i) graph[c.y(i)] = y[i];
  const auto pair_slot = c.slot((Mask{1} << c.y(0)) | (Mask{1} << c.y(1)));
  graph[pair_slot->coord] = Expr(pair_slot->sign) * pij;
  std::vector<Expr> on_graph(c.dim());
  for (int a = 0; a < 2; ++a)
    for (int i = 0; i < 2; ++i) {
      Expr p;
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 2; ++j)
          p += substitute(s.M[StringSystem::row(a, i)][StringSystem::row(b, j)], graph) * differentiate(y[j], b);
      double sign = 1.0;
      const Mask I = PataChart::weyl_mask(2, a, i, &sign);
      const auto sl = c.slot(I);
      on_graph[sl->coord] = Expr(sign * sl->sign) * p;
    }
  for (int cc = 0; cc < c.dim(); ++cc)
    if (!on_graph[cc].is_zero()) graph[cc] = on_graph[cc];

  const std::vector<Expr> el = euler_lagrange(s.lagrangian, s.metric.density, y);
  const Points xs = x_points(rng, 2, 8);
  for (int i = 0; i < 2; ++i) {
    // P_i|Γ = G^{αβ}_{ij} ∂_β y^j ω_α
    Form expect(c.dim(), 1);
    for (int a = 0; a < 2; ++a) {
      Expr coeff;
      for (int b = 0; b < 2; ++b)
        for (int j = 0; j < 2; ++j) {
          const Expr G = s.h[i][j] * s.metric.upper[a][b] +
                         s.b[i][j] * Expr(a == b ? 0.0 : (a < b ? 1.0 : -1.0)) / s.metric.density;
          coeff += substitute(G, graph) * differentiate(y[j], b);
        }
      expect += coeff * c.volume_alpha(a);
    }
    const Form pulled = pullback(s.P(i), graph, 2);
    Points padded;
    for (const auto& x : xs) padded.push_back(graph_point(graph, x));
    EXPECT_LE(max_abs(pulled - expect, padded), 1e-8);

    // d(P_i|Γ) - {Hω, P_i}|Γ = g EL_i; {Hω, P_i} = -∂H/∂y^i ω
    const Expr dP = d(pulled).coeff(c.x_mask());
    for (const auto& x : xs) {
      const auto pt = graph_point(graph, x);
      const double g = evaluate(s.metric.density, pt);
      const double bracket = -evaluate(differentiate(s.H, c.y(i)), pt) * g;
      EXPECT_NEAR(evaluate(dP, pt) - bracket, g * evaluate(el[i], pt), 1e-8);
    }
  }
}

TEST(Maxwell, ConstraintByStorage) {
  const MaxwellSystem s = maxwell_system(euclidean_metric(3), std::vector<Expr>(3));
  EXPECT_EQ(s.chart.dim(), 3 + 3 + 1 + 3);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      const Expr sum = s.p(a, b) + s.p(b, a);
      EXPECT_TRUE(sum.is_zero() || std::abs(evaluate(sum, std::vector<double>(s.chart.dim(), 0.7))) == 0.0);
    }
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 3);
  p(0, 1) = 0.5;
  const std::vector<double> x{0, 0, 0}, A{0, 0, 0};
  EXPECT_THROW(s.point(x, A, p), ConstraintViolated);
  p(1, 0) = -0.5;
  EXPECT_NO_THROW(s.point(x, A, p));
  EXPECT_THROW(maxwell_system(euclidean_metric(2), std::vector<std::string>{"x1", "0"}), CurrentNotConserved);
  EXPECT_NO_THROW(maxwell_system(euclidean_metric(2), std::vector<std::string>{"x2", "x1"}));
}

TEST(Maxwell, PiFieldIsTranslationInA) {
  for (int n : {2, 3, 4}) {
    const MaxwellSystem s = maxwell_system(euclidean_metric(n), std::vector<Expr>(n));
    const Points pts = probe_points(s.chart, 12, 10);
    const SuperPair sp = s.super_pi(pts);
    ASSERT_EQ(static_cast<int>(sp.xi.size()), n);
    for (const auto& [S, xi] : sp.xi) {
      ASSERT_EQ(popcount(S), 1);
      const int a = std::countr_zero(S);
      EXPECT_LE(max_abs(xi - s.chart.coord_vector(s.chart.y(a)), pts), 1e-10);
    }
    EXPECT_TRUE(is_admissible(s.chart, sp, pts));
    EXPECT_TRUE(is_admissible(s.chart, s.super_A(pts), pts));
  }
}

TEST(Maxwell, BracketOfPiAndA) {
  // Computed value is (-1)^n (n-1): 1, -2, 3.
  for (int n : {2, 3, 4}) {
    const MaxwellBracket b = maxwell_bracket(n, 21);
    const double expect = (n % 2 == 0 ? 1.0 : -1.0) * (n - 1);
    EXPECT_NEAR(b.value, expect, 1e-10) << "n=" << n;
    EXPECT_LE(b.shape_residual, 1e-10);
    EXPECT_NEAR(b.value_from_pi, expect, 1e-10);
  }
}

TEST(Maxwell, GaugeGenerator) {
  for (int n : {2, 3, 4}) {
    const MaxwellSystem s = maxwell_system(minkowski_metric(n), std::vector<Expr>(n));
    const PataChart& c = s.chart;
    const Points pts = probe_points(c, 14, 20);
    Expr f = sin(sym(0)) * sym(n - 1) + sym(1) * sym(1);
    const Form gen = s.gauge_generator(f);
    const HamiltonianPair pair{gen, s.gauge_field(f)};
    EXPECT_LE(xi_residual(c, pair, pts), 1e-10);
    EXPECT_LE(max_abs(xi_general(c, gen, pts).xi - pair.xi, pts), 1e-10);
    // {df∧π, A} = Ξ⨼dA = df ; {df∧π, π} = Ξ⨼dπ = 0
    EXPECT_LE(max_abs(contract(pair.xi, d(s.A())) - d(c.scalar(f)), pts), 1e-10);
    EXPECT_LE(max_abs(contract(pair.xi, d(s.pi())), pts), 1e-10);
    EXPECT_LE(max_abs(-external_bracket(c, s.A(), pair) - d(c.scalar(f)), pts), 1e-10);
  }
}

TEST(Maxwell, ManufacturedSolution) {
  std::mt19937_64 rng(15);
  {
    const auto r = maxwell_manufactured(euclidean_metric(2), {Expr(), sin(sym(0))}, x_points(rng, 2));
    EXPECT_LE(r.current_divergence, 1e-10);
    EXPECT_LE(r.field_equation, 1e-10);
    EXPECT_LE(r.dA_bracket, 1e-10);
    EXPECT_LE(r.dpi_bracket, 1e-10);
    // the naive equations fail on a genuine solution
    EXPECT_GT(r.naive_residual, 0.1);
  }
  {
    const std::vector<Expr> A{sym(1) * sym(2), cos(sym(0)) * sym(2), sin(sym(1)) + sym(0) * sym(0)};
    const auto r = maxwell_manufactured(minkowski_metric(3), A, x_points(rng, 3));
    EXPECT_LE(r.current_divergence, 1e-10);
    EXPECT_LE(r.field_equation, 1e-10);
    EXPECT_LE(r.dA_bracket, 1e-10);
    EXPECT_LE(r.dpi_bracket, 1e-10);
  }
  const MaxwellSystem s = maxwell_system(euclidean_metric(2), std::vector<Expr>(2));
  EXPECT_THROW(s.naive_residual(std::vector<Expr>(s.chart.dim())), std::logic_error);
}

TEST(Registry, BuildsEverySystem) {
  ASSERT_EQ(system_names().size(), 3U);
  for (const auto& name : system_names()) {
    EXPECT_TRUE(system_schema(name).contains("properties"));
    EXPECT_NO_THROW(build_system(name, nlohmann::json::object()));
  }
  const System sf = build_system("scalar_field", {{"n", 2}, {"metric", "minkowski"}, {"potential", "0.5*y1^2"}});
  EXPECT_TRUE(std::holds_alternative<ScalarFieldSystem>(sf));
  const System st = build_system("string", nlohmann::json::parse(R"({"k": 2, "b": [["0", "0.2*y1"], ["-0.2*y1", 0]]})"));
  EXPECT_EQ(std::get<StringSystem>(st).k(), 2);
  const System mx = build_system("maxwell", nlohmann::json::parse(R"({"n": 2, "current": ["x2", "-x1"]})"));
  EXPECT_EQ(std::get<MaxwellSystem>(mx).n(), 2);
  EXPECT_THROW(build_system("scalar_field", {{"bogus", 1}}), std::invalid_argument);
  EXPECT_THROW(build_system("nope", nlohmann::json::object()), std::invalid_argument);
  EXPECT_THROW(build_system("string", nlohmann::json::parse(R"({"b": [["0", "1"], ["1", "0"]]})")), std::invalid_argument);
}
