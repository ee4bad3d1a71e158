#include <gtest/gtest.h>

#include <set>

#include "pata/phase.hpp"
#include "test_util.hpp"

using namespace pata;

namespace {

Form f(const PataChart& c, std::vector<int> idx, const Expr& coeff) {
  return Form::basis(c.dim(), std::move(idx), coeff);
}

Expr sym(const PataChart& c, const std::string& name) { return c.parse(name); }

double form_gap(const Form& a, const Form& b, const std::vector<std::vector<double>>& pts) {
  return max_abs(a - b, pts);
}

}  // namespace

TEST(Phase, CoordinateCounts) {
  EXPECT_EQ(PataChart::full(1, 1).dim(), 4);
  EXPECT_EQ(PataChart::full(2, 2).dim(), 10);
  EXPECT_EQ(PataChart::full(2, 1).dim(), 6);
  EXPECT_EQ(PataChart::full(3, 2).dim(), 5 + 10);
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= 3; ++k) EXPECT_EQ(PataChart::full(n, k).dim(), n + k + binomial(n + k, n));
}

TEST(Phase, OrderingXThenYThenLexicographicMomenta) {
  PataChart c = PataChart::full(2, 1);
  std::vector<std::string> names;
  for (int i = 0; i < c.dim(); ++i) names.push_back(c.symbols().name(i));
  EXPECT_EQ(names, (std::vector<std::string>{"x1", "x2", "y1", "p_12", "p_13", "p_23"}));
  EXPECT_EQ(c.symbols().find("eps")->index, c.eps());
}

TEST(Phase, ThetaClassicalMechanics) {
  PataChart c = PataChart::full(1, 1);
  const auto pts = [&] { std::mt19937_64 r(1); return c.sample(r, 5); }();
  Form expect = f(c, {0}, sym(c, "eps")) + f(c, {1}, sym(c, "p_2"));
  EXPECT_LE(form_gap(c.theta(), expect, pts), 0.0);
  Form om = f(c, {2, 0}, Expr(1.0)) + f(c, {3, 1}, Expr(1.0));
  EXPECT_LE(form_gap(c.omega(), om, pts), 0.0);
}

TEST(Phase, ThetaTwoDimensionalWeyl) {
  for (const PataChart& c : {PataChart::weyl(2, 1), restrict_weyl(PataChart::full(2, 1))}) {
    std::mt19937_64 rng(2);
    const auto pts = c.sample(rng, 10);
    // ε dx0∧dx1 + p0 dy∧dx1 + p1 dx0∧dy
    Form expect = f(c, {0, 1}, sym(c, "eps")) + f(c, {2, 1}, sym(c, "p1")) + f(c, {0, 2}, sym(c, "p2"));
    EXPECT_LE(form_gap(c.theta(), expect, pts), 1e-15);
    // Ω = dε∧ω + Σ dp^α∧dy∧ω_α
    Form om = wedge(c.coord_form(c.eps()), c.volume());
    for (int a = 0; a < 2; ++a)
      om += wedge(wedge(c.coord_form(c.weyl_coord(a, 0)), c.coord_form(c.y(0))), c.volume_alpha(a));
    EXPECT_LE(form_gap(c.omega(), om, pts), 1e-15);
  }
}

TEST(Phase, CurvedDensityTerm) {
  PataChart full = PataChart::full(2, 1, "2 + sin(x1)*x2");
  PataChart c = restrict_weyl(full);
  std::mt19937_64 rng(3);
  const auto pts = c.sample(rng, 20);
  const Expr g = c.density();
  Form om = wedge(c.coord_form(c.eps()), c.volume());
  for (int a = 0; a < 2; ++a) {
    om += wedge(wedge(c.coord_form(c.weyl_coord(a, 0)), c.coord_form(c.y(0))), c.volume_alpha(a));
    Expr coef = -(Expr::symbol(c.weyl_coord(a, 0)) * differentiate(g, a) / g);
    om += coef * wedge(c.coord_form(c.y(0)), c.volume());
  }
  EXPECT_LE(form_gap(c.omega(), om, pts), 1e-13);
  // ω_α is not closed here.
  EXPECT_GT(max_abs(d(c.volume_alpha(0)), pts), 1e-3);
}

TEST(Phase, OmegaIsClosedOnExampleCharts) {
  std::vector<PataChart> charts{PataChart::full(1, 1),       PataChart::full(2, 1),
                                PataChart::full(2, 2),       PataChart::full(3, 2),
                                PataChart::full(2, 2, "3 + x1*x2"),
                                PataChart::weyl(2, 1, parse("2 + x1^2", PataChart::full(2, 1).symbols())),
                                PataChart::maxwell(3),       PataChart::maxwell(2, Expr(2.0) + Expr::symbol(0))};
  std::mt19937_64 rng(4);
  for (const auto& c : charts) {
    const auto pts = c.sample(rng, 50);
    EXPECT_LE(max_abs(d(c.omega()), pts), 1e-10);
  }
}

TEST(Phase, AliasBijection) {
  for (auto [n, k] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 3}, std::pair{1, 2}}) {
    PataChart c = PataChart::full(n, k);
    // Every Weyl alias resolves to one canonical coordinate and back.
    std::set<int> seen;
    for (int a = 0; a < n; ++a)
      for (int i = 0; i < k; ++i) {
        auto e = c.symbols().find("p" + std::to_string(a + 1) + "_" + std::to_string(i + 1));
        ASSERT_TRUE(e);
        EXPECT_TRUE(seen.insert(e->index).second);
        double s = 0;
        const Mask I = PataChart::weyl_mask(n, a, i, &s);
        EXPECT_EQ(c.slot(I)->coord, e->index);
        EXPECT_EQ(e->sign, s);
        // Sign check by brute force: sort the unsorted list.
        std::vector<int> idx;
        for (int b = 0; b < n; ++b) idx.push_back(b == a ? n + i : b);
        EXPECT_EQ(sort_sign(idx), static_cast<int>(s));
        EXPECT_EQ(mask_of(idx), I);
      }
    EXPECT_EQ(c.symbols().find("eps")->index, c.eps());
  }
  PataChart c = PataChart::full(2, 2);
  // p^{12}_{12} ↔ p_{(n+1)(n+2)} = p_34
  auto e = c.symbols().find("p12_12");
  ASSERT_TRUE(e);
  EXPECT_EQ(c.symbols().name(e->index), "p_34");
  EXPECT_EQ(e->sign, 1.0);
  // n=2: p^1_i = -p_{2,2+i}, p^2_i = p_{1,2+i}
  EXPECT_EQ(c.symbols().find("p1_1")->sign, -1.0);
  EXPECT_EQ(c.symbols().name(c.symbols().find("p1_1")->index), "p_23");
  EXPECT_EQ(c.symbols().find("p2_1")->sign, 1.0);
  EXPECT_EQ(c.symbols().name(c.symbols().find("p2_1")->index), "p_13");
}

TEST(Phase, WeylRestriction) {
  PataChart full = PataChart::full(2, 2);
  PataChart w = restrict_weyl(full);
  EXPECT_EQ(w.dim(), 9);
  std::mt19937_64 rng(5);
  const auto pts = w.sample(rng, 10);
  EXPECT_LE(max_abs(restrict_form(w, full.theta()) - w.theta(), pts), 1e-15);
  EXPECT_LE(max_abs(restrict_form(w, full.omega()) - w.omega(), pts), 1e-15);
  // Embedded points keep the Weyl momenta and zero the pinned p_34.
  auto fp = embed_point(w, pts[0]);
  EXPECT_EQ(fp[full.symbols().find("p_34")->index], 0.0);
  EXPECT_DOUBLE_EQ(evaluate(full.parse("p1_2"), fp), pts[0][w.weyl_coord(0, 1)]);

  PataChart one = restrict_weyl(PataChart::full(1, 2));
  EXPECT_EQ(one.dim(), PataChart::full(1, 2).dim());
}

TEST(Phase, BasePlaneContractionMatchesSlotSum) {
  PataChart c = PataChart::full(2, 1);
  std::mt19937_64 rng(6);
  const auto pts = c.sample(rng, 3);
  const Form om = c.omega();
  const Form xo = contract(c.base_plane(), om);
  for (const auto& p : pts) {
    const auto on = evaluate(om, p);
    const auto xn = evaluate(xo, p);
    for (int v = 0; v < c.dim(); ++v) {
      const double ref = testutil::slot_eval(
          on, {testutil::unit(c.dim(), 0), testutil::unit(c.dim(), 1), testutil::unit(c.dim(), v)});
      EXPECT_NEAR(testutil::slot_eval(xn, {testutil::unit(c.dim(), v)}), ref, 1e-15);
    }
  }
  // Coefficient pattern: dε and ±dp_I terms only, no dq terms for flat Ω.
  EXPECT_TRUE(xo.coeff(Mask{1} << c.eps()).is_one());
}

TEST(Phase, ContractFiberVectorGivesMomentumObservable) {
  // ∂/∂y ⨼ θ = Σ p^α ω_α
  PataChart c = PataChart::weyl(2, 1);
  std::mt19937_64 rng(7);
  const auto pts = c.sample(rng, 10);
  Form expect(c.dim(), 1);
  for (int a = 0; a < 2; ++a) expect += Expr::symbol(c.weyl_coord(a, 0)) * c.volume_alpha(a);
  EXPECT_LE(max_abs(contract(c.coord_vector(c.y(0)), c.theta()) - expect, pts), 1e-15);
}

TEST(Phase, MaxwellTheta) {
  PataChart c = PataChart::maxwell(3);
  std::mt19937_64 rng(8);
  const auto pts = c.sample(rng, 10);
  Form expect = Expr::symbol(c.eps()) * c.volume();
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      Expr P = Expr::symbol(c.maxwell_coord(a, b));
      expect += P * wedge(c.coord_form(c.y(a)), c.volume_alpha(b));
      expect -= P * wedge(c.coord_form(c.y(b)), c.volume_alpha(a));
    }
  EXPECT_LE(max_abs(c.theta() - expect, pts), 1e-15);
}

TEST(Phase, DensityMustBePositive) {
  EXPECT_THROW(PataChart::full(2, 1, "x1"), DomainError);
  EXPECT_THROW(PataChart::full(2, 1, "log(x1)"), DomainError);
  EXPECT_NO_THROW(PataChart::full(2, 1, "2 + x1"));
}

TEST(Phase, JsonRoundTrip) {
  PataChart c = PataChart::full(2, 2, "2 + x1*x2");
  const std::string js = c.to_json();
  PataChart back = PataChart::from_json(js);
  EXPECT_EQ(back.to_json(), js);
  EXPECT_NE(js.find("\"p1_1\""), std::string::npos);
  EXPECT_EQ(PataChart::from_json(PataChart::maxwell(3).to_json()).dim(), PataChart::maxwell(3).dim());
}
