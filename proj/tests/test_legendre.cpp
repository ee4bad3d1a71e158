#include <gtest/gtest.h>

#include <cmath>

#include "pata/legendre.hpp"
#include "test_util.hpp"

using namespace pata;

namespace {

Eigen::MatrixXd mat(int rows, int cols, std::initializer_list<double> vals) {
  Eigen::MatrixXd m(rows, cols);
  auto it = vals.begin();
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = *it++;
  return m;
}

// Euclidean or Minkowski quadratic Lagrangian ½ η^{αβ} v_α v_β - V(y), n=2, k=1.
Lagrangian quad2(double s1, const std::string& potential = "0") {
  Lagrangian l(2, 1);
  l.set("1/2*v1^2 + " + std::to_string(s1) + "/2*v2^2 - (" + potential + ")");
  return l;
}

}  // namespace

TEST(Legendre, PairingExamples) {
  PataChart w = PataChart::weyl(1, 1);
  std::vector<double> pt(w.dim(), 0.0);
  EXPECT_EQ(pairing(w, pt, mat(1, 1, {3.0})), 0.0);
  pt[w.eps()] = 1.0;
  pt[w.weyl_coord(0, 0)] = 2.0;
  EXPECT_DOUBLE_EQ(pairing(w, pt, mat(1, 1, {3.0})), 7.0);
}

TEST(Legendre, PairingPicksUpVelocityMinor) {
  PataChart c = PataChart::full(2, 2);
  std::mt19937_64 rng(31);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> pt(c.dim(), 0.0);
    pt[c.symbols().find("p12_12")->index] = 1.0;  // only p^{12}_{12} nonzero
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(2, 2);
    // Brute force: z row β = (δ_β0, δ_β1, v(0,β), v(1,β)); minor on columns {2,3}.
    const double minor = v(0, 0) * v(1, 1) - v(0, 1) * v(1, 0);
    EXPECT_NEAR(pairing(c, pt, v), minor, 1e-14);
  }
}

TEST(LegendreProperty, WeylPairingMatchesEmbedding) {
  std::mt19937_64 rng(32);
  for (auto [n, k] : {std::pair{2, 2}, std::pair{3, 2}, std::pair{2, 1}, std::pair{3, 1}}) {
    PataChart full = PataChart::full(n, k);
    PataChart w = restrict_weyl(full);
    for (int t = 0; t < 20; ++t) {
      auto pt = testutil::random_point(rng, w.dim());
      Eigen::MatrixXd v = Eigen::MatrixXd::Random(k, n);
      double expect = pt[w.eps()];
      for (int i = 0; i < k; ++i)
        for (int a = 0; a < n; ++a) expect += pt[w.weyl_coord(a, i)] * v(i, a);
      EXPECT_NEAR(pairing(full, embed_point(w, pt), v), expect, 1e-12);
      EXPECT_NEAR(pairing(w, pt, v), expect, 1e-12);
    }
  }
}

TEST(Legendre, GeneratingFunction) {
  PataChart w = PataChart::weyl(2, 1);
  Lagrangian zero(2, 1);
  Legendre lz(w, zero);
  std::vector<double> pt(w.dim(), 0.0);
  EXPECT_EQ(lz.generating_W(pt, mat(1, 2, {0.3, 0.4})), 0.0);

  // KG flat: p0 = v0, p1 = -v1 gives W = ε + ½v0² - ½v1².
  Legendre kg(w, quad2(-1.0));
  const double v0 = 0.7, v1 = -0.4, eps = 0.25;
  pt = {0.1, 0.2, 0.3, eps, v0, -v1};
  EXPECT_NEAR(kg.generating_W(pt, mat(1, 2, {v0, v1})), eps + 0.5 * v0 * v0 - 0.5 * v1 * v1, 1e-15);
}

TEST(Legendre, QuadraticSolvesInOneStep) {
  PataChart w = PataChart::weyl(2, 1);
  Legendre kg(w, quad2(-1.0, "1/2*y1^2"));
  std::vector<double> pt{0.1, 0.2, 0.3, 0.0, 0.8, -0.6};
  const auto s = kg.solve(pt);
  EXPECT_EQ(s.iterations, 1);
  // V_α = g_{αβ} p^β with g = diag(1,-1)
  EXPECT_NEAR(s.v(0, 0), 0.8, 1e-14);
  EXPECT_NEAR(s.v(0, 1), 0.6, 1e-14);
  EXPECT_LE(s.residual, 1e-10);
  EXPECT_TRUE(std::isfinite(s.condition));
}

TEST(Legendre, QuarticAgainstGridSearch) {
  PataChart w = PataChart::weyl(1, 1);
  Lagrangian l(1, 1);
  l.set("1/4*v1^4");
  Legendre lq(w, l);
  // Zero seed hits the degenerate Hessian.
  std::vector<double> pt{0.0, 0.0, 0.0, 2.0};
  EXPECT_THROW(lq.solve(pt), SingularHessian);
  lq.set_seed([&](std::span<const double> q) {
    return Eigen::MatrixXd::Constant(1, 1, q[w.weyl_coord(0, 0)] >= 0 ? 1.0 : -1.0);
  });
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> up(-8.0, 8.0);
  for (int t = 0; t < 10; ++t) {
    const double p = up(rng);
    pt[w.weyl_coord(0, 0)] = p;
    const double v = lq.solve(pt).v(0, 0);
    EXPECT_NEAR(v, std::cbrt(p), 1e-10);
    // Grid oracle: W = ε + p v - v⁴/4 is concave; maximize on 10^5 points.
    double best = -1e300, arg = 0.0;
    for (int g = 0; g < 100000; ++g) {
      const double vv = -3.0 + 6.0 * g / 99999.0;
      const double W = p * vv - 0.25 * vv * vv * vv * vv;
      if (W > best) best = W, arg = vv;
    }
    EXPECT_NEAR(v, arg, 1e-4);
  }
}

TEST(Legendre, NoConvergenceReported) {
  PataChart w = PataChart::weyl(1, 1);
  Lagrangian l(1, 1);
  l.set("1/4*v1^4");
  LegendreOptions opt;
  opt.max_iter = 2;
  Legendre lq(w, l, opt);
  std::vector<double> pt{0.0, 0.0, 0.0, 1000.0};
  EXPECT_THROW(lq.solve(pt, Eigen::MatrixXd::Constant(1, 1, 1.0)), NoConvergence);
}

TEST(LegendreProperty, EnvelopeGradientMatchesFiniteDifferences) {
  PataChart w = PataChart::weyl(2, 1);
  Legendre kg(w, quad2(-1.0, "y1^2/2 + y1^4/4"));
  Lagrangian nl(2, 1);
  nl.set("1/2*v1^2 + 1/2*v2^2 + 1/12*v1^4 - x1*y1 + cos(x2)*y1^2");
  Legendre nonlin(w, nl);
  std::mt19937_64 rng(34);
  for (const Legendre* l : {&kg, &nonlin}) {
    for (int t = 0; t < 20; ++t) {
      auto pt = testutil::random_point(rng, w.dim());
      const auto g = l->hamiltonian_gradient(pt);
      EXPECT_NEAR(g[w.eps()], 1.0, 1e-14);
      for (int c = 0; c < w.dim(); ++c) {
        const double h = 1e-6;
        auto q = pt;
        q[c] += h;
        const double up = l->hamiltonian(q);
        q[c] -= 2 * h;
        const double fd = (up - l->hamiltonian(q)) / (2 * h);
        EXPECT_NEAR(g[c], fd, 1e-5 * std::max(1.0, std::abs(fd))) << "coordinate " << c;
      }
    }
    EXPECT_LE(jet_gradient_error(*l->hamiltonian_jet(), testutil::random_points(rng, 5, w.dim())), 1e-6);
  }
}

TEST(Legendre, WeylLegendreRoundTrip) {
  PataChart w = PataChart::weyl(2, 1);
  Lagrangian nl(2, 1);
  nl.set("1/2*v1^2 + 1/2*v2^2 + 1/12*v1^4 - y1^2");
  Legendre l(w, nl);
  std::mt19937_64 rng(35);
  for (int t = 0; t < 20; ++t) {
    auto x = testutil::random_point(rng, 2);
    auto y = testutil::random_point(rng, 1);
    Eigen::MatrixXd v = Eigen::MatrixXd::Random(1, 2);
    const auto pt = weyl_legendre(nl, w, x, y, v, 0.0);
    const auto s = l.solve(pt);
    EXPECT_LE((s.v - v).cwiseAbs().maxCoeff(), 1e-9);
    // w = 0 convention: H = 0 on the image.
    EXPECT_NEAR(l.hamiltonian(pt), 0.0, 1e-12);
    const auto pw = weyl_legendre(nl, w, x, y, v, 0.7);
    EXPECT_NEAR(l.hamiltonian(pw), 0.7, 1e-12);
  }
  // L ≡ 0 gives p = 0, ε = w.
  Lagrangian zero(2, 1);
  const auto pz = weyl_legendre(zero, w, std::vector<double>{0, 0}, std::vector<double>{1}, mat(1, 2, {1, 2}), 0.3);
  EXPECT_EQ(pz[w.eps()], 0.3);
  EXPECT_EQ(pz[w.weyl_coord(0, 0)], 0.0);
  // Minkowski KG: p0 = φ_t, p1 = -φ_x.
  Lagrangian kg = quad2(-1.0, "1/2*y1^2");
  const auto pk = weyl_legendre(kg, w, std::vector<double>{0, 0}, std::vector<double>{0.2}, mat(1, 2, {0.5, 0.9}));
  EXPECT_DOUBLE_EQ(pk[w.weyl_coord(0, 0)], 0.5);
  EXPECT_DOUBLE_EQ(pk[w.weyl_coord(1, 0)], -0.9);
}

TEST(Legendre, HamiltonianTensorMatchesDefinitionAndStress) {
  PataChart w = PataChart::weyl(2, 2);
  Lagrangian l(2, 2);
  l.set("1/2*(v1_1^2 - v1_2^2) + 1/2*(v2_1^2 - v2_2^2) + 1/10*v1_1*v2_2 + 1/12*v1_1^4 - y1^2*y2");
  Legendre leg(w, l);
  std::mt19937_64 rng(36);
  for (int t = 0; t < 10; ++t) {
    auto x = testutil::random_point(rng, 2);
    auto y = testutil::random_point(rng, 2);
    Eigen::MatrixXd du = 0.5 * Eigen::MatrixXd::Random(2, 2);
    const auto pt = weyl_legendre(l, w, x, y, du, 0.0);
    const Eigen::MatrixXd T = leg.hamiltonian_tensor(pt);
    // Definition: ∂L/∂v^i_α V^i_β - δ L
    const auto j = l.jet_point(x, y, du);
    const double L = evaluate(l.expr(), j);
    Eigen::MatrixXd def = -L * Eigen::MatrixXd::Identity(2, 2);
    for (int a = 0; a < 2; ++a)
      for (int i = 0; i < 2; ++i)
        for (int b = 0; b < 2; ++b) def(a, b) += evaluate(differentiate(l.expr(), l.v(i, a)), j) * du(i, b);
    EXPECT_LE((T - def).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LE((T + stress_energy(l, x, y, du)).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Legendre, HamiltonianTensorSpecialCases) {
  // n = 1: H^1_1 = p v - L, the mechanical energy.
  PataChart w1 = PataChart::weyl(1, 1);
  Lagrangian osc(1, 1);
  osc.set("1/2*v1^2 - 1/2*y1^2");
  Legendre lo(w1, osc);
  std::vector<double> pt{0.0, 0.6, 0.3, 0.8};
  const double v = 0.8, energy = 0.8 * v - (0.5 * v * v - 0.5 * 0.36);
  EXPECT_NEAR(lo.hamiltonian_tensor(pt)(0, 0), energy, 1e-14);
  // Zero momenta and ε: H^α_β = δ^α_β H with H = V.
  PataChart w = PataChart::weyl(2, 1);
  Legendre lv(w, quad2(1.0, "y1^2 + 1"));
  std::vector<double> z{0.1, 0.2, 0.5, 0.0, 0.0, 0.0};
  const Eigen::MatrixXd T = lv.hamiltonian_tensor(z);
  EXPECT_NEAR(T(0, 0), 1.25, 1e-14);
  EXPECT_NEAR(T(1, 1), 1.25, 1e-14);
  EXPECT_NEAR(T(0, 1), 0.0, 1e-14);
  // Flat KG: H^0_0 = ½p0² + ½p1² + V
  Legendre kg(w, quad2(-1.0, "1/2*y1^2"));
  std::vector<double> q{0.0, 0.0, 0.4, 0.3, 0.7, -0.2};
  EXPECT_NEAR(kg.hamiltonian_tensor(q)(0, 0), 0.5 * 0.49 + 0.5 * 0.04 + 0.5 * 0.16, 1e-14);
}

TEST(Legendre, StressEnergyExamples) {
  Lagrangian l = quad2(-1.0);
  // Constant field, V = 0 → S = 0
  EXPECT_LE(stress_energy(l, std::vector<double>{0, 0}, std::vector<double>{3}, Eigen::MatrixXd::Zero(1, 2))
                .cwiseAbs()
                .maxCoeff(),
            0.0);
  // Plane wave trace identity S^α_α = nL - Σ (∂L/∂v) v
  Lagrangian kg = quad2(-1.0, "1/2*y1^2");
  const double om = std::sqrt(2.0), ka = 1.0, t = 0.3, x = 0.8;
  const double ph = std::cos(om * t - ka * x);
  Eigen::MatrixXd du(1, 2);
  du << -om * std::sin(om * t - ka * x), ka * std::sin(om * t - ka * x);
  const auto S = stress_energy(kg, std::vector<double>{t, x}, std::vector<double>{ph}, du);
  const double L = 0.5 * du(0, 0) * du(0, 0) - 0.5 * du(0, 1) * du(0, 1) - 0.5 * ph * ph;
  const double pv = du(0, 0) * du(0, 0) - du(0, 1) * du(0, 1);
  EXPECT_NEAR(S.trace(), 2 * L - pv, 1e-14);
  EXPECT_NEAR(S(0, 0), -(0.5 * du(0, 0) * du(0, 0) + 0.5 * du(0, 1) * du(0, 1) + 0.5 * ph * ph), 1e-14);
}
