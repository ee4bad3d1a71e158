#include "pata/phase.hpp"

#include <json.hpp>

#include <bit>
#include <stdexcept>

namespace pata {

int binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  long long v = 1;
  for (int i = 1; i <= r; ++i) v = v * (n - r + i) / i;
  return static_cast<int>(v);
}

namespace {

// n-subsets of {0..m-1} in lexicographic order.
std::vector<Mask> subsets(int m, int n) {
  std::vector<Mask> out;
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (;;) {
    out.push_back(mask_of(idx));
    int j = n - 1;
    while (j >= 0 && idx[j] == m - n + j) --j;
    if (j < 0) break;
    ++idx[j];
    for (int l = j + 1; l < n; ++l) idx[l] = idx[l - 1] + 1;
  }
  return out;
}

std::string digits_name(Mask I, int m) {
  std::string s = "p";
  for (int i : mask_indices(I)) {
    if (m > 9 || s.size() == 1) s += '_';
    s += std::to_string(i + 1);
  }
  return s;
}

}  // namespace

Mask PataChart::weyl_mask(int n, int alpha, int i, double* sign) {
  // (0..α-1, n+i, α+1..n-1) sorted: n+i moves past n-1-α entries.
  if (sign) *sign = (n - 1 - alpha) % 2 ? -1.0 : 1.0;
  return (((Mask{1} << n) - 1) & ~(Mask{1} << alpha)) | (Mask{1} << (n + i));
}

void PataChart::add_q_names(std::vector<std::string> x_names, std::vector<std::string> y_names) {
  if (x_names.empty())
    for (int a = 0; a < n_; ++a) x_names.push_back("x" + std::to_string(a + 1));
  if (y_names.empty())
    for (int i = 0; i < k_; ++i) y_names.push_back("y" + std::to_string(i + 1));
  if (static_cast<int>(x_names.size()) != n_ || static_cast<int>(y_names.size()) != k_)
    throw std::invalid_argument("coordinate name count mismatch");
  for (const auto& s : x_names) symbols_.add(s);
  for (const auto& s : y_names) symbols_.add(s);
}

void PataChart::check_density(const Expr& g) {
  if (g.deps() & ~x_mask()) throw std::invalid_argument("density may depend on x only");
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> pt(n_);
  for (int t = 0; t < 20; ++t) {
    for (auto& v : pt) v = u(rng);
    double val = 0.0;
    try {
      val = evaluate(g, pt);
    } catch (const DomainError&) {
      throw DomainError("density not evaluable at probe point");
    }
    if (!(val > 0.0)) throw DomainError("density non-positive at probe point");
  }
  density_ = g;
}

PataChart PataChart::full(int n, int k, const std::string& density) {
  if (density.empty()) return full(n, k, Expr(1.0));
  SymbolTable xs;
  for (int a = 0; a < n; ++a) xs.add("x" + std::to_string(a + 1));
  return full(n, k, pata::parse(density, xs));
}

PataChart PataChart::full(int n, int k, const Expr& density) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (n + k + binomial(n + k, n) > kMaxCoords) throw std::invalid_argument("chart too large");
  PataChart c;
  c.kind_ = ChartKind::Full;
  c.n_ = n;
  c.k_ = k;
  c.add_q_names({}, {});
  for (Mask I : subsets(n + k, n)) {
    c.symbols_.add(digits_name(I, n + k));
    c.momenta_.push_back({{I, 1.0}});
  }
  c.check_density(density);
  const int e = c.eps();
  c.symbols_.alias("eps", e, 1.0);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < k; ++i) {
      double s = 1.0;
      const Mask I = weyl_mask(n, a, i, &s);
      c.symbols_.alias("p" + std::to_string(a + 1) + "_" + std::to_string(i + 1), c.slot(I)->coord, s);
    }
  if (n <= 9 && k <= 9)
    for (int a1 = 0; a1 < n; ++a1)
      for (int a2 = a1 + 1; a2 < n; ++a2)
        for (int i1 = 0; i1 < k; ++i1)
          for (int i2 = i1 + 1; i2 < k; ++i2) {
            std::vector<int> idx;
            for (int a = 0; a < n; ++a) idx.push_back(a == a1 ? n + i1 : a == a2 ? n + i2 : a);
            const int s = sort_sign(idx);
            const std::string name = "p" + std::to_string(a1 + 1) + std::to_string(a2 + 1) + "_" +
                                     std::to_string(i1 + 1) + std::to_string(i2 + 1);
            c.symbols_.alias(name, c.slot(mask_of(idx))->coord, s);
          }
  return c;
}

PataChart PataChart::weyl(int n, int k, const Expr& density, std::vector<std::string> x_names,
                          std::vector<std::string> y_names) {
  if (n < 1 || k < 1) throw std::invalid_argument("need n >= 1 and k >= 1");
  if (n + k + 1 + n * k > kMaxCoords) throw std::invalid_argument("chart too large");
  PataChart c;
  c.kind_ = ChartKind::Weyl;
  c.n_ = n;
  c.k_ = k;
  c.add_q_names(std::move(x_names), std::move(y_names));
  c.symbols_.add("eps");
  c.momenta_.push_back({{c.x_mask(), 1.0}});
  for (int i = 0; i < k; ++i)
    for (int a = 0; a < n; ++a) {
      double s = 1.0;
      const Mask I = weyl_mask(n, a, i, &s);
      const int idx = c.symbols_.add("p" + std::to_string(a + 1) + "_" + std::to_string(i + 1));
      if (k == 1) c.symbols_.alias("p" + std::to_string(a + 1), idx, 1.0);
      // p_I = s p^α_i
      c.momenta_.push_back({{I, s}});
    }
  c.check_density(density);
  return c;
}

PataChart PataChart::maxwell(int n, const Expr& density) {
  if (n < 2) throw std::invalid_argument("gauge chart needs n >= 2");
  PataChart c;
  c.kind_ = ChartKind::Maxwell;
  c.n_ = n;
  c.k_ = n;
  std::vector<std::string> ys;
  for (int a = 0; a < n; ++a) ys.push_back("A" + std::to_string(a + 1));
  c.add_q_names({}, ys);
  c.symbols_.add("eps");
  c.momenta_.push_back({{c.x_mask(), 1.0}});
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) {
      c.symbols_.add("pA" + std::to_string(a + 1) + std::to_string(b + 1));
      // P = p^b_{A_a} = -p^a_{A_b}
      double s1 = 1.0, s2 = 1.0;
      const Mask I1 = weyl_mask(n, b, a, &s1);
      const Mask I2 = weyl_mask(n, a, b, &s2);
      c.momenta_.push_back({{I1, s1}, {I2, -s2}});
    }
  c.check_density(density);
  return c;
}

std::optional<PataChart::Slot> PataChart::slot(Mask I) const {
  for (std::size_t j = 0; j < momenta_.size(); ++j)
    for (const auto& t : momenta_[j])
      if (t.I == I) return Slot{eps() + static_cast<int>(j), t.sign};
  return std::nullopt;
}

Expr PataChart::p(Mask I) const {
  auto s = slot(I);
  if (!s) return Expr();
  Expr v = Expr::symbol(s->coord);
  return s->sign > 0 ? v : -v;
}

Expr PataChart::p_weyl(int alpha, int i) const {
  double s = 1.0;
  const Mask I = weyl_mask(n_, alpha, i, &s);
  return Expr(s) * p(I);
}

int PataChart::weyl_coord(int alpha, int i) const {
  if (kind_ != ChartKind::Weyl) return -1;
  return eps() + 1 + i * n_ + alpha;
}

int PataChart::maxwell_coord(int alpha, int beta) const {
  if (kind_ != ChartKind::Maxwell || alpha >= beta) return -1;
  int c = eps() + 1;
  for (int a = 0; a < n_; ++a)
    for (int b = a + 1; b < n_; ++b) {
      if (a == alpha && b == beta) return c;
      ++c;
    }
  return -1;
}

Form PataChart::theta() const {
  Form th(dim(), n_);
  for (std::size_t j = 0; j < momenta_.size(); ++j) {
    const Expr pc = Expr::symbol(eps() + static_cast<int>(j));
    for (const auto& t : momenta_[j]) th.add(t.I, Expr(t.sign) * density_ * pc);
  }
  return th;
}

Form PataChart::omega() const { return d(theta()); }

Form PataChart::volume() const {
  Form w(dim(), n_);
  w.add(x_mask(), density_);
  return w;
}

Form PataChart::volume_alpha(int alpha) const { return contract(coord_vector(x(alpha)), volume()); }

Multivector PataChart::base_plane() const {
  Multivector x(dim(), n_);
  x.add(x_mask(), Expr(1.0));
  return x;
}

std::vector<std::vector<double>> PataChart::sample(std::mt19937_64& rng, int count, double lo,
                                                   double hi) const {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<std::vector<double>> out;
  int tries = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++tries > 1000 * count) throw DomainError("cannot sample points with positive density");
    std::vector<double> p(dim());
    for (auto& v : p) v = u(rng);
    if (!density_.is_const()) {
      try {
        if (!(evaluate(density_, p) > 1e-3)) continue;
      } catch (const DomainError&) {
        continue;
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string PataChart::to_json() const {
  nlohmann::ordered_json j;
  j["kind"] = kind_ == ChartKind::Full ? "full" : kind_ == ChartKind::Weyl ? "weyl" : "maxwell";
  j["n"] = n_;
  j["k"] = k_;
  j["density"] = print(density_, symbols_);
  std::vector<std::string> coords;
  for (int c = 0; c < dim(); ++c) coords.push_back(symbols_.name(c));
  j["coordinates"] = coords;
  auto aliases = nlohmann::ordered_json::array();
  for (const auto& [name, e] : symbols_.entries()) {
    if (symbols_.name(e.index) == name && e.sign == 1.0) continue;
    aliases.push_back({{"name", name}, {"target", symbols_.name(e.index)}, {"sign", e.sign}});
  }
  j["aliases"] = aliases;
  return j.dump(2);
}

PataChart PataChart::from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const int n = j.at("n").get<int>();
  const int k = j.value("k", n);
  const std::string kind = j.value("kind", "full");
  const std::string dens = j.value("density", "1");
  SymbolTable xs;
  for (int a = 0; a < n; ++a) xs.add("x" + std::to_string(a + 1));
  const Expr g = pata::parse(dens.empty() ? "1" : dens, xs);
  if (kind == "full") return full(n, k, g);
  if (kind == "weyl") return weyl(n, k, g);
  if (kind == "maxwell") return maxwell(n, g);
  throw std::invalid_argument("unknown chart kind '" + kind + "'");
}

PataChart restrict_weyl(const PataChart& f) {
  if (f.kind() != ChartKind::Full) throw std::invalid_argument("restrict_weyl needs a full chart");
  PataChart w = PataChart::weyl(f.n(), f.k(), f.density());
  std::vector<PataChart::Slot> embed;
  for (int c = 0; c < f.q_dim(); ++c) embed.push_back({c, 1.0});
  embed.push_back(*f.slot(f.x_mask()));
  for (int i = 0; i < f.k(); ++i)
    for (int a = 0; a < f.n(); ++a) {
      double s = 1.0;
      const Mask I = PataChart::weyl_mask(f.n(), a, i, &s);
      embed.push_back({f.slot(I)->coord, s});
    }
  w.embed_ = std::move(embed);
  w.parent_dim_ = f.dim();
  return w;
}

std::vector<double> embed_point(const PataChart& weyl, std::span<const double> pt) {
  if (weyl.embedding().empty()) throw std::invalid_argument("chart has no embedding");
  std::vector<double> full(weyl.parent_dim(), 0.0);
  for (std::size_t c = 0; c < weyl.embedding().size(); ++c) {
    const auto& s = weyl.embedding()[c];
    full[s.coord] = s.sign * pt[c];
  }
  return full;
}

Form restrict_form(const PataChart& weyl, const Form& f) {
  const auto& emb = weyl.embedding();
  if (emb.empty() || f.dim() != weyl.parent_dim()) throw std::invalid_argument("chart mismatch");
  std::vector<int> to_weyl(f.dim(), -1);
  std::vector<double> sign(f.dim(), 0.0);
  std::vector<Expr> repl(f.dim(), Expr());
  for (std::size_t c = 0; c < emb.size(); ++c) {
    to_weyl[emb[c].coord] = static_cast<int>(c);
    sign[emb[c].coord] = emb[c].sign;
    repl[emb[c].coord] = Expr(emb[c].sign) * Expr::symbol(static_cast<int>(c));
  }
  Form out(weyl.dim(), f.degree());
  for (const auto& [m, c] : f.terms()) {
    std::vector<int> idx;
    double s = 1.0;
    bool pinned = false;
    for (int i : mask_indices(m)) {
      if (to_weyl[i] < 0) {
        pinned = true;
        break;
      }
      idx.push_back(to_weyl[i]);
      s *= sign[i];
    }
    if (pinned) continue;
    s *= sort_sign(idx);
    out.add(mask_of(idx), Expr(s) * substitute(c, repl));
  }
  return out;
}

}  // namespace pata
