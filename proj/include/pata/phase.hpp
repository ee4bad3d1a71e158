// Multimomentum phase space charts: coordinates (x, y, p_I), the canonical
// n-form θ and its differential Ω, the Weyl restriction and the
// antisymmetric-momentum chart used for gauge fields.
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pata/exterior.hpp"

namespace pata {

// Momentum coordinate c stands for p_I = sign * q_c, for every term.
struct MomentumTerm {
  Mask I;  // over q indices 0..n+k-1
  double sign;
};

enum class ChartKind { Full, Weyl, Maxwell };

class PataChart;
PataChart restrict_weyl(const PataChart& full);

class PataChart {
 public:
  // Full chart Λ^n T*(X×Y). density is an expression in the x names
  // ("x1".."xn"); empty means g = 1.
  static PataChart full(int n, int k, const std::string& density = "");
  static PataChart full(int n, int k, const Expr& density);
  // Weyl chart directly: x, y, eps, p{α}_{i}.
  static PataChart weyl(int n, int k, const Expr& density = Expr(1.0),
                        std::vector<std::string> x_names = {}, std::vector<std::string> y_names = {});
  // Fibre coordinates A_α (k = n), momenta pA{α}{β} (α<β) for the antisymmetric
  // combination p^β_{A_α} = -p^α_{A_β}.
  static PataChart maxwell(int n, const Expr& density = Expr(1.0));

  ChartKind kind() const { return kind_; }
  int n() const { return n_; }
  int k() const { return k_; }
  int q_dim() const { return n_ + k_; }
  int dim() const { return symbols_.size(); }
  int x(int alpha) const { return alpha; }     // 0-based α
  int y(int i) const { return n_ + i; }        // 0-based i
  int eps() const { return n_ + k_; }
  Mask x_mask() const { return (Mask{1} << n_) - 1; }
  Mask q_mask() const { return (Mask{1} << (n_ + k_)) - 1; }

  // Momentum coordinate index holding p_I, with its sign; nullopt if pinned.
  struct Slot {
    int coord;
    double sign;
  };
  std::optional<Slot> slot(Mask I) const;
  // p_I as an expression in chart coordinates (0 if pinned).
  Expr p(Mask I) const;
  // Weyl-type momentum p^α_i (0-based), signed alias of p_{..(n+i)..}.
  Expr p_weyl(int alpha, int i) const;
  // Index list I(α,i) and the sign s with p_I = s p^α_i.
  static Mask weyl_mask(int n, int alpha, int i, double* sign);
  // Coordinate of Weyl momentum p^α_i on a Weyl chart (-1 otherwise).
  int weyl_coord(int alpha, int i) const;
  // Coordinate of pA{α}{β}, α<β, on a Maxwell chart.
  int maxwell_coord(int alpha, int beta) const;

  const std::vector<std::vector<MomentumTerm>>& momenta() const { return momenta_; }
  const SymbolTable& symbols() const { return symbols_; }
  const Expr& density() const { return density_; }
  Expr parse(const std::string& text) const { return pata::parse(text, symbols_); }

  Form theta() const;
  Form omega() const;  // Ω = dθ
  Form volume() const;  // ω = g dx^1..n
  Form volume_alpha(int alpha) const;  // ∂_α ⨼ ω
  Form coord_form(int c) const { return dq(dim(), c); }
  Multivector coord_vector(int c) const { return dvec(dim(), c); }
  Form scalar(const Expr& f) const { return Form::scalar(dim(), f); }
  // ∂_{x1} ∧ ... ∧ ∂_{xn}
  Multivector base_plane() const;

  // Uniform points in [lo,hi]^dim with the density kept positive.
  std::vector<std::vector<double>> sample(std::mt19937_64& rng, int count, double lo = -1.0,
                                          double hi = 1.0) const;

  // {"kind","n","k","density","coordinates","aliases":[{"name","target","sign"}]}
  std::string to_json() const;
  static PataChart from_json(const std::string& text);

  // Weyl-chart embedding into the full chart it was restricted from:
  // full coordinate and sign per Weyl coordinate.
  const std::vector<Slot>& embedding() const { return embed_; }
  int parent_dim() const { return parent_dim_; }

 private:
  friend PataChart restrict_weyl(const PataChart& full);
  void add_q_names(std::vector<std::string> x_names, std::vector<std::string> y_names);
  void check_density(const Expr& g);

  ChartKind kind_ = ChartKind::Full;
  int n_ = 0, k_ = 0;
  SymbolTable symbols_;
  Expr density_{1.0};
  std::vector<std::vector<MomentumTerm>> momenta_;  // indexed by coord - eps()
  std::vector<Slot> embed_;
  int parent_dim_ = 0;
};

// Weyl view of a full chart; forms and points move through embed/restrict.
PataChart restrict_weyl(const PataChart& full);
std::vector<double> embed_point(const PataChart& weyl, std::span<const double> pt);
// Pull a full-chart form back to the Weyl chart (pinned momenta set to 0).
Form restrict_form(const PataChart& weyl, const Form& full_form);

// C(n, r)
int binomial(int n, int r);

}  // namespace pata
