// Sparse graded tensors over a single chart: differential forms and
// multivectors with Expr coefficients.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "pata/expr.hpp"

namespace pata {

using Mask = CoordMask;

// Orders masks by their increasing index lists, lexicographically.
struct MaskLess {
  bool operator()(Mask a, Mask b) const;
};

std::vector<int> mask_indices(Mask m);
Mask mask_of(std::span<const int> idx);
int popcount(Mask m);
// Sign of the permutation sorting the concatenation (indices of a, indices
// of b); 0 if they overlap.
int shuffle_sign(Mask a, Mask b);
// Sorts idx in place and returns the permutation sign, or 0 on a repeat.
int sort_sign(std::vector<int>& idx);

enum class Kind { Form, Vector };

template <Kind K>
class Graded {
 public:
  using Terms = std::map<Mask, Expr, MaskLess>;

  Graded() = default;
  Graded(int dim, int degree);

  // Single component; idx in any order, the permutation sign is applied.
  static Graded basis(int dim, std::vector<int> idx, const Expr& coeff = Expr(1.0));
  static Graded scalar(int dim, const Expr& f);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  const Terms& terms() const { return terms_; }
  Expr coeff(Mask m) const;
  // Signed component for an index list in any order.
  Expr component(std::vector<int> idx) const;
  void add(Mask m, const Expr& c);
  bool empty() const { return terms_.empty(); }

  Graded& operator+=(const Graded& o);
  Graded& operator-=(const Graded& o);

 private:
  int dim_ = 0;
  int degree_ = 0;
  Terms terms_;
};

using Form = Graded<Kind::Form>;
using Multivector = Graded<Kind::Vector>;

template <Kind K>
Graded<K> operator+(Graded<K> a, const Graded<K>& b) {
  return a += b;
}
template <Kind K>
Graded<K> operator-(Graded<K> a, const Graded<K>& b) {
  return a -= b;
}
template <Kind K>
Graded<K> operator*(const Expr& f, const Graded<K>& a);
template <Kind K>
Graded<K> operator-(const Graded<K>& a) {
  return Expr(-1.0) * a;
}

Form wedge(const Form& a, const Form& b);
Multivector wedge(const Multivector& a, const Multivector& b);
// X fills the leading slots of a: (X⨼a)(V...) = a(X_1..X_r, V...).
Form contract(const Multivector& x, const Form& a);
Form d(const Form& a);
Form lie(const Multivector& xi, const Form& a);
// Pull back along a graph: coordinate c becomes graph[c], an expression in
// the first n coordinates. The result only has dq^0..dq^{n-1} components.
Form pullback(const Form& a, const std::vector<Expr>& graph, int n);
Multivector lie_bracket(const Multivector& a, const Multivector& b);
// Coordinate 1-form dq^c and coordinate vector ∂/∂q^c.
Form dq(int dim, int c);
Multivector dvec(int dim, int c);

// Numeric snapshot at one point.
std::map<Mask, double, MaskLess> evaluate(const Form& a, std::span<const double> pt);
std::map<Mask, double, MaskLess> evaluate(const Multivector& a, std::span<const double> pt);
// Largest |coefficient| over the given points.
double max_abs(const Form& a, const std::vector<std::vector<double>>& pts);
double max_abs(const Multivector& a, const std::vector<std::vector<double>>& pts);
// Pointwise value of a 0-form (0 if absent).
double scalar_value(const Form& a, std::span<const double> pt);

// "(i,j): expr" lines in canonical order; names from the table when given.
std::string debug_string(const Form& a, const SymbolTable* names = nullptr);

}  // namespace pata
