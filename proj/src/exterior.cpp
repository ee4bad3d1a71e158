#include "pata/exterior.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace pata {

bool MaskLess::operator()(Mask a, Mask b) const {
  const int pa = std::popcount(a), pb = std::popcount(b);
  if (pa != pb) return pa < pb;
  const Mask diff = a ^ b;
  if (!diff) return false;
  return (a & (diff & -diff)) != 0;
}

std::vector<int> mask_indices(Mask m) {
  std::vector<int> out;
  for (; m; m &= m - 1) out.push_back(std::countr_zero(m));
  return out;
}

Mask mask_of(std::span<const int> idx) {
  Mask m = 0;
  for (int i : idx) m |= Mask{1} << i;
  return m;
}

int popcount(Mask m) { return std::popcount(m); }

int shuffle_sign(Mask a, Mask b) {
  if (a & b) return 0;
  int inversions = 0;
  for (Mask m = b; m; m &= m - 1) {
    const int j = std::countr_zero(m);
    inversions += std::popcount(a >> j >> 1);
  }
  return inversions % 2 ? -1 : 1;
}

int sort_sign(std::vector<int>& idx) {
  int sign = 1;
  for (std::size_t i = 1; i < idx.size(); ++i)
    for (std::size_t j = i; j > 0 && idx[j - 1] >= idx[j]; --j) {
      if (idx[j - 1] == idx[j]) return 0;
      std::swap(idx[j - 1], idx[j]);
      sign = -sign;
    }
  return sign;
}

template <Kind K>
Graded<K>::Graded(int dim, int degree) : dim_(dim), degree_(degree) {
  if (dim < 0 || dim > kMaxCoords) throw std::invalid_argument("chart dimension out of range");
  if (degree < 0) throw std::invalid_argument("negative degree");
}

template <Kind K>
Graded<K> Graded<K>::basis(int dim, std::vector<int> idx, const Expr& coeff) {
  Graded g(dim, static_cast<int>(idx.size()));
  for (int i : idx)
    if (i < 0 || i >= dim) throw std::out_of_range("index outside chart");
  const int s = sort_sign(idx);
  if (s != 0) g.add(mask_of(idx), s > 0 ? coeff : -coeff);
  return g;
}

template <Kind K>
Graded<K> Graded<K>::scalar(int dim, const Expr& f) {
  Graded g(dim, 0);
  g.add(0, f);
  return g;
}

template <Kind K>
Expr Graded<K>::coeff(Mask m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? Expr() : it->second;
}

template <Kind K>
Expr Graded<K>::component(std::vector<int> idx) const {
  const int s = sort_sign(idx);
  if (s == 0) return Expr();
  Expr c = coeff(mask_of(idx));
  return s > 0 ? c : -c;
}

template <Kind K>
void Graded<K>::add(Mask m, const Expr& c) {
  if (std::popcount(m) != degree_) throw std::invalid_argument("component degree mismatch");
  if (dim_ < kMaxCoords && (m >> dim_)) throw std::out_of_range("component outside chart");
  if (c.is_zero()) return;
  auto it = terms_.find(m);
  if (it == terms_.end()) {
    terms_.emplace(m, c);
    return;
  }
  it->second = it->second + c;
  if (it->second.is_zero()) terms_.erase(it);
}

namespace {

template <class G>
void check_compatible(const G& a, const G& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("chart mismatch");
}

}  // namespace

template <Kind K>
Graded<K>& Graded<K>::operator+=(const Graded& o) {
  if (terms_.empty() && dim_ == 0) {
    *this = o;
    return *this;
  }
  if (o.terms_.empty() && o.dim_ == 0) return *this;
  check_compatible(*this, o);
  if (o.degree_ != degree_ && !o.terms_.empty()) throw std::invalid_argument("degree mismatch");
  for (const auto& [m, c] : o.terms_) add(m, c);
  return *this;
}

template <Kind K>
Graded<K>& Graded<K>::operator-=(const Graded& o) {
  return *this += (-o);
}

template <Kind K>
Graded<K> operator*(const Expr& f, const Graded<K>& a) {
  Graded<K> out(a.dim(), a.degree());
  if (f.is_zero()) return out;
  for (const auto& [m, c] : a.terms()) out.add(m, f * c);
  return out;
}

template class Graded<Kind::Form>;
template class Graded<Kind::Vector>;
template Form operator*(const Expr&, const Form&);
template Multivector operator*(const Expr&, const Multivector&);

namespace {

template <Kind K>
Graded<K> wedge_impl(const Graded<K>& a, const Graded<K>& b) {
  check_compatible(a, b);
  Graded<K> out(a.dim(), a.degree() + b.degree());
  if (out.degree() > a.dim()) return out;
  for (const auto& [ma, ca] : a.terms())
    for (const auto& [mb, cb] : b.terms()) {
      const int s = shuffle_sign(ma, mb);
      if (s == 0) continue;
      out.add(ma | mb, s > 0 ? ca * cb : -(ca * cb));
    }
  return out;
}

}  // namespace

Form wedge(const Form& a, const Form& b) { return wedge_impl(a, b); }
Multivector wedge(const Multivector& a, const Multivector& b) { return wedge_impl(a, b); }

Form contract(const Multivector& x, const Form& a) {
  if (x.dim() != a.dim()) throw std::invalid_argument("chart mismatch");
  if (x.degree() > a.degree()) return Form(a.dim(), 0);
  Form out(a.dim(), a.degree() - x.degree());
  for (const auto& [mj, cj] : x.terms())
    for (const auto& [mi, ci] : a.terms()) {
      if ((mj & mi) != mj) continue;
      const int s = shuffle_sign(mj, mi & ~mj);
      out.add(mi & ~mj, s > 0 ? cj * ci : -(cj * ci));
    }
  return out;
}

Form d(const Form& a) {
  Form out(a.dim(), a.degree() + 1);
  if (out.degree() > a.dim()) return out;
  for (const auto& [m, c] : a.terms()) {
    for (Mask deps = c.deps() & ~m; deps; deps &= deps - 1) {
      const int k = std::countr_zero(deps);
      if (k >= a.dim()) break;
      const Mask bit = Mask{1} << k;
      Expr dc = differentiate(c, k);
      const int s = shuffle_sign(bit, m);
      out.add(m | bit, s > 0 ? dc : -dc);
    }
  }
  return out;
}

Form lie(const Multivector& xi, const Form& a) {
  if (xi.degree() != 1) throw std::invalid_argument("Lie derivative needs a vector field");
  Form out = contract(xi, d(a));
  if (a.degree() > 0) out += d(contract(xi, a));
  return out;
}

Form pullback(const Form& a, const std::vector<Expr>& graph, int n) {
  if (static_cast<int>(graph.size()) != a.dim()) throw std::invalid_argument("graph size differs from form dimension");
  std::vector<Form> dg;
  for (const Expr& e : graph) {
    Form f(a.dim(), 1);
    for (int b = 0; b < n; ++b) f.add(Mask{1} << b, differentiate(e, b));
    dg.push_back(std::move(f));
  }
  Form out(a.dim(), a.degree());
  for (const auto& [m, c] : a.terms()) {
    Form term = Form::scalar(a.dim(), substitute(c, graph));
    for (int idx : mask_indices(m)) term = wedge(term, dg[idx]);
    out += term;
  }
  return out;
}

Multivector lie_bracket(const Multivector& a, const Multivector& b) {
  if (a.degree() != 1 || b.degree() != 1) throw std::invalid_argument("bracket of vector fields only");
  check_compatible(a, b);
  Multivector out(a.dim(), 1);
  for (const auto& [ma, ca] : a.terms()) {
    const int ia = std::countr_zero(ma);
    for (const auto& [mb, cb] : b.terms()) {
      out.add(mb, ca * differentiate(cb, ia));
    }
  }
  for (const auto& [mb, cb] : b.terms()) {
    const int ib = std::countr_zero(mb);
    for (const auto& [ma, ca] : a.terms()) {
      out.add(ma, -(cb * differentiate(ca, ib)));
    }
  }
  return out;
}

Form dq(int dim, int c) { return Form::basis(dim, {c}); }
Multivector dvec(int dim, int c) { return Multivector::basis(dim, {c}); }

namespace {

template <Kind K>
std::map<Mask, double, MaskLess> eval_impl(const Graded<K>& a, std::span<const double> pt) {
  std::map<Mask, double, MaskLess> out;
  for (const auto& [m, c] : a.terms()) out[m] = evaluate(c, pt);
  return out;
}

template <Kind K>
double max_abs_impl(const Graded<K>& a, const std::vector<std::vector<double>>& pts) {
  double worst = 0.0;
  for (const auto& p : pts)
    for (const auto& [m, c] : a.terms()) worst = std::max(worst, std::abs(evaluate(c, p)));
  return worst;
}

}  // namespace

std::map<Mask, double, MaskLess> evaluate(const Form& a, std::span<const double> pt) {
  return eval_impl(a, pt);
}
std::map<Mask, double, MaskLess> evaluate(const Multivector& a, std::span<const double> pt) {
  return eval_impl(a, pt);
}
double max_abs(const Form& a, const std::vector<std::vector<double>>& pts) {
  return max_abs_impl(a, pts);
}
double max_abs(const Multivector& a, const std::vector<std::vector<double>>& pts) {
  return max_abs_impl(a, pts);
}

double scalar_value(const Form& a, std::span<const double> pt) {
  if (a.degree() != 0) throw std::invalid_argument("not a 0-form");
  return evaluate(a.coeff(0), pt);
}

std::string debug_string(const Form& a, const SymbolTable* names) {
  std::ostringstream os;
  SymbolTable fallback;
  if (!names) {
    for (int i = 0; i < a.dim(); ++i) fallback.add("q" + std::to_string(i));
    names = &fallback;
  }
  for (const auto& [m, c] : a.terms()) {
    os << '(';
    bool first = true;
    for (int i : mask_indices(m)) {
      if (!first) os << ',';
      os << i;
      first = false;
    }
    os << "): " << print(c, *names) << '\n';
  }
  return os.str();
}

}  // namespace pata
