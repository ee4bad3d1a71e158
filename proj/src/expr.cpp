#include "pata/expr.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace pata {

double OpaqueJet::second(std::span<const double>, int, int) const {
  throw JetOrderError(name() + ": second derivatives not available");
}

double jet_gradient_error(const OpaqueJet& jet, const std::vector<std::vector<double>>& points,
                          double step) {
  double worst = 0.0;
  for (const auto& p : points) {
    std::vector<double> grad(p.size());
    jet.gradient(p, grad);
    std::vector<double> q = p;
    for (std::size_t c = 0; c < p.size(); ++c) {
      if (!(jet.support() >> c & 1U)) continue;
      const double h = step * std::max(1.0, std::abs(p[c]));
      q[c] = p[c] + h;
      const double up = jet.value(q);
      q[c] = p[c] - h;
      const double dn = jet.value(q);
      q[c] = p[c];
      const double fd = (up - dn) / (2 * h);
      worst = std::max(worst, std::abs(fd - grad[c]) / std::max(1.0, std::abs(grad[c])));
    }
  }
  return worst;
}

namespace {

Expr make(Op op, Expr a, Expr b = Expr()) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->deps = a.deps() | b.deps();
  n->size = 1 + a.size() + (op == Op::Add || op == Op::Sub || op == Op::Mul || op == Op::Div
                                ? b.size()
                                : 0);
  n->a = std::move(a);
  n->b = std::move(b);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr make_const(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

const Expr& zero_expr() {
  static const Expr z = make_const(0.0);
  return z;
}

Expr make_jet(std::shared_ptr<const OpaqueJet> j, int d1, int d2) {
  auto n = std::make_shared<Node>();
  n->op = Op::Jet;
  n->deps = j->support();
  n->jet = std::move(j);
  n->d1 = d1;
  n->d2 = d2;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

}  // namespace

Expr::Expr() : n_(zero_expr().n_) {}
Expr::Expr(double c) : n_(c == 0.0 ? zero_expr().n_ : make_const(c).n_) {}

Expr Expr::symbol(int coord) {
  if (coord < 0 || coord >= kMaxCoords) throw std::out_of_range("coordinate index out of range");
  auto n = std::make_shared<Node>();
  n->op = Op::Sym;
  n->index = coord;
  n->deps = CoordMask{1} << coord;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::jet(std::shared_ptr<const OpaqueJet> j) { return make_jet(std::move(j), -1, -1); }

Op Expr::op() const { return n_->op; }
bool Expr::is_const() const { return n_->op == Op::Const; }
bool Expr::is_zero() const { return is_const() && n_->value == 0.0; }
bool Expr::is_one() const { return is_const() && n_->value == 1.0; }
double Expr::const_value() const { return n_->value; }
CoordMask Expr::deps() const { return n_->deps; }
int Expr::symbol_index() const { return n_->index; }
std::size_t Expr::size() const { return n_->size; }

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.is_const() && b.is_const()) return Expr(a.const_value() + b.const_value());
  return make(Op::Add, a, b);
}

Expr operator-(const Expr& a, const Expr& b) {
  if (b.is_zero()) return a;
  if (a.is_zero()) return -b;
  if (a.is_const() && b.is_const()) return Expr(a.const_value() - b.const_value());
  return make(Op::Sub, a, b);
}

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (a.is_one()) return b;
  if (b.is_one()) return a;
  if (a.is_const() && b.is_const()) return Expr(a.const_value() * b.const_value());
  if (a.is_const() && a.const_value() == -1.0) return -b;
  if (b.is_const() && b.const_value() == -1.0) return -a;
  return make(Op::Mul, a, b);
}

Expr operator/(const Expr& a, const Expr& b) {
  if (b.is_one()) return a;
  if (a.is_zero() && !b.is_zero()) return Expr();
  if (a.is_const() && b.is_const() && b.const_value() != 0.0)
    return Expr(a.const_value() / b.const_value());
  return make(Op::Div, a, b);
}

Expr operator-(const Expr& a) {
  if (a.is_const()) return Expr(-a.const_value());
  if (a.op() == Op::Neg) return a.node().a;
  return make(Op::Neg, a);
}

Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

Expr pow(const Expr& a, int k) {
  if (k == 0) return Expr(1.0);
  if (k == 1) return a;
  if (a.is_const() && (a.const_value() != 0.0 || k > 0)) return Expr(std::pow(a.const_value(), k));
  auto n = std::make_shared<Node>();
  n->op = Op::Pow;
  n->index = k;
  n->deps = a.deps();
  n->size = 1 + a.size();
  n->a = a;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr sin(const Expr& a) {
  if (a.is_const()) return Expr(std::sin(a.const_value()));
  return make(Op::Sin, a);
}
Expr cos(const Expr& a) {
  if (a.is_const()) return Expr(std::cos(a.const_value()));
  return make(Op::Cos, a);
}
Expr exp(const Expr& a) {
  if (a.is_const()) return Expr(std::exp(a.const_value()));
  return make(Op::Exp, a);
}
Expr log(const Expr& a) {
  if (a.is_const() && a.const_value() > 0) return Expr(std::log(a.const_value()));
  return make(Op::Log, a);
}
Expr sqrt(const Expr& a) {
  if (a.is_const() && a.const_value() >= 0) return Expr(std::sqrt(a.const_value()));
  return make(Op::Sqrt, a);
}

Expr differentiate(const Expr& e, int c) {
  if (!(e.deps() >> c & 1U)) return Expr();
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const: return Expr();
    case Op::Sym: return Expr(n.index == c ? 1.0 : 0.0);
    case Op::Add: return differentiate(n.a, c) + differentiate(n.b, c);
    case Op::Sub: return differentiate(n.a, c) - differentiate(n.b, c);
    case Op::Mul: return differentiate(n.a, c) * n.b + n.a * differentiate(n.b, c);
    case Op::Div: {
      Expr da = differentiate(n.a, c);
      Expr db = differentiate(n.b, c);
      return da / n.b - n.a * db / pow(n.b, 2);
    }
    case Op::Neg: return -differentiate(n.a, c);
    case Op::Pow: return Expr(static_cast<double>(n.index)) * pow(n.a, n.index - 1) * differentiate(n.a, c);
    case Op::Sin: return cos(n.a) * differentiate(n.a, c);
    case Op::Cos: return -(sin(n.a) * differentiate(n.a, c));
    case Op::Exp: return e * differentiate(n.a, c);
    case Op::Log: return differentiate(n.a, c) / n.a;
    case Op::Sqrt: return differentiate(n.a, c) / (Expr(2.0) * e);
    case Op::Jet: {
      if (n.d1 < 0) return make_jet(n.jet, c, -1);
      if (n.d2 < 0 && n.jet->order() >= 2) return make_jet(n.jet, n.d1, c);
      throw JetOrderError(n.jet->name() + ": differentiation order exceeds declared jet order");
    }
  }
  return Expr();
}

namespace {

double checked(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string("non-finite value in ") + what);
  return v;
}

}  // namespace

double evaluate(const Expr& e, std::span<const double> pt) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Sym:
      if (n.index >= static_cast<int>(pt.size())) throw std::out_of_range("point lacks coordinate");
      return pt[n.index];
    case Op::Add: return checked(evaluate(n.a, pt) + evaluate(n.b, pt), "sum");
    case Op::Sub: return checked(evaluate(n.a, pt) - evaluate(n.b, pt), "difference");
    case Op::Mul: return checked(evaluate(n.a, pt) * evaluate(n.b, pt), "product");
    case Op::Div: {
      const double d = evaluate(n.b, pt);
      if (d == 0.0) throw DomainError("division by zero");
      return checked(evaluate(n.a, pt) / d, "quotient");
    }
    case Op::Neg: return -evaluate(n.a, pt);
    case Op::Pow: {
      const double b = evaluate(n.a, pt);
      if (b == 0.0 && n.index < 0) throw DomainError("zero raised to a negative power");
      return checked(std::pow(b, n.index), "power");
    }
    case Op::Sin: return std::sin(evaluate(n.a, pt));
    case Op::Cos: return std::cos(evaluate(n.a, pt));
    case Op::Exp: return checked(std::exp(evaluate(n.a, pt)), "exp");
    case Op::Log: {
      const double v = evaluate(n.a, pt);
      if (!(v > 0.0)) throw DomainError("log of non-positive value");
      return std::log(v);
    }
    case Op::Sqrt: {
      const double v = evaluate(n.a, pt);
      if (v < 0.0) throw DomainError("sqrt of negative value");
      return std::sqrt(v);
    }
    case Op::Jet: {
      if (n.d1 < 0) return checked(n.jet->value(pt), "jet value");
      if (n.d2 >= 0) return checked(n.jet->second(pt, n.d1, n.d2), "jet second derivative");
      std::vector<double> g(pt.size());
      n.jet->gradient(pt, g);
      return checked(g[n.d1], "jet gradient");
    }
  }
  return 0.0;
}

Expr substitute(const Expr& e, const std::vector<Expr>& repl) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const: return e;
    case Op::Sym: return repl.at(n.index);
    case Op::Add: return substitute(n.a, repl) + substitute(n.b, repl);
    case Op::Sub: return substitute(n.a, repl) - substitute(n.b, repl);
    case Op::Mul: return substitute(n.a, repl) * substitute(n.b, repl);
    case Op::Div: return substitute(n.a, repl) / substitute(n.b, repl);
    case Op::Neg: return -substitute(n.a, repl);
    case Op::Pow: return pow(substitute(n.a, repl), n.index);
    case Op::Sin: return sin(substitute(n.a, repl));
    case Op::Cos: return cos(substitute(n.a, repl));
    case Op::Exp: return exp(substitute(n.a, repl));
    case Op::Log: return log(substitute(n.a, repl));
    case Op::Sqrt: return sqrt(substitute(n.a, repl));
    case Op::Jet: {
      for (CoordMask m = n.deps; m; m &= m - 1) {
        const int c = std::countr_zero(m);
        const Expr& r = repl.at(c);
        if (r.op() != Op::Sym || r.symbol_index() != c)
          throw std::invalid_argument(n.jet->name() + ": cannot substitute into an opaque jet");
      }
      return e;
    }
  }
  return e;
}

// ---------------------------------------------------------------- symbols

namespace {

bool valid_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  for (char ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_') return false;
  return true;
}

bool is_primitive(std::string_view s) {
  return s == "sin" || s == "cos" || s == "exp" || s == "log" || s == "sqrt";
}

}  // namespace

int SymbolTable::add(const std::string& name) {
  if (!valid_name(name)) throw std::invalid_argument("invalid symbol name '" + name + "'");
  if (is_primitive(name)) throw std::invalid_argument("symbol name shadows a primitive: " + name);
  if (lookup_.count(name)) throw std::invalid_argument("duplicate symbol '" + name + "'");
  const int idx = static_cast<int>(names_.size());
  if (idx >= kMaxCoords) throw std::length_error("too many coordinates");
  names_.push_back(name);
  lookup_[name] = {idx, 1.0};
  return idx;
}

void SymbolTable::alias(const std::string& name, int index, double sign) {
  if (!valid_name(name)) throw std::invalid_argument("invalid symbol name '" + name + "'");
  if (is_primitive(name)) throw std::invalid_argument("symbol name shadows a primitive: " + name);
  if (index < 0 || index >= size()) throw std::out_of_range("alias target out of range");
  auto it = lookup_.find(name);
  if (it != lookup_.end()) {
    if (it->second.index == index && it->second.sign == sign) return;
    throw std::invalid_argument("conflicting alias '" + name + "'");
  }
  lookup_[name] = {index, sign};
}

std::optional<SymbolTable::Entry> SymbolTable::find(std::string_view name) const {
  auto it = lookup_.find(name);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------- parser

namespace {

class Parser {
 public:
  Parser(std::string_view s, const SymbolTable& t) : s_(s), t_(t) {}

  Expr run() {
    Expr e = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected character");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    // Offsets are reported 1-based, so end of input is size()+1.
    throw ParseError(what, pos_ + 1);
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = factor();
    for (;;) {
      if (accept('*')) e = e * factor();
      else if (accept('/')) e = e / factor();
      else return e;
    }
  }

  Expr factor() {
    Expr b = base();
    if (accept('^')) {
      skip();
      const std::size_t start = pos_;
      bool neg = false;
      if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
        neg = s_[pos_] == '-';
        ++pos_;
      }
      const std::size_t digits = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (pos_ == digits) {
        pos_ = start;
        fail("expected integer exponent");
      }
      const int k = std::atoi(std::string(s_.substr(digits, pos_ - digits)).c_str());
      b = pow(b, neg ? -k : k);
    }
    return b;
  }

  Expr base() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (c == '-') {
      ++pos_;
      return -base();
    }
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      if (is_primitive(name)) {
        expect('(');
        Expr arg = expr();
        expect(')');
        if (name == "sin") return sin(arg);
        if (name == "cos") return cos(arg);
        if (name == "exp") return exp(arg);
        if (name == "log") return log(arg);
        return sqrt(arg);
      }
      auto entry = t_.find(name);
      if (!entry) throw UnknownSymbol(std::string(name), start + 1);
      Expr s = Expr::symbol(entry->index);
      return entry->sign == 1.0 ? s : Expr(entry->sign) * s;
    }
    fail("unexpected character");
  }

  Expr number() {
    const char* begin = s_.data() + pos_;
    std::string buf(s_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    const std::size_t used = static_cast<std::size_t>(end - buf.c_str());
    if (used == 0) fail("malformed number");
    (void)begin;
    pos_ += used;
    return Expr(v);
  }

  std::string_view s_;
  const SymbolTable& t_;
  std::size_t pos_ = 0;
};

// Printing categories, matching the grammar non-terminals.
enum Cat { kSum = 0, kTerm = 1, kFactor = 2, kBase = 3 };

Cat category(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return kSum;
    case Op::Mul:
    case Op::Div: return kTerm;
    case Op::Pow: return kFactor;
    default: return kBase;
  }
}

std::string fmt_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const Expr& e, const SymbolTable& t, Cat need, std::string& out);

void emit_wrapped(const Expr& e, const SymbolTable& t, Cat need, std::string& out) {
  if (category(e) >= need) {
    emit(e, t, need, out);
  } else {
    out += '(';
    emit(e, t, kSum, out);
    out += ')';
  }
}

void emit(const Expr& e, const SymbolTable& t, Cat, std::string& out) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const: out += fmt_number(n.value); return;
    case Op::Sym: out += t.name(n.index); return;
    case Op::Add:
    case Op::Sub:
      emit_wrapped(n.a, t, kSum, out);
      out += n.op == Op::Add ? " + " : " - ";
      emit_wrapped(n.b, t, kTerm, out);
      return;
    case Op::Mul:
    case Op::Div:
      emit_wrapped(n.a, t, kTerm, out);
      out += n.op == Op::Mul ? "*" : "/";
      emit_wrapped(n.b, t, kFactor, out);
      return;
    case Op::Neg:
      out += '-';
      emit_wrapped(n.a, t, kBase, out);
      return;
    case Op::Pow:
      emit_wrapped(n.a, t, kBase, out);
      out += '^';
      out += std::to_string(n.index);
      return;
    case Op::Sin: out += "sin("; break;
    case Op::Cos: out += "cos("; break;
    case Op::Exp: out += "exp("; break;
    case Op::Log: out += "log("; break;
    case Op::Sqrt: out += "sqrt("; break;
    case Op::Jet:
      out += n.jet->name();
      if (n.d1 >= 0) out += "_d" + t.name(n.d1);
      if (n.d2 >= 0) out += "_d" + t.name(n.d2);
      return;
  }
  emit(n.a, t, kSum, out);
  out += ')';
}

}  // namespace

Expr parse(std::string_view text, const SymbolTable& table) { return Parser(text, table).run(); }

std::string print(const Expr& e, const SymbolTable& table) {
  std::string out;
  emit(e, table, kSum, out);
  return out;
}

}  // namespace pata
