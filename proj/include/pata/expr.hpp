// Scalar expressions over chart coordinates: parsing, exact partial
// derivatives and pointwise evaluation.
#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace pata {

// Bit c is set when coordinate c may occur. Charts are capped at 64 coordinates.
using CoordMask = std::uint64_t;
inline constexpr int kMaxCoords = 64;

class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownSymbol : public ParseError {
 public:
  UnknownSymbol(const std::string& name, std::size_t offset)
      : ParseError("unknown symbol '" + name + "'", offset), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class JetOrderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A coefficient with no closed form. Evaluates to a value and a gradient
// with respect to every chart coordinate.
class OpaqueJet {
 public:
  virtual ~OpaqueJet() = default;
  virtual std::string name() const = 0;
  // Differentiation order that can be honoured (>= 1).
  virtual int order() const { return 1; }
  // Coordinates the value depends on.
  virtual CoordMask support() const = 0;
  virtual double value(std::span<const double> pt) const = 0;
  // grad.size() equals pt.size().
  virtual void gradient(std::span<const double> pt, std::span<double> grad) const = 0;
  // Only called when order() >= 2.
  virtual double second(std::span<const double> pt, int a, int b) const;
};

// Largest relative deviation of the jet gradient from central differences
// over the given points, relative to max(1, |g|).
double jet_gradient_error(const OpaqueJet& jet, const std::vector<std::vector<double>>& points,
                          double step = 1e-6);

enum class Op : std::uint8_t {
  Const, Sym, Add, Sub, Mul, Div, Neg, Pow, Sin, Cos, Exp, Log, Sqrt, Jet
};

struct Node;

class Expr {
 public:
  Expr();  // zero
  Expr(double c);  // NOLINT(google-explicit-constructor)
  static Expr symbol(int coord);
  static Expr jet(std::shared_ptr<const OpaqueJet> j);

  Op op() const;
  bool is_const() const;
  bool is_zero() const;
  bool is_one() const;
  double const_value() const;  // only for constants
  CoordMask deps() const;
  int symbol_index() const;  // only for symbols
  std::size_t size() const;  // node count

  const Node& node() const { return *n_; }
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

 private:
  std::shared_ptr<const Node> n_;
};

struct Node {
  Op op;
  double value = 0.0;   // Const
  int index = -1;       // Sym; exponent for Pow
  CoordMask deps = 0;
  std::size_t size = 1;
  // Null unless the operator uses them; avoids recursing into Expr().
  Expr a{std::shared_ptr<const Node>{}}, b{std::shared_ptr<const Node>{}};
  std::shared_ptr<const OpaqueJet> jet;
  int d1 = -1, d2 = -1;  // Jet: derivative directions already applied
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr& operator+=(Expr& a, const Expr& b);
Expr& operator-=(Expr& a, const Expr& b);
Expr& operator*=(Expr& a, const Expr& b);
Expr pow(const Expr& a, int k);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

Expr differentiate(const Expr& e, int coord);
double evaluate(const Expr& e, std::span<const double> pt);
// Replaces every symbol c by repl[c]. Jets are kept only when every
// coordinate in their support maps to itself.
Expr substitute(const Expr& e, const std::vector<Expr>& repl);

// Names for coordinates. A name may alias a coordinate with a sign, so that
// antisymmetric momentum labels resolve to the stored component.
class SymbolTable {
 public:
  int add(const std::string& name);
  void alias(const std::string& name, int index, double sign = 1.0);
  struct Entry {
    int index;
    double sign;
  };
  std::optional<Entry> find(std::string_view name) const;
  const std::string& name(int index) const { return names_.at(index); }
  int size() const { return static_cast<int>(names_.size()); }
  const std::map<std::string, Entry, std::less<>>& entries() const { return lookup_; }

 private:
  std::vector<std::string> names_;
  std::map<std::string, Entry, std::less<>> lookup_;
};

Expr parse(std::string_view text, const SymbolTable& table);
std::string print(const Expr& e, const SymbolTable& table);

}  // namespace pata
