#pragma once

#include <cmath>
#include <cstdio>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gfp {

/// Immutable symbolic expression over variables z1..zn, closed under
/// evaluation and partial differentiation. Node kinds: constant, variable,
/// n-ary sum and product, nonnegative integer power, exp, sin, cos.
/// Evaluation is total on all real inputs (no division, no logarithms).
///
/// Serialized form is prefix notation: (* 0.5 (^ z1 2)), (sin (+ z1 z2)).
class Expr {
 public:
  enum class Kind { Constant, Variable, Sum, Product, Power, Exp, Sin, Cos };

  Expr() : Expr(make(Kind::Constant, 0.0, 0, {})) {}

  static Expr constant(double v) { return Expr(make(Kind::Constant, v, 0, {})); }

  static Expr variable(int index) {
    if (index < 0) throw std::invalid_argument("Expr::variable: negative index");
    return Expr(make(Kind::Variable, 0.0, index, {}));
  }

  static Expr sum(std::vector<Expr> terms) {
    std::vector<Expr> flat;
    double c = 0.0;
    for (auto& t : terms) {
      if (t.kind() == Kind::Sum) {
        for (const auto& u : t.node_->children) {
          if (u.is_constant()) c += u.constant_value();
          else flat.push_back(u);
        }
      } else if (t.is_constant()) {
        c += t.constant_value();
      } else {
        flat.push_back(std::move(t));
      }
    }
    if (c != 0.0) flat.push_back(constant(c));
    if (flat.empty()) return constant(0.0);
    if (flat.size() == 1) return flat[0];
    return Expr(make(Kind::Sum, 0.0, 0, std::move(flat)));
  }

  static Expr product(std::vector<Expr> factors) {
    std::vector<Expr> flat;
    double c = 1.0;
    for (auto& f : factors) {
      if (f.kind() == Kind::Product) {
        for (const auto& u : f.node_->children) {
          if (u.is_constant()) c *= u.constant_value();
          else flat.push_back(u);
        }
      } else if (f.is_constant()) {
        c *= f.constant_value();
      } else {
        flat.push_back(std::move(f));
      }
    }
    if (c == 0.0) return constant(0.0);
    if (c != 1.0) flat.insert(flat.begin(), constant(c));
    if (flat.empty()) return constant(1.0);
    if (flat.size() == 1) return flat[0];
    return Expr(make(Kind::Product, 0.0, 0, std::move(flat)));
  }

  static Expr pow(const Expr& base, int exponent) {
    if (exponent < 0) throw std::invalid_argument("Expr::pow: exponent must be >= 0");
    if (exponent == 0) return constant(1.0);
    if (exponent == 1) return base;
    if (base.is_constant()) return constant(std::pow(base.constant_value(), exponent));
    return Expr(make(Kind::Power, 0.0, exponent, {base}));
  }

  static Expr exp(const Expr& u) {
    if (u.is_constant()) return constant(std::exp(u.constant_value()));
    return Expr(make(Kind::Exp, 0.0, 0, {u}));
  }

  static Expr sin(const Expr& u) {
    if (u.is_constant()) return constant(std::sin(u.constant_value()));
    return Expr(make(Kind::Sin, 0.0, 0, {u}));
  }

  static Expr cos(const Expr& u) {
    if (u.is_constant()) return constant(std::cos(u.constant_value()));
    return Expr(make(Kind::Cos, 0.0, 0, {u}));
  }

  Kind kind() const { return node_->kind; }
  bool is_constant() const { return node_->kind == Kind::Constant; }

  double constant_value() const {
    if (!is_constant()) throw std::logic_error("Expr: not a constant");
    return node_->value;
  }

  double eval(std::span<const double> z) const {
    const Node& n = *node_;
    switch (n.kind) {
      case Kind::Constant: return n.value;
      case Kind::Variable:
        if (static_cast<std::size_t>(n.index) >= z.size()) {
          throw std::invalid_argument("Expr::eval: variable z" + std::to_string(n.index + 1) +
                                      " beyond the provided arguments");
        }
        return z[static_cast<std::size_t>(n.index)];
      case Kind::Sum: {
        double s = 0.0;
        for (const auto& c : n.children) s += c.eval(z);
        return s;
      }
      case Kind::Product: {
        double p = 1.0;
        for (const auto& c : n.children) p *= c.eval(z);
        return p;
      }
      case Kind::Power: return std::pow(n.children[0].eval(z), n.index);
      case Kind::Exp: return std::exp(n.children[0].eval(z));
      case Kind::Sin: return std::sin(n.children[0].eval(z));
      case Kind::Cos: return std::cos(n.children[0].eval(z));
    }
    throw std::logic_error("Expr::eval: unreachable");
  }

  Expr derivative(int var) const {
    const Node& n = *node_;
    switch (n.kind) {
      case Kind::Constant: return constant(0.0);
      case Kind::Variable: return constant(n.index == var ? 1.0 : 0.0);
      case Kind::Sum: {
        std::vector<Expr> d;
        d.reserve(n.children.size());
        for (const auto& c : n.children) d.push_back(c.derivative(var));
        return sum(std::move(d));
      }
      case Kind::Product: {
        std::vector<Expr> terms;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
          std::vector<Expr> factors = n.children;
          factors[i] = n.children[i].derivative(var);
          terms.push_back(product(std::move(factors)));
        }
        return sum(std::move(terms));
      }
      case Kind::Power:
        return product({constant(static_cast<double>(n.index)), pow(n.children[0], n.index - 1),
                        n.children[0].derivative(var)});
      case Kind::Exp:
        return product({exp(n.children[0]), n.children[0].derivative(var)});
      case Kind::Sin:
        return product({cos(n.children[0]), n.children[0].derivative(var)});
      case Kind::Cos:
        return product({constant(-1.0), sin(n.children[0]), n.children[0].derivative(var)});
    }
    throw std::logic_error("Expr::derivative: unreachable");
  }

  /// One past the largest variable index referenced (0 for constants).
  int variable_count() const {
    const Node& n = *node_;
    if (n.kind == Kind::Variable) return n.index + 1;
    int m = 0;
    for (const auto& c : n.children) m = std::max(m, c.variable_count());
    return m;
  }

  std::string to_prefix() const {
    const Node& n = *node_;
    switch (n.kind) {
      case Kind::Constant: {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", n.value);
        return buf;
      }
      case Kind::Variable: return "z" + std::to_string(n.index + 1);
      case Kind::Sum: return nary("+", n.children);
      case Kind::Product: return nary("*", n.children);
      case Kind::Power:
        return "(^ " + n.children[0].to_prefix() + " " + std::to_string(n.index) + ")";
      case Kind::Exp: return "(exp " + n.children[0].to_prefix() + ")";
      case Kind::Sin: return "(sin " + n.children[0].to_prefix() + ")";
      case Kind::Cos: return "(cos " + n.children[0].to_prefix() + ")";
    }
    throw std::logic_error("Expr::to_prefix: unreachable");
  }

  static Expr parse_prefix(std::string_view text) {
    Parser p{text, 0};
    Expr e = parse_one(p);
    p.skip_space();
    if (p.pos != text.size()) {
      throw std::invalid_argument("Expr::parse_prefix: trailing input after expression");
    }
    return e;
  }

  friend Expr operator+(const Expr& a, const Expr& b) { return sum({a, b}); }
  friend Expr operator*(const Expr& a, const Expr& b) { return product({a, b}); }
  friend Expr operator-(const Expr& a, const Expr& b) {
    return sum({a, product({constant(-1.0), b})});
  }

 private:
  struct Node {
    Kind kind;
    double value;
    int index;
    std::vector<Expr> children;
  };

  struct Parser {
    std::string_view text;
    std::size_t pos;

    void skip_space() {
      while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }
    bool eof() {
      skip_space();
      return pos >= text.size();
    }
    char peek() {
      skip_space();
      return text[pos];
    }
    std::string_view atom() {
      skip_space();
      std::size_t start = pos;
      while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
             text[pos] != '(' && text[pos] != ')') {
        ++pos;
      }
      if (start == pos) throw std::invalid_argument("Expr::parse_prefix: expected token");
      return text.substr(start, pos - start);
    }
  };

  static Expr make_atom(std::string_view tok) {
    if (tok.size() >= 2 && tok[0] == 'z') {
      int idx = 0;
      for (std::size_t i = 1; i < tok.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(tok[i]))) {
          throw std::invalid_argument("Expr::parse_prefix: bad variable '" + std::string(tok) + "'");
        }
        idx = idx * 10 + (tok[i] - '0');
      }
      if (idx < 1) throw std::invalid_argument("Expr::parse_prefix: variables are z1, z2, ...");
      return variable(idx - 1);
    }
    std::string s(tok);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) {
      throw std::invalid_argument("Expr::parse_prefix: bad token '" + s + "'");
    }
    return constant(v);
  }

  static Expr parse_one(Parser& p) {
    if (p.eof()) throw std::invalid_argument("Expr::parse_prefix: unexpected end of input");
    if (p.peek() != '(') return make_atom(p.atom());
    ++p.pos;  // consume '('
    const std::string op(p.atom());
    std::vector<Expr> args;
    while (true) {
      if (p.eof()) throw std::invalid_argument("Expr::parse_prefix: missing ')'");
      if (p.peek() == ')') {
        ++p.pos;
        break;
      }
      args.push_back(parse_one(p));
    }
    if (op == "+") return sum(std::move(args));
    if (op == "*") return product(std::move(args));
    if (op == "^") {
      if (args.size() != 2 || !args[1].is_constant()) {
        throw std::invalid_argument("Expr::parse_prefix: ^ takes (base, integer exponent)");
      }
      const double ev = args[1].constant_value();
      const int k = static_cast<int>(std::lround(ev));
      if (k < 0 || std::abs(ev - k) > 1e-9) {
        throw std::invalid_argument("Expr::parse_prefix: exponent must be a nonnegative integer");
      }
      return pow(args[0], k);
    }
    if (args.size() != 1) {
      throw std::invalid_argument("Expr::parse_prefix: '" + op + "' takes one argument");
    }
    if (op == "exp") return exp(args[0]);
    if (op == "sin") return sin(args[0]);
    if (op == "cos") return cos(args[0]);
    throw std::invalid_argument("Expr::parse_prefix: unknown operator '" + op + "'");
  }

  static std::string nary(const char* op, const std::vector<Expr>& children) {
    std::string s = "(";
    s += op;
    for (const auto& c : children) {
      s += ' ';
      s += c.to_prefix();
    }
    s += ')';
    return s;
  }

  static std::shared_ptr<const Node> make(Kind k, double v, int idx, std::vector<Expr> ch) {
    return std::make_shared<const Node>(Node{k, v, idx, std::move(ch)});
  }

  explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

}  // namespace gfp
