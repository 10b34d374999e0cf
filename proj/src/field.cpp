#include "catnet/field.hpp"

#include <cctype>
#include <cmath>
#include <stdexcept>

namespace catnet {

namespace {

struct ExprParser {
  const std::string& s;
  std::size_t pos = 0;
  int dim;

  using Fn = std::function<double(std::span<const double>)>;

  explicit ExprParser(const std::string& text, int d) : s(text), dim(d) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw std::invalid_argument("expression error at position " + std::to_string(pos) + ": " +
                                msg + " in '" + s + "'");
  }

  Fn parse() {
    Fn e = sum();
    skip_ws();
    if (pos != s.size()) fail("trailing input");
    return e;
  }

  Fn sum() {
    Fn left = product();
    for (;;) {
      if (eat('+')) {
        Fn right = product();
        left = [left, right](std::span<const double> x) { return left(x) + right(x); };
      } else if (eat('-')) {
        Fn right = product();
        left = [left, right](std::span<const double> x) { return left(x) - right(x); };
      } else {
        return left;
      }
    }
  }

  Fn product() {
    Fn left = power();
    for (;;) {
      if (eat('*')) {
        Fn right = power();
        left = [left, right](std::span<const double> x) { return left(x) * right(x); };
      } else if (eat('/')) {
        Fn right = power();
        left = [left, right](std::span<const double> x) { return left(x) / right(x); };
      } else {
        return left;
      }
    }
  }

  Fn power() {
    Fn base = unary();
    if (eat('^')) {
      Fn expo = power();  // right associative
      return [base, expo](std::span<const double> x) { return std::pow(base(x), expo(x)); };
    }
    return base;
  }

  Fn unary() {
    if (eat('-')) {
      Fn inner = unary();
      return [inner](std::span<const double> x) { return -inner(x); };
    }
    return primary();
  }

  Fn primary() {
    skip_ws();
    if (pos >= s.size()) fail("unexpected end");
    char c = s[pos];
    if (c == '(') {
      ++pos;
      Fn inner = sum();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = std::stod(s.substr(pos), &used);
      pos += used;
      return [v](std::span<const double>) { return v; };
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos;
      while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
        ++pos;
      std::string name = s.substr(start, pos - start);
      if (name.size() >= 2 && name[0] == 'x') {
        int idx = std::stoi(name.substr(1));
        if (idx < 1 || idx > dim) fail("coordinate " + name + " out of range");
        int j = idx - 1;
        return [j](std::span<const double> x) { return x[j]; };
      }
      if (!eat('(')) fail("expected '(' after function " + name);
      Fn arg = sum();
      if (!eat(')')) fail("expected ')'");
      if (name == "exp") return [arg](std::span<const double> x) { return std::exp(arg(x)); };
      if (name == "log") return [arg](std::span<const double> x) { return std::log(arg(x)); };
      if (name == "sqrt") return [arg](std::span<const double> x) { return std::sqrt(arg(x)); };
      if (name == "abs") return [arg](std::span<const double> x) { return std::fabs(arg(x)); };
      fail("unknown function " + name);
    }
    fail("unexpected character");
  }
};

}  // namespace

std::function<double(std::span<const double>)> parse_expression(const std::string& text,
                                                                int dim) {
  ExprParser p(text, dim);
  return p.parse();
}

ScalarField ScalarField::constant(double value) {
  ScalarField f;
  f.kind_ = Kind::Const;
  f.theta_ = value;
  f.analytic_ = true;
  f.label_ = "const(" + std::to_string(value) + ")";
  return f;
}

ScalarField ScalarField::affine(double theta, int coord) {
  ScalarField f;
  f.kind_ = Kind::Affine;
  f.theta_ = theta;
  f.coord_ = coord;
  f.analytic_ = true;
  f.label_ = "affine(" + std::to_string(theta) + " - x" + std::to_string(coord + 1) + ")";
  return f;
}

ScalarField ScalarField::expression(const std::string& text, int dim) {
  ScalarField f;
  f.kind_ = Kind::Expr;
  f.analytic_ = false;
  f.fn_ = parse_expression(text, dim);
  f.label_ = "expr(" + text + ")";
  return f;
}

ScalarField ScalarField::callable(std::function<double(std::span<const double>)> fn,
                                  std::string label) {
  ScalarField f;
  f.kind_ = Kind::Callable;
  f.analytic_ = false;
  f.fn_ = std::move(fn);
  f.label_ = std::move(label);
  return f;
}

double ScalarField::operator()(std::span<const double> x) const {
  switch (kind_) {
    case Kind::Const:
      return theta_;
    case Kind::Affine:
      return theta_ - x[coord_];
    default:
      return fn_(x);
  }
}

double ScalarField::partial(int i, std::span<const double> x) const {
  switch (kind_) {
    case Kind::Const:
      return 0.0;
    case Kind::Affine:
      return (i == coord_) ? -1.0 : 0.0;
    default:
      return fd_partial(i, x, 1);
  }
}

double ScalarField::partial2(int i, std::span<const double> x) const {
  switch (kind_) {
    case Kind::Const:
    case Kind::Affine:
      return 0.0;
    default:
      return fd_partial(i, x, 2);
  }
}

double ScalarField::fd_partial(int i, std::span<const double> x, int order) const {
  double norm = 0.0;
  for (double v : x) norm += v * v;
  double h = 1e-5 * (1.0 + std::sqrt(norm));
  std::vector<double> a(x.begin(), x.end()), b(x.begin(), x.end());
  bool interior = x[i] >= h;  // stay on the declared orthant
  if (order == 1) {
    if (interior) {
      a[i] += h;
      b[i] -= h;
      return (fn_(a) - fn_(b)) / (2.0 * h);
    }
    a[i] += h;
    return (fn_(a) - fn_(b)) / h;
  }
  if (interior) {
    a[i] += h;
    b[i] -= h;
    return (fn_(a) - 2.0 * fn_(x) + fn_(b)) / (h * h);
  }
  a[i] += h;
  b[i] += 2.0 * h;
  return (fn_(x) - 2.0 * fn_(a) + fn_(b)) / (h * h);
}

}  // namespace catnet
