#ifndef CATNET_FIELD_HPP
#define CATNET_FIELD_HPP

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace catnet {

// Scalar coefficient field on the nonnegative orthant.  Constant and affine
// (theta - x_i) families carry analytic derivatives; parsed expressions fall
// back to central finite differences with step 1e-5 (1 + |x|).
class ScalarField {
 public:
  static ScalarField constant(double value);
  static ScalarField affine(double theta, int coord);  // theta - x[coord]
  static ScalarField expression(const std::string& text, int dim);
  static ScalarField callable(std::function<double(std::span<const double>)> f,
                              std::string label = "callable");

  double operator()(std::span<const double> x) const;
  double partial(int i, std::span<const double> x) const;
  double partial2(int i, std::span<const double> x) const;
  bool has_analytic_derivatives() const { return analytic_; }
  const std::string& label() const { return label_; }
  bool is_constant() const { return kind_ == Kind::Const; }
  double constant_value() const { return theta_; }

 private:
  enum class Kind { Const, Affine, Expr, Callable };
  Kind kind_ = Kind::Const;
  double theta_ = 0.0;
  int coord_ = -1;
  bool analytic_ = true;
  std::string label_;
  std::function<double(std::span<const double>)> fn_;
  double fd_partial(int i, std::span<const double> x, int order) const;
};

// Minimal arithmetic expression over x1..xd: numbers, + - * / ^, parentheses,
// exp/log/sqrt/abs.  Used by the "expr" field kind of the JSON config.
std::function<double(std::span<const double>)> parse_expression(const std::string& text, int dim);

}  // namespace catnet

#endif  // CATNET_FIELD_HPP
