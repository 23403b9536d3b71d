#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace otpw {

/// Arithmetic expression in the coordinates x1..x3 (aliases x, y, z).
/// Grammar: + - * / ^, unary minus, parentheses, numbers, and the
/// functions sin cos exp log sqrt abs. Example: "x1^2 - 0.5*x2".
class Expression {
 public:
  /// Throws Error{ConfigInvalid} on a syntax error.
  static Expression parse(std::string_view text);

  double operator()(std::span<const double> x) const;

  /// Highest coordinate index referenced, 1-based; 0 for constants.
  std::size_t max_variable() const noexcept { return max_variable_; }
  const std::string& text() const noexcept { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
  std::size_t max_variable_ = 0;
};

struct Monomial {
  double coefficient = 0.0;
  std::vector<int> exponents;
};

/// Sum of monomials in the local coordinates u_k = (x_k - center_k) * scale_k.
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(std::vector<Monomial> terms, std::vector<double> center = {},
                      std::vector<double> scale = {});

  double operator()(std::span<const double> x) const;
  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  int degree() const;
  std::string to_string() const;

 private:
  std::vector<Monomial> terms_;
  std::vector<double> center_;
  std::vector<double> scale_;
};

/// Seeded random polynomial of total degree <= `degree` in `dim` variables,
/// always containing a nonzero linear term so the field is non-constant.
/// Coordinates are expected in [lower, upper]; the polynomial is built in
/// coordinates rescaled to [-1, 1] so coefficients stay O(1) on any domain.
Polynomial random_polynomial(std::size_t dim, int degree, std::uint64_t seed,
                             std::span<const double> lower, std::span<const double> upper);

}  // namespace otpw
