#include "otpw/expr.hpp"

#include <cctype>
#include <cmath>
#include <functional>

#include "otpw/error.hpp"
#include "otpw/format.hpp"
#include "otpw/rng.hpp"

namespace otpw {

struct Expression::Node {
  enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call } kind;
  double value = 0.0;
  std::size_t variable = 0;
  std::function<double(double)> fn;
  std::shared_ptr<const Node> lhs, rhs;

  double eval(std::span<const double> x) const {
    switch (kind) {
      case Kind::Number: return value;
      case Kind::Variable: return variable < x.size() ? x[variable] : 0.0;
      case Kind::Negate: return -lhs->eval(x);
      case Kind::Add: return lhs->eval(x) + rhs->eval(x);
      case Kind::Sub: return lhs->eval(x) - rhs->eval(x);
      case Kind::Mul: return lhs->eval(x) * rhs->eval(x);
      case Kind::Div: return lhs->eval(x) / rhs->eval(x);
      case Kind::Pow: {
        const double base = lhs->eval(x);
        const double e = rhs->eval(x);
        if (e == std::round(e) && std::abs(e) <= 64) {
          // Integer powers by repeated multiplication keep polynomials exact-ish.
          double r = 1.0;
          for (int k = 0; k < std::abs(static_cast<int>(e)); ++k) r *= base;
          return e < 0 ? 1.0 / r : r;
        }
        return std::pow(base, e);
      }
      case Kind::Call: return fn(lhs->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Kind = Expression::Node::Kind;

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse() {
    NodePtr n = parse_sum();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return n;
  }

  std::size_t max_variable = 0;

 private:
  [[noreturn]] void fail(const std::string& why) const {
    throw Error(ErrorCode::ConfigInvalid,
                "expression '" + std::string(text_) + "' at offset " + std::to_string(pos_) + ": " + why);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr binary(Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->lhs = std::move(a);
    n->rhs = std::move(b);
    return n;
  }

  NodePtr parse_sum() {
    NodePtr n = parse_product();
    for (;;) {
      if (accept('+')) {
        n = binary(Kind::Add, n, parse_product());
      } else if (accept('-')) {
        n = binary(Kind::Sub, n, parse_product());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_product() {
    NodePtr n = parse_unary();
    for (;;) {
      if (accept('*')) {
        n = binary(Kind::Mul, n, parse_unary());
      } else if (accept('/')) {
        n = binary(Kind::Div, n, parse_unary());
      } else {
        return n;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) {
      auto n = std::make_shared<Expression::Node>();
      n->kind = Kind::Negate;
      n->lhs = parse_unary();
      return n;
    }
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  // Right-associative; binds tighter than unary minus on its left.
  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return binary(Kind::Pow, base, parse_unary());
    return base;
  }

  NodePtr parse_primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    if (accept('(')) {
      NodePtr n = parse_sum();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
      ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      if (look < text_.size() && (text_[look] == '+' || text_[look] == '-')) ++look;
      if (look < text_.size() && std::isdigit(static_cast<unsigned char>(text_[look]))) {
        pos_ = look;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      }
    }
    double v = 0.0;
    if (!parse_double(text_.substr(start, pos_ - start), v)) fail("malformed number");
    auto n = std::make_shared<Expression::Node>();
    n->kind = Kind::Number;
    n->value = v;
    return n;
  }

  NodePtr parse_identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view id = text_.substr(start, pos_ - start);
    auto n = std::make_shared<Expression::Node>();
    std::size_t var = 0;
    if (id == "x" || id == "x1") {
      var = 1;
    } else if (id == "y" || id == "x2") {
      var = 2;
    } else if (id == "z" || id == "x3") {
      var = 3;
    }
    if (var) {
      n->kind = Kind::Variable;
      n->variable = var - 1;
      max_variable = std::max(max_variable, var);
      return n;
    }
    if (id == "pi") {
      n->kind = Kind::Number;
      n->value = 3.14159265358979323846;
      return n;
    }
    static const std::pair<std::string_view, double (*)(double)> functions[] = {
        {"sin", [](double v) { return std::sin(v); }},   {"cos", [](double v) { return std::cos(v); }},
        {"exp", [](double v) { return std::exp(v); }},   {"log", [](double v) { return std::log(v); }},
        {"sqrt", [](double v) { return std::sqrt(v); }}, {"abs", [](double v) { return std::abs(v); }},
    };
    for (const auto& [name, f] : functions) {
      if (id == name) {
        if (!accept('(')) fail("expected '(' after function name");
        n->kind = Kind::Call;
        n->fn = f;
        n->lhs = parse_sum();
        if (!accept(')')) fail("expected ')'");
        return n;
      }
    }
    fail("unknown identifier '" + std::string(id) + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Parser parser(text);
  Expression e;
  e.root_ = parser.parse();
  e.text_ = std::string(text);
  e.max_variable_ = parser.max_variable;
  return e;
}

double Expression::operator()(std::span<const double> x) const { return root_->eval(x); }

Polynomial::Polynomial(std::vector<Monomial> terms, std::vector<double> center, std::vector<double> scale)
    : terms_(std::move(terms)), center_(std::move(center)), scale_(std::move(scale)) {}

double Polynomial::operator()(std::span<const double> x) const {
  double total = 0.0;
  for (const auto& m : terms_) {
    double v = m.coefficient;
    for (std::size_t k = 0; k < m.exponents.size(); ++k) {
      double u = k < x.size() ? x[k] : 0.0;
      if (k < center_.size()) u -= center_[k];
      if (k < scale_.size()) u *= scale_[k];
      for (int e = 0; e < m.exponents[k]; ++e) v *= u;
    }
    total += v;
  }
  return total;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& m : terms_) {
    int s = 0;
    for (int e : m.exponents) s += e;
    d = std::max(d, s);
  }
  return d;
}

std::string Polynomial::to_string() const {
  std::string out;
  for (const auto& m : terms_) {
    if (!out.empty()) out += " + ";
    out += format_double(m.coefficient);
    for (std::size_t k = 0; k < m.exponents.size(); ++k) {
      if (m.exponents[k] == 0) continue;
      out += "*u" + std::to_string(k + 1);
      if (m.exponents[k] > 1) out += "^" + std::to_string(m.exponents[k]);
    }
  }
  return out.empty() ? "0" : out;
}

Polynomial random_polynomial(std::size_t dim, int degree, std::uint64_t seed, std::span<const double> lower,
                             std::span<const double> upper) {
  if (degree < 1) throw Error(ErrorCode::InvalidArgument, "random polynomial needs degree >= 1");
  Rng rng(seed);
  std::vector<Monomial> terms;
  // Enumerate exponent tuples with total degree <= degree.
  std::vector<int> e(dim, 0);
  std::function<void(std::size_t, int)> visit = [&](std::size_t k, int budget) {
    if (k == dim) {
      int total = 0;
      for (int v : e) total += v;
      double c = rng.uniform(-1.0, 1.0) / static_cast<double>(1 + total);
      if (total == 1 && std::abs(c) < 0.25) c = c < 0 ? -0.25 : 0.25;
      terms.push_back({c, e});
      return;
    }
    for (int d = 0; d <= budget; ++d) {
      e[k] = d;
      visit(k + 1, budget - d);
    }
    e[k] = 0;
  };
  visit(0, degree);
  std::vector<double> center(dim), scale(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    center[k] = 0.5 * (lower[k] + upper[k]);
    scale[k] = 2.0 / (upper[k] - lower[k]);
  }
  return Polynomial(std::move(terms), std::move(center), std::move(scale));
}

}  // namespace otpw
