#pragma once

#include <compare>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sparsefl {

enum class TrigKind { Sin = 0, Cos = 1 };

/// sin(frequency * x_var) or cos(frequency * x_var).
struct TrigAtom {
  TrigKind kind;
  int frequency;
  int var;

  auto operator<=>(const TrigAtom&) const = default;
};

/// coefficient * prod x_i^e_i * prod trig atoms * u^input_power
struct Term {
  double coefficient = 0.0;
  std::vector<int> exponents;
  std::vector<TrigAtom> trig;  // sorted; repeated atoms are kept as products
  int input_power = 0;

  int degree() const;
  bool same_signature(const Term& other) const;

  bool operator==(const Term&) const = default;
};

/// Orders two term signatures. Input-free terms come first, then
/// polynomial terms before trig-bearing ones, then ascending total degree,
/// then exponents with larger leading powers first.
std::weak_ordering compare_signature(const Term& a, const Term& b);

/// Variable names used by format/parse: one per state slot plus the input.
struct Symbols {
  std::vector<std::string> vars;
  std::string input = "u";

  static Symbols states(int n);
};

/// Immutable sum of terms over `n_states` variables and the scalar input u.
/// Always held in canonical form: sorted, like terms merged, no zero
/// coefficients.
class Expression {
 public:
  explicit Expression(int n_states = 0) : n_(n_states) {}
  Expression(int n_states, std::vector<Term> terms);

  static Expression constant(int n_states, double value);
  static Expression variable(int n_states, int index, int power = 1);
  static Expression input(int n_states, int power = 1);
  static Expression trig(int n_states, TrigKind kind, int frequency, int index);

  int n_states() const { return n_; }
  const std::vector<Term>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  bool depends_on_input() const;
  /// Removes u^q from every term; used to strip the input factor from
  /// input-channel dictionary entries.
  Expression strip_input() const;
  /// Same expression viewed as a function of `n` >= n_states() variables.
  Expression embed(int n) const;
  /// Constant value if the expression has no variable factors.
  bool is_constant() const;
  double constant_value() const;

  bool operator==(const Expression& other) const = default;

 private:
  void canonicalize();

  int n_;
  std::vector<Term> terms_;
};

class ExpressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Expression add(const Expression& a, const Expression& b);
Expression sub(const Expression& a, const Expression& b);
Expression mul(const Expression& a, const Expression& b);
Expression scale(const Expression& a, double s);

inline Expression operator+(const Expression& a, const Expression& b) { return add(a, b); }
inline Expression operator-(const Expression& a, const Expression& b) { return sub(a, b); }
inline Expression operator*(const Expression& a, const Expression& b) { return mul(a, b); }
inline Expression operator*(double s, const Expression& a) { return scale(a, s); }
inline Expression operator-(const Expression& a) { return scale(a, -1.0); }

/// Exact partial derivative with respect to state `index`.
Expression partial(const Expression& e, int index);

double evaluate(const Expression& e, std::span<const double> x, double u = 0.0);

template <typename Derived>
double evaluate(const Expression& e, const Eigen::MatrixBase<Derived>& x, double u = 0.0) {
  const Eigen::VectorXd v = x;
  return evaluate(e, std::span<const double>(v.data(), static_cast<size_t>(v.size())), u);
}

bool is_zero(const Expression& e, double tol);

/// Largest coefficient magnitude difference between two expressions,
/// matching terms by signature.
double max_coefficient_difference(const Expression& a, const Expression& b);

/// Coefficient of the term with the given signature (0 if absent).
double coefficient_of(const Expression& e, const Term& signature);

std::string format(const Expression& e);
std::string format(const Expression& e, const Symbols& symbols);

Expression parse(std::string_view text, int n_states);
Expression parse(std::string_view text, const Symbols& symbols);

}  // namespace sparsefl
