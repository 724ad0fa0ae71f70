#include "sparsefl/expression.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sparsefl {

int Term::degree() const { return std::accumulate(exponents.begin(), exponents.end(), 0); }

bool Term::same_signature(const Term& other) const {
  return input_power == other.input_power && exponents == other.exponents && trig == other.trig;
}

std::weak_ordering compare_signature(const Term& a, const Term& b) {
  if (auto c = a.input_power <=> b.input_power; c != 0) return c;
  if (auto c = a.trig.size() <=> b.trig.size(); c != 0) return c;
  if (auto c = a.degree() <=> b.degree(); c != 0) return c;
  // larger leading exponents first: x1^2 < x1*x2 < x2^2
  if (auto c = b.exponents <=> a.exponents; c != 0) return c;
  return a.trig <=> b.trig;
}

Symbols Symbols::states(int n) {
  Symbols s;
  for (int i = 0; i < n; ++i) s.vars.push_back("x" + std::to_string(i + 1));
  return s;
}

namespace {

Term unit_term(int n) {
  Term t;
  t.coefficient = 1.0;
  t.exponents.assign(static_cast<size_t>(n), 0);
  return t;
}

void check_same_dim(const Expression& a, const Expression& b) {
  if (a.n_states() != b.n_states()) {
    throw ExpressionError("dimension mismatch: " + std::to_string(a.n_states()) + " vs " +
                          std::to_string(b.n_states()));
  }
}

double int_pow(double base, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= base;
  return r;
}

}  // namespace

Expression::Expression(int n_states, std::vector<Term> terms) : n_(n_states), terms_(std::move(terms)) {
  for (auto& t : terms_) {
    if (t.exponents.empty()) t.exponents.assign(static_cast<size_t>(n_), 0);
    if (static_cast<int>(t.exponents.size()) != n_) throw ExpressionError("term exponent count != n_states");
    for (int e : t.exponents) {
      if (e < 0) throw ExpressionError("negative exponent");
    }
    for (const auto& a : t.trig) {
      if (a.frequency < 1) throw ExpressionError("trig frequency must be >= 1");
      if (a.var < 0 || a.var >= n_) throw ExpressionError("trig variable out of range");
    }
    if (t.input_power < 0) throw ExpressionError("negative input power");
  }
  canonicalize();
}

void Expression::canonicalize() {
  for (auto& t : terms_) std::sort(t.trig.begin(), t.trig.end());
  std::stable_sort(terms_.begin(), terms_.end(),
                   [](const Term& a, const Term& b) { return compare_signature(a, b) < 0; });
  std::vector<Term> merged;
  merged.reserve(terms_.size());
  for (auto& t : terms_) {
    if (!merged.empty() && merged.back().same_signature(t)) {
      merged.back().coefficient += t.coefficient;
    } else {
      merged.push_back(std::move(t));
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coefficient == 0.0; });
  terms_ = std::move(merged);
}

Expression Expression::constant(int n_states, double value) {
  Term t = unit_term(n_states);
  t.coefficient = value;
  return Expression(n_states, {t});
}

Expression Expression::variable(int n_states, int index, int power) {
  if (index < 0 || index >= n_states) throw ExpressionError("variable index out of range");
  Term t = unit_term(n_states);
  t.exponents[static_cast<size_t>(index)] = power;
  return Expression(n_states, {t});
}

Expression Expression::input(int n_states, int power) {
  Term t = unit_term(n_states);
  t.input_power = power;
  return Expression(n_states, {t});
}

Expression Expression::trig(int n_states, TrigKind kind, int frequency, int index) {
  Term t = unit_term(n_states);
  t.trig.push_back({kind, frequency, index});
  return Expression(n_states, {t});
}

bool Expression::depends_on_input() const {
  return std::any_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.input_power > 0; });
}

Expression Expression::strip_input() const {
  std::vector<Term> out = terms_;
  for (auto& t : out) t.input_power = 0;
  return Expression(n_, std::move(out));
}

Expression Expression::embed(int n) const {
  if (n < n_) throw ExpressionError("embed: target dimension smaller than source");
  std::vector<Term> out = terms_;
  for (auto& t : out) t.exponents.resize(static_cast<size_t>(n), 0);
  return Expression(n, std::move(out));
}

bool Expression::is_constant() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const Term& t) { return t.degree() == 0 && t.trig.empty() && t.input_power == 0; });
}

double Expression::constant_value() const {
  if (!is_constant()) throw ExpressionError("expression is not constant");
  return terms_.empty() ? 0.0 : terms_.front().coefficient;
}

Expression add(const Expression& a, const Expression& b) {
  check_same_dim(a, b);
  std::vector<Term> terms = a.terms();
  terms.insert(terms.end(), b.terms().begin(), b.terms().end());
  return Expression(a.n_states(), std::move(terms));
}

Expression sub(const Expression& a, const Expression& b) { return add(a, scale(b, -1.0)); }

Expression scale(const Expression& a, double s) {
  std::vector<Term> terms = a.terms();
  for (auto& t : terms) t.coefficient *= s;
  return Expression(a.n_states(), std::move(terms));
}

Expression mul(const Expression& a, const Expression& b) {
  check_same_dim(a, b);
  std::vector<Term> terms;
  terms.reserve(a.terms().size() * b.terms().size());
  for (const auto& ta : a.terms()) {
    for (const auto& tb : b.terms()) {
      Term t;
      t.coefficient = ta.coefficient * tb.coefficient;
      t.exponents.resize(ta.exponents.size());
      for (size_t i = 0; i < ta.exponents.size(); ++i) t.exponents[i] = ta.exponents[i] + tb.exponents[i];
      t.trig = ta.trig;
      t.trig.insert(t.trig.end(), tb.trig.begin(), tb.trig.end());
      t.input_power = ta.input_power + tb.input_power;
      terms.push_back(std::move(t));
    }
  }
  return Expression(a.n_states(), std::move(terms));
}

Expression partial(const Expression& e, int index) {
  if (index < 0 || index >= e.n_states()) throw ExpressionError("partial: state index out of range");
  const auto i = static_cast<size_t>(index);
  std::vector<Term> out;
  for (const auto& t : e.terms()) {
    if (t.exponents[i] > 0) {
      Term d = t;
      d.coefficient *= t.exponents[i];
      d.exponents[i] -= 1;
      out.push_back(std::move(d));
    }
    for (size_t a = 0; a < t.trig.size(); ++a) {
      const TrigAtom& atom = t.trig[a];
      if (atom.var != index) continue;
      Term d = t;
      if (atom.kind == TrigKind::Sin) {
        d.coefficient *= atom.frequency;
        d.trig[a].kind = TrigKind::Cos;
      } else {
        d.coefficient *= -atom.frequency;
        d.trig[a].kind = TrigKind::Sin;
      }
      out.push_back(std::move(d));
    }
  }
  return Expression(e.n_states(), std::move(out));
}

double evaluate(const Expression& e, std::span<const double> x, double u) {
  if (static_cast<int>(x.size()) != e.n_states()) {
    throw ExpressionError("evaluate: point has " + std::to_string(x.size()) + " components, expected " +
                          std::to_string(e.n_states()));
  }
  if (!std::isfinite(u) || !std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
    throw ExpressionError("evaluate: non-finite input");
  }
  double sum = 0.0;
  for (const auto& t : e.terms()) {
    double v = t.coefficient;
    for (size_t i = 0; i < t.exponents.size(); ++i) v *= int_pow(x[i], t.exponents[i]);
    for (const auto& a : t.trig) {
      const double arg = a.frequency * x[static_cast<size_t>(a.var)];
      v *= a.kind == TrigKind::Sin ? std::sin(arg) : std::cos(arg);
    }
    v *= int_pow(u, t.input_power);
    sum += v;
  }
  return sum;
}

bool is_zero(const Expression& e, double tol) {
  if (tol < 0.0) throw ExpressionError("is_zero: negative tolerance");
  return std::all_of(e.terms().begin(), e.terms().end(),
                     [tol](const Term& t) { return std::abs(t.coefficient) <= tol; });
}

double max_coefficient_difference(const Expression& a, const Expression& b) {
  const Expression d = sub(a, b);
  double m = 0.0;
  for (const auto& t : d.terms()) m = std::max(m, std::abs(t.coefficient));
  return m;
}

double coefficient_of(const Expression& e, const Term& signature) {
  for (const auto& t : e.terms()) {
    if (t.same_signature(signature)) return t.coefficient;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// formatting

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_factors(const Term& t, const Symbols& sym) {
  std::vector<std::string> factors;
  for (size_t i = 0; i < t.exponents.size(); ++i) {
    if (t.exponents[i] == 0) continue;
    std::string f = sym.vars[i];
    if (t.exponents[i] > 1) f += "^" + std::to_string(t.exponents[i]);
    factors.push_back(std::move(f));
  }
  for (const auto& a : t.trig) {
    std::string f = a.kind == TrigKind::Sin ? "sin(" : "cos(";
    if (a.frequency != 1) f += std::to_string(a.frequency) + "*";
    f += sym.vars[static_cast<size_t>(a.var)] + ")";
    factors.push_back(std::move(f));
  }
  if (t.input_power > 0) {
    std::string f = sym.input;
    if (t.input_power > 1) f += "^" + std::to_string(t.input_power);
    factors.push_back(std::move(f));
  }
  std::string out;
  for (size_t i = 0; i < factors.size(); ++i) {
    if (i) out += "*";
    out += factors[i];
  }
  return out;
}

}  // namespace

std::string format(const Expression& e) { return format(e, Symbols::states(e.n_states())); }

std::string format(const Expression& e, const Symbols& symbols) {
  if (static_cast<int>(symbols.vars.size()) < e.n_states()) throw ExpressionError("format: too few symbol names");
  if (e.empty()) return "0";
  std::string out;
  bool first = true;
  for (const auto& t : e.terms()) {
    const bool negative = std::signbit(t.coefficient);
    const double mag = std::abs(t.coefficient);
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    const std::string factors = format_factors(t, symbols);
    if (factors.empty()) {
      out += shortest(mag);
    } else if (mag == 1.0) {
      out += factors;
    } else {
      out += shortest(mag) + "*" + factors;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// parsing

namespace {

class Parser {
 public:
  Parser(std::string_view text, const Symbols& sym) : s_(text), sym_(sym), n_(static_cast<int>(sym.vars.size())) {}

  Expression run() {
    std::vector<Term> terms;
    skip_ws();
    if (at_end()) fail("empty expression");
    bool first = true;
    while (!at_end()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = get() == '-' ? -1.0 : 1.0;
        skip_ws();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      Term t = parse_term();
      t.coefficient *= sign;
      terms.push_back(std::move(t));
      first = false;
      skip_ws();
    }
    return Expression(n_, std::move(terms));
  }

 private:
  Term parse_term() {
    Term t = unit_term(n_);
    parse_factor(t);
    skip_ws();
    while (!at_end() && peek() == '*') {
      get();
      skip_ws();
      parse_factor(t);
      skip_ws();
    }
    return t;
  }

  void parse_factor(Term& t) {
    if (at_end()) fail("unexpected end of expression");
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      t.coefficient *= parse_number();
      return;
    }
    const std::string name = parse_name();
    if (name == "sin" || name == "cos") {
      skip_ws();
      expect('(');
      skip_ws();
      int freq = 1;
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        freq = parse_int();
        skip_ws();
        expect('*');
        skip_ws();
      }
      const std::string var = parse_name();
      const int idx = lookup(var);
      if (idx < 0) fail("trig argument must be a state variable, got '" + var + "'");
      skip_ws();
      expect(')');
      if (freq < 1) fail("trig frequency must be >= 1");
      t.trig.push_back({name == "sin" ? TrigKind::Sin : TrigKind::Cos, freq, idx});
      return;
    }
    int power = 1;
    skip_ws();
    if (!at_end() && peek() == '^') {
      get();
      skip_ws();
      power = parse_int();
    }
    if (name == sym_.input) {
      t.input_power += power;
      return;
    }
    const int idx = lookup(name);
    if (idx < 0) fail("unknown symbol '" + name + "'");
    t.exponents[static_cast<size_t>(idx)] += power;
  }

  int lookup(const std::string& name) const {
    for (int i = 0; i < n_; ++i) {
      if (sym_.vars[static_cast<size_t>(i)] == name) return i;
    }
    return -1;
  }

  double parse_number() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0.0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) fail("malformed number");
    pos_ += static_cast<size_t>(res.ptr - begin);
    return v;
  }

  int parse_int() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    int v = 0;
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc()) fail("expected integer");
    pos_ += static_cast<size_t>(res.ptr - begin);
    return v;
  }

  std::string parse_name() {
    const size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) ++pos_;
    if (start == pos_) fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool at_end() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }
  char get() { return s_[pos_++]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("parse error at position " + std::to_string(pos_) + " in \"" + std::string(s_) +
                          "\": " + msg);
  }

  std::string_view s_;
  const Symbols& sym_;
  int n_;
  size_t pos_ = 0;
};

}  // namespace

Expression parse(std::string_view text, int n_states) { return parse(text, Symbols::states(n_states)); }

Expression parse(std::string_view text, const Symbols& symbols) { return Parser(text, symbols).run(); }

}  // namespace sparsefl
