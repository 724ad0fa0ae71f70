#include "sparsefl/control.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace sparsefl {

double ReferenceSignal::derivative(int order, double t) const {
  if (order < 0) throw std::invalid_argument("reference derivative order must be >= 0");
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Constant:
      return order == 0 ? amplitude : 0.0;
    case Kind::Sinusoid: {
      const double arg = frequency * t + phase;
      const double mag = amplitude * std::pow(frequency, order);
      switch (order % 4) {
        case 0: return mag * std::sin(arg);
        case 1: return mag * std::cos(arg);
        case 2: return -mag * std::sin(arg);
        default: return -mag * std::cos(arg);
      }
    }
  }
  return 0.0;
}

Eigen::VectorXd ReferenceSignal::derivatives(int order, double t) const {
  Eigen::VectorXd out(order + 1);
  for (int k = 0; k <= order; ++k) out(k) = derivative(k, t);
  return out;
}

std::vector<double> gains_from_poles(const std::vector<std::complex<double>>& poles,
                                     std::vector<std::string>* warnings) {
  if (poles.empty()) throw ControlError("no poles given");
  std::vector<bool> used(poles.size(), false);
  for (size_t i = 0; i < poles.size(); ++i) {
    if (!std::isfinite(poles[i].real()) || !std::isfinite(poles[i].imag())) throw ControlError("non-finite pole");
    if (used[i] || std::abs(poles[i].imag()) <= 1e-12) continue;
    bool matched = false;
    for (size_t j = i + 1; j < poles.size() && !matched; ++j) {
      const double tol = 1e-9 * std::max(1.0, std::abs(poles[i]));
      if (!used[j] && std::abs(poles[j] - std::conj(poles[i])) <= tol) {
        used[i] = used[j] = true;
        matched = true;
      }
    }
    if (!matched) throw ControlError("poles are not closed under conjugation: " + format_complex(poles[i]));
  }
  for (const auto& p : poles) {
    if (p.real() >= 0.0 && warnings) warnings->push_back("pole " + format_complex(p) + " is not in the open left half-plane");
  }

  // coefficients of prod(s - p), lowest degree first
  std::vector<std::complex<double>> poly{1.0};
  for (const auto& p : poles) {
    std::vector<std::complex<double>> next(poly.size() + 1, 0.0);
    for (size_t k = 0; k < poly.size(); ++k) {
      next[k + 1] += poly[k];
      next[k] -= p * poly[k];
    }
    poly = std::move(next);
  }
  std::vector<double> gains;
  for (size_t k = 0; k + 1 < poly.size(); ++k) gains.push_back(poly[k].real());
  return gains;
}

namespace {

double parse_real(std::string_view s, const std::string& context) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("cannot parse number '" + std::string(s) + "' in " + context);
  }
  return v;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::stringstream ss(text);
  while (std::getline(ss, item, ',')) {
    std::string clean;
    for (char ch : item) {
      if (!std::isspace(static_cast<unsigned char>(ch))) clean += ch;
    }
    if (clean.empty()) throw std::invalid_argument("empty entry in list '" + text + "'");
    out.push_back(clean);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

std::complex<double> parse_complex(const std::string& s) {
  if (s.back() != 'i' && s.back() != 'j') return {parse_real(s, "pole"), 0.0};
  const std::string body = s.substr(0, s.size() - 1);
  // split at the last sign that is not a leading sign or an exponent sign
  size_t split = std::string::npos;
  for (size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_of = [](std::string part) {
    if (part.empty() || part == "+") return 1.0;
    if (part == "-") return -1.0;
    return parse_real(part, "pole");
  };
  if (split == std::string::npos) return {0.0, imag_of(body)};
  return {parse_real(body.substr(0, split), "pole"), imag_of(body.substr(split))};
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::complex<double>> parse_poles(const std::string& text) {
  std::vector<std::complex<double>> out;
  for (const auto& item : split_list(text)) out.push_back(parse_complex(item));
  return out;
}

std::vector<double> parse_gains(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(parse_real(item, "gains"));
  return out;
}

std::string format_complex(std::complex<double> z) {
  if (z.imag() == 0.0) return shortest(z.real());
  std::string s = shortest(z.real());
  s += z.imag() < 0.0 ? "-" : "+";
  s += shortest(std::abs(z.imag())) + "i";
  return s;
}

std::string reference_name(int order) { return std::string(static_cast<size_t>(order), 'd') + "r"; }

Symbols ControllerSpec::symbols() const {
  Symbols s = Symbols::states(n);
  for (int k = 0; k <= r; ++k) s.vars.push_back(reference_name(k));
  return s;
}

std::string ControllerSpec::display() const {
  std::string s = format(-alpha);
  for (int i = 0; i < r; ++i) {
    const double a = gains[static_cast<size_t>(i)];
    if (a == 0.0) continue;
    s += (a < 0 ? " - " : " + ") + shortest(std::abs(a)) + "*(" + reference_name(i) + " - (" +
         format(output_chain[static_cast<size_t>(i)]) + "))";
  }
  s += " + " + reference_name(r);
  if (beta_is_constant && beta.constant_value() == 1.0) return s;
  return "(" + s + ") / (" + format(beta) + ")";
}

ControllerSpec synthesize(const LieChain& chain, int n_states, const std::vector<double>& gains) {
  if (!chain.relative_degree) throw RelativeDegreeError("relative degree undefined");
  const int r = *chain.relative_degree;
  if (r != n_states) {
    throw RelativeDegreeError("internal dynamics present: relative degree " + std::to_string(r) + " < " +
                              std::to_string(n_states) + " states");
  }
  if (static_cast<int>(gains.size()) != r) {
    throw ControlError("expected " + std::to_string(r) + " gains, got " + std::to_string(gains.size()));
  }
  for (double a : gains) {
    if (!std::isfinite(a)) throw ControlError("non-finite gain");
  }

  ControllerSpec spec;
  spec.r = r;
  spec.n = n_states;
  spec.alpha = chain.lf_powers.at(static_cast<size_t>(r));
  spec.beta = chain.decoupling();
  if (spec.beta.empty()) throw ControlError("decoupling term L_g L_f^(r-1) c is zero");
  spec.output_chain.assign(chain.lf_powers.begin(), chain.lf_powers.begin() + r);
  spec.gains = gains;

  const int ext = n_states + r + 1;
  auto ref = [&](int k) { return Expression::variable(ext, n_states + k); };
  Expression num = -spec.alpha.embed(ext);
  for (int i = 0; i < r; ++i) {
    num = num + gains[static_cast<size_t>(i)] * (ref(i) - spec.output_chain[static_cast<size_t>(i)].embed(ext));
  }
  num = num + ref(r);
  spec.numerator = num;
  spec.beta_is_constant = spec.beta.is_constant();
  if (spec.beta_is_constant) {
    spec.law = scale(num, 1.0 / spec.beta.constant_value());
  } else {
    spec.law = num;
  }
  return spec;
}

ControllerSpec synthesize_from_poles(const LieChain& chain, int n_states,
                                     const std::vector<std::complex<double>>& poles) {
  std::vector<std::string> warnings;
  const auto gains = gains_from_poles(poles, &warnings);
  ControllerSpec spec = synthesize(chain, n_states, gains);
  spec.poles = poles;
  spec.warnings = std::move(warnings);
  return spec;
}

double evaluate_law(const ControllerSpec& spec, const Eigen::VectorXd& x, const ReferenceSignal& ref, double t) {
  if (x.size() != spec.n) throw ControlError("state dimension does not match the controller");
  Eigen::VectorXd point(spec.n + spec.r + 1);
  point << x, ref.derivatives(spec.r, t);
  double u = evaluate(spec.law, point);
  if (!spec.beta_is_constant) {
    const double b = evaluate(spec.beta, x);
    if (!(std::abs(b) >= kBetaGuard)) {
      throw ControlError("decoupling term vanishes (|beta| = " + shortest(std::abs(b)) + ") at t = " + shortest(t));
    }
    u /= b;
  }
  if (!std::isfinite(u)) throw ControlError("non-finite control input at t = " + shortest(t));
  return u;
}

ClosedLoopResult simulate_closed_loop(const ControlAffineSystem& plant, const ControllerSpec& spec,
                                      const ReferenceSignal& ref, const Eigen::VectorXd& x0, double dt, long samples) {
  if (plant.n() != spec.n) throw ControlError("plant and controller state dimensions differ");
  const auto law = InputSignal::feedback(
      [&spec, &ref](double t, const Eigen::VectorXd& x) { return evaluate_law(spec, x, ref, t); });
  ClosedLoopResult out;
  out.data = integrate(plant, x0, law, dt, samples);
  out.reference.resize(out.data.samples());
  for (Eigen::Index i = 0; i < out.data.samples(); ++i) out.reference(i) = ref(out.data.times(i));
  return out;
}

}  // namespace sparsefl
