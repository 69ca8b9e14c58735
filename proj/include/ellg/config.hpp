#pragma once

// Plain key = value run configuration. One pair per line, '#' starts a
// comment. Numeric values accept arithmetic expressions (+ - * / and
// parentheses), e.g. Ce = 2.6e-11 / (1.25667e-6 * 6.4e11).

#include "ellg/stepper.hpp"

#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>
#include <string_view>

namespace ellg {

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

namespace config_detail {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view s) : s_(s) {}

  double parse() {
    double v = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("bad numeric expression '" + std::string(s_) + "': " + msg);
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  double expr() {
    double v = term();
    for (;;) {
      if (eat('+')) v += term();
      else if (eat('-')) v -= term();
      else return v;
    }
  }
  double term() {
    double v = unary();
    for (;;) {
      if (eat('*')) v *= unary();
      else if (eat('/')) v /= unary();
      else return v;
    }
  }
  double unary() {
    if (eat('-')) return -unary();
    if (eat('+')) return unary();
    return primary();
  }
  double primary() {
    if (eat('(')) {
      double v = expr();
      if (!eat(')')) fail("missing ')'");
      return v;
    }
    skip();
    const std::string rest(s_.substr(pos_));
    char* end = nullptr;
    double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

inline std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c); };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace config_detail

inline double evaluate_expression(std::string_view text) { return config_detail::ExpressionParser(text).parse(); }

inline DtnKind parse_coupling(const std::string& v) {
  std::string s;
  for (char c : v) s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "costabel") return DtnKind::Costabel;
  if (s == "johnson-nedelec" || s == "johnson_nedelec" || s == "jn") return DtnKind::JohnsonNedelec;
  throw ConfigError("unknown coupling '" + v + "' (expected costabel or johnson-nedelec)");
}

/// Parses and validates a configuration document.
///
/// Required: theta, T, n, alpha, sigma, mu0, Ce, coupling and one of k or
/// steps. Optional: tol (1e-10), restart (50), snapshot_every (0 = N/10),
/// quad_order (4), output_dir ("output").
inline SimConfig parse_config(const std::string& text) {
  static const std::set<std::string> known{"theta", "k",       "steps",          "T",          "n",
                                           "alpha", "sigma",   "mu0",            "Ce",         "coupling",
                                           "tol",   "restart", "snapshot_every", "quad_order", "output_dir"};
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = config_detail::trim(line.substr(0, eq));
    std::string value = config_detail::trim(line.substr(eq + 1));
    if (!known.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty value for '" + key + "'");
    kv[key] = value;
  }
  for (const char* req : {"theta", "T", "n", "alpha", "sigma", "mu0", "Ce", "coupling"})
    if (!kv.count(req)) throw ConfigError(std::string("missing required key '") + req + "'");
  if (!kv.count("k") && !kv.count("steps")) throw ConfigError("missing required key 'k' or 'steps'");

  auto num = [&](const std::string& key) { return evaluate_expression(kv.at(key)); };
  auto integer = [&](const std::string& key) {
    double v = num(key);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("'" + key + "' must be an integer");
    return static_cast<int>(v);
  };

  SimConfig c;
  c.theta = num("theta");
  c.T = num("T");
  c.n = integer("n");
  c.alpha = num("alpha");
  c.sigma = num("sigma");
  c.mu0 = num("mu0");
  c.exchange = num("Ce");
  c.coupling = parse_coupling(kv.at("coupling"));
  if (kv.count("tol")) c.tolerance = num("tol");
  if (kv.count("restart")) c.restart = integer("restart");
  if (kv.count("snapshot_every")) c.snapshot_every = integer("snapshot_every");
  if (kv.count("quad_order")) c.quad_order = integer("quad_order");
  if (kv.count("output_dir")) c.output_dir = kv.at("output_dir");

  if (kv.count("steps")) {
    c.steps = integer("steps");
    if (kv.count("k")) {
      double k = num("k");
      if (c.steps < 1 || std::abs(k * c.steps - c.T) > 1e-9 * c.T)
        throw ConfigError("'k' and 'steps' are inconsistent with T (need steps * k = T)");
    }
  } else {
    double k = num("k");
    if (!(k > 0)) throw ConfigError("'k' must be > 0");
    // The energy bound needs k < 2 alpha; report that before anything else.
    if (!(k < 2 * c.alpha))
      throw ConfigError("invalid configuration: time step k = " + config_detail::fmt17(k) +
                        " violates the energy-stability requirement k < 2*alpha = " +
                        config_detail::fmt17(2 * c.alpha));
    double N = std::round(c.T / k);
    if (N < 1 || std::abs(N * k - c.T) > 1e-9 * c.T)
      throw ConfigError("T / k must be a positive integer number of steps");
    c.steps = static_cast<int>(N);
  }
  validate(c);
  return c;
}

/// Serialises a configuration so that parse_config reproduces it exactly.
inline std::string to_text(const SimConfig& c) {
  using config_detail::fmt17;
  std::ostringstream os;
  os << "theta = " << fmt17(c.theta) << "\n"
     << "T = " << fmt17(c.T) << "\n"
     << "steps = " << c.steps << "\n"
     << "n = " << c.n << "\n"
     << "alpha = " << fmt17(c.alpha) << "\n"
     << "sigma = " << fmt17(c.sigma) << "\n"
     << "mu0 = " << fmt17(c.mu0) << "\n"
     << "Ce = " << fmt17(c.exchange) << "\n"
     << "coupling = " << to_string(c.coupling) << "\n"
     << "tol = " << fmt17(c.tolerance) << "\n"
     << "restart = " << c.restart << "\n"
     << "snapshot_every = " << c.snapshot_every << "\n"
     << "quad_order = " << c.quad_order << "\n"
     << "output_dir = " << c.output_dir << "\n";
  return os.str();
}

inline bool operator==(const SimConfig& a, const SimConfig& b) {
  return a.alpha == b.alpha && a.exchange == b.exchange && a.mu0 == b.mu0 && a.sigma == b.sigma &&
         a.theta == b.theta && a.T == b.T && a.steps == b.steps && a.n == b.n && a.coupling == b.coupling &&
         a.tolerance == b.tolerance && a.restart == b.restart && a.snapshot_every == b.snapshot_every &&
         a.quad_order == b.quad_order && a.output_dir == b.output_dir;
}

}  // namespace ellg
