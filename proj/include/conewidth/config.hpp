#pragma once

// Flat key=value experiment configuration: one key per line, '#' starts a
// comment, lists are comma-separated.

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "experiment.hpp"

namespace conewidth {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

[[noreturn]] inline void bad_value(const std::string& key, const std::string& value, const char* expected) {
  throw ConfigError(key, key + ": cannot parse '" + value + "' as " + expected);
}

template <class T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const char* first = value.data();
  const char* last = first + value.size();
  const auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc{} || ptr != last || value.empty()) bad_value(key, value, "an integer");
  return out;
}

inline double parse_real(const std::string& key, const std::string& value) {
  // strtod instead of from_chars<double>: libstdc++ 11 lacks the latter.
  if (value.empty()) bad_value(key, value, "a real number");
  char* end = nullptr;
  const double v = std::strtod(value.c_str(), &end);
  if (end != value.c_str() + value.size() || !std::isfinite(v)) bad_value(key, value, "a real number");
  return v;
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) out.push_back(parse(key, item));
  if (out.empty()) bad_value(key, value, "a nonempty list");
  return out;
}

template <class E>
E parse_enum(const std::string& key, const std::string& value,
             std::initializer_list<std::pair<std::string_view, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? std::string(name) : ", " + std::string(name);
  }
  throw ConfigError(key, key + ": '" + value + "' is not one of {" + names + "}");
}

inline std::string join_doubles(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Assigns one key; throws ConfigError for unknown keys and bad values.
inline void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "family")
    cfg.family = parse_enum<FamilyTag>(key, value, {{"gaussian", FamilyTag::gaussian},
                                                    {"logistic", FamilyTag::logistic},
                                                    {"poisson", FamilyTag::poisson}});
  else if (key == "noise_scale") cfg.noise_scale = parse_real(key, value);
  else if (key == "poisson_eta_cap") cfg.poisson_eta_cap = parse_real(key, value);
  else if (key == "ensemble")
    cfg.ensemble = parse_enum<Ensemble>(key, value, {{"gaussian", Ensemble::gaussian},
                                                     {"rademacher", Ensemble::rademacher}});
  else if (key == "p") cfg.p = parse_integer<Index>(key, value);
  else if (key == "s") cfg.s = parse_integer<Index>(key, value);
  else if (key == "theta_magnitude") cfg.theta_magnitude = parse_real(key, value);
  else if (key == "constraint_mode")
    cfg.constraint_mode = parse_enum<ConstraintClass>(
        key, value, {{"matched", ConstraintClass::matched}, {"mismatched", ConstraintClass::mismatched}});
  else if (key == "slack") cfg.slack = parse_real(key, value);
  else if (key == "n_grid") cfg.n_grid = parse_list<Index>(key, value, parse_integer<Index>);
  else if (key == "trials") cfg.trials = parse_integer<std::size_t>(key, value);
  else if (key == "mc_samples") cfg.mc_samples = parse_integer<std::size_t>(key, value);
  else if (key == "master_seed") cfg.master_seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "rsc_epsilon") cfg.rsc_epsilon = parse_real(key, value);
  else if (key == "rsc_directions") cfg.rsc_directions = parse_integer<std::size_t>(key, value);
  else if (key == "alpha") cfg.alpha = parse_real(key, value);
  else if (key == "c1") cfg.c1 = parse_real(key, value);
  else if (key == "mu_mode")
    cfg.mu_mode = parse_enum<MuMode>(key, value, {{"empirical", MuMode::empirical},
                                                  {"theoretical", MuMode::theoretical}});
  else if (key == "solver")
    cfg.solver.method = parse_enum<SolverMethod>(
        key, value, {{"frank_wolfe", SolverMethod::frank_wolfe},
                     {"projected_gradient", SolverMethod::projected_gradient}});
  else if (key == "max_iter") cfg.solver.max_iter = parse_integer<long>(key, value);
  else if (key == "gap_tol") cfg.solver.gap_tol = parse_real(key, value);
  else if (key == "step_tol") cfg.solver.step_tol = parse_real(key, value);
  else if (key == "t_grid") cfg.t_grid = parse_list<double>(key, value, parse_real);
  else if (key == "width_t") cfg.width_t = parse_real(key, value);
  else throw ConfigError(key, "unknown config key '" + key + "'");
}

inline const std::vector<std::string>& required_config_keys() {
  static const std::vector<std::string> keys{"family", "p", "s", "constraint_mode", "n_grid"};
  return keys;
}

/// Splits "key=value"; throws ConfigError when there is no '=' or no key.
inline std::pair<std::string, std::string> split_assignment(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError(detail::trim(text), "expected key=value, got '" + text + "'");
  std::string key = detail::trim(std::string_view(text).substr(0, eq));
  if (key.empty()) throw ConfigError("", "empty key in '" + text + "'");
  return {std::move(key), detail::trim(std::string_view(text).substr(eq + 1))};
}

/// Parses config text, applies overrides (each "key=value") and validates.
inline ExperimentConfig parse_config(std::istream& in, const std::vector<std::string>& overrides = {}) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    if (detail::trim(line).empty()) continue;
    auto [key, value] = split_assignment(line);
    if (!seen.insert(key).second)
      throw ConfigError(key, "duplicate config key '" + key + "' at line " + std::to_string(line_no));
    set_config_value(cfg, key, value);
  }
  for (const auto& ov : overrides) {
    auto [key, value] = split_assignment(ov);
    set_config_value(cfg, key, value);
    seen.insert(key);
  }
  for (const auto& key : required_config_keys())
    if (!seen.count(key)) throw ConfigError(key, "missing required config key '" + key + "'");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path + "'");
  return parse_config(in, overrides);
}

/// Every key, in a form parse_config reads back to an equal config.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  using detail::join_doubles;
  const auto d = format_double;
  std::ostringstream os;
  os << "family=" << to_string(cfg.family) << '\n'
     << "noise_scale=" << d(cfg.noise_scale) << '\n'
     << "poisson_eta_cap=" << d(cfg.poisson_eta_cap) << '\n'
     << "ensemble=" << to_string(cfg.ensemble) << '\n'
     << "p=" << cfg.p << '\n'
     << "s=" << cfg.s << '\n'
     << "theta_magnitude=" << d(cfg.theta_magnitude) << '\n'
     << "constraint_mode=" << to_string(cfg.constraint_mode) << '\n'
     << "slack=" << d(cfg.slack) << '\n'
     << "n_grid=";
  for (std::size_t i = 0; i < cfg.n_grid.size(); ++i) os << (i ? "," : "") << cfg.n_grid[i];
  os << '\n'
     << "trials=" << cfg.trials << '\n'
     << "mc_samples=" << cfg.mc_samples << '\n'
     << "master_seed=" << cfg.master_seed << '\n'
     << "rsc_epsilon=" << d(cfg.rsc_epsilon) << '\n'
     << "rsc_directions=" << cfg.rsc_directions << '\n'
     << "alpha=" << d(cfg.alpha) << '\n'
     << "c1=" << d(cfg.c1) << '\n'
     << "mu_mode=" << to_string(cfg.mu_mode) << '\n'
     << "solver=" << to_string(cfg.solver.method) << '\n'
     << "max_iter=" << cfg.solver.max_iter << '\n'
     << "gap_tol=" << d(cfg.solver.gap_tol) << '\n'
     << "step_tol=" << d(cfg.solver.step_tol) << '\n'
     << "t_grid=" << join_doubles(cfg.t_grid) << '\n'
     << "width_t=" << d(cfg.width_t) << '\n';
  return os.str();
}

inline bool operator==(const SolverSettings& a, const SolverSettings& b) {
  return a.method == b.method && a.max_iter == b.max_iter && a.gap_tol == b.gap_tol && a.step_tol == b.step_tol;
}

inline bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
  return a.family == b.family && a.noise_scale == b.noise_scale && a.poisson_eta_cap == b.poisson_eta_cap &&
         a.ensemble == b.ensemble && a.p == b.p && a.s == b.s && a.theta_magnitude == b.theta_magnitude &&
         a.constraint_mode == b.constraint_mode && a.slack == b.slack && a.n_grid == b.n_grid &&
         a.trials == b.trials && a.mc_samples == b.mc_samples && a.master_seed == b.master_seed &&
         a.rsc_epsilon == b.rsc_epsilon && a.rsc_directions == b.rsc_directions && a.alpha == b.alpha &&
         a.c1 == b.c1 && a.mu_mode == b.mu_mode && a.solver == b.solver && a.t_grid == b.t_grid &&
         a.width_t == b.width_t;
}

}  // namespace conewidth
