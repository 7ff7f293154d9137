#ifndef TDPWM_CONFIG_HPP
#define TDPWM_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tdpwm/objective.hpp"
#include "tdpwm/params.hpp"

// Run configuration: a flat `key = value` text file, `#` starts a comment,
// lists are comma separated. Every key can also be given on the command line.
//
//   schema_version = 1
//   v0 = 300        r = 27        f = 60        im = 5
//   l = 0.005       (henries; one value, or one per entry of `pulses`)
//   alpha = 150     depth = 0.78  (instead of l: alpha = RT/L, depth = V_m/V0)
//   pulses = 5, 7, 9, 11
//   she = 5, 7
//   tau = 1e-4      seed = 0      multistart = 0
//   kkt_tolerance, constraint_tolerance, step_tolerance, max_iterations
//   out = results   n_report = 50 samples = 4096 threads = 0
//   validate_patterns = 20        perturb_symmetry = 0

namespace tdpwm {

inline constexpr int kSchemaVersion = 1;

/// Malformed or contradictory configuration; maps to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  int schema_version = kSchemaVersion;
  double v0 = 300.0;
  double r = 27.0;
  double f = 60.0;
  double i_m = 5.0;
  std::vector<double> inductance;  // empty: 5 mH unless alpha is given
  std::optional<double> alpha;
  std::optional<double> depth;
  std::vector<int> pulses{5};
  SolverConfig solver;
  std::string out_dir = "out";
  int n_report = 50;
  int samples = 4096;
  int threads = 0;  // 0: one per row
  int validate_patterns = 20;
  bool perturb_symmetry = false;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw UsageError("'" + key + "': not a number: '" + v + "'");
  }
  if (used != v.size()) throw UsageError("'" + key + "': not a number: '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw UsageError("'" + key + "': not an integer: '" + v + "'");
  }
  if (used != v.size()) throw UsageError("'" + key + "': not an integer: '" + v + "'");
  return x;
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw UsageError("'" + key + "': expected a boolean, got '" + v + "'");
}

}  // namespace detail

/// Applies one key/value pair. Unknown keys are rejected.
inline void set_config_value(RunConfig& c, const std::string& key,
                             const std::string& raw) {
  using namespace detail;
  const std::string v = trim(raw);
  if (key == "schema_version") {
    c.schema_version = static_cast<int>(parse_integer(key, v));
    if (c.schema_version != kSchemaVersion) {
      throw UsageError("unsupported schema_version " + v + " (expected " +
                       std::to_string(kSchemaVersion) + ")");
    }
  } else if (key == "v0") {
    c.v0 = parse_double(key, v);
  } else if (key == "r") {
    c.r = parse_double(key, v);
  } else if (key == "f") {
    c.f = parse_double(key, v);
  } else if (key == "im") {
    c.i_m = parse_double(key, v);
  } else if (key == "l") {
    c.inductance.clear();
    for (const auto& s : split_list(v)) c.inductance.push_back(parse_double(key, s));
    if (c.inductance.empty()) throw UsageError("'l' needs at least one value");
  } else if (key == "alpha") {
    c.alpha = parse_double(key, v);
  } else if (key == "depth") {
    c.depth = parse_double(key, v);
  } else if (key == "pulses" || key == "P") {
    c.pulses.clear();
    for (const auto& s : split_list(v)) {
      c.pulses.push_back(static_cast<int>(parse_integer(key, s)));
    }
  } else if (key == "she") {
    c.solver.she_orders.clear();
    for (const auto& s : split_list(v)) {
      c.solver.she_orders.push_back(static_cast<int>(parse_integer(key, s)));
    }
  } else if (key == "tau") {
    c.solver.tau = parse_double(key, v);
  } else if (key == "kkt_tolerance") {
    c.solver.kkt_tolerance = parse_double(key, v);
  } else if (key == "constraint_tolerance") {
    c.solver.constraint_tolerance = parse_double(key, v);
  } else if (key == "step_tolerance") {
    c.solver.step_tolerance = parse_double(key, v);
  } else if (key == "max_iterations") {
    c.solver.max_iterations = static_cast<int>(parse_integer(key, v));
  } else if (key == "multistart") {
    c.solver.multistart = static_cast<int>(parse_integer(key, v));
  } else if (key == "seed") {
    c.solver.seed = static_cast<std::uint64_t>(parse_integer(key, v));
  } else if (key == "out") {
    c.out_dir = v;
  } else if (key == "n_report") {
    c.n_report = static_cast<int>(parse_integer(key, v));
  } else if (key == "samples") {
    c.samples = static_cast<int>(parse_integer(key, v));
  } else if (key == "threads") {
    c.threads = static_cast<int>(parse_integer(key, v));
  } else if (key == "validate_patterns") {
    c.validate_patterns = static_cast<int>(parse_integer(key, v));
  } else if (key == "perturb_symmetry") {
    c.perturb_symmetry = parse_bool(key, v);
  } else {
    throw UsageError("unknown configuration key '" + key + "'");
  }
}

inline RunConfig parse_config(std::string_view text, RunConfig c = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(c, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return c;
}

inline RunConfig load_config(const std::string& path, RunConfig c = {}) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), std::move(c));
}

/// Checks the parts of the config that do not depend on the row.
inline void check_config(const RunConfig& c) {
  if (c.pulses.empty()) throw UsageError("no pulse count P given");
  if (c.alpha && !c.inductance.empty()) {
    throw UsageError("give either alpha or l, not both");
  }
  if (c.depth && !c.alpha) {
    throw UsageError("depth (V_m/V0) is only meaningful together with alpha");
  }
  if (c.inductance.size() > 1 && c.inductance.size() != c.pulses.size()) {
    throw UsageError("'l' must have one value or one per entry of 'pulses'");
  }
  if (c.n_report < 1) throw UsageError("n_report must be >= 1");
  if (c.samples < 16) throw UsageError("samples must be >= 16");
  if (c.threads < 0) throw UsageError("threads must be >= 0");
  if (c.solver.multistart < 0) throw UsageError("multistart must be >= 0");
  try {
    validate_config(c.solver);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
}

/// Electrical parameters of row `row` (an index into `pulses`).
inline InverterParams params_for(const RunConfig& c, std::size_t row = 0) {
  check_config(c);
  const int P = c.pulses.at(row);
  try {
    if (c.alpha) {
      if (c.depth) return derive_scaled_params(*c.alpha, *c.depth, c.v0, c.r, c.f, P);
      return derive_params(c.v0, c.r, c.r / (*c.alpha * c.f), c.f, c.i_m, P);
    }
    const double l = c.inductance.empty()   ? 5e-3
                     : c.inductance.size() == 1 ? c.inductance[0]
                                                : c.inductance[row];
    return derive_params(c.v0, c.r, l, c.f, c.i_m, P);
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  } catch (const PatternError& e) {
    throw UsageError(e.what());
  } catch (const RangeError& e) {
    throw UsageError(e.what());
  }
}

}  // namespace tdpwm

#endif  // TDPWM_CONFIG_HPP
