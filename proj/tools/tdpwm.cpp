#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tdpwm/commands.hpp"

// tdpwm <optimize|sweep|validate|svpwm|analyze> [--config FILE] [flags]
//
// Flags override values from the config file; see include/tdpwm/config.hpp
// for the file format.

namespace {

struct Overrides {
  std::string config;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "key = value configuration file");
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--P", "pulses"},       {"--L", "l"},         {"--R", "r"},
      {"--f", "f"},            {"--v0", "v0"},       {"--im", "im"},
      {"--alpha", "alpha"},    {"--depth", "depth"}, {"--she", "she"},
      {"--tau", "tau"},        {"--out", "out"},     {"--seed", "seed"},
      {"--multistart", "multistart"},
      {"--max-iterations", "max_iterations"},
      {"--samples", "samples"}, {"--n-report", "n_report"},
      {"--threads", "threads"},
  };
  for (const auto& [flag, key] : flags) {
    cmd->add_option_function<std::string>(
        flag, [&o, key = key](const std::string& v) { o.values[key] = v; },
        "sets '" + key + "'");
  }
}

tdpwm::RunConfig build_config(const Overrides& o) {
  tdpwm::RunConfig cfg;
  if (!o.config.empty()) cfg = tdpwm::load_config(o.config);
  for (const auto& [key, value] : o.values) tdpwm::set_config_value(cfg, key, value);
  tdpwm::check_config(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-domain optimal PWM for two-level three-phase inverters"};
  app.require_subcommand(1);
  Overrides o;

  auto* optimize = app.add_subcommand("optimize", "optimize one pattern");
  auto* sweep = app.add_subcommand("sweep", "optimize every P in the list");
  auto* validate = app.add_subcommand("validate", "closed form vs oracle checks");
  auto* svpwm = app.add_subcommand("svpwm", "SVPWM baseline only");
  auto* analyze = app.add_subcommand("analyze", "spectrum and THD of an instant list");
  for (auto* c : {optimize, sweep, validate, svpwm, analyze}) add_common(c, o);

  bool perturb = false;
  validate->add_flag("--perturb-symmetry", perturb,
                     "break one symmetry relation (negative control)");
  int patterns = 0;
  validate->add_option("--patterns", patterns, "random patterns to check");
  std::string instants_path;
  analyze->add_option("instants", instants_path, "file with one scaled instant per line")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tdpwm::kExitUsage;
  }

  try {
    tdpwm::RunConfig cfg = build_config(o);
    if (*optimize) return tdpwm::cmd_optimize(cfg, std::cout);
    if (*sweep) return tdpwm::cmd_sweep(cfg, std::cout);
    if (*validate) {
      if (perturb) cfg.perturb_symmetry = true;
      if (patterns > 0) cfg.validate_patterns = patterns;
      return tdpwm::cmd_validate(cfg, std::cout);
    }
    if (*svpwm) return tdpwm::cmd_svpwm(cfg, std::cout);
    if (*analyze) {
      return tdpwm::cmd_analyze(cfg, tdpwm::read_instants(instants_path), std::cout);
    }
  } catch (const tdpwm::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return tdpwm::kExitUsage;
  } catch (const tdpwm::PatternError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return tdpwm::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return tdpwm::kExitUsage;
}
