#ifndef TDPWM_COMMANDS_HPP
#define TDPWM_COMMANDS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tdpwm/config.hpp"
#include "tdpwm/energy.hpp"
#include "tdpwm/optimizer.hpp"
#include "tdpwm/oracle.hpp"
#include "tdpwm/pattern.hpp"
#include "tdpwm/spectrum.hpp"
#include "tdpwm/svpwm.hpp"

// Subcommands behind tools/tdpwm. Each writes its files under cfg.out_dir and
// returns a process exit code. Result records never contain timings, so the
// same config and seed give byte-identical files; timings go to
// timings.json.

namespace tdpwm {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitInfeasibleSeed = 3,
  kExitNotConverged = 4,
  kExitValidationFailed = 5,
};

using json = nlohmann::ordered_json;

namespace report {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline json inputs_json(const InverterParams& p, const SolverConfig& s) {
  return {{"v0", p.v0},
          {"r", p.r},
          {"l", p.l},
          {"f", p.f},
          {"i_m", p.i_m},
          {"pulses", p.pulses},
          {"alpha", p.alpha},
          {"phi", p.phi},
          {"v_m", p.v_m},
          {"depth", p.depth()},
          {"f_sw", p.f_sw},
          {"f_sw_khz", p.f_sw / 1000.0},
          {"overmodulated", p.overmodulated},
          {"tau", s.tau},
          {"she_orders", s.she_orders},
          {"multistart", s.multistart},
          {"seed", s.seed}};
}

inline json instants_json(const SwitchingPattern& sp, const InverterParams& p) {
  json scaled = json::array(), seconds = json::array();
  for (double b : sp.instants()) {
    scaled.push_back(b);
    seconds.push_back(b * p.period);
  }
  return {{"scaled", scaled}, {"seconds", seconds}};
}

inline json harmonic_table(const SwitchingPattern& sp, const InverterParams& p,
                           int n_report) {
  const HarmonicSpectrum v = voltage_harmonics(sp, p.v0, n_report);
  const HarmonicSpectrum i = current_harmonics(v, p);
  json rows = json::array();
  for (int n = 1; n <= n_report; ++n) {
    rows.push_back({{"n", n},
                    {"voltage", v.amplitude[n]},
                    {"current", i.amplitude[n]},
                    {"current_phase", i.phase[n]},
                    {"relative", i.fundamental() > 0 ? i.amplitude[n] / i.fundamental() : 0.0}});
  }
  return rows;
}

inline json pattern_summary(const SwitchingPattern& sp, const InverterParams& p,
                            const SolverConfig& s, int n_report) {
  const TimeDomainThd td = thd_timedomain(sp, p);
  const PatternDiagnostics d = validate_pattern(sp, s.tau);
  return {{"thd", td.thd},
          {"thd_percent", 100.0 * td.thd},
          {"i_f", td.i_f},
          {"e2", td.e2},
          {"e2_scaled", td.e2_scaled},
          {"fundamental_residual", fundamental_constraint_residual(sp, p)},
          {"she_residuals", she_residuals(sp, s.she_orders)},
          {"min_gap", d.min_gap},
          {"valid", d.valid},
          {"instants", instants_json(sp, p)},
          {"harmonics", harmonic_table(sp, p, n_report)}};
}

/// i_a, i_b, i_c, v_ab and the reference current over one period.
inline std::string waveform_csv(const SwitchingPattern& sp, const InverterParams& p,
                                int samples) {
  const PhaseResponse resp(sp, p);
  const SinusoidReference ref = phase_reference(p);
  std::ostringstream out;
  out << "beta,t,v_ab,i_a,i_b,i_c,i_ref\n";
  for (int k = 0; k < samples; ++k) {
    const double b = static_cast<double>(k) / samples;
    const PhaseCurrents c = resp.currents(b);
    const double v_ab =
        p.v0 * line_voltage_value(sp, b, LinePair::kAB);
    const double i_ref =
        ref.amplitude * std::sin(2.0 * kPi * b - ref.shift) / p.r;
    out << fmt(b) << ',' << fmt(b * p.period) << ',' << fmt(v_ab) << ','
        << fmt(c.a) << ',' << fmt(c.b) << ',' << fmt(c.c) << ',' << fmt(i_ref)
        << '\n';
  }
  return out.str();
}

}  // namespace report

struct RowOutcome {
  int exit_code = kExitOk;
  json record;
  double seconds = 0.0;
  std::string error;
  // Table columns
  int pulses = 0;
  double f_sw = 0.0, l = 0.0, thd_svpwm = NAN, thd_opt = NAN;
  bool converged = false;
  std::string status;
};

/// Baseline plus optimization for one parameter set; writes result.json and
/// waveforms.csv into `dir`.
inline RowOutcome run_row(const InverterParams& p, const RunConfig& cfg,
                          const std::filesystem::path& dir) {
  RowOutcome row;
  row.pulses = p.pulses;
  row.f_sw = p.f_sw;
  row.l = p.l;
  const auto t0 = std::chrono::steady_clock::now();
  std::optional<SvpwmSeed> seed;
  try {
    seed = svpwm_seed(p);
  } catch (const RangeError& e) {
    row.exit_code = kExitInfeasibleSeed;
    row.error = e.what();
    row.status = "seed-out-of-range";
    return row;
  }
  std::optional<OptimizationResult> opt_result;
  try {
    opt_result = optimize(p, cfg.solver, seed->free);
  } catch (const SeedError& e) {
    row.exit_code = kExitInfeasibleSeed;
    row.error = e.what();
    row.status = "infeasible-seed";
    return row;
  }
  row.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const OptimizationResult& r = *opt_result;

  const SwitchingPattern final_sp = expand_pattern(r.final_pattern);
  row.thd_svpwm = r.initial_report.thd;
  row.thd_opt = r.final_report.thd;
  row.converged = r.converged;
  row.status = r.status;
  row.exit_code = r.converged ? kExitOk : kExitNotConverged;

  json svpwm = report::pattern_summary(seed->pattern, p, cfg.solver, cfg.n_report);
  svpwm["m_index"] = seed->spec.m_index;
  svpwm["projection_displacement"] = seed->displacement;
  json opt = report::pattern_summary(final_sp, p, cfg.solver, cfg.n_report);
  opt["free_parameters"] = r.final_pattern.theta();
  opt["converged"] = r.converged;
  opt["status"] = r.status;
  opt["method"] = r.method;
  opt["iterations"] = r.iterations;
  opt["starts"] = r.starts;
  opt["kkt_residual"] = r.kkt_residual;
  opt["constraint_violation"] = r.constraint_violation;
  opt["min_slack"] = r.final_report.min_slack();
  opt["objective_history"] = r.objective_history;

  row.record = {{"schema_version", kSchemaVersion},
                {"inputs", report::inputs_json(p, cfg.solver)},
                {"svpwm", svpwm},
                {"optimized", opt},
                {"improvement", (row.thd_svpwm - row.thd_opt) / row.thd_svpwm},
                {"improvement_percent",
                 100.0 * (row.thd_svpwm - row.thd_opt) / row.thd_svpwm}};
  report::write_json(dir / "result.json", row.record);
  report::write_text(dir / "waveforms.csv",
                     report::waveform_csv(final_sp, p, cfg.samples));
  return row;
}

inline int cmd_optimize(const RunConfig& cfg, std::ostream& log) {
  if (cfg.pulses.size() != 1) {
    throw UsageError("optimize takes a single P; use sweep for a list");
  }
  const InverterParams p = params_for(cfg, 0);
  const std::filesystem::path dir(cfg.out_dir);
  const RowOutcome row = run_row(p, cfg, dir);
  if (!row.error.empty()) {
    log << "error: " << row.error << "\n";
    return row.exit_code;
  }
  report::write_json(dir / "timings.json", {{"seconds", row.seconds}});
  char line[256];
  std::snprintf(line, sizeof line,
                "P=%d f_sw=%.2f kHz L=%.3g mH  THD %.2f%% -> %.2f%%  (%s, %d it)\n",
                p.pulses, p.f_sw / 1000.0, p.l * 1e3, 100.0 * row.thd_svpwm,
                100.0 * row.thd_opt, row.status.c_str(),
                row.record["optimized"]["iterations"].get<int>());
  log << line;
  return row.exit_code;
}

inline int cmd_sweep(const RunConfig& cfg, std::ostream& log) {
  check_config(cfg);
  const std::size_t n = cfg.pulses.size();
  std::vector<RowOutcome> rows(n);
  std::vector<std::string> errors(n);

  auto work = [&](std::size_t k) {
    try {
      const InverterParams p = params_for(cfg, k);
      const std::filesystem::path dir =
          std::filesystem::path(cfg.out_dir) / ("row" + std::to_string(k) + "_P" +
                                                std::to_string(p.pulses));
      rows[k] = run_row(p, cfg, dir);
    } catch (const std::exception& e) {
      rows[k].pulses = cfg.pulses[k];
      rows[k].exit_code = kExitUsage;
      rows[k].error = e.what();
      rows[k].status = "error";
    }
  };
  const std::size_t width = cfg.threads > 0 ? static_cast<std::size_t>(cfg.threads) : n;
  for (std::size_t start = 0; start < n; start += width) {
    std::vector<std::future<void>> batch;
    for (std::size_t k = start; k < std::min(n, start + width); ++k) {
      batch.push_back(std::async(std::launch::async, work, k));
    }
    for (auto& f : batch) f.get();
  }

  std::ostringstream csv;
  csv << "P,f_sw_khz,L_mh,thd_svpwm_percent,thd_opt_percent,improvement_percent,"
         "converged,status\n";
  json timings = json::array();
  int code = kExitOk;
  for (const RowOutcome& r : rows) {
    const double imp = 100.0 * (r.thd_svpwm - r.thd_opt) / r.thd_svpwm;
    csv << r.pulses << ',' << report::fmt(r.f_sw / 1000.0) << ','
        << report::fmt(r.l * 1e3) << ',' << report::fmt(100.0 * r.thd_svpwm) << ','
        << report::fmt(100.0 * r.thd_opt) << ',' << report::fmt(imp) << ','
        << (r.converged ? 1 : 0) << ',' << r.status << '\n';
    timings.push_back({{"pulses", r.pulses}, {"seconds", r.seconds}});
    code = std::max(code, r.exit_code);
    char line[256];
    if (r.error.empty()) {
      std::snprintf(line, sizeof line,
                    "P=%-3d f_sw=%.2f kHz L=%.3g mH  THD %.2f%% -> %.2f%%  (%.2f%%)  %s\n",
                    r.pulses, r.f_sw / 1000.0, r.l * 1e3, 100.0 * r.thd_svpwm,
                    100.0 * r.thd_opt, imp, r.status.c_str());
    } else {
      std::snprintf(line, sizeof line, "P=%-3d failed: %s\n", r.pulses,
                    r.error.c_str());
    }
    log << line;
  }
  const std::filesystem::path dir(cfg.out_dir);
  report::write_text(dir / "sweep.csv", csv.str());
  report::write_json(dir / "timings.json", timings);
  return code;
}

struct ValidationCheck {
  std::string name;
  double measured;
  double limit;
  bool pass() const { return measured <= limit; }
};

/// Closed form against the oracle, Parseval, symmetry and gradient checks on
/// jittered SVPWM patterns at the configured parameters.
inline std::vector<ValidationCheck> run_validation(const RunConfig& cfg) {
  const InverterParams p = params_for(cfg, 0);
  std::mt19937_64 rng(cfg.solver.seed);
  std::vector<ValidationCheck> checks;

  double oracle = 0.0, parseval = 0.0, symmetry = 0.0, kvl = 0.0, grad = 0.0,
         triplen = 0.0;
  for (int k = 0; k < cfg.validate_patterns; ++k) {
    const FreePattern fp = jittered_svpwm(p, rng);
    SymmetryLayout layout(p.pulses);
    std::vector<double> beta = layout.expand(fp.theta());
    if (cfg.perturb_symmetry) beta[1] += 1e-6;
    const SwitchingPattern sp(p.pulses, beta);

    oracle = std::max(oracle, steady_state_error(sp, p) / (p.v0 / p.r));

    // Spectral side stops on its own increments, not on the closed form.
    const TimeDomainThd td = thd_timedomain(sp, p);
    double harm = 0.0;
    for (int n_max = default_harmonic_order(p.pulses);; n_max *= 2) {
      const HarmonicSpectrum cur = current_harmonics(voltage_harmonics(sp, p.v0, n_max), p);
      double s = 0.0;
      for (int n = 2; n <= n_max; ++n) s += cur.amplitude[n] * cur.amplitude[n];
      const bool settled = std::abs(s - harm) <= 1e-10 * s;
      harm = s;
      if (settled || n_max >= (1 << 22)) break;
    }
    const double e2_series = (std::pow(td.i_f - p.i_m, 2) + harm) * p.period / 4.0;
    parseval = std::max(parseval, std::abs(e2_series - td.e2) / td.e2);

    const PhaseResponse resp(sp, p);
    for (int n = 2; n <= 18 * p.pulses; ++n) {
      if (n % 2 != 0 && n % 3 != 0) continue;
      const double amp = 2.0 * std::abs(waveform_harmonic(resp.phase(), n)) / p.r;
      triplen = std::max(triplen, amp / td.i_f);
    }

    const PatternDiagnostics d = validate_pattern(sp, 0.0);
    symmetry = std::max(symmetry, d.max_symmetry_residual());
    kvl = std::max(kvl, d.kvl_ok ? 0.0 : 1.0);

    const std::vector<double> g = objective_gradient(fp, p);
    double gscale = 0.0;
    for (double x : g) gscale = std::max(gscale, std::abs(x));
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<double> t = fp.theta();
      const double h = 1e-7;
      t[i] += h;
      const double fplus = e2_scaled(FreePattern(p.pulses, t), p);
      t[i] -= 2.0 * h;
      const double fminus = e2_scaled(FreePattern(p.pulses, t), p);
      const double fd = (fplus - fminus) / (2.0 * h);
      grad = std::max(grad, std::abs(fd - g[i]) / std::max(std::abs(g[i]), 1e-3 * gscale));
    }
  }
  checks.push_back({"oracle_equivalence", oracle, 1e-8});
  checks.push_back({"parseval", parseval, 1e-6});
  checks.push_back({"symmetry_residual", symmetry, kSymmetryTolerance});
  checks.push_back({"kvl", kvl, 0.0});
  checks.push_back({"even_triplen_current", triplen, 1e-9});
  checks.push_back({"gradient", grad, 1e-5});
  return checks;
}

inline int cmd_validate(const RunConfig& cfg, std::ostream& log) {
  if (cfg.validate_patterns < 1) throw UsageError("validate_patterns must be >= 1");
  const std::vector<ValidationCheck> checks = run_validation(cfg);
  json out = json::array();
  bool ok = true;
  for (const ValidationCheck& c : checks) {
    out.push_back({{"check", c.name},
                   {"measured", c.measured},
                   {"limit", c.limit},
                   {"pass", c.pass()}});
    ok = ok && c.pass();
    char line[160];
    std::snprintf(line, sizeof line, "%s %-22s %.3e (limit %.1e)\n",
                  c.pass() ? "PASS" : "FAIL", c.name.c_str(), c.measured, c.limit);
    log << line;
  }
  report::write_json(std::filesystem::path(cfg.out_dir) / "validation.json",
                     {{"schema_version", kSchemaVersion},
                      {"inputs", report::inputs_json(params_for(cfg, 0), cfg.solver)},
                      {"perturb_symmetry", cfg.perturb_symmetry},
                      {"checks", out}});
  return ok ? kExitOk : kExitValidationFailed;
}

inline int cmd_svpwm(const RunConfig& cfg, std::ostream& log) {
  if (cfg.pulses.size() != 1) throw UsageError("svpwm takes a single P");
  const InverterParams p = params_for(cfg, 0);
  std::optional<SvpwmSeed> found;
  try {
    found = svpwm_seed(p);
  } catch (const RangeError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInfeasibleSeed;
  }
  const SvpwmSeed& seed = *found;
  json j = report::pattern_summary(seed.pattern, p, cfg.solver, cfg.n_report);
  j["m_index"] = seed.spec.m_index;
  j["projection_displacement"] = seed.displacement;
  j["free_parameters"] = seed.free.theta();
  const std::filesystem::path dir(cfg.out_dir);
  report::write_json(dir / "svpwm.json",
                     {{"schema_version", kSchemaVersion},
                      {"inputs", report::inputs_json(p, cfg.solver)},
                      {"svpwm", j}});
  report::write_text(dir / "waveforms.csv",
                     report::waveform_csv(seed.pattern, p, cfg.samples));
  char line[160];
  std::snprintf(line, sizeof line, "P=%d m=%.6f THD %.4f%%\n", p.pulses,
                seed.spec.m_index, 100.0 * j["thd"].get<double>());
  log << line;
  return kExitOk;
}

/// One scaled instant per line; blank lines and '#' comments are skipped.
inline std::vector<double> read_instants(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read instant list '" + path + "'");
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    out.push_back(detail::parse_double("instant", line));
  }
  return out;
}

inline int cmd_analyze(const RunConfig& cfg, const std::vector<double>& instants,
                       std::ostream& log) {
  if (instants.empty() || instants.size() % 6 != 0) {
    throw UsageError("instant list must hold 6P values, got " +
                     std::to_string(instants.size()));
  }
  RunConfig c = cfg;
  c.pulses = {static_cast<int>(instants.size() / 6)};
  const InverterParams p = params_for(c, 0);
  const SwitchingPattern sp(p.pulses, instants);
  const PatternDiagnostics d = validate_pattern(sp, cfg.solver.tau);

  json j = {{"schema_version", kSchemaVersion},
            {"inputs", report::inputs_json(p, cfg.solver)},
            {"valid", d.valid},
            {"monotonic", d.monotonic},
            {"min_gap", d.min_gap},
            {"min_gap_index", d.min_gap_index},
            {"max_symmetry_residual", d.max_symmetry_residual()},
            {"kvl_ok", d.kvl_ok}};
  bool increasing = true;
  for (std::size_t k = 0; k < instants.size(); ++k) {
    const double prev = k ? instants[k - 1] : 0.0;
    increasing = increasing && instants[k] > prev && instants[k] < 0.5;
  }
  if (increasing) {
    const TimeDomainThd td = thd_timedomain(sp, p);
    j["thd"] = td.thd;
    // The series assumes the symmetric waveform; skip it otherwise.
    if (d.max_symmetry_residual() <= kSymmetryTolerance) {
      const ConvergedSpectrum cs = converged_current_spectrum(sp, p, 1e-10);
      j["thd_spectral"] = thd(cs.current);
      j["spectral_order"] = cs.current.n_max;
    }
    j["i_f"] = td.i_f;
    j["e2"] = td.e2;
    j["e2_scaled"] = td.e2_scaled;
    j["line_fundamental"] = line_fundamental(sp, p.v0);
    j["harmonics"] = report::harmonic_table(sp, p, cfg.n_report);
    char line[160];
    std::snprintf(line, sizeof line, "P=%d THD %.4f%% I_f=%.6f A valid=%s\n",
                  p.pulses, 100.0 * td.thd, td.i_f, d.valid ? "yes" : "no");
    log << line;
  } else {
    log << "instants are not strictly increasing inside (0, 1/2)\n";
  }
  report::write_json(std::filesystem::path(cfg.out_dir) / "analysis.json", j);
  return d.valid ? kExitOk : kExitValidationFailed;
}

}  // namespace tdpwm

#endif  // TDPWM_COMMANDS_HPP
