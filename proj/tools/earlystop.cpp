// Command-line front end for the earlystop library.
//
// Subcommands:
//   simulate   run one fixed-design experiment (preset or custom) and report
//              per-rule loss / stopping-time summaries
//   sweep      run the same experiment across several sample sizes
//   deviation  estimate tail / deviation frequencies for the stopping rules
//              around the balancing times, with Wilson confidence intervals
//   check      run the built-in invariant suite and exit nonzero on failure
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "earlystop/io.hpp"
#include "earlystop/presets.hpp"
#include "earlystop/selfcheck.hpp"
#include "earlystop/simulation.hpp"

namespace {

using namespace earlystop;

struct CommonArgs {
  std::string preset_name = "custom";
  bool preset_passed = false;
  std::string config_path;
  std::string out_path;
  std::string format = "csv";
  Overrides ov;
  std::string rules_text;
  std::string kernel_name;
  std::string signal_name;
  // raw capture slots for optional scalar flags
  long long n = 0, reps = 0, jobs = 0, t_max = 0;
  unsigned long long seed = 0;
  double eta = 0.0, sigma_sq = 0.0, bandwidth = 0.0;
};

void add_common_flags(CLI::App* cmd, CommonArgs& a, bool with_preset) {
  if (with_preset) {
    cmd->add_option("--preset", a.preset_name,
                    "experiment preset: inner-sobolev, inner-gaussian, outer-sobolev, custom");
  }
  cmd->add_option("--config", a.config_path,
                  "JSON config file; command-line flags take precedence");
  cmd->add_option("--n", a.n, "sample size");
  cmd->add_option("--reps", a.reps, "number of Monte Carlo replications");
  cmd->add_option("--seed", a.seed, "master RNG seed")->envname("EARLYSTOP_SEED");
  cmd->add_option("--eta", a.eta, "gradient-flow step size");
  cmd->add_option("--sigma-sq", a.sigma_sq, "noise variance");
  cmd->add_option("--t-max", a.t_max, "hard cap on the stopping time");
  cmd->add_option("--rules", a.rules_text,
                  "comma-separated stopping rules (dp,sdp,balancing,smoothed-balancing,oracle)");
  cmd->add_option("--kernel", a.kernel_name, "kernel: sobolev or gaussian");
  cmd->add_option("--bandwidth", a.bandwidth, "gaussian kernel bandwidth");
  cmd->add_option("--signal", a.signal_name, "regression signal: inner or outer");
  cmd->add_option("--jobs", a.jobs, "worker threads for the replication loop");
  cmd->add_option("--out", a.out_path, "output file (default: stdout)");
  cmd->add_option("--format", a.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
}

// Transfers only the flags the user actually passed into the override set,
// so preset and config-file defaults survive untouched.
void collect_overrides(const CLI::App* cmd, CommonArgs& a) {
  auto passed = [cmd](const std::string& name) {
    return cmd->count(name) > 0;
  };
  a.preset_passed = cmd->get_option_no_throw("--preset") != nullptr && passed("--preset");
  if (passed("--n")) a.ov.n = static_cast<std::size_t>(a.n);
  if (passed("--reps")) a.ov.reps = static_cast<std::size_t>(a.reps);
  // count() also reflects values supplied through the EARLYSTOP_SEED env var
  if (passed("--seed")) a.ov.seed = a.seed;
  if (passed("--eta")) a.ov.eta = a.eta;
  if (passed("--sigma-sq")) a.ov.sigma_sq = a.sigma_sq;
  if (passed("--t-max")) a.ov.t_max = static_cast<long>(a.t_max);
  if (passed("--rules")) a.ov.rules = parse_rule_list(a.rules_text);
  if (passed("--kernel")) a.ov.kernel = a.kernel_name;
  if (passed("--bandwidth")) a.ov.bandwidth = a.bandwidth;
  if (passed("--signal")) a.ov.signal = a.signal_name;
  if (passed("--jobs")) a.ov.jobs = static_cast<int>(a.jobs);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error reading config file: " + path);
  return ss.str();
}

ExperimentConfig resolve_config(CommonArgs& a) {
  // The --preset default only kicks in after the config file had its chance,
  // so a file-level "preset" key is not shadowed by the flag's default value.
  std::optional<Preset> preset;
  if (a.preset_passed) preset = preset_from_name(a.preset_name);
  std::optional<std::string> file_format;
  if (!a.config_path.empty()) {
    apply_config_file(a.ov, read_file(a.config_path), preset, file_format);
    if (file_format && a.format == "csv") a.format = *file_format;
  }
  if (!preset) preset = preset_from_name(a.preset_name);
  return expand_preset(*preset, a.ov);
}

void emit(const std::string& text, const std::string& out_path) {
  write_text(out_path, text);
}

int cmd_simulate(CommonArgs& a) {
  ExperimentConfig cfg = resolve_config(a);
  const ExperimentResult result = run_experiment(cfg);
  emit(a.format == "json" ? to_json(result).dump(2) + "\n" : summary_csv(result),
       a.out_path);
  return 0;
}

int cmd_sweep(CommonArgs& a, const std::string& sizes_text) {
  std::vector<std::size_t> sizes = {200, 400, 600, 800, 1000};
  if (!sizes_text.empty()) sizes = parse_size_list(sizes_text);
  std::vector<ExperimentResult> results;
  results.reserve(sizes.size());
  for (std::size_t n : sizes) {
    CommonArgs local = a;
    local.ov.n = n;
    // Horizons that scale with n must be recomputed per size, so expansion
    // happens inside the loop.
    results.push_back(run_experiment(resolve_config(local)));
  }
  if (a.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const ExperimentResult& r : results) arr.push_back(to_json(r));
    emit(arr.dump(2) + "\n", a.out_path);
  } else {
    emit(summary_csv(results), a.out_path);
  }
  return 0;
}

int cmd_deviation(CommonArgs& a, const std::string& ts_text, const std::string& ys_text) {
  if (ts_text.empty() && ys_text.empty()) {
    throw UsageError("deviation requires --ts and/or --ys");
  }
  DeviationTargets targets;
  if (!ts_text.empty()) targets.times = parse_double_list(ts_text);
  if (!ys_text.empty()) targets.offsets = parse_double_list(ys_text);
  ExperimentConfig cfg = resolve_config(a);
  const DeviationEstimate est = estimate_deviation(cfg, targets);
  emit(a.format == "json" ? to_json(est).dump(2) + "\n" : deviation_csv(est),
       a.out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spectral-filter regression with data-driven early stopping"};
  app.require_subcommand(1);

  CommonArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "run one fixed-design experiment");
  add_common_flags(sim, sim_args, true);

  CommonArgs sweep_args;
  std::string sizes_text;
  CLI::App* sweep = app.add_subcommand("sweep", "run an experiment across sample sizes");
  add_common_flags(sweep, sweep_args, true);
  sweep->add_option("--sizes", sizes_text,
                    "comma-separated sample sizes (default 200,400,600,800,1000)");

  CommonArgs dev_args;
  std::string ts_text, ys_text;
  CLI::App* dev = app.add_subcommand(
      "deviation", "estimate stopping-rule deviation frequencies");
  add_common_flags(dev, dev_args, true);
  dev->add_option("--ts", ts_text, "comma-separated time targets (must exceed the balancing times)");
  dev->add_option("--ys", ys_text, "comma-separated nonnegative loss offsets");

  CLI::App* check = app.add_subcommand("check", "run the built-in invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);  // prints help or the parse error
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      collect_overrides(sim, sim_args);
      return cmd_simulate(sim_args);
    }
    if (sweep->parsed()) {
      collect_overrides(sweep, sweep_args);
      return cmd_sweep(sweep_args, sizes_text);
    }
    if (dev->parsed()) {
      collect_overrides(dev, dev_args);
      return cmd_deviation(dev_args, ts_text, ys_text);
    }
    if (check->parsed()) {
      return run_self_checks(std::cout) ? 0 : 2;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
