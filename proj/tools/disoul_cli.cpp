// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: seeded trials, parameter sweeps, the weight
// validation experiment and the acceptance selftest.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "disoul/disoul.hpp"
#include "disoul/testing/selftest.hpp"

namespace {

// "a:b:c" inclusive range with step b, or a comma-separated list
std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  const auto colons = std::count(text.begin(), text.end(), ':');
  if (colons == 2) {
    const auto first = text.find(':');
    const auto second = text.find(':', first + 1);
    const double start = std::stod(text.substr(0, first));
    const double step = std::stod(text.substr(first + 1, second - first - 1));
    const double stop = std::stod(text.substr(second + 1));
    if (step == 0.0) throw std::runtime_error("--values range step must be nonzero");
    const int count = static_cast<int>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (int i = 0; i < count; ++i) out.push_back(start + i * step);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(std::stod(item));
  }
  if (out.empty()) throw std::runtime_error("no values given");
  return out;
}

disoul::ScenarioConfig load_scenario(const std::string& config_path,
                                     std::optional<std::uint64_t> seed,
                                     std::optional<std::size_t> trials,
                                     std::optional<std::size_t> workers) {
  disoul::ScenarioConfig cfg;
  if (!config_path.empty()) cfg = disoul::load_config(config_path);
  if (seed) cfg.master_seed = *seed;
  if (trials) cfg.trials = *trials;
  if (workers) cfg.workers = *workers;
  return cfg;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disoul: direct source localization toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> workers;
  std::string methods_text = "disoul,srls,stansfield,bearings";
  std::string out_path;

  auto add_common = [&](CLI::App* sub, bool with_methods) {
    sub->add_option("--config", config_path, "scenario config file (key = value lines)");
    sub->add_option("--seed", seed, "master seed override");
    sub->add_option("--trials", trials, "trial count override");
    sub->add_option("--workers", workers, "worker thread count (0 = hardware)");
    if (with_methods) sub->add_option("--methods", methods_text, "comma-separated method list");
  };

  // trial
  auto* trial_cmd = app.add_subcommand("trial", "run one seeded trial and print the result");
  std::size_t trial_index = 0;
  add_common(trial_cmd, true);
  trial_cmd->add_option("--trial-index", trial_index, "trial index within the seed stream");
  trial_cmd->add_option("--out", out_path, "also write the report to a file");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Monte-Carlo sweep over one parameter");
  std::string param;
  std::string values_text;
  std::string cdf_path;
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--param", param,
                        "parameter: e_n0 | bandwidth | antennas | ray_interarrival | calibration")
      ->required();
  sweep_cmd->add_option("--values", values_text, "range a:b:c or comma list")->required();
  sweep_cmd->add_option("--out", out_path, "CSV output path");
  sweep_cmd->add_option("--cdf-out", cdf_path, "optional pooled error-CDF CSV path");

  // validate-weight
  auto* weight_cmd =
      app.add_subcommand("validate-weight", "weight sweep on the reflector scene");
  double snr_db = 20.0;
  std::string wsq_text = "0.5,1,1.5,2,2.5,3,3.5,4,4.5";
  add_common(weight_cmd, false);
  weight_cmd->add_option("--snr", snr_db, "per-station snapshot SNR in dB");
  weight_cmd->add_option("--wsq", wsq_text, "list of squared weights");
  weight_cmd->add_option("--out", out_path, "CSV output path");

  // selftest
  auto* selftest_cmd = app.add_subcommand("selftest", "run the acceptance suite");
  add_common(selftest_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*trial_cmd) {
      const disoul::ScenarioConfig cfg = load_scenario(config_path, seed, trials, workers);
      const disoul::TrialResult result =
          disoul::run_trial(cfg, trial_index, disoul::parse_methods(methods_text));
      std::ostringstream report;
      disoul::print_trial(report, result);
      std::cout << report.str();
      if (!out_path.empty()) write_file(out_path, report.str());
    } else if (*sweep_cmd) {
      const disoul::ScenarioConfig cfg = load_scenario(config_path, seed, trials, workers);
      const disoul::MetricsTable table =
          disoul::run_sweep(cfg, param, parse_values(values_text),
                            disoul::parse_methods(methods_text));
      std::ostringstream csv;
      disoul::write_sweep_csv(csv, table);
      if (out_path.empty())
        std::cout << csv.str();
      else
        write_file(out_path, csv.str());
      if (!cdf_path.empty()) {
        std::ostringstream cdf;
        disoul::write_cdf_csv(cdf, table);
        write_file(cdf_path, cdf.str());
      }
    } else if (*weight_cmd) {
      disoul::ScenarioConfig cfg = load_scenario(config_path, seed, std::nullopt, workers);
      const auto rows = disoul::run_weight_validation(cfg, snr_db, parse_values(wsq_text),
                                                      trials.value_or(100));
      std::ostringstream csv;
      disoul::write_weight_validation_csv(csv, rows);
      if (out_path.empty())
        std::cout << csv.str();
      else
        write_file(out_path, csv.str());
    } else if (*selftest_cmd) {
      disoul::testing::SelftestOptions options;
      if (workers) options.workers = *workers;
      options.progress = &std::cout;
      // selftest pins its own scenario parameters; config/seed do not apply
      const auto results = disoul::testing::run_acceptance(options);
      return disoul::testing::report_acceptance(std::cout, results);
    }
  } catch (const disoul::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    const std::string what = e.what();
    if (what.find("config") != std::string::npos) {
      std::cerr << "config error: " << what << "\n";
      return 1;
    }
    std::cerr << "error: " << what << "\n";
    return 2;
  }
  return 0;
}
