// SPDX-License-Identifier: Apache-2.0
//
// Scenario runner for the massive-MIMO DPD simulator.
//   dpdsim run <config.json>        full scenario, CSV artifacts + summary
//   dpdsim sweep <config.json>      scheme x order sweep with comparison.csv
//   dpdsim flops                    forward-path complexity table

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dpdsim/csvio.hpp"
#include "dpdsim/errors.hpp"
#include "dpdsim/scenario.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitIo = 4;

struct SeedOverrides {
  std::optional<std::uint64_t> channel;
  std::optional<std::uint64_t> training;
  std::optional<std::uint64_t> evaluation;
};

void apply_overrides(dpdsim::ScenarioConfig& cfg, const SeedOverrides& seeds,
                     const std::string& out_dir) {
  if (seeds.channel) cfg.seeds.channel = *seeds.channel;
  if (seeds.training) cfg.seeds.training = *seeds.training;
  if (seeds.evaluation) cfg.seeds.evaluation = *seeds.evaluation;
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  cfg.validate();
}

void write_artifacts(const dpdsim::ScenarioConfig& cfg,
                     const std::vector<dpdsim::SchemeResult>& results) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);
  const auto path = [&](const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
  };

  dpdsim::write_text_atomic(path("metrics.csv"), dpdsim::metrics_csv(results));
  for (const auto& r : results)
    dpdsim::write_text_atomic(path("psd_" + r.spec.tag() + ".csv"), dpdsim::psd_csv(r.psd));

  // error_history.csv carries the primary trained scheme (first proposed
  // entry, else the first trained one); per-scheme copies alongside.
  const dpdsim::SchemeResult* primary = nullptr;
  for (const auto& r : results) {
    if (r.error_history.empty()) continue;
    dpdsim::write_text_atomic(path("error_history_" + r.spec.tag() + ".csv"),
                              dpdsim::error_history_csv(r.error_history));
    if (!primary || (primary->spec.kind != dpdsim::SchemeKind::Proposed &&
                     r.spec.kind == dpdsim::SchemeKind::Proposed))
      primary = &r;
  }
  if (primary)
    dpdsim::write_text_atomic(path("error_history.csv"),
                              dpdsim::error_history_csv(primary->error_history));

  dpdsim::write_text_atomic(path("summary.txt"), dpdsim::summary_table(results));
}

int run_scenario(dpdsim::ScenarioConfig cfg, bool with_comparison) {
  const std::vector<dpdsim::SchemeResult> results = dpdsim::evaluate(cfg);
  write_artifacts(cfg, results);
  if (with_comparison) {
    namespace fs = std::filesystem;
    dpdsim::write_text_atomic((fs::path(cfg.output_dir) / "comparison.csv").string(),
                              dpdsim::comparison_csv(results, cfg.memory_depth));
  }
  std::cout << dpdsim::summary_table(results);
  std::cout << "artifacts written to " << cfg.output_dir << "\n";
  return 0;
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::string item;
  std::istringstream is(csv);
  while (std::getline(is, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw dpdsim::ConfigError("bad integer in list: '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"baseband massive-MIMO digital predistortion simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  SeedOverrides seeds;

  const auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "scenario config (JSON)")->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--seed-channel", seeds.channel, "channel seed override");
    cmd->add_option("--seed-training", seeds.training, "training-frame seed override");
    cmd->add_option("--seed-evaluation", seeds.evaluation, "evaluation-frame seed override");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "run the scenario's scheme list");
  add_common(run_cmd);

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "scheme x order sweep");
  add_common(sweep_cmd);
  std::string sweep_schemes, sweep_orders;
  sweep_cmd->add_option("--schemes", sweep_schemes,
                        "comma list of no_dpd,conventional,proposed")->required();
  sweep_cmd->add_option("--orders", sweep_orders, "comma list of polynomial orders K")->required();

  CLI::App* flops_cmd = app.add_subcommand("flops", "forward-path FLOP table");
  std::string flops_orders = "3,9,11";
  int flops_q = 5;
  int flops_nt = 100;
  std::string flops_out;
  flops_cmd->add_option("--orders", flops_orders, "comma list of K values");
  flops_cmd->add_option("--memory", flops_q, "memory depth Q");
  flops_cmd->add_option("--antennas", flops_nt, "antenna count N_t");
  flops_cmd->add_option("--out", flops_out, "also write flops.csv into this directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      dpdsim::ScenarioConfig cfg = dpdsim::load_scenario(config_path);
      apply_overrides(cfg, seeds, out_dir);
      return run_scenario(cfg, false);
    }

    if (sweep_cmd->parsed()) {
      dpdsim::ScenarioConfig cfg = dpdsim::load_scenario(config_path);
      apply_overrides(cfg, seeds, out_dir);
      const std::vector<int> orders = parse_int_list(sweep_orders);
      std::vector<dpdsim::SchemeSpec> specs;
      std::string name;
      std::istringstream is(sweep_schemes);
      bool saw_no_dpd = false;
      while (std::getline(is, name, ',')) {
        if (name.empty()) continue;
        if (name == "no_dpd") {
          if (!saw_no_dpd) specs.push_back({dpdsim::SchemeKind::NoDpd, 0, std::nullopt});
          saw_no_dpd = true;
          continue;
        }
        for (int k : orders) {
          dpdsim::SchemeSpec spec;
          spec.kind = name == "conventional" ? dpdsim::SchemeKind::Conventional
                      : name == "proposed"   ? dpdsim::SchemeKind::Proposed
                                             : throw dpdsim::ConfigError(
                                                   "--schemes: unknown scheme '" + name + "'");
          spec.order = k;
          specs.push_back(spec);
        }
      }
      if (specs.empty()) throw dpdsim::ConfigError("sweep: empty scheme/order specification");
      cfg.schemes = specs;
      return run_scenario(cfg, true);
    }

    if (flops_cmd->parsed()) {
      const std::vector<int> orders = parse_int_list(flops_orders);
      if (orders.empty()) throw dpdsim::ConfigError("flops: empty order list");
      const int k_max = *std::max_element(orders.begin(), orders.end());
      std::string csv = "K,flops,savings_vs_max_K\n";
      std::printf("Q=%d, N_t=%d\n", flops_q, flops_nt);
      std::printf("%6s %12s %18s\n", "K", "FLOPs",
                  ("savings vs K=" + std::to_string(k_max)).c_str());
      for (int k : orders) {
        const auto rep = dpdsim::flops(k, flops_q, flops_nt);
        const long long savings = dpdsim::flop_savings(k_max, k, flops_q, flops_nt);
        std::printf("%6d %12lld %20lld\n", k, rep.flops, savings);
        csv += std::to_string(k) + "," + std::to_string(rep.flops) + "," +
               std::to_string(savings) + "\n";
      }
      if (!flops_out.empty()) {
        std::filesystem::create_directories(flops_out);
        dpdsim::write_text_atomic(
            (std::filesystem::path(flops_out) / "flops.csv").string(), csv);
      }
      return 0;
    }
  } catch (const dpdsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dpdsim::DivergenceError& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::runtime_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
