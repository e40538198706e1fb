#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sprophet/harness.hpp"
#include "sprophet/io.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Sample-based matroid prophet inequality and OCRS experiments"};
  std::string kind;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::optional<double> eps;
  std::optional<std::size_t> threads;
  std::string out_path;
  std::string csv_path;
  std::string save_policies;

  app.add_option("kind", kind,
                 "selectability | prophet-ratio | thresholds-diagnostic | lower-bound | decomposition-stats")
      ->required();
  app.add_option("--config", config_path, "experiment config (JSON)")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--trials", trials, "trial count (overrides the config)");
  app.add_option("--eps", eps, "accuracy parameter (overrides the config)");
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  app.add_option("--csv", csv_path, "also write the CSV table here");
  app.add_option("--threads", threads, "worker threads; results do not depend on it");
  app.add_option("--save-policies", save_policies, "prophet-ratio: write trained policies as PREFIX-<i>.json");
  CLI11_PARSE(app, argc, argv);

  sprophet::ExperimentConfig cfg;
  try {
    const auto requested = sprophet::experiment_kind_from_string(kind);
    if (!requested) throw sprophet::ConfigError("<command line>", "unknown experiment kind '" + kind + "'");
    auto json = sprophet::parse_json_text(sprophet::read_text_file(config_path), config_path);
    if (json.is_object() && !json.contains("kind")) json["kind"] = kind;
    cfg = sprophet::parse_config(json);
    if (cfg.kind != *requested) {
      throw sprophet::ConfigError(config_path + ":/kind", "config is for '" + sprophet::to_string(cfg.kind) +
                                                              "', not '" + kind + "'");
    }
  } catch (const sprophet::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (seed) cfg.seed = *seed;
  if (trials) cfg.trials = *trials;
  if (eps) cfg.eps = *eps;
  if (threads) cfg.threads = *threads;
  if (cfg.trials < 1 || cfg.threads < 1) {
    std::cerr << "error: --trials and --threads must be at least 1\n";
    return 2;
  }

  const sprophet::Report report = sprophet::run_experiment(cfg);
  const std::string text = sprophet::report_to_json(report).dump(2) + "\n";
  try {
    if (out_path.empty()) {
      std::cout << text;
    } else {
      sprophet::write_text_file(out_path, text);
    }
    if (!csv_path.empty()) sprophet::write_text_file(csv_path, sprophet::report_to_csv(report));
    if (!save_policies.empty() && report.ok() && cfg.kind == sprophet::ExperimentKind::kProphetRatio &&
        cfg.policy_files.empty()) {
      const auto inst = sprophet::make_instance(cfg.matroid, cfg.distributions);
      const auto options = sprophet::resolve_train_options(cfg);
      for (std::size_t p = 0; p < cfg.policies; ++p) {
        const auto policy = sprophet::train(inst, cfg.eps, sprophet::derive_seed(cfg.seed, "policy", p), options);
        sprophet::save_policy(save_policies + "-" + std::to_string(p) + ".json", policy);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  if (!report.ok()) {
    std::cerr << report.status << ": " << report.message << "\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
