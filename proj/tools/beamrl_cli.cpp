// Command-line front end: train agents, evaluate frozen policies, and build
// comparison tables. See README.md for the config file keys.
#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "beamrl/beamrl.hpp"

namespace {

beamrl::config::RunConfig load_or_default(const std::string& path) {
  if (path.empty()) {
    beamrl::config::RunConfig cfg;
    return cfg;
  }
  return beamrl::config::load_config(path);
}

int cmd_train(const std::string& config_path, const std::string& variant_name,
              long seed_override, const std::string& out_override) {
  beamrl::config::RunConfig cfg = load_or_default(config_path);
  if (seed_override >= 0) cfg.seeds = {static_cast<std::uint64_t>(seed_override)};
  if (!out_override.empty()) cfg.out_dir = out_override;
  const beamrl::agent::Variant variant = beamrl::agent::variant_from_name(variant_name);

  const beamrl::harness::TrainResult res = beamrl::harness::run_training(cfg, variant);
  for (const auto& s : res.per_seed) {
    std::printf("seed %llu: final-episode mean rate %.4f bits/s/Hz -> %s\n",
                static_cast<unsigned long long>(s.seed), s.episode_rates.back(),
                s.csv_path.c_str());
    std::printf("seed %llu: checkpoint %s\n", static_cast<unsigned long long>(s.seed),
                s.checkpoint_path.c_str());
  }
  std::printf("seed-averaged curve: %s\n", res.mean_csv_path.c_str());
  return 0;
}

int cmd_eval(const std::string& config_path, const std::string& policy, int n_obs,
             long seed_override, const std::string& out_override) {
  beamrl::config::RunConfig cfg = load_or_default(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  const std::uint64_t seed =
      seed_override >= 0 ? static_cast<std::uint64_t>(seed_override) : cfg.seeds.front();

  beamrl::harness::Policy p;
  if (policy == "random") {
    p = beamrl::harness::make_random_policy(cfg.n_ue, cfg.n_bs,
                                            beamrl::harness::derive_seed(seed, 77));
  } else if (policy == "oracle") {
    p = beamrl::harness::make_oracle_policy();
  } else if (policy == "sweep") {
    p = beamrl::harness::make_sweep_policy(cfg.sweep);
  } else {
    p = beamrl::harness::load_checkpoint_policy(policy);
  }

  const beamrl::harness::EvalResult r = beamrl::harness::run_eval(p, cfg, n_obs, seed);
  std::printf("%s: mean rate %.6f bits/s/Hz over %d observations -> %s\n", r.policy.c_str(),
              r.mean_rate, static_cast<int>(r.rates.size()), r.csv_path.c_str());
  return 0;
}

int cmd_compare(const std::string& config_path, int n_obs,
                const std::vector<std::string>& checkpoint_args,
                const std::string& out_override) {
  beamrl::config::RunConfig cfg = load_or_default(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;

  std::vector<std::pair<std::string, std::string>> checkpoints;
  for (const auto& arg : checkpoint_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
      checkpoints.emplace_back("", arg);
    } else {
      checkpoints.emplace_back(arg.substr(0, eq), arg.substr(eq + 1));
    }
  }
  for (auto& [label, path] : checkpoints) {
    if (label.empty()) label = std::filesystem::path(path).stem().string();
  }

  const auto rows = beamrl::harness::run_compare(cfg, n_obs, checkpoints);
  std::printf("%-24s %s\n", "policy", "mean_rate (bits/s/Hz)");
  for (const auto& row : rows) std::printf("%-24s %.6f\n", row.policy.c_str(), row.mean_rate);
  std::printf("summary: %s/summary.csv\n", cfg.out_dir.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave blind beam alignment testbed: system simulator, DRL agents, baselines"};
  app.require_subcommand(1);

  std::string config_path;
  std::string variant = "proposed";
  std::string policy;
  std::string out_dir;
  long seed = -1;
  int n_obs = 10000;
  std::vector<std::string> checkpoints;

  CLI::App* train = app.add_subcommand("train", "train a DRL agent and emit rate-evolution CSVs");
  train->add_option("--config", config_path, "config file (defaults apply when omitted)");
  train->add_option("--variant", variant,
                    "agent variant: proposed|vanilla|bs-oracle|angle-oracle");
  train->add_option("--seed", seed, "train a single seed instead of the configured list");
  train->add_option("--out", out_dir, "output directory override");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a frozen policy and emit the rate CDF");
  eval->add_option("--policy", policy, "checkpoint path, or one of: random|oracle|sweep")
      ->required();
  eval->add_option("--config", config_path, "config file (defaults apply when omitted)");
  eval->add_option("--n-obs", n_obs, "number of observations (steps)");
  eval->add_option("--seed", seed, "evaluation seed (default: first configured seed)");
  eval->add_option("--out", out_dir, "output directory override");

  CLI::App* compare = app.add_subcommand("compare", "evaluate baselines plus checkpoints");
  compare->add_option("--config", config_path, "config file (defaults apply when omitted)");
  compare->add_option("--n-obs", n_obs, "number of observations per policy");
  compare->add_option("--checkpoint", checkpoints, "label=path of a trained checkpoint")
      ->take_all();
  compare->add_option("--out", out_dir, "output directory override");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, variant, seed, out_dir);
    if (eval->parsed()) return cmd_eval(config_path, policy, n_obs, seed, out_dir);
    if (compare->parsed()) return cmd_compare(config_path, n_obs, checkpoints, out_dir);
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}
