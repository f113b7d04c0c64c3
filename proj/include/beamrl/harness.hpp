// Orchestration: the training outer loop, frozen-policy evaluation, policy
// comparison, and CSV metric emission. Every run is a pure function of
// (config, seed); rates are printed with 17 significant digits so files are
// byte-stable and re-parse to the exact double.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamrl/agent.hpp"
#include "beamrl/baselines.hpp"
#include "beamrl/config.hpp"
#include "beamrl/env.hpp"

namespace beamrl::harness {

// splitmix64 scramble; decorrelates the per-purpose RNG streams of one seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_rate_evolution_csv(const std::string& path,
                                     const std::vector<double>& episode_rates) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << "episode,mean_rate\n";
  for (std::size_t e = 0; e < episode_rates.size(); ++e) {
    f << (e + 1) << "," << fmt_double(episode_rates[e]) << "\n";
  }
}

inline void write_rate_cdf_csv(const std::string& path, std::vector<double> rates) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  std::sort(rates.begin(), rates.end());
  f << "rate,cdf\n";
  const double n = static_cast<double>(rates.size());
  for (std::size_t k = 0; k < rates.size(); ++k) {
    f << fmt_double(rates[k]) << "," << fmt_double(static_cast<double>(k + 1) / n) << "\n";
  }
}

// ---------------------------------------------------------------------------
// Training (the outer loop of the learning algorithm)

struct SeedTrainResult {
  std::uint64_t seed = 0;
  std::vector<double> episode_rates;  // one entry per episode
  std::string checkpoint_path;
  std::string csv_path;
};

struct TrainResult {
  std::vector<SeedTrainResult> per_seed;
  std::string mean_csv_path;
};

inline std::vector<double> observe(const env::Environment& e, agent::Variant v) {
  return v == agent::Variant::bs_oracle ? e.oracle_state().vec : e.state().vec;
}

// One full training run: M episodes of T steps, exploration per schedule,
// one gradient update per step once the buffer holds a minibatch.
inline agent::DdpgAgent train_one_seed(const config::RunConfig& cfg, agent::Variant variant,
                                       std::uint64_t seed, std::vector<double>& episode_rates) {
  env::Environment e(config::make_env_params(cfg));
  agent::DdpgAgent a = agent::make_variant(variant, cfg.n_ue, cfg.n_bs, cfg.train,
                                           config::make_schedule(cfg), derive_seed(seed, 1));
  episode_rates.clear();
  episode_rates.reserve(cfg.train.episodes);
  const bool wants_genie = a.needs_genie_angles();

  for (int ep = 1; ep <= cfg.train.episodes; ++ep) {
    e.reset(derive_seed(seed, 1000 + static_cast<std::uint64_t>(ep)));
    std::vector<double> obs = observe(e, variant);
    std::vector<double> genie = wants_genie ? e.genie_angle_units() : std::vector<double>{};
    double ep_sum = 0.0;
    for (int t = 0; t < cfg.train.steps_per_episode; ++t) {
      const agent::ActorEval raw =
          agent::actor_forward(a.actor, obs, wants_genie ? &genie : nullptr);
      const agent::ExploredAction act = agent::explore_and_resolve(
          raw, a.schedule, variant, a.global_step, a.rng, wants_genie ? &genie : nullptr);
      const env::Environment::StepResult sr = e.step(act.resolved);
      std::vector<double> next_obs = observe(e, variant);
      std::vector<double> next_genie =
          wants_genie ? e.genie_angle_units() : std::vector<double>{};

      agent::Experience exp;
      exp.state = obs;
      exp.action = act.flat;
      exp.reward = sr.reward;
      exp.next_state = next_obs;
      exp.genie_units = genie;
      exp.next_genie_units = next_genie;
      a.buffer.push(std::move(exp));
      agent::maybe_update(a);
      a.global_step += 1;

      ep_sum += sr.reward;
      obs = std::move(next_obs);
      genie = std::move(next_genie);
    }
    episode_rates.push_back(ep_sum / cfg.train.steps_per_episode);
  }
  return a;
}

// Trains every seed, writing one rate-evolution CSV per seed, a seed-averaged
// CSV and a final checkpoint per seed.
inline TrainResult run_training(const config::RunConfig& cfg, agent::Variant variant) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  TrainResult out;
  const std::string vname = agent::variant_name(variant);

  for (std::uint64_t seed : cfg.seeds) {
    SeedTrainResult r;
    r.seed = seed;
    agent::DdpgAgent a = train_one_seed(cfg, variant, seed, r.episode_rates);
    r.csv_path =
        cfg.out_dir + "/" + vname + "_seed" + std::to_string(seed) + "_rate_evolution.csv";
    write_rate_evolution_csv(r.csv_path, r.episode_rates);
    r.checkpoint_path = cfg.out_dir + "/" + vname + "_seed" + std::to_string(seed) + ".ckpt";
    std::ofstream ck(r.checkpoint_path, std::ios::binary);
    if (!ck) throw std::runtime_error("cannot write '" + r.checkpoint_path + "'");
    agent::save_checkpoint(ck, a);
    out.per_seed.push_back(std::move(r));
  }

  std::vector<double> mean(out.per_seed.front().episode_rates.size(), 0.0);
  for (const auto& r : out.per_seed) {
    for (std::size_t e = 0; e < mean.size(); ++e) mean[e] += r.episode_rates[e];
  }
  for (double& m : mean) m /= static_cast<double>(out.per_seed.size());
  out.mean_csv_path = cfg.out_dir + "/" + vname + "_rate_evolution_mean.csv";
  write_rate_evolution_csv(out.mean_csv_path, mean);
  return out;
}

// ---------------------------------------------------------------------------
// Evaluation of frozen policies

// A policy maps the live environment to a beam command; rates it achieves are
// scaled by duty (1 except for the sweep, which spends frame time scanning).
struct Policy {
  std::string name;
  std::function<env::ResolvedAction(const env::Environment&)> act;
  double duty = 1.0;
};

inline Policy make_random_policy(int n_ue, int n_bs, std::uint64_t seed) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return Policy{"random",
                [n_ue, n_bs, rng](const env::Environment&) {
                  return baselines::random_policy(n_ue, n_bs, *rng);
                },
                1.0};
}

inline Policy make_oracle_policy() {
  return Policy{"oracle",
                [](const env::Environment& e) { return baselines::oracle_policy(e).action; },
                1.0};
}

inline Policy make_sweep_policy(const baselines::SweepConfig& sweep) {
  const double duty = baselines::duty_factor(sweep, baselines::sweep_azimuths(sweep).size());
  return Policy{"sweep",
                [sweep](const env::Environment& e) {
                  return baselines::bs_sweep_policy(e, sweep).action;
                },
                duty};
}

// Greedy (noiseless) policy from a trained agent's actor.
inline Policy make_agent_policy(std::shared_ptr<agent::DdpgAgent> a, std::string name) {
  return Policy{std::move(name),
                [a](const env::Environment& e) {
                  const bool wants_genie = a->needs_genie_angles();
                  const std::vector<double> obs = observe(e, a->variant);
                  std::vector<double> genie;
                  if (wants_genie) genie = e.genie_angle_units();
                  const agent::ActorEval raw =
                      agent::actor_forward(a->actor, obs, wants_genie ? &genie : nullptr);
                  if (wants_genie) {
                    env::ResolvedAction act(a->n_ue);
                    for (int i = 0; i < a->n_ue; ++i) {
                      act[i] = e.genie_angles(i, agent::argmax_lowest(raw.bs_scores[i]));
                    }
                    return act;
                  }
                  return agent::resolve_noiseless(raw);
                },
                1.0};
}

inline Policy load_checkpoint_policy(const std::string& path, std::string name = "") {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint '" + path + "'");
  auto a = std::make_shared<agent::DdpgAgent>(agent::load_checkpoint(f));
  if (name.empty()) name = std::filesystem::path(path).stem().string();
  return make_agent_policy(std::move(a), std::move(name));
}

struct EvalResult {
  std::string policy;
  double mean_rate = 0.0;
  std::vector<double> rates;  // duty-weighted, one per observation
  std::string csv_path;
};

// Runs the frozen policy for n_observations steps (episodes of the configured
// length, fresh scenario per episode) and emits the empirical rate CDF.
inline EvalResult run_eval(const Policy& policy, const config::RunConfig& cfg,
                           int n_observations, std::uint64_t seed, bool write_csv = true) {
  env::Environment e(config::make_env_params(cfg));
  EvalResult out;
  out.policy = policy.name;
  out.rates.reserve(n_observations);
  int ep = 0;
  while (static_cast<int>(out.rates.size()) < n_observations) {
    ++ep;
    e.reset(derive_seed(seed, (1ULL << 32) + static_cast<std::uint64_t>(ep)));
    for (int t = 0; t < cfg.train.steps_per_episode &&
                    static_cast<int>(out.rates.size()) < n_observations;
         ++t) {
      const env::ResolvedAction act = policy.act(e);
      const env::Environment::StepResult sr = e.step(act);
      out.rates.push_back(policy.duty * sr.reward);
    }
  }
  double sum = 0.0;
  for (double r : out.rates) sum += r;
  out.mean_rate = sum / static_cast<double>(out.rates.size());
  if (write_csv) {
    std::filesystem::create_directories(cfg.out_dir);
    out.csv_path = cfg.out_dir + "/rate_cdf_" + policy.name + "_seed" + std::to_string(seed) +
                   ".csv";
    write_rate_cdf_csv(out.csv_path, out.rates);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison table

struct CompareRow {
  std::string policy;
  double mean_rate = 0.0;
};

// Evaluates the non-learning baselines plus any supplied checkpoints on the
// first configured seed and writes a combined summary table.
inline std::vector<CompareRow> run_compare(
    const config::RunConfig& cfg, int n_observations,
    const std::vector<std::pair<std::string, std::string>>& checkpoints) {
  const std::uint64_t seed = cfg.seeds.front();
  std::vector<Policy> policies;
  policies.push_back(make_random_policy(cfg.n_ue, cfg.n_bs, derive_seed(seed, 77)));
  policies.push_back(make_oracle_policy());
  policies.push_back(make_sweep_policy(cfg.sweep));
  for (const auto& [label, path] : checkpoints) {
    policies.push_back(load_checkpoint_policy(path, label));
  }

  std::vector<CompareRow> rows;
  for (const auto& p : policies) {
    const EvalResult r = run_eval(p, cfg, n_observations, seed);
    rows.push_back({p.name, r.mean_rate});
  }

  std::filesystem::create_directories(cfg.out_dir);
  const std::string path = cfg.out_dir + "/summary.csv";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path + "'");
  f << "policy,mean_rate\n";
  for (const auto& row : rows) f << row.policy << "," << fmt_double(row.mean_rate) << "\n";
  return rows;
}

}  // namespace beamrl::harness
