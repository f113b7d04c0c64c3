#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "beamrl/harness.hpp"

using namespace beamrl;
using Catch::Approx;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

config::RunConfig tiny_cfg(const std::string& out_dir) {
  config::RunConfig c;
  c.n_bs = 3;
  c.n_ue = 2;
  c.train.episodes = 2;
  c.train.steps_per_episode = 3;
  c.train.batch_n = 4;
  c.train.buffer_capacity = 64;
  c.train.hidden = {8, 8};
  c.seeds = {1, 2};
  c.out_dir = out_dir;
  return c;
}

int count_data_rows(const std::string& csv) {
  int rows = 0;
  bool first = true;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line)) {
    if (first) {
      first = false;
      continue;
    }
    if (!line.empty()) ++rows;
  }
  return rows;
}

}  // namespace

TEST_CASE("training emits one CSV row per episode", "[harness]") {
  const std::string out = "build_test_out/rows";
  std::filesystem::remove_all(out);
  const auto res = harness::run_training(tiny_cfg(out), agent::Variant::proposed);
  REQUIRE(res.per_seed.size() == 2);
  for (const auto& s : res.per_seed) {
    CHECK(count_data_rows(slurp(s.csv_path)) == 2);
    CHECK(std::filesystem::exists(s.checkpoint_path));
  }
  CHECK(count_data_rows(slurp(res.mean_csv_path)) == 2);
  const std::string csv = slurp(res.per_seed[0].csv_path);
  CHECK(csv.rfind("episode,mean_rate\n", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical CSVs", "[harness]") {
  auto c1 = tiny_cfg("build_test_out/det1");
  auto c2 = tiny_cfg("build_test_out/det2");
  std::filesystem::remove_all(c1.out_dir);
  std::filesystem::remove_all(c2.out_dir);
  const auto r1 = harness::run_training(c1, agent::Variant::proposed);
  const auto r2 = harness::run_training(c2, agent::Variant::proposed);
  CHECK(slurp(r1.per_seed[0].csv_path) == slurp(r2.per_seed[0].csv_path));
  CHECK(slurp(r1.per_seed[1].csv_path) == slurp(r2.per_seed[1].csv_path));
  CHECK(slurp(r1.mean_csv_path) == slurp(r2.mean_csv_path));
  // checkpoints too
  CHECK(slurp(r1.per_seed[0].checkpoint_path) == slurp(r2.per_seed[0].checkpoint_path));
}

TEST_CASE("the seed-averaged curve is the arithmetic mean", "[harness]") {
  auto cfg = tiny_cfg("build_test_out/mean");
  std::filesystem::remove_all(cfg.out_dir);
  const auto res = harness::run_training(cfg, agent::Variant::proposed);
  for (std::size_t e = 0; e < res.per_seed[0].episode_rates.size(); ++e) {
    const double avg =
        (res.per_seed[0].episode_rates[e] + res.per_seed[1].episode_rates[e]) / 2.0;
    // re-read the printed value: %.17g round-trips doubles exactly
    std::ifstream f(res.mean_csv_path);
    std::string line;
    std::getline(f, line);  // header
    for (std::size_t k = 0; k <= e; ++k) std::getline(f, line);
    const double printed = std::stod(line.substr(line.find(',') + 1));
    CHECK(printed == Approx(avg).margin(1e-18));
  }
}

TEST_CASE("every variant trains end to end at toy scale", "[harness]") {
  for (auto v : {agent::Variant::vanilla, agent::Variant::bs_oracle,
                 agent::Variant::angle_oracle}) {
    auto cfg = tiny_cfg(std::string("build_test_out/var_") + agent::variant_name(v));
    cfg.seeds = {1};
    std::filesystem::remove_all(cfg.out_dir);
    const auto res = harness::run_training(cfg, v);
    CHECK(res.per_seed.size() == 1);
    CHECK(res.per_seed[0].episode_rates.size() == 2);
    for (double r : res.per_seed[0].episode_rates) CHECK(r >= 0.0);
  }
}

TEST_CASE("evaluation emits a monotone CDF from 1/n to 1", "[harness]") {
  auto cfg = tiny_cfg("build_test_out/eval");
  std::filesystem::remove_all(cfg.out_dir);
  const auto policy = harness::make_random_policy(cfg.n_ue, cfg.n_bs, 123);
  const auto res = harness::run_eval(policy, cfg, 50, 1);
  CHECK(res.rates.size() == 50);

  std::ifstream f(res.csv_path);
  std::string line;
  std::getline(f, line);
  CHECK(line == "rate,cdf");
  double prev_rate = -1e300, prev_cdf = 0.0, cdf = 0.0;
  int rows = 0;
  while (std::getline(f, line)) {
    const auto comma = line.find(',');
    const double rate = std::stod(line.substr(0, comma));
    cdf = std::stod(line.substr(comma + 1));
    CHECK(rate >= prev_rate);
    CHECK(cdf > prev_cdf);
    prev_rate = rate;
    prev_cdf = cdf;
    ++rows;
    if (rows == 1) CHECK(cdf == Approx(1.0 / 50.0));
  }
  CHECK(rows == 50);
  CHECK(cdf == Approx(1.0));
}

TEST_CASE("checkpoints evaluate through the harness", "[harness]") {
  auto cfg = tiny_cfg("build_test_out/ckpt");
  cfg.seeds = {1};
  std::filesystem::remove_all(cfg.out_dir);
  const auto train = harness::run_training(cfg, agent::Variant::proposed);
  const auto policy = harness::load_checkpoint_policy(train.per_seed[0].checkpoint_path);
  const auto res = harness::run_eval(policy, cfg, 20, 5);
  CHECK(res.rates.size() == 20);
  CHECK(res.mean_rate >= 0.0);

  // frozen policies are deterministic: same seed, same result
  const auto res2 = harness::run_eval(policy, cfg, 20, 5, /*write_csv=*/false);
  CHECK(res2.mean_rate == res.mean_rate);

  CHECK_THROWS(harness::load_checkpoint_policy("build_test_out/ckpt/missing.ckpt"));
}

TEST_CASE("oracle-assisted variants evaluate through the harness", "[harness]") {
  for (auto v : {agent::Variant::bs_oracle, agent::Variant::angle_oracle}) {
    auto cfg = tiny_cfg(std::string("build_test_out/eval_") + agent::variant_name(v));
    cfg.seeds = {1};
    std::filesystem::remove_all(cfg.out_dir);
    const auto train = harness::run_training(cfg, v);
    const auto policy = harness::load_checkpoint_policy(train.per_seed[0].checkpoint_path);
    const auto res = harness::run_eval(policy, cfg, 10, 2, /*write_csv=*/false);
    CHECK(res.rates.size() == 10);
  }
}

TEST_CASE("compare writes a combined summary", "[harness]") {
  auto cfg = tiny_cfg("build_test_out/compare");
  cfg.seeds = {1};
  std::filesystem::remove_all(cfg.out_dir);
  const auto train = harness::run_training(cfg, agent::Variant::proposed);
  const auto rows = harness::run_compare(
      cfg, 20, {{"proposed", train.per_seed[0].checkpoint_path}});
  REQUIRE(rows.size() == 4);  // random, oracle, sweep, proposed
  CHECK(rows[0].policy == "random");
  CHECK(rows[1].policy == "oracle");
  CHECK(rows[2].policy == "sweep");
  CHECK(rows[3].policy == "proposed");
  // the genie upper-bounds the others on the same evaluation seed
  CHECK(rows[1].mean_rate >= rows[0].mean_rate);
  CHECK(rows[1].mean_rate >= rows[2].mean_rate);
  const std::string summary = slurp(cfg.out_dir + "/summary.csv");
  CHECK(summary.rfind("policy,mean_rate\n", 0) == 0);
  CHECK(count_data_rows(summary) == 4);
}

TEST_CASE("derive_seed decorrelates streams", "[harness]") {
  CHECK(harness::derive_seed(1, 0) != harness::derive_seed(1, 1));
  CHECK(harness::derive_seed(1, 0) != harness::derive_seed(2, 0));
  CHECK(harness::derive_seed(7, 3) == harness::derive_seed(7, 3));
}
