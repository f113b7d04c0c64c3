#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "beamrl/config.hpp"

using namespace beamrl;
using Catch::Approx;

TEST_CASE("empty file yields the full reference defaults", "[config]") {
  std::istringstream empty("");
  const config::RunConfig c = config::load_config_stream(empty);
  CHECK(c.n_bs == 10);
  CHECK(c.n_ue == 3);
  CHECK(c.n_th == 4);
  CHECK(c.n_tv == 4);
  CHECK(c.carrier_freq_hz == 28e9);
  CHECK(c.bandwidth_hz == 5e6);
  CHECK(c.pathloss.exponent == 1.98);
  CHECK(c.pathloss.freq_dep == 0.0);
  CHECK(c.pathloss.ref_freq_hz == 1e9);
  CHECK(c.pathloss.shadow_sigma_db == 3.1);
  CHECK(c.train.gamma == 0.60);
  CHECK(c.train.buffer_capacity == 100000);
  CHECK(c.train.soft_lambda == 0.001);
  CHECK(c.train.eta_a == 0.0001);
  CHECK(c.train.eta_c == 0.001);
  CHECK(c.train.episodes == 1000);
  CHECK(c.train.steps_per_episode == 1000);
  CHECK(c.train.hidden == std::vector<int>{128, 128});
  CHECK(c.explore.eps_bs_decay_rate == 1e-6);
  CHECK(c.sweep.beam_step_deg == 5.0);
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  // sigma_theta horizon defaults to episodes*steps/2
  CHECK(c.sigma_theta_steps_effective() == 500000);
}

TEST_CASE("values parse and override defaults", "[config]") {
  std::istringstream in(
      "# scaled-down scenario\n"
      "scenario.n_bs = 4\n"
      "scenario.n_ue = 2\n"
      "antenna.n_th = 8\n"
      "train.episodes = 300   # short run\n"
      "train.steps_per_episode = 200\n"
      "train.hidden_nodes = [64, 64]\n"
      "seeds = 7, 8, 9\n"
      "out_dir = /tmp/somewhere\n");
  const config::RunConfig c = config::load_config_stream(in);
  CHECK(c.n_bs == 4);
  CHECK(c.n_ue == 2);
  CHECK(c.n_th == 8);
  CHECK(c.train.episodes == 300);
  CHECK(c.train.hidden == std::vector<int>{64, 64});
  CHECK(c.seeds == std::vector<std::uint64_t>{7, 8, 9});
  CHECK(c.out_dir == "/tmp/somewhere");
  CHECK(c.sigma_theta_steps_effective() == 300 * 200 / 2);
}

TEST_CASE("out-of-range gamma is rejected with its invariant", "[config]") {
  std::istringstream in("train.gamma = 1.5\n");
  try {
    config::load_config_stream(in);
    FAIL("expected rejection");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("gamma ∈ [0,1]") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected by name", "[config]") {
  std::istringstream in("foo.bar = 1\n");
  try {
    config::load_config_stream(in);
    FAIL("expected rejection");
  } catch (const config::ConfigError& e) {
    CHECK(std::string(e.what()).find("foo.bar") != std::string::npos);
  }
}

TEST_CASE("every violated invariant is listed at once", "[config]") {
  std::istringstream in(
      "train.gamma = -1\n"
      "scenario.n_ue = 0\n"
      "radio.bandwidth_hz = -5\n");
  try {
    config::load_config_stream(in);
    FAIL("expected rejection");
  } catch (const config::ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("train.gamma") != std::string::npos);
    CHECK(msg.find("scenario.n_ue") != std::string::npos);
    CHECK(msg.find("radio.bandwidth_hz") != std::string::npos);
  }
}

TEST_CASE("malformed lines and values are reported", "[config]") {
  std::istringstream in1("train.gamma 0.5\n");
  CHECK_THROWS_AS(config::parse_config(in1), config::ConfigError);
  std::istringstream in2("train.gamma = banana\n");
  CHECK_THROWS_AS(config::parse_config(in2), config::ConfigError);
  std::istringstream in3("train.episodes = 1.5\n");
  CHECK_THROWS_AS(config::parse_config(in3), config::ConfigError);
}

TEST_CASE("derived environment parameters follow the radio settings", "[config]") {
  std::istringstream empty("");
  const config::RunConfig c = config::load_config_stream(empty);
  const env::EnvParams p = config::make_env_params(c);
  CHECK(p.layout.n_bs() == 10);
  CHECK(p.geom.total_elements() == 16);
  CHECK(p.geom.wavelength_m == Approx(rf::kSpeedOfLight / 28e9));
  CHECK(p.geom.spacing_m == Approx(0.5 * p.geom.wavelength_m));
  CHECK(p.tx_power_w == Approx(1.0).epsilon(1e-12));  // 30 dBm
  // -174 dBm/Hz + 10*log10(5 MHz) + 7 dB noise figure = -100.01 dBm
  CHECK(rf::watt_to_dbm(p.noise_power_w) == Approx(-100.0103).margin(1e-3));
}

TEST_CASE("sigma_theta_steps override is honored", "[config]") {
  std::istringstream in("explore.sigma_theta_steps = 1234\n");
  const config::RunConfig c = config::load_config_stream(in);
  CHECK(c.sigma_theta_steps_effective() == 1234);
  const agent::ExplorationSchedule s = config::make_schedule(c);
  CHECK(s.sigma_theta_steps == 1234);
}

TEST_CASE("sweep exceeding the frame is a load-time violation", "[config]") {
  std::istringstream in("sweep.beam_step_deg = 0.01\n");
  CHECK_THROWS_AS(config::load_config_stream(in), config::ConfigError);
}
