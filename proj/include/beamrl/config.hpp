// Run configuration: dotted key=value files, scenario/radio/training knobs,
// strict validation with per-key diagnostics. An empty file yields the full
// reference defaults.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "beamrl/agent.hpp"
#include "beamrl/baselines.hpp"
#include "beamrl/env.hpp"
#include "beamrl/rf.hpp"

namespace beamrl::config {

struct RunConfig {
  // scenario
  int n_bs = 10;
  int n_ue = 3;
  std::string layout = "four_junction";
  // antenna
  int n_th = 4;
  int n_tv = 4;
  double spacing_over_lambda = 0.5;
  // radio
  double carrier_freq_hz = 28e9;
  double bandwidth_hz = 5e6;
  double tx_power_dbm = 30.0;
  double noise_figure_db = 7.0;
  double beacon_power_dbm = 0.0;
  // pathloss (Street Canyon defaults)
  rf::PathLossParams pathloss;
  // training
  agent::TrainConfig train;
  // exploration; sigma_theta_steps < 0 means "derive episodes*steps/2"
  agent::ExplorationSchedule explore{1.0, 1e-6, 0.5, 0.01, -1};
  // sweep baseline
  baselines::SweepConfig sweep;
  // run control
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "out";

  std::int64_t sigma_theta_steps_effective() const {
    if (explore.sigma_theta_steps >= 0) return explore.sigma_theta_steps;
    return static_cast<std::int64_t>(train.episodes) * train.steps_per_episode / 2;
  }
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::string body = trim(s);
  if (!body.empty() && body.front() == '[' && body.back() == ']') {
    body = body.substr(1, body.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": cannot parse '" + v + "' as a number");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  const double d = to_double(key, v);
  const long l = static_cast<long>(d);
  if (static_cast<double>(l) != d) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return l;
}

}  // namespace detail

// Parses `key = value` lines ('#' starts a comment). Unknown keys are
// rejected by name; values may be numbers, strings, or comma-separated lists.
inline RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }

    if (key == "scenario.n_bs") cfg.n_bs = static_cast<int>(detail::to_long(key, val));
    else if (key == "scenario.n_ue") cfg.n_ue = static_cast<int>(detail::to_long(key, val));
    else if (key == "scenario.layout") cfg.layout = val;
    else if (key == "antenna.n_th") cfg.n_th = static_cast<int>(detail::to_long(key, val));
    else if (key == "antenna.n_tv") cfg.n_tv = static_cast<int>(detail::to_long(key, val));
    else if (key == "antenna.spacing_over_lambda") cfg.spacing_over_lambda = detail::to_double(key, val);
    else if (key == "radio.carrier_freq_hz") cfg.carrier_freq_hz = detail::to_double(key, val);
    else if (key == "radio.bandwidth_hz") cfg.bandwidth_hz = detail::to_double(key, val);
    else if (key == "radio.tx_power_dbm") cfg.tx_power_dbm = detail::to_double(key, val);
    else if (key == "radio.noise_figure_db") cfg.noise_figure_db = detail::to_double(key, val);
    else if (key == "radio.beacon_power_dbm") cfg.beacon_power_dbm = detail::to_double(key, val);
    else if (key == "pathloss.exponent") cfg.pathloss.exponent = detail::to_double(key, val);
    else if (key == "pathloss.freq_dep") cfg.pathloss.freq_dep = detail::to_double(key, val);
    else if (key == "pathloss.ref_freq_hz") cfg.pathloss.ref_freq_hz = detail::to_double(key, val);
    else if (key == "pathloss.shadow_sigma_db") cfg.pathloss.shadow_sigma_db = detail::to_double(key, val);
    else if (key == "train.gamma") cfg.train.gamma = detail::to_double(key, val);
    else if (key == "train.soft_lambda") cfg.train.soft_lambda = detail::to_double(key, val);
    else if (key == "train.eta_a") cfg.train.eta_a = detail::to_double(key, val);
    else if (key == "train.eta_c") cfg.train.eta_c = detail::to_double(key, val);
    else if (key == "train.batch_n") cfg.train.batch_n = static_cast<int>(detail::to_long(key, val));
    else if (key == "train.episodes") cfg.train.episodes = static_cast<int>(detail::to_long(key, val));
    else if (key == "train.steps_per_episode") cfg.train.steps_per_episode = static_cast<int>(detail::to_long(key, val));
    else if (key == "train.buffer_size") cfg.train.buffer_capacity = static_cast<std::size_t>(detail::to_long(key, val));
    else if (key == "train.hidden_nodes") {
      cfg.train.hidden.clear();
      for (const auto& item : detail::split_list(val)) {
        cfg.train.hidden.push_back(static_cast<int>(detail::to_long(key, item)));
      }
    } else if (key == "explore.eps_bs_init") cfg.explore.eps_bs_init = detail::to_double(key, val);
    else if (key == "explore.eps_bs_decay_rate") cfg.explore.eps_bs_decay_rate = detail::to_double(key, val);
    else if (key == "explore.sigma_theta_init") cfg.explore.sigma_theta_init = detail::to_double(key, val);
    else if (key == "explore.sigma_theta_final") cfg.explore.sigma_theta_final = detail::to_double(key, val);
    else if (key == "explore.sigma_theta_steps") cfg.explore.sigma_theta_steps = detail::to_long(key, val);
    else if (key == "sweep.beam_step_deg") cfg.sweep.beam_step_deg = detail::to_double(key, val);
    else if (key == "sweep.frame_period_s") cfg.sweep.frame_period_s = detail::to_double(key, val);
    else if (key == "sweep.scan_period_s") cfg.sweep.scan_period_s = detail::to_double(key, val);
    else if (key == "sweep.sweep_elevation_rad") cfg.sweep.sweep_elevation_rad = detail::to_double(key, val);
    else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& item : detail::split_list(val)) {
        cfg.seeds.push_back(static_cast<std::uint64_t>(detail::to_long(key, item)));
      }
    } else if (key == "out_dir") cfg.out_dir = val;
    else throw ConfigError("unknown key '" + key + "'");
  }
  return cfg;
}

// All invariant violations, one message per line; empty means valid.
inline std::vector<std::string> validate(const RunConfig& c) {
  std::vector<std::string> v;
  if (c.layout != "four_junction") v.push_back("scenario.layout: unknown layout '" + c.layout + "'");
  if (c.n_bs < 1 || c.n_bs > 10) v.push_back("scenario.n_bs: must be in [1, 10] for the four_junction layout");
  if (c.n_ue < 1) v.push_back("scenario.n_ue: must be >= 1");
  if (c.n_th < 1) v.push_back("antenna.n_th: must be >= 1");
  if (c.n_tv < 1) v.push_back("antenna.n_tv: must be >= 1");
  if (c.spacing_over_lambda <= 0.0) v.push_back("antenna.spacing_over_lambda: must be > 0");
  if (c.carrier_freq_hz <= 0.0) v.push_back("radio.carrier_freq_hz: must be > 0");
  if (c.bandwidth_hz <= 0.0) v.push_back("radio.bandwidth_hz: must be > 0");
  if (c.pathloss.exponent <= 0.0) v.push_back("pathloss.exponent: must be > 0");
  if (c.pathloss.ref_freq_hz <= 0.0) v.push_back("pathloss.ref_freq_hz: must be > 0");
  if (c.pathloss.shadow_sigma_db < 0.0) v.push_back("pathloss.shadow_sigma_db: must be >= 0");
  if (c.train.gamma < 0.0 || c.train.gamma > 1.0) v.push_back("train.gamma: gamma ∈ [0,1]");
  if (c.train.soft_lambda <= 0.0 || c.train.soft_lambda > 1.0) v.push_back("train.soft_lambda: must be in (0,1]");
  if (c.train.eta_a < 0.0) v.push_back("train.eta_a: must be >= 0");
  if (c.train.eta_c < 0.0) v.push_back("train.eta_c: must be >= 0");
  if (c.train.batch_n < 1) v.push_back("train.batch_n: must be >= 1");
  if (c.train.episodes < 1) v.push_back("train.episodes: must be >= 1");
  if (c.train.steps_per_episode < 1) v.push_back("train.steps_per_episode: must be >= 1");
  if (c.train.buffer_capacity < 1) v.push_back("train.buffer_size: must be >= 1");
  if (c.train.hidden.empty()) v.push_back("train.hidden_nodes: need at least one hidden layer");
  for (int w : c.train.hidden) {
    if (w < 1) {
      v.push_back("train.hidden_nodes: widths must be >= 1");
      break;
    }
  }
  if (c.explore.eps_bs_init < 0.0 || c.explore.eps_bs_init > 1.0) v.push_back("explore.eps_bs_init: must be in [0,1]");
  if (c.explore.eps_bs_decay_rate < 0.0) v.push_back("explore.eps_bs_decay_rate: must be >= 0");
  if (c.explore.sigma_theta_init < 0.0) v.push_back("explore.sigma_theta_init: must be >= 0");
  if (c.explore.sigma_theta_final < 0.0) v.push_back("explore.sigma_theta_final: must be >= 0");
  if (c.explore.sigma_theta_final > c.explore.sigma_theta_init) {
    v.push_back("explore.sigma_theta_final: must not exceed explore.sigma_theta_init");
  }
  if (c.sweep.beam_step_deg <= 0.0 || c.sweep.beam_step_deg > 180.0) {
    v.push_back("sweep.beam_step_deg: must be in (0, 180]");
  }
  if (c.sweep.frame_period_s <= 0.0) v.push_back("sweep.frame_period_s: must be > 0");
  if (c.sweep.scan_period_s <= 0.0) v.push_back("sweep.scan_period_s: must be > 0");
  if (c.sweep.beam_step_deg > 0.0 && c.sweep.scan_period_s > 0.0 && c.sweep.frame_period_s > 0.0) {
    try {
      baselines::duty_factor(c.sweep, baselines::sweep_azimuths(c.sweep).size());
    } catch (const std::exception&) {
      v.push_back("sweep: scan time of the full codebook exceeds the frame period");
    }
  }
  if (c.sweep.sweep_elevation_rad < std::numbers::pi / 2.0 ||
      c.sweep.sweep_elevation_rad > std::numbers::pi) {
    v.push_back("sweep.sweep_elevation_rad: must be in [pi/2, pi]");
  }
  if (c.seeds.empty()) v.push_back("seeds: need at least one seed");
  return v;
}

inline RunConfig load_config_stream(std::istream& in) {
  RunConfig cfg = parse_config(in);
  const std::vector<std::string> violations = validate(cfg);
  if (!violations.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& m : violations) msg += "\n  " + m;
    throw ConfigError(msg);
  }
  return cfg;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  return load_config_stream(f);
}

// Environment parameters implied by a validated run configuration.
inline env::EnvParams make_env_params(const RunConfig& c) {
  env::EnvParams p;
  p.layout = env::make_four_junction_layout(c.n_bs);
  p.geom = rf::make_upa(c.n_th, c.n_tv, c.carrier_freq_hz, c.spacing_over_lambda);
  p.pathloss = c.pathloss;
  p.n_ue = c.n_ue;
  p.carrier_freq_hz = c.carrier_freq_hz;
  p.tx_power_w = rf::dbm_to_watt(c.tx_power_dbm);
  p.noise_power_w = env::thermal_noise_w(c.bandwidth_hz, c.noise_figure_db);
  p.beacon_power_dbm = c.beacon_power_dbm;
  return p;
}

inline agent::ExplorationSchedule make_schedule(const RunConfig& c) {
  agent::ExplorationSchedule s = c.explore;
  s.sigma_theta_steps = c.sigma_theta_steps_effective();
  return s;
}

}  // namespace beamrl::config
