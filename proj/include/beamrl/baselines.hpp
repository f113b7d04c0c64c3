// Non-learning reference policies: Random, exhaustive Oracle, and BS-Sweep
// with scan-time overhead accounting.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "beamrl/env.hpp"
#include "beamrl/rf.hpp"

namespace beamrl::baselines {

// Uniform BS index, elevation in [pi/2, pi], azimuth in [-pi/2, pi/2],
// independently per UE.
inline env::ResolvedAction random_policy(int n_ue, int n_bs, std::mt19937_64& rng) {
  env::ResolvedAction a(n_ue);
  std::uniform_int_distribution<int> bs(0, n_bs - 1);
  std::uniform_real_distribution<double> elev(std::numbers::pi / 2.0, std::numbers::pi);
  std::uniform_real_distribution<double> azim(-std::numbers::pi / 2.0, std::numbers::pi / 2.0);
  for (int i = 0; i < n_ue; ++i) {
    a[i].bs_index = bs(rng);
    a[i].elevation_rad = elev(rng);
    a[i].azimuth_rad = azim(rng);
  }
  return a;
}

struct OracleResult {
  env::ResolvedAction action;
  double mean_rate = 0.0;
  long assignments_evaluated = 0;
};

namespace detail {

// Mean rate over a subset of UEs (used by the greedy fallback): only the
// listed UEs transmit and interfere. Channels are re-indexed so that column
// u holds the channel from served[u]'s BS, letting sinr_vector treat the
// subset as a self-contained scenario.
inline double subset_rate(const env::Environment& e,
                          const std::vector<std::pair<int, env::UeChoice>>& served) {
  const auto& ch = e.channels();
  std::vector<std::vector<rf::ChannelMatrix>> sub;
  std::vector<int> assignment;
  std::vector<rf::Beamformer> beams;
  for (const auto& [ue, choice] : served) {
    (void)choice;
    std::vector<rf::ChannelMatrix> row;
    for (const auto& other : served) row.push_back(ch[ue][other.second.bs_index]);
    sub.push_back(std::move(row));
  }
  for (std::size_t u = 0; u < served.size(); ++u) {
    assignment.push_back(static_cast<int>(u));
    beams.push_back(rf::steer_beam(served[u].second.azimuth_rad,
                                   served[u].second.elevation_rad, e.params().geom));
  }
  return rf::mean_rate(rf::sinr_vector(sub, assignment, beams, e.params().tx_power_w,
                                       e.params().noise_power_w));
}

}  // namespace detail

// Genie policy: beam angles are always each link's exact LOS departure
// direction; the BS-UE assignment maximizing the mean rate (interference
// included) is searched exhaustively when N_BS^N_UE stays within
// exhaustive_limit, otherwise greedily UE by UE in descending best-link
// order.
inline OracleResult oracle_policy(const env::Environment& e, long exhaustive_limit = 100000) {
  const int n_ue = e.n_ue();
  const int n_bs = e.n_bs();

  double combos = 1.0;
  for (int i = 0; i < n_ue; ++i) combos *= n_bs;

  OracleResult best;
  best.mean_rate = -1.0;

  if (combos <= static_cast<double>(exhaustive_limit)) {
    std::vector<int> assign(n_ue, 0);
    env::ResolvedAction action(n_ue);
    while (true) {
      for (int i = 0; i < n_ue; ++i) action[i] = e.genie_angles(i, assign[i]);
      const double rate = e.rate_for(action);
      ++best.assignments_evaluated;
      if (rate > best.mean_rate) {
        best.mean_rate = rate;
        best.action = action;
      }
      int pos = n_ue - 1;
      while (pos >= 0 && ++assign[pos] == n_bs) assign[pos--] = 0;
      if (pos < 0) break;
    }
    return best;
  }

  // greedy fallback: strongest UE first, each picks the BS with the best
  // marginal mean rate over the already-served set
  std::vector<int> order(n_ue);
  for (int i = 0; i < n_ue; ++i) order[i] = i;
  std::vector<double> strength(n_ue, 0.0);
  for (int i = 0; i < n_ue; ++i) {
    for (int k = 0; k < n_bs; ++k) {
      const env::UeChoice c = e.genie_angles(i, k);
      const rf::Beamformer f = rf::steer_beam(c.azimuth_rad, c.elevation_rad, e.params().geom);
      strength[i] = std::max(strength[i], rf::beam_gain(e.channels()[i][k], f));
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return strength[a] > strength[b]; });

  std::vector<std::pair<int, env::UeChoice>> served;
  env::ResolvedAction action(n_ue);
  for (int i : order) {
    int pick = 0;
    double pick_rate = -1.0;
    for (int k = 0; k < n_bs; ++k) {
      served.emplace_back(i, e.genie_angles(i, k));
      const double rate = detail::subset_rate(e, served);
      ++best.assignments_evaluated;
      served.pop_back();
      if (rate > pick_rate) {
        pick_rate = rate;
        pick = k;
      }
    }
    served.emplace_back(i, e.genie_angles(i, pick));
    action[i] = e.genie_angles(i, pick);
  }
  best.action = action;
  best.mean_rate = e.rate_for(action);
  return best;
}

// Azimuth sweep configuration: one probe beam every beam_step_deg degrees
// across [-90, +90] at a fixed elevation, costing scan_period_s of the frame
// per beam.
struct SweepConfig {
  double beam_step_deg = 5.0;
  double frame_period_s = 0.010;
  double scan_period_s = 0.0002;
  double sweep_elevation_rad = 0.75 * std::numbers::pi;
};

// Probe azimuths in radians: -90, -90+nu, ... ; a final beam is clamped at
// +90 when nu does not divide 180 evenly.
inline std::vector<double> sweep_azimuths(const SweepConfig& cfg) {
  if (cfg.beam_step_deg <= 0.0) throw std::invalid_argument("sweep: beam step must be positive");
  std::vector<double> out;
  double deg = -90.0;
  while (deg < 90.0 - 1e-9) {
    out.push_back(deg * std::numbers::pi / 180.0);
    deg += cfg.beam_step_deg;
  }
  out.push_back(std::numbers::pi / 2.0);
  return out;
}

// Fraction of the frame left for data transmission after scanning.
inline double duty_factor(const SweepConfig& cfg, std::size_t beam_count) {
  const double scan = static_cast<double>(beam_count) * cfg.scan_period_s;
  if (scan >= cfg.frame_period_s) throw std::invalid_argument("sweep exceeds frame");
  return 1.0 - scan / cfg.frame_period_s;
}

struct SweepResult {
  env::ResolvedAction action;
  double duty_factor = 0.0;
  std::size_t beam_count = 0;
};

// Every BS sweeps the azimuth codebook; each UE is served by the (BS, beam)
// pair with the highest noiseless probe power on the current channel draws.
// The caller weights the achieved rate by the returned duty factor.
inline SweepResult bs_sweep_policy(const env::Environment& e, const SweepConfig& cfg) {
  const std::vector<double> azimuths = sweep_azimuths(cfg);
  SweepResult res;
  res.beam_count = azimuths.size();
  res.duty_factor = duty_factor(cfg, azimuths.size());

  std::vector<rf::Beamformer> probes;
  probes.reserve(azimuths.size());
  for (double az : azimuths) {
    probes.push_back(rf::steer_beam(az, cfg.sweep_elevation_rad, e.params().geom));
  }

  res.action.resize(e.n_ue());
  for (int i = 0; i < e.n_ue(); ++i) {
    double best_power = -1.0;
    for (int k = 0; k < e.n_bs(); ++k) {
      for (std::size_t b = 0; b < probes.size(); ++b) {
        const double p = e.params().tx_power_w * rf::beam_gain(e.channels()[i][k], probes[b]);
        if (p > best_power) {
          best_power = p;
          res.action[i] = env::UeChoice{k, cfg.sweep_elevation_rad, azimuths[b]};
        }
      }
    }
  }
  return res;
}

}  // namespace beamrl::baselines
