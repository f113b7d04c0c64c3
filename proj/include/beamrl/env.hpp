// Scenario geometry, UE mobility on a road graph, RF-fingerprint beacons and
// the MDP interface (reset/step/state/reward) driving the learning agents.
//
// An Environment instance owns its RNG and is single-threaded; run one
// instance per training seed. reset(seed) reseeds the instance, so a whole
// episode trajectory is a pure function of the seed.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "beamrl/rf.hpp"

namespace beamrl::env {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline double norm(const Vec3& v) { return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

// Axis-aligned road segment at UE height.
struct RoadSegment {
  Vec3 a, b;
  double length() const { return distance(a, b); }
};

struct ScenarioLayout {
  std::vector<Vec3> bs_positions;
  std::vector<RoadSegment> road_segments;
  double bs_height_m = 10.0;
  double ue_height_m = 1.5;
  double cell_radius_m = 100.0;

  int n_bs() const { return static_cast<int>(bs_positions.size()); }
};

// 400 m x 400 m block with two horizontal roads (y = 100, 300) and two
// vertical roads (x = 100, 300), giving four junctions. Base stations are
// taken from a fixed list of road-side positions: the four junctions first,
// then segment midpoints, then two outer stubs.
inline ScenarioLayout make_four_junction_layout(int n_bs) {
  static const std::array<std::array<double, 2>, 10> kBsXy = {{
      {100.0, 100.0},
      {300.0, 100.0},
      {100.0, 300.0},
      {300.0, 300.0},
      {200.0, 100.0},
      {200.0, 300.0},
      {100.0, 200.0},
      {300.0, 200.0},
      {100.0, 0.0},
      {300.0, 400.0},
  }};
  if (n_bs < 1 || n_bs > static_cast<int>(kBsXy.size())) {
    throw std::invalid_argument("four_junction layout supports 1..10 base stations");
  }
  ScenarioLayout lay;
  lay.bs_height_m = 10.0;
  lay.ue_height_m = 1.5;
  lay.cell_radius_m = 100.0;
  for (int i = 0; i < n_bs; ++i) {
    lay.bs_positions.push_back({kBsXy[i][0], kBsXy[i][1], lay.bs_height_m});
  }
  const double h = lay.ue_height_m;
  auto seg = [h](double x0, double y0, double x1, double y1) {
    return RoadSegment{{x0, y0, h}, {x1, y1, h}};
  };
  for (double y : {100.0, 300.0}) {
    lay.road_segments.push_back(seg(0, y, 100, y));
    lay.road_segments.push_back(seg(100, y, 300, y));
    lay.road_segments.push_back(seg(300, y, 400, y));
  }
  for (double x : {100.0, 300.0}) {
    lay.road_segments.push_back(seg(x, 0, x, 100));
    lay.road_segments.push_back(seg(x, 100, x, 300));
    lay.road_segments.push_back(seg(x, 300, x, 400));
  }
  return lay;
}

struct UeState {
  Vec3 position;
  Vec3 velocity;
  double current_sinr = 0.0;               // linear
  std::vector<double> rf_signature;        // dBm, length N_BS
};

// Observation vector, length N_UE * (N_BS + 1): per-UE blocks of
// [N_BS fingerprint entries, 1 SINR entry].
struct MdpState {
  std::vector<double> vec;
};

// Beam command for one UE. Elevation is measured from +z in [pi/2, pi],
// azimuth from +x in [-pi/2, pi/2].
struct UeChoice {
  int bs_index = 0;
  double elevation_rad = 0.75 * std::numbers::pi;
  double azimuth_rad = 0.0;
};

using ResolvedAction = std::vector<UeChoice>;

// State normalization: raw dBm fingerprints and linear SINRs destabilize
// training, so packed entries are affinely rescaled.
inline double normalize_dbm(double dbm) { return (dbm + 120.0) / 60.0; }
inline double normalize_sinr(double sinr) { return std::log2(1.0 + sinr) / 10.0; }

inline MdpState build_state(const std::vector<UeState>& ues, int n_bs, bool normalize = true) {
  MdpState s;
  s.vec.reserve(ues.size() * (n_bs + 1));
  for (const auto& ue : ues) {
    if (static_cast<int>(ue.rf_signature.size()) != n_bs) {
      throw std::invalid_argument("build_state: fingerprint length mismatch");
    }
    for (double v : ue.rf_signature) s.vec.push_back(normalize ? normalize_dbm(v) : v);
    s.vec.push_back(normalize ? normalize_sinr(ue.current_sinr) : ue.current_sinr);
  }
  return s;
}

// Single line-of-sight ray from a BS to a UE. Departure elevation is
// arccos((z_ue - z_bs)/dist) from +z, azimuth atan2(dy, dx) from +x; the
// gain magnitude follows the link budget |alpha|^2 = 10^(-PL/10) with a
// fresh shadow draw, and the phase is uniform.
inline rf::PropagationPath los_path(const Vec3& bs_position, const Vec3& ue_position,
                                    const rf::PathLossParams& pathloss, double freq_hz,
                                    std::mt19937_64& rng) {
  const Vec3 d = ue_position - bs_position;
  const double dist = norm(d);
  if (dist <= 0.0) throw std::invalid_argument("los_path: coincident positions");
  rf::PropagationPath p;
  p.aod_elevation_rad = std::acos(d.z / dist);
  p.aod_azimuth_rad = std::atan2(d.y, d.x);
  p.aoa_elevation_rad = std::acos(-d.z / dist);
  p.aoa_azimuth_rad = std::atan2(-d.y, -d.x);
  double shadow = 0.0;
  if (pathloss.shadow_sigma_db > 0.0) {
    shadow = std::normal_distribution<double>(0.0, pathloss.shadow_sigma_db)(rng);
  }
  const double pl_db = rf::path_loss_db(freq_hz, dist, pathloss, shadow);
  const double amp = std::pow(10.0, -pl_db / 20.0);
  const double phase =
      std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  p.gain = amp * rf::cplx(std::cos(phase), std::sin(phase));
  return p;
}

// Received beacon power (dBm) of one UE at every BS, with an independent
// shadow draw per entry per call.
inline std::vector<double> compute_rf_signature(const Vec3& ue_position,
                                                const ScenarioLayout& layout,
                                                const rf::PathLossParams& pathloss,
                                                double freq_hz, double beacon_power_dbm,
                                                std::mt19937_64& rng) {
  std::vector<double> sig;
  sig.reserve(layout.bs_positions.size());
  for (const auto& bs : layout.bs_positions) {
    double shadow = 0.0;
    if (pathloss.shadow_sigma_db > 0.0) {
      shadow = std::normal_distribution<double>(0.0, pathloss.shadow_sigma_db)(rng);
    }
    const double dist = distance(ue_position, bs);
    sig.push_back(beacon_power_dbm - rf::path_loss_db(freq_hz, dist, pathloss, shadow));
  }
  return sig;
}

// The UPA response depends on azimuth only through sin(phi), so a UE in the
// rear half-space can be steered at with the mirrored front-half angle.
inline double fold_azimuth(double phi) { return std::asin(std::sin(phi)); }

struct EnvParams {
  ScenarioLayout layout;
  rf::UpaGeometry geom;
  rf::PathLossParams pathloss;
  int n_ue = 3;
  double carrier_freq_hz = 28e9;
  double tx_power_w = rf::dbm_to_watt(30.0);
  double noise_power_w = rf::dbm_to_watt(-100.0103);
  double beacon_power_dbm = 0.0;
  double dt_s = 0.01;
  double speed_min_mps = 1.0;
  double speed_max_mps = 15.0;
  bool normalize_state = true;
};

// sigma^2 = -174 dBm/Hz + 10 log10(bandwidth) + noise figure
inline double thermal_noise_w(double bandwidth_hz, double noise_figure_db) {
  return rf::dbm_to_watt(-174.0 + 10.0 * std::log10(bandwidth_hz) + noise_figure_db);
}

class Environment {
 public:
  struct StepResult {
    MdpState state;
    double reward = 0.0;  // bits/s/Hz, Eq. (5)-style mean rate
  };

  explicit Environment(EnvParams params) : p_(std::move(params)) {
    if (p_.n_ue < 1) throw std::invalid_argument("env: need at least one UE");
    if (p_.layout.bs_positions.empty()) throw std::invalid_argument("env: no base stations");
    if (p_.layout.road_segments.empty()) throw std::invalid_argument("env: no road segments");
    if (!p_.geom.valid()) throw std::invalid_argument("env: invalid UPA geometry");
    if (p_.noise_power_w <= 0.0) throw std::invalid_argument("non-positive noise power");
    build_road_graph();
  }

  int n_ue() const { return p_.n_ue; }
  int n_bs() const { return p_.layout.n_bs(); }
  int state_dim() const { return p_.n_ue * (n_bs() + 1); }
  int oracle_state_dim() const { return p_.n_ue * (2 * n_bs() + 1); }
  const EnvParams& params() const { return p_; }
  const ScenarioLayout& layout() const { return p_.layout; }
  const std::vector<UeState>& ues() const { return ues_; }
  const std::vector<std::vector<rf::ChannelMatrix>>& channels() const { return channels_; }

  MdpState reset(std::uint64_t seed) {
    rng_.seed(seed);
    place_ues();
    redraw_channels();
    apply_random_action();
    redraw_fingerprints();
    return state();
  }

  StepResult step(const ResolvedAction& action) { return step(action, p_.dt_s); }

  StepResult step(const ResolvedAction& action, double dt_s) {
    const std::vector<double> sinrs = sinr_for(action);
    for (int i = 0; i < p_.n_ue; ++i) ues_[i].current_sinr = sinrs[i];
    StepResult r;
    r.reward = rf::mean_rate(sinrs);
    move_ues(dt_s);
    redraw_channels();
    redraw_fingerprints();
    r.state = state();
    return r;
  }

  // SINRs the given beam command would produce on the current channel draws.
  std::vector<double> sinr_for(const ResolvedAction& action) const {
    if (static_cast<int>(action.size()) != p_.n_ue) {
      throw std::invalid_argument("env: action must cover every UE");
    }
    std::vector<int> assignment(p_.n_ue);
    std::vector<rf::Beamformer> beams(p_.n_ue);
    for (int i = 0; i < p_.n_ue; ++i) {
      const UeChoice& c = action[i];
      if (c.bs_index < 0 || c.bs_index >= n_bs()) {
        throw std::invalid_argument("env: invalid bs_index");
      }
      assignment[i] = c.bs_index;
      beams[i] = rf::steer_beam(c.azimuth_rad, c.elevation_rad, p_.geom);
    }
    return rf::sinr_vector(channels_, assignment, beams, p_.tx_power_w, p_.noise_power_w);
  }

  double rate_for(const ResolvedAction& action) const { return rf::mean_rate(sinr_for(action)); }

  MdpState state() const { return build_state(ues_, n_bs(), p_.normalize_state); }

  // Widened observation for the BS-genie agent: per UE, a one-hot of the
  // strongest-link BS is prepended to the regular fingerprint+SINR block.
  MdpState oracle_state() const {
    const std::vector<int> best = genie_best_bs();
    MdpState s;
    s.vec.reserve(oracle_state_dim());
    for (int i = 0; i < p_.n_ue; ++i) {
      for (int k = 0; k < n_bs(); ++k) s.vec.push_back(k == best[i] ? 1.0 : 0.0);
      for (double v : ues_[i].rf_signature) {
        s.vec.push_back(p_.normalize_state ? normalize_dbm(v) : v);
      }
      s.vec.push_back(p_.normalize_state ? normalize_sinr(ues_[i].current_sinr)
                                         : ues_[i].current_sinr);
    }
    return s;
  }

  // Strongest aligned link under the current channel draw, per UE.
  std::vector<int> genie_best_bs() const {
    std::vector<int> best(p_.n_ue, 0);
    for (int i = 0; i < p_.n_ue; ++i) {
      double top = -1.0;
      for (int k = 0; k < n_bs(); ++k) {
        const double g = std::norm(paths_[i][k].gain);
        if (g > top) {
          top = g;
          best[i] = k;
        }
      }
    }
    return best;
  }

  // Exact LOS beam angles (elevation folded into nothing, azimuth folded into
  // the front half-space) for the link (ue, bs).
  UeChoice genie_angles(int ue, int bs) const {
    const rf::PropagationPath& p = paths_[ue][bs];
    return UeChoice{bs, p.aod_elevation_rad, fold_azimuth(p.aod_azimuth_rad)};
  }

  // Same angles expressed in the actor's tanh units, flattened as
  // [ue][bs][theta_unit, phi_unit].
  std::vector<double> genie_angle_units() const {
    std::vector<double> t;
    t.reserve(static_cast<std::size_t>(p_.n_ue) * n_bs() * 2);
    for (int i = 0; i < p_.n_ue; ++i) {
      for (int k = 0; k < n_bs(); ++k) {
        const UeChoice c = genie_angles(i, k);
        t.push_back((c.elevation_rad - 0.75 * std::numbers::pi) / (std::numbers::pi / 4.0));
        t.push_back(c.azimuth_rad / (std::numbers::pi / 2.0));
      }
    }
    return t;
  }

  // Random-waypoint-on-roads: constant per-episode speed along the current
  // segment, uniform turn at junctions, reverse at dead ends.
  void move_ues(double dt_s) {
    if (dt_s <= 0.0) throw std::invalid_argument("env: dt must be positive");
    for (int i = 0; i < p_.n_ue; ++i) {
      MobileUe& m = mob_[i];
      double remaining = m.speed * dt_s;
      while (remaining > 0.0) {
        const Edge& e = edges_[m.edge];
        const double room = m.dir > 0 ? e.length - m.s : m.s;
        if (remaining < room) {
          m.s += m.dir * remaining;
          remaining = 0.0;
        } else {
          remaining -= room;
          const int node = m.dir > 0 ? e.node_b : e.node_a;
          enter_next_edge(m, node);
        }
      }
      sync_ue(i);
    }
  }

 private:
  struct Edge {
    Vec3 a, b;
    double length = 0.0;
    int node_a = -1, node_b = -1;
  };

  struct MobileUe {
    int edge = 0;
    double s = 0.0;   // distance from edge endpoint a
    int dir = 1;      // +1 toward b, -1 toward a
    double speed = 0.0;
  };

  void build_road_graph() {
    edges_.clear();
    node_pos_.clear();
    node_edges_.clear();
    total_road_len_ = 0.0;
    auto node_of = [this](const Vec3& v) {
      for (std::size_t n = 0; n < node_pos_.size(); ++n) {
        if (distance(node_pos_[n], v) < 1e-6) return static_cast<int>(n);
      }
      node_pos_.push_back(v);
      node_edges_.emplace_back();
      return static_cast<int>(node_pos_.size() - 1);
    };
    for (const auto& seg : p_.layout.road_segments) {
      Edge e;
      e.a = seg.a;
      e.b = seg.b;
      e.length = seg.length();
      if (e.length <= 0.0) throw std::invalid_argument("env: zero-length road segment");
      e.node_a = node_of(e.a);
      e.node_b = node_of(e.b);
      const int id = static_cast<int>(edges_.size());
      node_edges_[e.node_a].push_back(id);
      node_edges_[e.node_b].push_back(id);
      edges_.push_back(e);
      total_road_len_ += e.length;
    }
  }

  void enter_next_edge(MobileUe& m, int node) {
    const std::vector<int>& incident = node_edges_[node];
    int next = m.edge;
    if (incident.size() > 1) {
      std::vector<int> options;
      for (int id : incident) {
        if (id != m.edge) options.push_back(id);
      }
      next = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng_)];
    }
    m.edge = next;
    if (edges_[next].node_a == node) {
      m.s = 0.0;
      m.dir = 1;
    } else {
      m.s = edges_[next].length;
      m.dir = -1;
    }
  }

  void sync_ue(int i) {
    const MobileUe& m = mob_[i];
    const Edge& e = edges_[m.edge];
    const double t = m.s / e.length;
    ues_[i].position = {e.a.x + (e.b.x - e.a.x) * t, e.a.y + (e.b.y - e.a.y) * t, e.a.z};
    const double inv = m.speed / e.length * m.dir;
    ues_[i].velocity = {(e.b.x - e.a.x) * inv, (e.b.y - e.a.y) * inv, 0.0};
  }

  void place_ues() {
    ues_.assign(p_.n_ue, UeState{});
    mob_.assign(p_.n_ue, MobileUe{});
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int i = 0; i < p_.n_ue; ++i) {
      double pick = unif(rng_) * total_road_len_;
      int edge = 0;
      for (std::size_t e = 0; e < edges_.size(); ++e) {
        if (pick < edges_[e].length || e + 1 == edges_.size()) {
          edge = static_cast<int>(e);
          break;
        }
        pick -= edges_[e].length;
      }
      mob_[i].edge = edge;
      mob_[i].s = std::min(pick, edges_[edge].length);
      mob_[i].dir = unif(rng_) < 0.5 ? 1 : -1;
      mob_[i].speed =
          std::uniform_real_distribution<double>(p_.speed_min_mps, p_.speed_max_mps)(rng_);
      sync_ue(i);
    }
  }

  void redraw_channels() {
    paths_.assign(p_.n_ue, std::vector<rf::PropagationPath>(n_bs()));
    channels_.assign(p_.n_ue, std::vector<rf::ChannelMatrix>(n_bs()));
    for (int i = 0; i < p_.n_ue; ++i) {
      for (int k = 0; k < n_bs(); ++k) {
        paths_[i][k] = los_path(p_.layout.bs_positions[k], ues_[i].position, p_.pathloss,
                                p_.carrier_freq_hz, rng_);
        channels_[i][k] = rf::assemble_channel({paths_[i][k]}, p_.geom);
      }
    }
  }

  void redraw_fingerprints() {
    for (int i = 0; i < p_.n_ue; ++i) {
      ues_[i].rf_signature = compute_rf_signature(ues_[i].position, p_.layout, p_.pathloss,
                                                  p_.carrier_freq_hz, p_.beacon_power_dbm, rng_);
    }
  }

  void apply_random_action() {
    ResolvedAction a(p_.n_ue);
    for (int i = 0; i < p_.n_ue; ++i) {
      a[i].bs_index = std::uniform_int_distribution<int>(0, n_bs() - 1)(rng_);
      a[i].elevation_rad = std::uniform_real_distribution<double>(std::numbers::pi / 2.0,
                                                                  std::numbers::pi)(rng_);
      a[i].azimuth_rad = std::uniform_real_distribution<double>(-std::numbers::pi / 2.0,
                                                                std::numbers::pi / 2.0)(rng_);
    }
    const std::vector<double> sinrs = sinr_for(a);
    for (int i = 0; i < p_.n_ue; ++i) ues_[i].current_sinr = sinrs[i];
  }

  EnvParams p_;
  std::mt19937_64 rng_;
  std::vector<UeState> ues_;
  std::vector<MobileUe> mob_;
  std::vector<Edge> edges_;
  std::vector<Vec3> node_pos_;
  std::vector<std::vector<int>> node_edges_;
  double total_road_len_ = 0.0;
  std::vector<std::vector<rf::PropagationPath>> paths_;     // [ue][bs]
  std::vector<std::vector<rf::ChannelMatrix>> channels_;    // [ue][bs]
};

}  // namespace beamrl::env
