// Physical-layer math for the mmWave downlink: UPA array responses,
// path loss, channel assembly, beamforming gain, SINR and mean rate.
//
// Conventions used throughout (and by every consumer of this header):
//   * elevation theta is measured from the +z axis, azimuth phi from +x;
//   * the UPA lies in the yz-plane with n_th elements along y and n_tv
//     along z; flattened element index is m-major (m varies fastest):
//     index = m + n * n_th, m in [0, n_th), n in [0, n_tv).
#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace beamrl::rf {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

using cplx = std::complex<double>;
using CplxVector = std::vector<cplx>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

// Uniform planar array at the transmitter.
struct UpaGeometry {
  int n_th = 4;             // elements along y
  int n_tv = 4;             // elements along z
  double spacing_m = 0.0;   // inter-element spacing d
  double wavelength_m = 0.0;

  int total_elements() const { return n_th * n_tv; }
  bool valid() const {
    return n_th >= 1 && n_tv >= 1 && spacing_m > 0.0 && wavelength_m > 0.0;
  }
};

inline UpaGeometry make_upa(int n_th, int n_tv, double carrier_freq_hz,
                            double spacing_over_lambda = 0.5) {
  UpaGeometry g;
  g.n_th = n_th;
  g.n_tv = n_tv;
  g.wavelength_m = kSpeedOfLight / carrier_freq_hz;
  g.spacing_m = spacing_over_lambda * g.wavelength_m;
  return g;
}

// Log-distance path loss parameters (frequency-dependent exponent form).
struct PathLossParams {
  double exponent = 1.98;      // n
  double freq_dep = 0.0;       // b
  double ref_freq_hz = 1e9;    // f_0
  double shadow_sigma_db = 3.1;
};

// One propagation ray: complex gain plus departure/arrival angles.
struct PropagationPath {
  cplx gain;                     // alpha_l
  double aod_azimuth_rad = 0.0;  // phi_l^t
  double aod_elevation_rad = 0.0;
  double aoa_azimuth_rad = 0.0;  // phi_l^r (unused: single-antenna receiver)
  double aoa_elevation_rad = 0.0;
};

// 1 x N_T downlink channel (single receive antenna throughout).
struct ChannelMatrix {
  CplxVector entries;  // row vector, length N_T
};

// Unit-norm transmit codeword.
struct Beamformer {
  CplxVector weights;
};

// UPA steering vector; element (m, n) carries the phase
// (2*pi/lambda) * d * (m sin(phi) sin(theta) + n cos(theta)), scaled 1/sqrt(N_T).
inline CplxVector array_response(double azimuth_rad, double elevation_rad,
                                 const UpaGeometry& geom) {
  const int n_t = geom.total_elements();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_t));
  const double k = 2.0 * std::numbers::pi / geom.wavelength_m * geom.spacing_m;
  const double horiz = std::sin(azimuth_rad) * std::sin(elevation_rad);
  const double vert = std::cos(elevation_rad);
  CplxVector out(static_cast<std::size_t>(n_t));
  std::size_t idx = 0;
  for (int n = 0; n < geom.n_tv; ++n) {
    for (int m = 0; m < geom.n_th; ++m) {
      const double phase = k * (m * horiz + n * vert);
      out[idx++] = scale * cplx(std::cos(phase), std::sin(phase));
    }
  }
  return out;
}

inline Beamformer steer_beam(double azimuth_rad, double elevation_rad,
                             const UpaGeometry& geom) {
  return Beamformer{array_response(azimuth_rad, elevation_rad, geom)};
}

// Path loss in dB. Distances below 1 m are clamped to the 1 m reference.
inline double path_loss_db(double freq_hz, double dist_m, const PathLossParams& params,
                           double shadow_db) {
  const double d = std::max(dist_m, 1.0);
  const double first = 20.0 * std::log10(4.0 * std::numbers::pi * freq_hz / kSpeedOfLight);
  const double slope =
      10.0 * params.exponent *
      (1.0 + params.freq_dep * (freq_hz - params.ref_freq_hz) / params.ref_freq_hz);
  return first + slope * std::log10(d) + shadow_db;
}

// H = sqrt(N_T * N_R / kappa) * sum_l alpha_l * conj(a_t(phi_l^t, theta_l^t)),
// with the single-antenna receiver response equal to 1.
inline ChannelMatrix assemble_channel(const std::vector<PropagationPath>& paths,
                                      const UpaGeometry& geom) {
  if (paths.empty()) throw std::invalid_argument("no propagation paths");
  const int n_t = geom.total_elements();
  const double scale = std::sqrt(static_cast<double>(n_t) / static_cast<double>(paths.size()));
  ChannelMatrix h;
  h.entries.assign(static_cast<std::size_t>(n_t), cplx(0.0, 0.0));
  for (const auto& p : paths) {
    const CplxVector at = array_response(p.aod_azimuth_rad, p.aod_elevation_rad, geom);
    for (std::size_t i = 0; i < h.entries.size(); ++i) {
      h.entries[i] += scale * p.gain * std::conj(at[i]);
    }
  }
  return h;
}

// |H f|^2 for a row-vector channel.
inline double beam_gain(const ChannelMatrix& h, const Beamformer& f) {
  if (h.entries.size() != f.weights.size()) {
    throw std::invalid_argument("beam_gain: channel/beam length mismatch");
  }
  cplx acc(0.0, 0.0);
  for (std::size_t i = 0; i < h.entries.size(); ++i) acc += h.entries[i] * f.weights[i];
  return std::norm(acc);
}

// Per-UE SINR. channels[i][k] is the channel from BS k to UE i; beams[i] is
// the codeword the serving BS assignment[i] points at UE i. A BS serving
// several UEs emits one codeword per served UE at full tx power, and every
// emitted beam except UE i's own contributes to UE i's interference.
inline std::vector<double> sinr_vector(
    const std::vector<std::vector<ChannelMatrix>>& channels,
    const std::vector<int>& assignment, const std::vector<Beamformer>& beams,
    double ptx_w, double noise_w) {
  if (noise_w <= 0.0) throw std::invalid_argument("non-positive noise power");
  const std::size_t n_ue = channels.size();
  if (assignment.size() != n_ue || beams.size() != n_ue) {
    throw std::invalid_argument("sinr_vector: per-UE array length mismatch");
  }
  std::vector<double> out(n_ue, 0.0);
  for (std::size_t i = 0; i < n_ue; ++i) {
    const int serving = assignment[i];
    if (serving < 0 || static_cast<std::size_t>(serving) >= channels[i].size()) {
      throw std::invalid_argument("sinr_vector: assignment index out of range");
    }
    const double signal = ptx_w * beam_gain(channels[i][serving], beams[i]);
    double interference = 0.0;
    for (std::size_t u = 0; u < n_ue; ++u) {
      if (u == i) continue;
      interference += ptx_w * beam_gain(channels[i][assignment[u]], beams[u]);
    }
    out[i] = signal / (interference + noise_w);
  }
  return out;
}

// Mean Shannon rate over UEs in bits/s/Hz.
inline double mean_rate(const std::vector<double>& sinrs) {
  if (sinrs.empty()) return 0.0;
  double acc = 0.0;
  for (double z : sinrs) acc += std::log2(1.0 + z);
  return acc / static_cast<double>(sinrs.size());
}

}  // namespace beamrl::rf
