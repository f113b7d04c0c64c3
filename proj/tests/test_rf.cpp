#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "beamrl/rf.hpp"

using namespace beamrl;
using Catch::Approx;

namespace {

double vec_norm(const rf::CplxVector& v) {
  double s = 0.0;
  for (const auto& c : v) s += std::norm(c);
  return std::sqrt(s);
}

rf::PathLossParams street_canyon() {
  return rf::PathLossParams{1.98, 0.0, 1e9, 3.1};
}

}  // namespace

TEST_CASE("array response is flat for phi=0, theta=pi/2", "[rf]") {
  const auto geom = rf::make_upa(4, 4, 28e9);
  const auto a = rf::array_response(0.0, std::numbers::pi / 2.0, geom);
  REQUIRE(a.size() == 16);
  for (const auto& c : a) {
    CHECK(c.real() == Approx(0.25).margin(1e-12));
    CHECK(c.imag() == Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("two-element broadside case flips the second phase", "[rf]") {
  // n_th=2, n_tv=1, d=lambda/2, phi=theta=pi/2: phases {0, pi}
  auto geom = rf::make_upa(2, 1, 28e9, 0.5);
  const auto a =
      rf::array_response(std::numbers::pi / 2.0, std::numbers::pi / 2.0, geom);
  REQUIRE(a.size() == 2);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  CHECK(a[0].real() == Approx(inv_sqrt2).margin(1e-12));
  CHECK(a[0].imag() == Approx(0.0).margin(1e-12));
  CHECK(a[1].real() == Approx(-inv_sqrt2).margin(1e-12));
  CHECK(a[1].imag() == Approx(0.0).margin(1e-10));
}

TEST_CASE("element enumeration is m-major", "[rf]") {
  // 2x2 array at d=lambda/2: index 1 must be (m=1, n=0), phase pi*sin(phi)sin(theta);
  // index 2 must be (m=0, n=1), phase pi*cos(theta).
  auto geom = rf::make_upa(2, 2, 28e9, 0.5);
  const double phi = 0.3, theta = 2.0;
  const auto a = rf::array_response(phi, theta, geom);
  const double horiz = std::numbers::pi * std::sin(phi) * std::sin(theta);
  const double vert = std::numbers::pi * std::cos(theta);
  CHECK(std::arg(a[1] / a[0]) == Approx(std::remainder(horiz, 2 * std::numbers::pi)).margin(1e-12));
  CHECK(std::arg(a[2] / a[0]) == Approx(std::remainder(vert, 2 * std::numbers::pi)).margin(1e-12));
}

TEST_CASE("array response has unit norm", "[rf]") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto geom = rf::make_upa(1 + static_cast<int>(u01(rng) * 8), 1 + static_cast<int>(u01(rng) * 8),
                             28e9, 0.25 + u01(rng));
    const double phi = (2.0 * u01(rng) - 1.0) * std::numbers::pi;
    const double theta = u01(rng) * std::numbers::pi;
    CHECK(vec_norm(rf::array_response(phi, theta, geom)) == Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("path loss golden values at 28 GHz", "[rf]") {
  const auto p = street_canyon();
  // frozen from direct evaluation of the formula: 20*log10(4*pi*f/c)
  const double first_term = 61.39094384872776;
  CHECK(rf::path_loss_db(28e9, 1.0, p, 0.0) == Approx(first_term).margin(1e-9));
  CHECK(rf::path_loss_db(28e9, 1.0, p, 0.0) == Approx(61.385).margin(0.01));
  CHECK(rf::path_loss_db(28e9, 100.0, p, 0.0) == Approx(first_term + 39.6).margin(1e-9));
  CHECK(rf::path_loss_db(28e9, 100.0, p, 0.0) == Approx(100.985).margin(0.01));
}

TEST_CASE("path loss slope is frequency independent when b=0", "[rf]") {
  const auto p = street_canyon();
  const double slope_28 = rf::path_loss_db(28e9, 50.0, p, 0.0) - rf::path_loss_db(28e9, 1.0, p, 0.0);
  const double slope_60 = rf::path_loss_db(60e9, 50.0, p, 0.0) - rf::path_loss_db(60e9, 1.0, p, 0.0);
  CHECK(slope_28 == Approx(slope_60).margin(1e-12));
  CHECK(slope_28 == Approx(10.0 * 1.98 * std::log10(50.0)).margin(1e-12));
}

TEST_CASE("path loss clamps distances below 1 m", "[rf]") {
  const auto p = street_canyon();
  CHECK(rf::path_loss_db(28e9, 0.2, p, 0.0) == rf::path_loss_db(28e9, 1.0, p, 0.0));
}

TEST_CASE("path loss is monotone in distance", "[rf]") {
  const auto p = street_canyon();
  double prev = rf::path_loss_db(28e9, 1.0, p, 0.0);
  for (double d = 2.0; d < 500.0; d *= 1.7) {
    const double cur = rf::path_loss_db(28e9, d, p, 0.0);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("shadow term adds linearly", "[rf]") {
  const auto p = street_canyon();
  CHECK(rf::path_loss_db(28e9, 40.0, p, 3.5) ==
        Approx(rf::path_loss_db(28e9, 40.0, p, 0.0) + 3.5).margin(1e-12));
}

TEST_CASE("assembled LOS channel hits gain N_T on the aligned beam", "[rf]") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    auto geom = rf::make_upa(1 + static_cast<int>(u01(rng) * 8), 1 + static_cast<int>(u01(rng) * 8),
                             28e9, 0.25 + u01(rng));
    const double phi = (2.0 * u01(rng) - 1.0) * std::numbers::pi;
    const double theta = u01(rng) * std::numbers::pi;
    const double phase = 2.0 * std::numbers::pi * u01(rng);
    rf::PropagationPath path;
    path.gain = std::polar(1.0, phase);
    path.aod_azimuth_rad = phi;
    path.aod_elevation_rad = theta;
    const auto h = rf::assemble_channel({path}, geom);
    const auto f = rf::steer_beam(phi, theta, geom);
    CHECK(rf::beam_gain(h, f) ==
          Approx(static_cast<double>(geom.total_elements())).margin(1e-9));
  }
}

TEST_CASE("zero path gain gives the all-zero channel", "[rf]") {
  auto geom = rf::make_upa(4, 4, 28e9);
  rf::PropagationPath path;
  path.gain = 0.0;
  const auto h = rf::assemble_channel({path}, geom);
  for (const auto& c : h.entries) CHECK(std::abs(c) == 0.0);
}

TEST_CASE("two identical unit paths give aligned gain 2*N_T", "[rf]") {
  auto geom = rf::make_upa(4, 2, 28e9);
  rf::PropagationPath path;
  path.gain = 1.0;
  path.aod_azimuth_rad = 0.4;
  path.aod_elevation_rad = 1.9;
  const auto h = rf::assemble_channel({path, path}, geom);
  const auto f = rf::steer_beam(path.aod_azimuth_rad, path.aod_elevation_rad, geom);
  CHECK(rf::beam_gain(h, f) == Approx(2.0 * geom.total_elements()).margin(1e-9));
}

TEST_CASE("empty path list is rejected", "[rf]") {
  auto geom = rf::make_upa(4, 4, 28e9);
  CHECK_THROWS_WITH(rf::assemble_channel({}, geom), "no propagation paths");
}

TEST_CASE("misaligned beams stay strictly below N_T for a large array", "[rf]") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto geom = rf::make_upa(16, 16, 28e9, 0.5);
  for (int trial = 0; trial < 100; ++trial) {
    rf::PropagationPath path;
    path.gain = 1.0;
    path.aod_azimuth_rad = (2.0 * u01(rng) - 1.0) * std::numbers::pi / 2.0;
    path.aod_elevation_rad = u01(rng) * std::numbers::pi;
    const auto h = rf::assemble_channel({path}, geom);
    const auto f = rf::steer_beam((2.0 * u01(rng) - 1.0) * std::numbers::pi / 2.0,
                                  u01(rng) * std::numbers::pi, geom);
    CHECK(rf::beam_gain(h, f) < static_cast<double>(geom.total_elements()));
  }
}

TEST_CASE("single-link SINR is signal over noise", "[rf]") {
  auto geom = rf::make_upa(1, 1, 28e9);
  rf::PropagationPath path;
  path.gain = 3.0;
  const auto h = rf::assemble_channel({path}, geom);
  const auto f = rf::steer_beam(0.0, std::numbers::pi / 2.0, geom);
  const auto z = rf::sinr_vector({{h}}, {0}, {f}, 2.0, 0.5);
  REQUIRE(z.size() == 1);
  CHECK(z[0] == Approx(2.0 * 9.0 / 0.5).margin(1e-12));
}

TEST_CASE("two-cell SINR example", "[rf]") {
  // |H_11 f_1|^2 = 4, |H_12 f_2|^2 = 1, ptx = 1, sigma^2 = 1 -> zeta_1 = 2.
  auto geom = rf::make_upa(1, 1, 28e9);
  auto chan = [&](double amp) {
    rf::PropagationPath p;
    p.gain = amp;
    return rf::assemble_channel({p}, geom);
  };
  const auto f = rf::steer_beam(0.0, std::numbers::pi / 2.0, geom);
  const std::vector<std::vector<rf::ChannelMatrix>> channels = {
      {chan(2.0), chan(1.0)},
      {chan(1.0), chan(1.0)},
  };
  const auto z = rf::sinr_vector(channels, {0, 1}, {f, f}, 1.0, 1.0);
  CHECK(z[0] == Approx(2.0).margin(1e-12));
}

TEST_CASE("one BS serving two UEs interferes with itself", "[rf]") {
  // both UEs on BS 0: UE 0 sees its own beam as signal and UE 1's beam,
  // emitted by the same BS, as interference
  auto geom = rf::make_upa(1, 1, 28e9);
  rf::PropagationPath p;
  p.gain = 1.0;
  const auto h = rf::assemble_channel({p}, geom);
  const auto f = rf::steer_beam(0.0, std::numbers::pi / 2.0, geom);
  const auto z = rf::sinr_vector({{h}, {h}}, {0, 0}, {f, f}, 1.0, 1.0);
  CHECK(z[0] == Approx(1.0 / (1.0 + 1.0)).margin(1e-12));
  CHECK(z[1] == Approx(1.0 / (1.0 + 1.0)).margin(1e-12));
}

TEST_CASE("all-zero channels give zero SINR", "[rf]") {
  auto geom = rf::make_upa(2, 2, 28e9);
  rf::PropagationPath p;
  p.gain = 0.0;
  const auto h = rf::assemble_channel({p}, geom);
  const auto f = rf::steer_beam(0.1, 2.0, geom);
  const auto z = rf::sinr_vector({{h, h}, {h, h}}, {0, 1}, {f, f}, 1.0, 1e-13);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("non-positive noise power is rejected", "[rf]") {
  auto geom = rf::make_upa(1, 1, 28e9);
  rf::PropagationPath p;
  p.gain = 1.0;
  const auto h = rf::assemble_channel({p}, geom);
  const auto f = rf::steer_beam(0.0, std::numbers::pi / 2.0, geom);
  CHECK_THROWS_WITH(rf::sinr_vector({{h}}, {0}, {f}, 1.0, 0.0), "non-positive noise power");
}

TEST_CASE("SINR is invariant under common power/noise scaling", "[rf]") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u01(0.05, 1.0);
  auto geom = rf::make_upa(3, 2, 28e9);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::vector<rf::ChannelMatrix>> channels(2);
    for (int i = 0; i < 2; ++i) {
      for (int k = 0; k < 3; ++k) {
        rf::PropagationPath p;
        p.gain = std::polar(u01(rng), u01(rng) * 6.28);
        p.aod_azimuth_rad = u01(rng);
        p.aod_elevation_rad = 1.0 + u01(rng);
        channels[i].push_back(rf::assemble_channel({p}, geom));
      }
    }
    const std::vector<int> assign = {0, 2};
    const std::vector<rf::Beamformer> beams = {rf::steer_beam(0.3, 1.8, geom),
                                               rf::steer_beam(-0.7, 2.2, geom)};
    const double c = 0.5 + 10.0 * u01(rng);
    const auto z1 = rf::sinr_vector(channels, assign, beams, 2.0, 1e-10);
    const auto z2 = rf::sinr_vector(channels, assign, beams, 2.0 * c, 1e-10 * c);
    for (std::size_t i = 0; i < z1.size(); ++i) {
      CHECK(z2[i] == Approx(z1[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("mean rate basics", "[rf]") {
  CHECK(rf::mean_rate({0.0, 0.0}) == 0.0);
  CHECK(rf::mean_rate({3.0}) == Approx(2.0).margin(1e-15));
  CHECK(rf::mean_rate({1.0, 3.0}) == Approx(1.5).margin(1e-15));
}

TEST_CASE("mean rate is permutation invariant", "[rf]") {
  std::vector<double> a = {0.3, 7.1, 0.0, 55.0, 1.2};
  std::vector<double> b = {55.0, 0.0, 1.2, 0.3, 7.1};
  CHECK(rf::mean_rate(a) == Approx(rf::mean_rate(b)).epsilon(1e-15));
}
