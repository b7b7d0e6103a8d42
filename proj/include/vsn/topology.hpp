#pragma once

// Node placement for the five benchmark topologies and the radio model that
// turns link distances into transmission time coefficients.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "vsn/core.hpp"

namespace vsn {

struct Topology {
  std::vector<std::array<double, 2>> sensor_positions;  // meters
  std::vector<std::array<double, 2>> node_positions;    // meters
};

struct RadioParams {
  double bandwidth_hz = 20e6;
  double noise_dbm = -70.0;
  double carrier_hz = 2.4e9;
  double tx_power_dbm = 10.0;
  // One full frame's payload; default is an 8-bit grayscale 720x480 frame.
  double frame_bits = 720.0 * 480.0 * 8.0;
};

// Sensors sit at the corners of a side_length square. Topology 1 places the
// processing nodes at the side midpoints; each further step shifts the node
// square diagonally by 3/16 of the side length, rotates it by -11.25 degrees
// about its center and grows its side so that step 4 reaches a full
// side_length square shifted by 3/4 of the side length (7.3223 m per step at
// 100 m, the usual quoted value being 7.32 m).
inline Topology build_topology(int index, double side_length) {
  if (index < 1 || index > 5)
    throw std::invalid_argument("topology index must lie in 1..5");
  if (!(side_length > 0.0))
    throw std::invalid_argument("topology side length must be > 0");
  const double L = side_length;
  Topology topo;
  topo.sensor_positions = {{0.0, 0.0}, {L, 0.0}, {L, L}, {0.0, L}};
  const std::vector<std::array<double, 2>> base = {
      {L / 2, 0.0}, {L, L / 2}, {L / 2, L}, {0.0, L / 2}};
  const double k = index - 1;
  const double base_side = L / std::sqrt(2.0);
  const double side = base_side + k * (L - base_side) / 4.0;
  const double scale = side / base_side;
  const double shift = k * 3.0 * L / 16.0;
  const double theta = -k * 11.25 * M_PI / 180.0;
  const double c = std::cos(theta), s = std::sin(theta);
  const double cx = L / 2, cy = L / 2;
  for (const auto& p : base) {
    double rx = p[0] - cx, ry = p[1] - cy;
    double qx = scale * (rx * c - ry * s);
    double qy = scale * (rx * s + ry * c);
    topo.node_positions.push_back({cx + shift + qx, cy + shift + qy});
  }
  return topo;
}

// Friis free-space path loss in dB (isotropic antennas).
inline double free_space_path_loss_db(double distance_m, double carrier_hz) {
  constexpr double kSpeedOfLight = 299792458.0;
  return 20.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_hz) +
         20.0 * std::log10(4.0 * M_PI / kSpeedOfLight);
}

// Transmission time coefficients from Shannon capacity over free-space links:
// C[s][n] = frame_bits / (B * log2(1 + SNR)). A link whose capacity is not
// positive is reported as infeasible with an infinite coefficient.
inline std::vector<std::vector<double>> channel_coefficients(
    const Topology& topo, const RadioParams& radio) {
  if (!(radio.bandwidth_hz > 0.0) || !(radio.frame_bits > 0.0))
    throw std::invalid_argument("radio bandwidth and frame bits must be > 0");
  std::vector<std::vector<double>> C(
      topo.sensor_positions.size(),
      std::vector<double>(topo.node_positions.size(), 0.0));
  for (std::size_t s = 0; s < topo.sensor_positions.size(); ++s) {
    for (std::size_t n = 0; n < topo.node_positions.size(); ++n) {
      double dx = topo.sensor_positions[s][0] - topo.node_positions[n][0];
      double dy = topo.sensor_positions[s][1] - topo.node_positions[n][1];
      double d = std::hypot(dx, dy);
      if (!(d > 0.0))
        throw std::invalid_argument("sensor and node positions coincide");
      double rx_dbm = radio.tx_power_dbm -
                      free_space_path_loss_db(d, radio.carrier_hz);
      double snr = std::pow(10.0, (rx_dbm - radio.noise_dbm) / 10.0);
      double capacity = radio.bandwidth_hz * std::log2(1.0 + snr);
      C[s][n] = capacity > 0.0 ? radio.frame_bits / capacity
                               : std::numeric_limits<double>::infinity();
    }
  }
  return C;
}

// P_n = S * min_{s,m} C_{s,m}, identical for all nodes.
inline std::vector<double> processing_coefficients(
    const std::vector<std::vector<double>>& C, int sensor_count) {
  if (C.empty() || C.front().empty())
    throw std::invalid_argument("transmission coefficient matrix is empty");
  double cmin = std::numeric_limits<double>::infinity();
  for (const auto& row : C)
    for (double c : row) cmin = std::min(cmin, c);
  if (!(cmin > 0.0) || !std::isfinite(cmin))
    throw std::invalid_argument("no finite positive transmission coefficient");
  return std::vector<double>(C.front().size(), sensor_count * cmin);
}

}  // namespace vsn
