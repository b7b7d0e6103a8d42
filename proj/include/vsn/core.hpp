#pragma once

// Core domain types for divisible-load offloading in multi-camera sensor
// networks: scenario parameters, slice allocations and their validation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsn {

// Information model available to a sensor when it revises its allocation.
enum class Scenario { MeasurementOnly, TransmissionTime };

// Revision opportunity. SyncAveraged is the "synchronous/S" rule that blends
// the proposed cutpoints with the previous ones at weight 1/S; SyncPlain
// adopts every proposal outright (used to expose best-response cycles).
enum class Revision { Async, SyncPlain, SyncAveraged };

inline std::string to_string(Scenario s) {
  return s == Scenario::MeasurementOnly ? "mo" : "tt";
}

inline std::string to_string(Revision r) {
  switch (r) {
    case Revision::Async: return "async";
    case Revision::SyncPlain: return "sync";
    default: return "sync_s";
  }
}

inline Scenario parse_scenario(const std::string& s) {
  if (s == "mo") return Scenario::MeasurementOnly;
  if (s == "tt") return Scenario::TransmissionTime;
  throw std::invalid_argument("unknown scenario '" + s + "' (expected mo|tt)");
}

inline Revision parse_revision(const std::string& s) {
  if (s == "async") return Revision::Async;
  if (s == "sync") return Revision::SyncPlain;
  if (s == "sync_s") return Revision::SyncAveraged;
  throw std::invalid_argument("unknown revision '" + s +
                              "' (expected async|sync|sync_s)");
}

// Combined tags used on the command line: mo-a, mo-s, tt-a, tt-s.
inline std::pair<Scenario, Revision> parse_algorithm_tag(const std::string& t) {
  if (t == "mo-a") return {Scenario::MeasurementOnly, Revision::Async};
  if (t == "mo-s") return {Scenario::MeasurementOnly, Revision::SyncAveraged};
  if (t == "tt-a") return {Scenario::TransmissionTime, Revision::Async};
  if (t == "tt-s") return {Scenario::TransmissionTime, Revision::SyncAveraged};
  throw std::invalid_argument("unknown algorithm '" + t +
                              "' (expected mo-a|mo-s|tt-a|tt-s)");
}

inline std::string algorithm_tag(Scenario s, Revision r) {
  return to_string(s) + (r == Revision::Async ? "-a" : "-s");
}

// All static parameters of one experiment. Transmission coefficients are in
// seconds per normalized frame unit (sending the whole frame alone over link
// (s,n) takes transmission_coeffs[s][n] seconds); processing coefficients in
// seconds per normalized processing-load unit.
struct ScenarioConfig {
  int sensor_count = 0;
  int node_count = 0;
  int frame_width = 720;   // pixels
  double overlap = 0.06;   // normalized fraction of the frame width
  double alpha_d = 0.00125;  // processing load per interest point
  std::vector<std::vector<double>> transmission_coeffs;  // [sensor][node]
  std::vector<double> processing_coeffs;                 // [node]
  int frame_count = 500;
  Scenario scenario = Scenario::TransmissionTime;
  Revision revision = Revision::Async;
  int inter_refresh = 1;    // R, frames between coordinator refreshes
  int candidate_count = 1;  // L, dictionary entries evaluated per refresh
  int quantile_count = 8;   // Q
  std::uint64_t rng_seed = 1;

  // Minimum admissible slice width in pixels (width >= overlap).
  int min_width_px() const {
    return static_cast<int>(
        std::ceil(overlap * static_cast<double>(frame_width) - 1e-9));
  }

  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    auto bad = [&](const std::string& m) { problems.push_back(m); };
    if (sensor_count < 1) bad("sensor_count must be >= 1");
    if (node_count < 1) bad("node_count must be >= 1");
    if (frame_width < 2) bad("frame_width must be >= 2");
    if (!(overlap >= 0.0 && overlap < 0.5))
      bad("overlap must lie in [0, 1/2)");
    if (alpha_d < 0.0) bad("alpha_d must be >= 0");
    if (frame_count < 1) bad("frame_count must be >= 1");
    if (inter_refresh < 1) bad("inter_refresh must be >= 1");
    if (candidate_count < 1) bad("candidate_count must be >= 1");
    if (quantile_count < 2) bad("quantile_count must be >= 2");
    if (static_cast<int>(transmission_coeffs.size()) != sensor_count)
      bad("transmission_coeffs must have one row per sensor");
    for (const auto& row : transmission_coeffs) {
      if (static_cast<int>(row.size()) != node_count) {
        bad("transmission_coeffs rows must have one entry per node");
        break;
      }
      for (double c : row)
        if (!(c > 0.0)) {
          bad("transmission_coeffs entries must be > 0");
          break;
        }
    }
    if (static_cast<int>(processing_coeffs.size()) != node_count)
      bad("processing_coeffs must have one entry per node");
    for (double p : processing_coeffs)
      if (!(p > 0.0)) {
        bad("processing_coeffs entries must be > 0");
        break;
      }
    return problems;
  }

  void validate_or_throw() const {
    auto problems = validate();
    if (!problems.empty()) {
      std::string msg = "invalid scenario config:";
      for (const auto& p : problems) msg += "\n  - " + p;
      throw std::invalid_argument(msg);
    }
  }
};

// One sensor's allocation for one frame: the ordered node assignment and the
// normalized cutpoint vector (x_0 = 0, x_V = 1). Node indices are 0-based.
struct Allocation {
  std::vector<int> assignment;     // V distinct node indices
  std::vector<double> cutpoints;   // V+1 values, strictly increasing

  int slice_count() const { return static_cast<int>(assignment.size()); }
  double width(int v) const { return cutpoints[v + 1] - cutpoints[v]; }

  bool operator==(const Allocation& o) const {
    return assignment == o.assignment && cutpoints == o.cutpoints;
  }
};

// Every sensor's allocation for one multi-view frame, indexed by sensor.
struct AllocationProfile {
  std::vector<Allocation> sensors;

  int sensor_count() const { return static_cast<int>(sensors.size()); }
  bool operator==(const AllocationProfile& o) const {
    return sensors == o.sensors;
  }
};

struct ProfileViolation {
  int sensor = -1;
  int slice = -1;  // -1 when not slice specific
  std::string what;
};

// Checks the allocation invariants: node indices distinct and in range,
// cutpoints normalized and strictly increasing, every width at least the
// overlap. Pixel granularity is only enforced when require_pixel_grid is set
// (solver-internal allocations may be continuous).
inline std::vector<ProfileViolation> validate_profile(
    const AllocationProfile& profile, const ScenarioConfig& cfg,
    bool require_pixel_grid = false) {
  constexpr double kEps = 1e-9;
  std::vector<ProfileViolation> out;
  if (profile.sensor_count() != cfg.sensor_count) {
    out.push_back({-1, -1, "profile sensor count mismatch"});
    return out;
  }
  for (int s = 0; s < profile.sensor_count(); ++s) {
    const Allocation& a = profile.sensors[s];
    const int V = a.slice_count();
    if (V < 1) {
      out.push_back({s, -1, "empty assignment"});
      continue;
    }
    if (V > cfg.node_count)
      out.push_back({s, -1, "more slices than nodes"});
    if (static_cast<int>(a.cutpoints.size()) != V + 1) {
      out.push_back({s, -1, "cutpoint vector length mismatch"});
      continue;
    }
    std::vector<int> seen(cfg.node_count, 0);
    for (int v = 0; v < V; ++v) {
      int n = a.assignment[v];
      if (n < 0 || n >= cfg.node_count) {
        out.push_back({s, v, "node index out of range"});
      } else if (seen[n]++) {
        out.push_back({s, v, "duplicate node in assignment"});
      }
    }
    if (std::abs(a.cutpoints.front()) > kEps)
      out.push_back({s, 0, "first cutpoint must be 0"});
    if (std::abs(a.cutpoints.back() - 1.0) > kEps)
      out.push_back({s, V, "last cutpoint must be 1"});
    for (int v = 0; v < V; ++v) {
      double y = a.width(v);
      if (y <= 0.0)
        out.push_back({s, v, "cutpoints not strictly increasing"});
      else if (y + kEps < cfg.overlap)
        out.push_back({s, v, "slice narrower than the overlap"});
    }
    if (require_pixel_grid) {
      for (int v = 1; v < V; ++v) {
        double px = a.cutpoints[v] * cfg.frame_width;
        if (std::abs(px - std::round(px)) > 1e-6)
          out.push_back({s, v, "cutpoint not on the pixel grid"});
      }
    }
  }
  return out;
}

inline void validate_profile_or_throw(const AllocationProfile& profile,
                                      const ScenarioConfig& cfg) {
  auto v = validate_profile(profile, cfg);
  if (!v.empty()) {
    std::string msg = "invalid allocation profile:";
    for (const auto& p : v)
      msg += "\n  sensor " + std::to_string(p.sensor) + " slice " +
             std::to_string(p.slice) + ": " + p.what;
    throw std::invalid_argument(msg);
  }
}

inline std::vector<int> cutpoints_to_pixels(const std::vector<double>& x,
                                            int w) {
  std::vector<int> px(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    px[i] = static_cast<int>(std::lround(x[i] * w));
  px.front() = 0;
  px.back() = w;
  return px;
}

inline std::vector<double> pixels_to_cutpoints(const std::vector<int>& px,
                                               int w) {
  std::vector<double> x(px.size());
  for (std::size_t i = 0; i < px.size(); ++i)
    x[i] = static_cast<double>(px[i]) / w;
  return x;
}

// Rounds interior cutpoints to the nearest pixel and repairs minimum-width
// violations by shifting the offending boundary into the wider neighbor
// slice. Rounding error is at most one pixel per cutpoint.
inline Allocation round_to_pixel_grid(const Allocation& a,
                                      const ScenarioConfig& cfg) {
  const int w = cfg.frame_width;
  const int minw = std::max(1, cfg.min_width_px());
  const int V = a.slice_count();
  if (static_cast<long long>(V) * minw > w)
    throw std::invalid_argument(
        "allocation cannot satisfy the minimum slice width on the pixel grid");
  std::vector<int> px = cutpoints_to_pixels(a.cutpoints, w);
  // Monotonicity first, then width repair.
  for (int v = 1; v < V; ++v) px[v] = std::max(px[v], px[v - 1] + 1);
  for (int v = V - 1; v >= 1; --v) px[v] = std::min(px[v], px[v + 1] - 1);
  for (int pass = 0; pass < 4 * V + 4; ++pass) {
    bool dirty = false;
    for (int v = 0; v < V; ++v) {
      int width = px[v + 1] - px[v];
      if (width >= minw) continue;
      int deficit = minw - width;
      int left = v > 0 ? px[v] - px[v - 1] : -1;
      int right = v + 1 < V ? px[v + 2] - px[v + 1] : -1;
      if (right >= left && v + 1 < V)
        px[v + 1] += deficit;  // grow into the right neighbor
      else if (v > 0)
        px[v] -= deficit;  // grow into the left neighbor
      dirty = true;
    }
    if (!dirty) break;
  }
  for (int v = 1; v <= V; ++v)
    if (px[v] - px[v - 1] < minw)
      throw std::logic_error("pixel-grid width repair failed");
  Allocation out;
  out.assignment = a.assignment;
  out.cutpoints = pixels_to_cutpoints(px, w);
  return out;
}

// Equality up to a pixel tolerance on cutpoints; assignments must match.
inline bool allocations_close(const Allocation& a, const Allocation& b,
                              double tol_px, int w) {
  if (a.assignment != b.assignment) return false;
  if (a.cutpoints.size() != b.cutpoints.size()) return false;
  for (std::size_t i = 0; i < a.cutpoints.size(); ++i)
    if (std::abs(a.cutpoints[i] - b.cutpoints[i]) * w > tol_px + 1e-9)
      return false;
  return true;
}

inline bool profiles_close(const AllocationProfile& a,
                           const AllocationProfile& b, double tol_px, int w) {
  if (a.sensor_count() != b.sensor_count()) return false;
  for (int s = 0; s < a.sensor_count(); ++s)
    if (!allocations_close(a.sensors[s], b.sensors[s], tol_px, w))
      return false;
  return true;
}

}  // namespace vsn
