#pragma once

// Deterministic timeline simulation of one multi-view frame. Transmission is
// airtime fair: with k sensors transmitting simultaneously, sensor s moves
// data at rate 1/(k*C[s][n]) normalized units per second to its current
// node. Processing shares each node's rate 1/P[n] across active slices in
// proportion to remaining load, so every slice of a cohort finishes at the
// same instant.

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "vsn/core.hpp"
#include "vsn/distribution.hpp"

namespace vsn {

// Absolute tolerance for comparing event times, in seconds.
inline constexpr double kEventTimeTol = 1e-12;

struct SliceTimes {
  double t_b = 0.0;  // first bit received
  double t_r = 0.0;  // last bit received
  double t_c = 0.0;  // processing complete
};

struct FrameTimeline {
  // Indexed [sensor][slice].
  std::vector<std::vector<SliceTimes>> slices;
  std::vector<std::vector<double>> volumes;  // transmitted data per slice
  std::vector<std::vector<double>> loads;    // processing load per slice
  std::vector<std::vector<double>> experienced_tx;    // C~ per slice
  std::vector<std::vector<double>> experienced_proc;  // P~ per slice
  // Indexed [sensor][node]; NaN where the sensor does not use the node.
  std::vector<std::vector<double>> slice_completion;
  std::vector<double> sensor_completion;  // T_s
  double system_completion = 0.0;         // T
  std::vector<double> node_busy_time;     // accumulated processing time

  bool uses(int s, int n) const {
    return !std::isnan(slice_completion[s][n]);
  }
};

// Transmitted data volume of slice v (0-based) out of V: edge slices carry a
// single overlap strip, interior slices carry one on each side.
inline double slice_volume(double width, int v, int V, double overlap) {
  bool edge = (v == 0 || v == V - 1);
  return width + (edge ? overlap : 2.0 * overlap);
}

inline FrameTimeline simulate_frame(
    const AllocationProfile& profile, const ScenarioConfig& cfg,
    const std::vector<FrameDistribution>& dists) {
  validate_profile_or_throw(profile, cfg);
  if (static_cast<int>(dists.size()) != cfg.sensor_count)
    throw std::invalid_argument("one interest point distribution per sensor");

  const int S = cfg.sensor_count;
  const int N = cfg.node_count;
  const double o = cfg.overlap;

  FrameTimeline tl;
  tl.slices.resize(S);
  tl.volumes.resize(S);
  tl.loads.resize(S);
  tl.experienced_tx.resize(S);
  tl.experienced_proc.resize(S);
  tl.slice_completion.assign(
      S, std::vector<double>(N, std::numeric_limits<double>::quiet_NaN()));
  tl.sensor_completion.assign(S, 0.0);
  tl.node_busy_time.assign(N, 0.0);

  for (int s = 0; s < S; ++s) {
    const Allocation& a = profile.sensors[s];
    const int V = a.slice_count();
    tl.slices[s].resize(V);
    tl.volumes[s].resize(V);
    tl.loads[s].resize(V);
    tl.experienced_tx[s].resize(V);
    tl.experienced_proc[s].resize(V);
    for (int v = 0; v < V; ++v) {
      int n = a.assignment[v];
      if (!std::isfinite(cfg.transmission_coeffs[s][n]))
        throw std::runtime_error("infeasible link used by sensor " +
                                 std::to_string(s));
      tl.volumes[s][v] = slice_volume(a.width(v), v, V, o);
      int xi = points_in_slice(dists[s], a.cutpoints[v], a.cutpoints[v + 1]);
      tl.loads[s][v] = a.width(v) + cfg.alpha_d * xi;
    }
  }

  // Transmission state.
  std::vector<int> cur(S, 0);
  std::vector<double> rem(S);
  std::vector<bool> tx_active(S, true);
  int active_count = S;
  for (int s = 0; s < S; ++s) {
    rem[s] = tl.volumes[s][0];
    tl.slices[s][0].t_b = 0.0;
  }

  // Processing state per node.
  struct NodeProc {
    bool busy = false;
    double finish = 0.0;
    double busy_since = 0.0;
    std::vector<std::pair<int, int>> cohort;
  };
  std::vector<NodeProc> node(N);

  auto tx_coeff = [&](int s) {
    return cfg.transmission_coeffs[s][profile.sensors[s].assignment[cur[s]]];
  };

  double t = 0.0;
  int busy_nodes = 0;
  int guard = 0;
  const int guard_max = 16 * (S * N + S + N) + 64;
  while (active_count > 0 || busy_nodes > 0) {
    if (++guard > guard_max)
      throw std::logic_error("event loop failed to make progress");
    const int k = active_count;
    double te = std::numeric_limits<double>::infinity();
    for (int s = 0; s < S; ++s)
      if (tx_active[s]) te = std::min(te, t + rem[s] * k * tx_coeff(s));
    for (int n = 0; n < N; ++n)
      if (node[n].busy) te = std::min(te, node[n].finish);
    // Advance transmission progress to te.
    for (int s = 0; s < S; ++s)
      if (tx_active[s])
        rem[s] = std::max(0.0, rem[s] - (te - t) / (k * tx_coeff(s)));
    t = te;

    // Node completions first: a cohort that finishes exactly when a new
    // slice arrives does not share with it.
    for (int n = 0; n < N; ++n) {
      if (!node[n].busy || node[n].finish > t + kEventTimeTol) continue;
      for (auto [s, v] : node[n].cohort) tl.slices[s][v].t_c = node[n].finish;
      tl.node_busy_time[n] += node[n].finish - node[n].busy_since;
      node[n].cohort.clear();
      node[n].busy = false;
      --busy_nodes;
    }

    // Transmission completions in sensor order.
    for (int s = 0; s < S; ++s) {
      if (!tx_active[s] || rem[s] * k * tx_coeff(s) > kEventTimeTol) continue;
      const int v = cur[s];
      const int n = profile.sensors[s].assignment[v];
      tl.slices[s][v].t_r = t;
      double load = tl.loads[s][v];
      if (node[n].busy) {
        node[n].finish += cfg.processing_coeffs[n] * load;
      } else {
        node[n].busy = true;
        node[n].busy_since = t;
        node[n].finish = t + cfg.processing_coeffs[n] * load;
        ++busy_nodes;
      }
      node[n].cohort.emplace_back(s, v);
      if (v + 1 < profile.sensors[s].slice_count()) {
        cur[s] = v + 1;
        rem[s] = tl.volumes[s][v + 1];
        tl.slices[s][v + 1].t_b = t;  // back-to-back unicast
      } else {
        tx_active[s] = false;
        --active_count;
      }
    }
  }

  // Experienced coefficients and completion times (Eqs. of the model).
  for (int s = 0; s < S; ++s) {
    const Allocation& a = profile.sensors[s];
    for (int v = 0; v < a.slice_count(); ++v) {
      const SliceTimes& st = tl.slices[s][v];
      tl.experienced_tx[s][v] = (st.t_r - st.t_b) / tl.volumes[s][v];
      tl.experienced_proc[s][v] = (st.t_c - st.t_r) / tl.loads[s][v];
      tl.slice_completion[s][a.assignment[v]] = st.t_c;
    }
    double ts = 0.0;
    for (int v = 0; v < a.slice_count(); ++v)
      ts = std::max(ts, tl.slices[s][v].t_c);
    tl.sensor_completion[s] = ts;
    tl.system_completion = std::max(tl.system_completion, ts);
  }
  return tl;
}

// Experienced coefficient tables recomputed from the raw slice times; the
// tables stored in the timeline must agree with these.
struct ExperiencedCoefficients {
  std::vector<std::vector<double>> tx;    // [sensor][slice]
  std::vector<std::vector<double>> proc;  // [sensor][slice]
};

inline ExperiencedCoefficients experienced_coefficients(
    const FrameTimeline& tl, const AllocationProfile& profile,
    const ScenarioConfig& cfg) {
  ExperiencedCoefficients out;
  out.tx.resize(profile.sensor_count());
  out.proc.resize(profile.sensor_count());
  for (int s = 0; s < profile.sensor_count(); ++s) {
    const int V = profile.sensors[s].slice_count();
    out.tx[s].resize(V);
    out.proc[s].resize(V);
    for (int v = 0; v < V; ++v) {
      const SliceTimes& st = tl.slices[s][v];
      double vol = slice_volume(profile.sensors[s].width(v), v, V, cfg.overlap);
      out.tx[s][v] = (st.t_r - st.t_b) / vol;
      out.proc[s][v] = (st.t_c - st.t_r) / tl.loads[s][v];
    }
  }
  return out;
}

struct CompletionTimes {
  std::vector<std::vector<double>> per_node;  // T_{s,n}, NaN unused
  std::vector<double> per_sensor;             // T_s
  double system = 0.0;                        // T
};

inline CompletionTimes completion_times(const FrameTimeline& tl,
                                        const AllocationProfile& profile,
                                        const ScenarioConfig& cfg) {
  CompletionTimes out;
  out.per_node.assign(
      profile.sensor_count(),
      std::vector<double>(cfg.node_count,
                          std::numeric_limits<double>::quiet_NaN()));
  out.per_sensor.assign(profile.sensor_count(), 0.0);
  for (int s = 0; s < profile.sensor_count(); ++s) {
    const Allocation& a = profile.sensors[s];
    for (int v = 0; v < a.slice_count(); ++v) {
      out.per_node[s][a.assignment[v]] = tl.slices[s][v].t_c;
      out.per_sensor[s] = std::max(out.per_sensor[s], tl.slices[s][v].t_c);
    }
    out.system = std::max(out.system, out.per_sensor[s]);
  }
  return out;
}

// Completion time of each processing node (latest t_c among slices processed
// there, 0 when unused). Sorting this descending gives the vector whose
// lexicographic decrease certifies best-response progress.
inline std::vector<double> node_completion_times(
    const FrameTimeline& tl, const AllocationProfile& profile, int node_count) {
  std::vector<double> out(node_count, 0.0);
  for (int s = 0; s < profile.sensor_count(); ++s) {
    const Allocation& a = profile.sensors[s];
    for (int v = 0; v < a.slice_count(); ++v) {
      int n = a.assignment[v];
      out[n] = std::max(out[n], tl.slices[s][v].t_c);
    }
  }
  return out;
}

// Per-sensor transmission busy window: transmission is back-to-back from the
// first slice's t_b (always 0) to the last slice's t_r.
inline std::vector<std::pair<double, double>> transmission_busy_intervals(
    const FrameTimeline& tl) {
  std::vector<std::pair<double, double>> out;
  out.reserve(tl.slices.size());
  for (const auto& sl : tl.slices)
    out.emplace_back(sl.front().t_b, sl.back().t_r);
  return out;
}

// Inverts the airtime-fair channel from observed transmission windows: with
// k(t) simultaneous transmitters, the volume of slice (s,v) equals
// (1/C_{s,n}) * Int_{t_b}^{t_r} dt/k(t), so C_{s,n} is recoverable exactly.
// Returns a [sensor][node] matrix with NaN for unused pairs.
inline std::vector<std::vector<double>> recover_transmission_coefficients(
    const FrameTimeline& tl, const AllocationProfile& profile,
    const ScenarioConfig& cfg) {
  auto busy = transmission_busy_intervals(tl);
  std::vector<double> cuts;
  cuts.push_back(0.0);
  for (auto [b, e] : busy) {
    cuts.push_back(b);
    cuts.push_back(e);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto weighted_time = [&](double from, double to) {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      double a = std::max(cuts[i], from), b = std::min(cuts[i + 1], to);
      if (b <= a) continue;
      double mid = 0.5 * (a + b);
      int k = 0;
      for (auto [bb, ee] : busy)
        if (bb <= mid && mid < ee) ++k;
      if (k > 0) acc += (b - a) / k;
    }
    return acc;
  };

  std::vector<std::vector<double>> rec(
      profile.sensor_count(),
      std::vector<double>(cfg.node_count,
                          std::numeric_limits<double>::quiet_NaN()));
  for (int s = 0; s < profile.sensor_count(); ++s) {
    const Allocation& a = profile.sensors[s];
    for (int v = 0; v < a.slice_count(); ++v) {
      const SliceTimes& st = tl.slices[s][v];
      rec[s][a.assignment[v]] =
          weighted_time(st.t_b, st.t_r) / tl.volumes[s][v];
    }
  }
  return rec;
}

inline void write_timeline_csv(std::ostream& os, const FrameTimeline& tl,
                               const AllocationProfile& profile) {
  os << "sensor,slice,node,t_b,t_r,t_c\n";
  char buf[160];
  for (int s = 0; s < profile.sensor_count(); ++s) {
    for (int v = 0; v < profile.sensors[s].slice_count(); ++v) {
      const SliceTimes& st = tl.slices[s][v];
      std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g,%.17g\n", s, v,
                    profile.sensors[s].assignment[v], st.t_b, st.t_r, st.t_c);
      os << buf;
    }
  }
}

}  // namespace vsn
