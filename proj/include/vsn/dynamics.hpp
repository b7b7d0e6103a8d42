#pragma once

// Distributed operation: per-sensor knowledge models (measurement-only and
// transmission-time signaling), best responses, revision opportunities, and
// equilibrium / cycle detection over a frame loop.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vsn/core.hpp"
#include "vsn/distribution.hpp"
#include "vsn/engine.hpp"
#include "vsn/solver.hpp"

namespace vsn {

// A revision is adopted (and an equilibrium refuted) only when it improves
// the relevant completion time by more than this relative tolerance.
inline constexpr double kImproveTolFactor = 1e-6;

// What a sensor knows before revising. MO sensors keep only their own
// experienced coefficients, retained per node across frames (stale values
// are deliberately kept for unused nodes). TT sensors additionally hold the
// transmission coefficients recovered from the broadcast windows and the
// broadcast processing coefficients; recovery is exact under the airtime
// model, and pairs never observed remain NaN.
struct SensorKnowledge {
  std::vector<double> mo_tx;
  std::vector<double> mo_proc;
  std::vector<std::vector<double>> tt_tx;
  std::vector<double> tt_proc;

  static SensorKnowledge make(int sensor_count, int node_count) {
    SensorKnowledge k;
    double nan = std::numeric_limits<double>::quiet_NaN();
    k.mo_tx.assign(node_count, nan);
    k.mo_proc.assign(node_count, nan);
    k.tt_tx.assign(sensor_count, std::vector<double>(node_count, nan));
    k.tt_proc.assign(node_count, nan);
    return k;
  }
};

inline void mo_update_knowledge(SensorKnowledge& know,
                                const FrameTimeline& tl,
                                const AllocationProfile& profile, int sensor) {
  const Allocation& a = profile.sensors[sensor];
  for (int v = 0; v < a.slice_count(); ++v) {
    know.mo_tx[a.assignment[v]] = tl.experienced_tx[sensor][v];
    know.mo_proc[a.assignment[v]] = tl.experienced_proc[sensor][v];
  }
}

inline void tt_update_knowledge(SensorKnowledge& know,
                                const std::vector<std::vector<double>>& recovered,
                                const std::vector<double>& broadcast_proc) {
  for (std::size_t s = 0; s < recovered.size(); ++s)
    for (std::size_t n = 0; n < recovered[s].size(); ++n)
      if (!std::isnan(recovered[s][n])) know.tt_tx[s][n] = recovered[s][n];
  know.tt_proc = broadcast_proc;
}

// Every sensor uses all nodes in index order with widths max(o, 1/N),
// renormalized to sum to one and snapped to the pixel grid.
inline AllocationProfile bootstrap_profile(const ScenarioConfig& cfg) {
  const int N = cfg.node_count;
  double width = std::max(cfg.overlap, 1.0 / N);
  double total = width * N;
  Allocation a;
  a.assignment.resize(N);
  a.cutpoints.resize(N + 1);
  for (int n = 0; n < N; ++n) a.assignment[n] = n;
  for (int v = 0; v <= N; ++v) a.cutpoints[v] = v * width / total;
  a.cutpoints.back() = 1.0;
  a = round_to_pixel_grid(a, cfg);
  AllocationProfile profile;
  profile.sensors.assign(cfg.sensor_count, a);
  return profile;
}

inline PiecewiseLinearCdf predicted_cdf(const FrameDistribution& dist,
                                        const ScenarioConfig& cfg) {
  QuantileVector q = quantile_vector(dist, cfg.quantile_count,
                                     cfg.frame_width);
  return PiecewiseLinearCdf::from_quantiles(q, cfg.quantile_count,
                                            cfg.frame_width, dist.count());
}

// MO best response: the single-sensor optimum for the stored experienced
// coefficients and the predicted interest-point profile. A deterministic
// function of the sensor's own measurements only.
inline SingleSensorPlan mo_best_response(
    const SensorKnowledge& know, const FrameDistribution& predicted,
    const ScenarioConfig& cfg,
    const std::optional<std::vector<int>>& frozen_assignment = std::nullopt) {
  for (int n = 0; n < cfg.node_count; ++n)
    if (std::isnan(know.mo_tx[n]) || std::isnan(know.mo_proc[n]))
      throw std::logic_error("MO knowledge incomplete; bootstrap missing");
  PredictedCoefficients pred;
  pred.tx = know.mo_tx;
  pred.proc = know.mo_proc;
  pred.overlap = cfg.overlap;
  pred.alpha_d = cfg.alpha_d;
  pred.cdf = predicted_cdf(predicted, cfg);
  if (!frozen_assignment) return best_single_sensor_allocation(pred, WidthMode::General);
  WidthSolution ws = optimal_widths_general(*frozen_assignment, pred);
  SingleSensorPlan plan;
  if (ws.feasible) {
    plan.alloc = allocation_from_widths(*frozen_assignment, ws.widths);
    plan.predicted_T = predicted_completion(*frozen_assignment, ws.widths, pred);
  } else {
    // Keep the frozen assignment with degenerate-width fallback: equal split.
    std::vector<double> widths(frozen_assignment->size(),
                               1.0 / frozen_assignment->size());
    plan.alloc = allocation_from_widths(*frozen_assignment, widths);
    plan.predicted_T = predicted_completion(*frozen_assignment, widths, pred);
  }
  return plan;
}

enum class ResponseObjective { OwnCompletion, SystemCompletion };

struct BestResponseResult {
  Allocation alloc;           // pixel-aligned
  double value = 0.0;         // engine-evaluated objective of alloc
  double current_value = 0.0; // engine-evaluated objective of the current allocation
  bool improved = false;      // value beats current by the adoption tolerance
};

namespace detail {

inline double response_objective(const FrameTimeline& tl, int sensor,
                                 ResponseObjective obj) {
  return obj == ResponseObjective::OwnCompletion
             ? tl.sensor_completion[sensor]
             : tl.system_completion;
}

// Deterministic coordinate descent on the interior cutpoints over the pixel
// grid with halving step sizes. The objective is piecewise linear in each
// cutpoint, so single-pixel moves suffice to settle on a grid-local optimum.
template <typename Eval>
void pattern_search(std::vector<int>& px, double& fbest, int w, int minw,
                    Eval eval) {
  const int V1 = static_cast<int>(px.size());  // interior cutpoint count
  if (V1 == 0) return;
  auto feasible = [&](const std::vector<int>& p) {
    int prev = 0;
    for (int j = 0; j < V1; ++j) {
      if (p[j] - prev < minw) return false;
      prev = p[j];
    }
    return w - prev >= minw;
  };
  int evals = 0;
  for (int step = std::max(1, w / 8); step >= 1; step /= 2) {
    bool moved = true;
    while (moved && evals < 4000) {
      moved = false;
      for (int j = 0; j < V1; ++j) {
        for (int dir : {+1, -1}) {
          std::vector<int> cand = px;
          cand[j] += dir * step;
          if (!feasible(cand)) continue;
          double f = eval(cand);
          ++evals;
          if (f < fbest - 1e-12) {
            px = cand;
            fbest = f;
            moved = true;
          }
        }
      }
    }
  }
}

}  // namespace detail

// TT best response of one sensor, holding the other sensors fixed at their
// current allocations. Width-solver solutions under contention-adjusted
// coefficients seed the candidate set per assignment; every candidate is then
// evaluated with the exact engine on the predicted distributions and refined
// on the pixel grid. Returns the current allocation unless a candidate
// improves the objective beyond the adoption tolerance.
inline BestResponseResult tt_best_response(
    const ScenarioConfig& cfg, const AllocationProfile& profile, int sensor,
    const std::vector<std::vector<double>>& known_tx,
    const std::vector<double>& known_proc,
    const std::vector<FrameDistribution>& predicted,
    const FrameTimeline* prev_timeline,
    ResponseObjective objective = ResponseObjective::OwnCompletion,
    const std::optional<std::vector<int>>& frozen_assignment = std::nullopt) {
  const int S = cfg.sensor_count;
  const int N = cfg.node_count;
  const int w = cfg.frame_width;
  const int minw = std::max(1, cfg.min_width_px());

  // The sensor evaluates candidates with the coefficients it knows; they are
  // exact where observed, NaN pairs are unusable.
  ScenarioConfig eval_cfg = cfg;
  eval_cfg.transmission_coeffs = known_tx;
  eval_cfg.processing_coeffs = known_proc;
  for (auto& row : eval_cfg.transmission_coeffs)
    for (double& c : row)
      if (std::isnan(c)) c = std::numeric_limits<double>::infinity();
  for (double& p : eval_cfg.processing_coeffs)
    if (std::isnan(p))
      throw std::logic_error("TT knowledge missing processing coefficients");

  auto usable = [&](const std::vector<int>& d) {
    for (int n : d)
      if (!std::isfinite(eval_cfg.transmission_coeffs[sensor][n]))
        return false;
    return true;
  };

  auto evaluate = [&](const Allocation& cand) {
    AllocationProfile p = profile;
    p.sensors[sensor] = cand;
    FrameTimeline tl = simulate_frame(p, eval_cfg, predicted);
    return detail::response_objective(tl, sensor, objective);
  };

  BestResponseResult res;
  res.alloc = profile.sensors[sensor];
  res.current_value = evaluate(res.alloc);
  res.value = res.current_value;

  // Contention-adjusted seed coefficients: the transmission coefficient is
  // inflated by the number of sensors whose transmission windows overlapped
  // ours in the previous frame, the processing coefficient by the load other
  // sensors parked at the node.
  double kappa = static_cast<double>(S);
  std::vector<double> other_load(N, 0.0);
  if (prev_timeline) {
    auto busy = transmission_busy_intervals(*prev_timeline);
    int count = 0;
    for (int s2 = 0; s2 < S; ++s2)
      if (std::max(busy[s2].first, busy[sensor].first) <
          std::min(busy[s2].second, busy[sensor].second) + kEventTimeTol)
        ++count;
    kappa = std::max(1, count);
    for (int s2 = 0; s2 < S; ++s2) {
      if (s2 == sensor) continue;
      const Allocation& a = profile.sensors[s2];
      for (int v = 0; v < a.slice_count(); ++v)
        other_load[a.assignment[v]] += prev_timeline->loads[s2][v];
    }
  }

  PiecewiseLinearCdf cdf = predicted_cdf(predicted[sensor], cfg);
  auto seed_widths = [&](const std::vector<int>& d, bool adjusted) {
    PredictedCoefficients pred;
    pred.tx.resize(N);
    pred.proc.resize(N);
    for (int n = 0; n < N; ++n) {
      double c = eval_cfg.transmission_coeffs[sensor][n];
      pred.tx[n] = adjusted ? kappa * c : c;
      pred.proc[n] = adjusted
                         ? eval_cfg.processing_coeffs[n] * (1.0 + other_load[n])
                         : eval_cfg.processing_coeffs[n];
    }
    pred.overlap = cfg.overlap;
    pred.alpha_d = cfg.alpha_d;
    pred.cdf = cdf;
    return optimal_widths_general(d, pred);
  };

  std::vector<std::vector<int>> assignments =
      frozen_assignment ? std::vector<std::vector<int>>{*frozen_assignment}
                        : enumerate_assignments(N, N);
  for (const auto& d : assignments) {
    if (!usable(d)) continue;
    std::vector<std::vector<int>> starts;  // interior pixel cutpoints
    auto add_seed = [&](const Allocation& a) {
      Allocation r = round_to_pixel_grid(a, cfg);
      std::vector<int> px = cutpoints_to_pixels(r.cutpoints, w);
      std::vector<int> interior(px.begin() + 1, px.end() - 1);
      for (const auto& s0 : starts)
        if (s0 == interior) return;
      starts.push_back(std::move(interior));
    };
    for (bool adjusted : {true, false}) {
      WidthSolution ws = seed_widths(d, adjusted);
      if (ws.feasible) add_seed(allocation_from_widths(d, ws.widths));
    }
    if (d == profile.sensors[sensor].assignment)
      add_seed(profile.sensors[sensor]);
    if (starts.empty() && static_cast<long long>(d.size()) * minw <= w) {
      // Equal split fallback so every usable assignment is explored.
      std::vector<double> widths(d.size(), 1.0 / d.size());
      add_seed(allocation_from_widths(d, widths));
    }
    for (auto& px : starts) {
      auto eval_px = [&](const std::vector<int>& interior) {
        Allocation a;
        a.assignment = d;
        a.cutpoints.reserve(interior.size() + 2);
        a.cutpoints.push_back(0.0);
        for (int p : interior)
          a.cutpoints.push_back(static_cast<double>(p) / w);
        a.cutpoints.push_back(1.0);
        return evaluate(a);
      };
      double f = eval_px(px);
      detail::pattern_search(px, f, w, minw, eval_px);
      double tie = 1e-12 * std::max(1.0, res.value);
      Allocation cand;
      cand.assignment = d;
      cand.cutpoints.push_back(0.0);
      for (int p : px) cand.cutpoints.push_back(static_cast<double>(p) / w);
      cand.cutpoints.push_back(1.0);
      bool better = f < res.value - tie;
      if (!better && std::abs(f - res.value) <= tie) {
        if (std::lexicographical_compare(
                cand.assignment.begin(), cand.assignment.end(),
                res.alloc.assignment.begin(), res.alloc.assignment.end()))
          better = true;
      }
      if (better) {
        res.alloc = std::move(cand);
        res.value = f;
      }
    }
  }

  double tol = kImproveTolFactor * std::max(1.0, res.current_value);
  res.improved = res.value < res.current_value - tol;
  if (!res.improved) {
    res.alloc = profile.sensors[sensor];
    res.value = res.current_value;
  }
  return res;
}

// Applies the configured revision opportunity to the sensors' proposals.
// Async lets only sensor (frame mod S) revise; plain synchronous adopts all
// proposals; synchronous/S blends cutpoints at weight 1/S when the assignment
// is unchanged and adopts the proposal outright when it changed.
inline AllocationProfile apply_revision(
    const ScenarioConfig& cfg, Revision mode, int frame,
    const std::vector<std::optional<Allocation>>& proposals,
    const AllocationProfile& previous) {
  const int S = cfg.sensor_count;
  AllocationProfile next = previous;
  auto adopt = [&](int s, const Allocation& a) {
    next.sensors[s] = round_to_pixel_grid(a, cfg);
  };
  if (mode == Revision::Async) {
    int r = frame % S;
    if (proposals[r]) adopt(r, *proposals[r]);
  } else {
    for (int s = 0; s < S; ++s) {
      if (!proposals[s]) continue;
      const Allocation& prop = *proposals[s];
      if (mode == Revision::SyncAveraged &&
          prop.assignment == previous.sensors[s].assignment) {
        Allocation blended = prop;
        for (std::size_t i = 0; i < blended.cutpoints.size(); ++i)
          blended.cutpoints[i] =
              (1.0 / S) * prop.cutpoints[i] +
              (static_cast<double>(S - 1) / S) * previous.sensors[s].cutpoints[i];
        adopt(s, blended);
      } else {
        adopt(s, prop);
      }
    }
  }
  auto violations = validate_profile(next, cfg);
  if (!violations.empty())
    throw std::logic_error("revision produced an invalid profile");
  return next;
}

enum class EquilibriumState { Transient, Converged, Cycle };

struct EquilibriumStatus {
  EquilibriumState state = EquilibriumState::Transient;
  int period = 0;  // set for cycles

  std::string label() const {
    switch (state) {
      case EquilibriumState::Converged: return "converged";
      case EquilibriumState::Cycle: return "cycle" + std::to_string(period);
      default: return "transient";
    }
  }
};

// Converged when every sensor's allocation is unchanged (within tol_px on
// cutpoints) across the window; a cycle when the profile sequence repeats
// with period p <= window/2; transient otherwise.
inline EquilibriumStatus detect_equilibrium(
    const std::vector<AllocationProfile>& history, int window, double tol_px,
    int frame_width) {
  EquilibriumStatus st;
  const int L = static_cast<int>(history.size());
  if (L < window || window < 1) return st;
  const AllocationProfile& last = history.back();
  bool stable = true;
  for (int i = L - window; i < L && stable; ++i)
    stable = profiles_close(history[i], last, tol_px, frame_width);
  if (stable) {
    st.state = EquilibriumState::Converged;
    return st;
  }
  for (int p = 2; p <= window / 2; ++p) {
    bool periodic = true;
    for (int i = L - window; i + p < L && periodic; ++i)
      periodic = profiles_close(history[i], history[i + p], tol_px,
                                frame_width);
    if (periodic) {
      st.state = EquilibriumState::Cycle;
      st.period = p;
      return st;
    }
  }
  return st;
}

struct FrameRecord {
  AllocationProfile profile;
  double system_T = 0.0;
  std::vector<double> sensor_T;
  std::vector<double> node_T;  // per-node completion times
  int reviser = -1;            // -1 none, -2 coordinator, -3 all
  EquilibriumStatus status;
};

struct RunState {
  ScenarioConfig cfg;
  AllocationProfile current;
  std::vector<SensorKnowledge> knowledge;
  std::vector<FrameRecord> history;
  FrameTimeline last_timeline;
  bool equilibrium_certified = false;
};

struct RunOptions {
  std::optional<AllocationProfile> initial_profile;
  bool freeze_assignments = false;
  bool certify_on_convergence = true;
};

// Installed by the coordinator: called on frames with frame % R == 0, must
// return the profile to install at every sensor.
struct CoordinationHook {
  int refresh_interval = 1;
  std::function<AllocationProfile(int frame,
                                  const std::vector<FrameDistribution>&)>
      install;
};

// Certifies a converged state: no enumerated unilateral deviation improves
// the deviator's completion time beyond tolerance. TT deviations are engine
// evaluated; MO deviations are judged by the deviator's predicted completion
// time under its own knowledge, which is all an MO sensor can observe.
inline bool certify_equilibrium(const RunState& st,
                                const std::vector<FrameDistribution>& predicted) {
  const ScenarioConfig& cfg = st.cfg;
  for (int s = 0; s < cfg.sensor_count; ++s) {
    if (cfg.scenario == Scenario::TransmissionTime) {
      BestResponseResult br = tt_best_response(
          cfg, st.current, s, st.knowledge[s].tt_tx, st.knowledge[s].tt_proc,
          predicted, &st.last_timeline, ResponseObjective::OwnCompletion);
      if (br.improved) return false;
    } else {
      SingleSensorPlan plan = mo_best_response(st.knowledge[s], predicted[s], cfg);
      Allocation rounded = round_to_pixel_grid(plan.alloc, cfg);
      PredictedCoefficients pred;
      pred.tx = st.knowledge[s].mo_tx;
      pred.proc = st.knowledge[s].mo_proc;
      pred.overlap = cfg.overlap;
      pred.alpha_d = cfg.alpha_d;
      pred.cdf = predicted_cdf(predicted[s], cfg);
      const Allocation& cur = st.current.sensors[s];
      std::vector<double> cur_widths(cur.slice_count());
      for (int v = 0; v < cur.slice_count(); ++v) cur_widths[v] = cur.width(v);
      double t_cur = predicted_completion(cur.assignment, cur_widths, pred);
      std::vector<double> br_widths(rounded.slice_count());
      for (int v = 0; v < rounded.slice_count(); ++v)
        br_widths[v] = rounded.width(v);
      double t_br = predicted_completion(rounded.assignment, br_widths, pred);
      if (t_br < t_cur - kImproveTolFactor * std::max(1.0, t_cur)) return false;
    }
  }
  return true;
}

// The frame loop shared by distributed and coordinated operation: simulate,
// learn, propose with last-value predicted distributions, revise, record.
inline RunState run_loop(const ScenarioConfig& cfg,
                         const std::vector<std::vector<FrameDistribution>>& dists,
                         const RunOptions& options,
                         const CoordinationHook* hook = nullptr) {
  cfg.validate_or_throw();
  if (static_cast<int>(dists.size()) < cfg.frame_count)
    throw std::invalid_argument("trace shorter than the configured frame count");

  RunState st;
  st.cfg = cfg;
  st.knowledge.assign(cfg.sensor_count,
                      SensorKnowledge::make(cfg.sensor_count, cfg.node_count));
  const int S = cfg.sensor_count;
  const int window = 3 * S;

  std::vector<AllocationProfile> profile_history;
  for (int i = 0; i < cfg.frame_count; ++i) {
    const std::vector<FrameDistribution>& predicted =
        i == 0 ? dists[0] : dists[i - 1];
    int reviser = -1;
    if (i == 0) {
      st.current = options.initial_profile ? *options.initial_profile
                                           : bootstrap_profile(cfg);
      if (hook) {
        st.current = hook->install(0, predicted);
        reviser = -2;
      }
    } else if (hook && i % hook->refresh_interval == 0) {
      st.current = hook->install(i, predicted);
      reviser = -2;
    } else {
      std::vector<std::optional<Allocation>> proposals(S);
      std::vector<int> revisers;
      if (cfg.revision == Revision::Async)
        revisers.push_back(i % S);
      else
        for (int s = 0; s < S; ++s) revisers.push_back(s);
      for (int s : revisers) {
        std::optional<std::vector<int>> frozen;
        if (options.freeze_assignments || hook)
          frozen = st.current.sensors[s].assignment;
        if (cfg.scenario == Scenario::MeasurementOnly) {
          proposals[s] =
              mo_best_response(st.knowledge[s], predicted[s], cfg, frozen).alloc;
        } else {
          BestResponseResult br = tt_best_response(
              cfg, st.current, s, st.knowledge[s].tt_tx,
              st.knowledge[s].tt_proc, predicted, &st.last_timeline,
              ResponseObjective::OwnCompletion, frozen);
          proposals[s] = br.alloc;  // unchanged unless it improved
        }
      }
      st.current = apply_revision(cfg, cfg.revision, i, proposals, st.current);
      reviser = cfg.revision == Revision::Async ? i % S : -3;
    }

    FrameTimeline tl = simulate_frame(st.current, cfg, dists[i]);
    if (cfg.scenario == Scenario::MeasurementOnly) {
      for (int s = 0; s < S; ++s)
        mo_update_knowledge(st.knowledge[s], tl, st.current, s);
    } else {
      auto recovered = recover_transmission_coefficients(tl, st.current, cfg);
      for (int s = 0; s < S; ++s)
        tt_update_knowledge(st.knowledge[s], recovered, cfg.processing_coeffs);
    }

    profile_history.push_back(st.current);
    FrameRecord rec;
    rec.profile = st.current;
    rec.system_T = tl.system_completion;
    rec.sensor_T = tl.sensor_completion;
    rec.node_T = node_completion_times(tl, st.current, cfg.node_count);
    rec.reviser = reviser;
    rec.status = detect_equilibrium(profile_history, window, 1.0, cfg.frame_width);
    st.history.push_back(std::move(rec));
    st.last_timeline = std::move(tl);
  }

  if (options.certify_on_convergence && !st.history.empty() &&
      st.history.back().status.state == EquilibriumState::Converged) {
    const std::vector<FrameDistribution>& predicted =
        cfg.frame_count >= 2 ? dists[cfg.frame_count - 2] : dists[0];
    st.equilibrium_certified = certify_equilibrium(st, predicted);
  }
  return st;
}

inline RunState run_distributed(
    const ScenarioConfig& cfg,
    const std::vector<std::vector<FrameDistribution>>& dists,
    const RunOptions& options = {}) {
  return run_loop(cfg, dists, options, nullptr);
}

}  // namespace vsn
