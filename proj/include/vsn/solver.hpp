#pragma once

// Single-sensor divisible-load optimization under predicted coefficients:
// the closed-form equal-finish width recursion, a nested-bisection solver
// that honors a nonuniform interest-point profile, exhaustive assignment
// enumeration, and a small-instance brute-force oracle for the full
// completion-time minimization problem.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vsn/core.hpp"
#include "vsn/distribution.hpp"
#include "vsn/engine.hpp"

namespace vsn {

// Predicted per-node coefficients for one sensor. The optional CDF carries
// the predicted interest-point profile as expected counts.
struct PredictedCoefficients {
  std::vector<double> tx;    // predicted transmission coefficient per node
  std::vector<double> proc;  // predicted processing coefficient per node
  double overlap = 0.0;
  double alpha_d = 0.0;
  std::optional<PiecewiseLinearCdf> cdf;

  double mass(double a, double b) const {
    return cdf ? cdf->mass(a, b) : 0.0;
  }
};

struct WidthSolution {
  bool feasible = false;
  std::vector<double> widths;
};

// Equal-finish widths for a fixed assignment, assuming the processing load of
// a slice is proportional to its width (alpha_d = 0 or evenly spread interest
// points). Backward affine recursion in y_V plus the normalization to 1.
// Reports infeasible when any width falls below the overlap.
inline WidthSolution optimal_widths_linear(const std::vector<int>& d,
                                           const PredictedCoefficients& pred) {
  const int V = static_cast<int>(d.size());
  if (V < 1) throw std::invalid_argument("assignment must not be empty");
  WidthSolution sol;
  if (V == 1) {
    sol.widths = {1.0};
    sol.feasible = 1.0 + 1e-12 >= pred.overlap;
    return sol;
  }
  const double o = pred.overlap;
  std::vector<double> a(V, 0.0), b(V, 0.0);
  b[V - 1] = 1.0;
  for (int v = V - 2; v >= 0; --v) {
    double cn = pred.tx[d[v + 1]], pn = pred.proc[d[v + 1]];
    double pv = pred.proc[d[v]];
    double oterm = (v == V - 2 ? o : 2.0 * o);
    a[v] = (oterm * cn + (cn + pn) * a[v + 1]) / pv;
    b[v] = (cn + pn) * b[v + 1] / pv;
  }
  double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
  double sum_b = std::accumulate(b.begin(), b.end(), 0.0);
  double y_last = (1.0 - sum_a) / sum_b;
  sol.widths.resize(V);
  sol.feasible = true;
  for (int v = 0; v < V; ++v) {
    sol.widths[v] = a[v] + b[v] * y_last;
    if (sol.widths[v] + 1e-12 < o || !(sol.widths[v] > 0.0))
      sol.feasible = false;
  }
  return sol;
}

namespace detail {

// Solves f(x) == target for the strictly increasing f on [lo, lo+span] by
// bisection; returns lo when even f(lo) reaches the target.
template <typename F>
double bisect_increasing(F f, double lo, double span, double target,
                         int max_iter = 200, double tol = 1e-12) {
  if (f(lo) >= target) return lo;
  double hi = lo + span;
  int expand = 0;
  while (f(hi) < target && expand++ < 64) hi += span;
  double a = lo, b = hi;
  for (int it = 0; it < max_iter && (b - a) > tol; ++it) {
    double mid = 0.5 * (a + b);
    if (f(mid) < target)
      a = mid;
    else
      b = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

// Equal-finish widths honoring a nonuniform predicted interest-point profile
// (slice load = width + alpha_d * expected points in the slice). Outer
// bisection on the common finish time, inner left-to-right bisections on the
// cutpoints; each node's finish time is strictly increasing in its right
// cutpoint. Reduces to the linear recursion when alpha_d = 0 or the profile
// is uniform.
inline WidthSolution optimal_widths_general(const std::vector<int>& d,
                                            const PredictedCoefficients& pred) {
  const int V = static_cast<int>(d.size());
  if (V < 1) throw std::invalid_argument("assignment must not be empty");
  WidthSolution sol;
  if (V == 1) {
    sol.widths = {1.0};
    sol.feasible = 1.0 + 1e-12 >= pred.overlap;
    return sol;
  }
  const double o = pred.overlap;

  // Marches the cutpoints so that nodes 1..V-1 finish exactly at time T and
  // node V finishes at T with whatever width that requires; returns the
  // resulting right edge (1.0 means T is the equal-finish time).
  auto march = [&](double T, std::vector<double>* out_widths) {
    double x_prev = 0.0, t_acc = 0.0;
    std::vector<double> widths(V, 0.0);
    for (int v = 0; v < V - 1; ++v) {
      double extra = (v == 0 ? o : 2.0 * o);
      auto finish = [&](double x) {
        double y = x - x_prev;
        return t_acc + pred.tx[d[v]] * (y + extra) +
               pred.proc[d[v]] * (y + pred.alpha_d * pred.mass(x_prev, x));
      };
      double x = detail::bisect_increasing(finish, x_prev, 2.0, T);
      widths[v] = x - x_prev;
      t_acc += pred.tx[d[v]] * (widths[v] + extra);
      x_prev = x;
    }
    auto finish_last = [&](double y) {
      return t_acc + pred.tx[d[V - 1]] * (y + o) +
             pred.proc[d[V - 1]] *
                 (y + pred.alpha_d * pred.mass(x_prev, x_prev + y));
    };
    double y_last = detail::bisect_increasing(finish_last, 0.0, 2.0, T);
    widths[V - 1] = y_last;
    if (out_widths) *out_widths = widths;
    return x_prev + y_last;
  };

  double hi = 1.0;
  int expand = 0;
  while (march(hi, nullptr) < 1.0 && expand++ < 80) hi *= 2.0;
  if (march(hi, nullptr) < 1.0) {
    sol.feasible = false;
    return sol;
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-12 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    if (march(mid, nullptr) < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  march(hi, &sol.widths);
  // Force exact normalization onto the last slice.
  double partial = std::accumulate(sol.widths.begin(), sol.widths.end() - 1,
                                   0.0);
  sol.widths.back() = 1.0 - partial;
  sol.feasible = true;
  for (double y : sol.widths)
    if (y + 1e-9 < o || !(y > 0.0)) sol.feasible = false;
  return sol;
}

// Predicted completion time of each used node under the sequential
// transmission, process-after-reception model, and their maximum.
inline double predicted_completion(const std::vector<int>& d,
                                   const std::vector<double>& widths,
                                   const PredictedCoefficients& pred,
                                   std::vector<double>* per_node = nullptr) {
  const int V = static_cast<int>(d.size());
  double t_acc = 0.0, worst = 0.0, x = 0.0;
  if (per_node) per_node->assign(V, 0.0);
  for (int v = 0; v < V; ++v) {
    double y = widths[v];
    t_acc += pred.tx[d[v]] * slice_volume(y, v, V, pred.overlap);
    double load = y + pred.alpha_d * pred.mass(x, x + y);
    double finish = t_acc + pred.proc[d[v]] * load;
    if (per_node) (*per_node)[v] = finish;
    worst = std::max(worst, finish);
    x += y;
  }
  return worst;
}

// All sequences of distinct nodes with lengths 1..v_max, in lexicographic
// order within each length. Exhaustive enumeration is guarded to small N.
inline std::vector<std::vector<int>> enumerate_assignments(int node_count,
                                                           int v_max) {
  if (node_count > 6)
    throw std::invalid_argument(
        "exhaustive assignment enumeration is guarded to <= 6 nodes");
  if (v_max > node_count) v_max = node_count;
  std::vector<std::vector<int>> out;
  std::vector<int> seq;
  std::vector<bool> used(node_count, false);
  for (int len = 1; len <= v_max; ++len) {
    std::function<void()> gen = [&]() {
      if (static_cast<int>(seq.size()) == len) {
        out.push_back(seq);
        return;
      }
      for (int n = 0; n < node_count; ++n) {
        if (used[n]) continue;
        used[n] = true;
        seq.push_back(n);
        gen();
        seq.pop_back();
        used[n] = false;
      }
    };
    gen();
  }
  return out;
}

// Pruned enumeration: one assignment per length, visiting nodes in
// increasing order of the predicted transmission coefficient (optimal when
// all processing coefficients are equal).
inline std::vector<std::vector<int>> enumerate_assignments_pruned(
    const std::vector<double>& tx, int v_max) {
  const int N = static_cast<int>(tx.size());
  if (v_max > N) v_max = N;
  std::vector<int> order(N);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return tx[a] < tx[b]; });
  std::vector<std::vector<int>> out;
  for (int len = 1; len <= v_max; ++len)
    out.emplace_back(order.begin(), order.begin() + len);
  return out;
}

enum class WidthMode { Linear, General };

struct SingleSensorPlan {
  Allocation alloc;
  double predicted_T = std::numeric_limits<double>::infinity();
};

inline Allocation allocation_from_widths(const std::vector<int>& d,
                                         const std::vector<double>& widths) {
  Allocation a;
  a.assignment = d;
  a.cutpoints.assign(widths.size() + 1, 0.0);
  for (std::size_t v = 0; v < widths.size(); ++v)
    a.cutpoints[v + 1] = a.cutpoints[v] + widths[v];
  a.cutpoints.back() = 1.0;
  return a;
}

// Evaluates every enumerated assignment with the matching width solver and
// returns the one with the lowest predicted completion time. Ties go to the
// lexicographically smallest assignment, then cutpoint vector.
inline SingleSensorPlan best_single_sensor_allocation(
    const PredictedCoefficients& pred, WidthMode mode) {
  const int N = static_cast<int>(pred.tx.size());
  SingleSensorPlan best;
  bool have = false;
  for (const auto& d : enumerate_assignments(N, N)) {
    WidthSolution ws = mode == WidthMode::Linear
                           ? optimal_widths_linear(d, pred)
                           : optimal_widths_general(d, pred);
    if (!ws.feasible) continue;
    double t = predicted_completion(d, ws.widths, pred);
    Allocation alloc = allocation_from_widths(d, ws.widths);
    double tie = 1e-12 * std::max(1.0, t);
    bool better = !have || t < best.predicted_T - tie;
    if (!better && have && std::abs(t - best.predicted_T) <= tie) {
      if (std::lexicographical_compare(alloc.assignment.begin(),
                                       alloc.assignment.end(),
                                       best.alloc.assignment.begin(),
                                       best.alloc.assignment.end()))
        better = true;
      else if (alloc.assignment == best.alloc.assignment &&
               std::lexicographical_compare(alloc.cutpoints.begin(),
                                            alloc.cutpoints.end(),
                                            best.alloc.cutpoints.begin(),
                                            best.alloc.cutpoints.end()))
        better = true;
    }
    if (better) {
      best.alloc = std::move(alloc);
      best.predicted_T = t;
      have = true;
    }
  }
  if (!have)
    throw std::runtime_error("no feasible single-sensor allocation found");
  return best;
}

struct BruteForceResult {
  AllocationProfile profile;
  double completion = std::numeric_limits<double>::infinity();
  long long evaluations = 0;
};

namespace detail {

inline void grid_cutpoints(int V, int w, int stride, int min_width,
                           std::vector<std::vector<int>>* out) {
  std::vector<int> interior(V - 1, 0);
  std::function<void(int, int)> rec = [&](int idx, int lo) {
    if (idx == V - 1) {
      out->push_back(interior);
      return;
    }
    int remaining = (V - 1 - idx);
    for (int p = ((lo + stride - 1) / stride) * stride;
         p + remaining * min_width <= w; p += stride) {
      interior[idx] = p;
      rec(idx + 1, p + min_width);
    }
  };
  rec(0, min_width);
}

}  // namespace detail

// Exhaustive search over assignment profiles and stride-quantized cutpoints,
// evaluated with the exact engine. Guarded to at most `max_evaluations`
// engine calls (default 1e7). Serves as the optimization oracle in tests.
inline BruteForceResult brute_force_ctm(
    const ScenarioConfig& cfg, const std::vector<FrameDistribution>& dists,
    int stride_px, long long max_evaluations = 10'000'000) {
  cfg.validate_or_throw();
  if (stride_px < 1) throw std::invalid_argument("stride must be >= 1 pixel");
  const int S = cfg.sensor_count;
  const int minw = std::max(1, cfg.min_width_px());

  // Per-sensor candidate allocations.
  std::vector<std::vector<Allocation>> cands(S);
  auto assignments = enumerate_assignments(cfg.node_count, cfg.node_count);
  for (int s = 0; s < S; ++s) {
    for (const auto& d : assignments) {
      int V = static_cast<int>(d.size());
      std::vector<std::vector<int>> grids;
      detail::grid_cutpoints(V, cfg.frame_width, stride_px, minw, &grids);
      for (const auto& g : grids) {
        Allocation a;
        a.assignment = d;
        a.cutpoints.reserve(V + 1);
        a.cutpoints.push_back(0.0);
        for (int p : g)
          a.cutpoints.push_back(static_cast<double>(p) / cfg.frame_width);
        a.cutpoints.push_back(1.0);
        cands[s].push_back(std::move(a));
      }
    }
    if (cands[s].empty())
      throw std::runtime_error("no grid-feasible allocation for a sensor");
  }

  long long total = 1;
  for (int s = 0; s < S; ++s) {
    total *= static_cast<long long>(cands[s].size());
    if (total > max_evaluations)
      throw std::runtime_error(
          "brute-force search space exceeds the evaluation guard");
  }

  BruteForceResult best;
  AllocationProfile profile;
  profile.sensors.resize(S);
  std::vector<std::size_t> idx(S, 0);
  while (true) {
    for (int s = 0; s < S; ++s) profile.sensors[s] = cands[s][idx[s]];
    FrameTimeline tl = simulate_frame(profile, cfg, dists);
    ++best.evaluations;
    if (tl.system_completion < best.completion - 1e-15) {
      best.completion = tl.system_completion;
      best.profile = profile;
    }
    int s = S - 1;
    while (s >= 0 && ++idx[s] == cands[s].size()) idx[s--] = 0;
    if (s < 0) break;
  }
  return best;
}

}  // namespace vsn
