#pragma once

// Centralized operation: the off-line system-optimum approximation (TT/C),
// the quantile-vector profile dictionary with bounded-heap nearest-neighbor
// selection, dictionary persistence, and the R-periodic coordinated run.

#include <cstdio>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsn/core.hpp"
#include "vsn/distribution.hpp"
#include "vsn/dynamics.hpp"
#include "vsn/engine.hpp"

namespace vsn {

struct DictionaryEntry {
  std::vector<std::vector<int>> quantiles;  // [sensor][Q-1] pixel coordinates
  AllocationProfile profile;
  double completion = 0.0;  // achieved on the training frame
};

struct ProfileDictionary {
  std::vector<DictionaryEntry> entries;  // insertion order retained
};

struct TtcResult {
  AllocationProfile profile;
  double completion = 0.0;
  int revisions = 0;
};

// Asynchronous round-robin best responses where every sensor minimizes the
// engine-evaluated system completion time. Stops when a full round brings no
// improvement beyond tolerance or the revision cap is hit; returns the best
// profile seen. System completion is non-increasing across accepted
// revisions by construction.
inline TtcResult ttc_optimize(const std::vector<FrameDistribution>& dists,
                              const ScenarioConfig& cfg, int max_rounds = 0) {
  if (max_rounds <= 0) max_rounds = 20 * cfg.sensor_count;
  TtcResult res;
  AllocationProfile profile = bootstrap_profile(cfg);
  FrameTimeline tl = simulate_frame(profile, cfg, dists);
  res.profile = profile;
  res.completion = tl.system_completion;
  int budget = max_rounds;
  bool any = true;
  while (any && budget > 0) {
    any = false;
    for (int s = 0; s < cfg.sensor_count && budget > 0; ++s, --budget) {
      BestResponseResult br = tt_best_response(
          cfg, profile, s, cfg.transmission_coeffs, cfg.processing_coeffs,
          dists, &tl, ResponseObjective::SystemCompletion);
      ++res.revisions;
      if (!br.improved) continue;
      profile.sensors[s] = br.alloc;
      tl = simulate_frame(profile, cfg, dists);
      any = true;
      if (tl.system_completion < res.completion) {
        res.completion = tl.system_completion;
        res.profile = profile;
      }
    }
  }
  return res;
}

// Squared Euclidean distance between two multi-view quantile vectors.
inline double quantile_distance(const std::vector<std::vector<int>>& a,
                                const std::vector<std::vector<int>>& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("quantile vector sensor count mismatch");
  double acc = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].size() != b[s].size())
      throw std::invalid_argument("quantile vector length mismatch");
    for (std::size_t p = 0; p < a[s].size(); ++p) {
      double d = static_cast<double>(a[s][p]) - static_cast<double>(b[s][p]);
      acc += d * d;
    }
  }
  return acc;
}

inline std::vector<std::vector<int>> multiview_quantiles(
    const std::vector<FrameDistribution>& dists, const ScenarioConfig& cfg) {
  std::vector<std::vector<int>> out;
  out.reserve(dists.size());
  for (const auto& d : dists)
    out.push_back(quantile_vector(d, cfg.quantile_count, cfg.frame_width).values);
  return out;
}

// Collects the L entries nearest to the predicted quantile vector with a
// bounded max-heap (O(M log L) comparisons), then returns the one whose
// stored profile yields the lowest engine-evaluated completion time on the
// predicted distributions. Ties fall to the earliest inserted entry.
inline AllocationProfile select_profile(
    const std::vector<std::vector<int>>& predicted_q,
    const ProfileDictionary& dict, int L, const ScenarioConfig& cfg,
    const std::vector<FrameDistribution>& predicted,
    std::vector<int>* selected_indices = nullptr) {
  if (dict.entries.empty())
    throw std::invalid_argument("profile dictionary is empty");
  if (L < 1) throw std::invalid_argument("candidate count must be >= 1");

  std::priority_queue<std::pair<double, int>> heap;  // largest distance on top
  for (int j = 0; j < static_cast<int>(dict.entries.size()); ++j) {
    double e = quantile_distance(predicted_q, dict.entries[j].quantiles);
    if (static_cast<int>(heap.size()) < L) {
      heap.emplace(e, j);
    } else if (e < heap.top().first) {
      heap.pop();
      heap.emplace(e, j);
    }
  }
  std::vector<int> shortlist;
  while (!heap.empty()) {
    shortlist.push_back(heap.top().second);
    heap.pop();
  }
  std::sort(shortlist.begin(), shortlist.end());
  if (selected_indices) *selected_indices = shortlist;

  int best_idx = -1;
  double best_t = 0.0;
  for (int j : shortlist) {
    FrameTimeline tl = simulate_frame(dict.entries[j].profile, cfg, predicted);
    if (best_idx < 0 || tl.system_completion < best_t - 1e-15) {
      best_idx = j;
      best_t = tl.system_completion;
    }
  }
  return dict.entries[best_idx].profile;
}

// One dictionary entry per training multi-view frame, profiles computed with
// the off-line TT/C optimizer.
inline ProfileDictionary build_dictionary(
    const std::vector<std::vector<FrameDistribution>>& training,
    const ScenarioConfig& cfg, int M) {
  if (M < 1) throw std::invalid_argument("dictionary size must be >= 1");
  ProfileDictionary dict;
  int count = std::min<int>(M, static_cast<int>(training.size()));
  for (int j = 0; j < count; ++j) {
    TtcResult ttc = ttc_optimize(training[j], cfg);
    DictionaryEntry e;
    e.quantiles = multiview_quantiles(training[j], cfg);
    e.profile = ttc.profile;
    e.completion = ttc.completion;
    dict.entries.push_back(std::move(e));
  }
  return dict;
}

// Flat-file persistence. Header line: "vsndict 1 S Q w M". One line per
// entry: S*(Q-1) quantile integers, then per sensor the slice count V, V node
// indices and V+1 pixel cutpoints, then the stored completion time. The
// round trip is lossless (cutpoints are pixel integers, times use %.17g).
inline void save_dictionary(std::ostream& os, const ProfileDictionary& dict,
                            int sensor_count, int quantile_count,
                            int frame_width) {
  os << "vsndict 1 " << sensor_count << ' ' << quantile_count << ' '
     << frame_width << ' ' << dict.entries.size() << '\n';
  char buf[64];
  for (const auto& e : dict.entries) {
    for (const auto& qs : e.quantiles)
      for (int q : qs) os << q << ' ';
    for (const auto& a : e.profile.sensors) {
      os << a.slice_count() << ' ';
      for (int n : a.assignment) os << n << ' ';
      for (double x : a.cutpoints)
        os << static_cast<int>(std::lround(x * frame_width)) << ' ';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", e.completion);
    os << buf << '\n';
  }
}

struct LoadedDictionary {
  ProfileDictionary dict;
  int sensor_count = 0;
  int quantile_count = 0;
  int frame_width = 0;
};

inline LoadedDictionary load_dictionary(std::istream& is) {
  LoadedDictionary out;
  std::string magic;
  int version = 0;
  std::size_t entries = 0;
  if (!(is >> magic >> version >> out.sensor_count >> out.quantile_count >>
        out.frame_width >> entries) ||
      magic != "vsndict" || version != 1)
    throw std::runtime_error("not a vsndict version 1 file");
  for (std::size_t j = 0; j < entries; ++j) {
    DictionaryEntry e;
    e.quantiles.assign(out.sensor_count,
                       std::vector<int>(out.quantile_count - 1, 0));
    for (auto& qs : e.quantiles)
      for (int& q : qs)
        if (!(is >> q)) throw std::runtime_error("truncated dictionary entry");
    e.profile.sensors.resize(out.sensor_count);
    for (auto& a : e.profile.sensors) {
      int V = 0;
      if (!(is >> V) || V < 1)
        throw std::runtime_error("bad slice count in dictionary entry");
      a.assignment.resize(V);
      for (int& n : a.assignment)
        if (!(is >> n)) throw std::runtime_error("truncated assignment");
      a.cutpoints.resize(V + 1);
      for (double& x : a.cutpoints) {
        int px = 0;
        if (!(is >> px)) throw std::runtime_error("truncated cutpoints");
        x = static_cast<double>(px) / out.frame_width;
      }
    }
    if (!(is >> e.completion))
      throw std::runtime_error("truncated completion time");
    out.dict.entries.push_back(std::move(e));
  }
  return out;
}

// Coordinated operation: the dictionary is seeded off-line from the first
// max(M,1) frames, the coordinator installs a dictionary profile every R
// frames, and between refreshes the sensors run the configured distributed
// algorithm with frozen assignments (allocation-only updates).
inline RunState coordinated_run(
    const ScenarioConfig& cfg,
    const std::vector<std::vector<FrameDistribution>>& dists, int R, int L,
    int M = 64, const ProfileDictionary* prebuilt = nullptr) {
  if (R < 1) throw std::invalid_argument("inter-refresh interval must be >= 1");
  ProfileDictionary dict;
  int training_count = 0;
  if (prebuilt) {
    dict = *prebuilt;
    training_count = static_cast<int>(dists.size());
  } else {
    training_count = std::min<int>(std::max(M, 1),
                                   static_cast<int>(dists.size()));
    std::vector<std::vector<FrameDistribution>> training(
        dists.begin(), dists.begin() + training_count);
    dict = build_dictionary(training, cfg, training_count);
  }
  const std::vector<FrameDistribution>& seed_frame =
      dists[std::max(0, training_count - 1) % dists.size()];

  CoordinationHook hook;
  hook.refresh_interval = R;
  hook.install = [&](int frame, const std::vector<FrameDistribution>& predicted)
      -> AllocationProfile {
    // No previous frame exists at frame 0; fall back to the coordinator's
    // most recent training frame as the prediction source.
    const std::vector<FrameDistribution>& basis =
        frame == 0 ? seed_frame : predicted;
    auto q = multiview_quantiles(basis, cfg);
    return select_profile(q, dict, L, cfg, basis);
  };

  RunOptions options;
  options.freeze_assignments = true;
  return run_loop(cfg, dists, options, &hook);
}

}  // namespace vsn
