#pragma once

// Interest-point distributions: per-frame point sets with step-CDF queries,
// pixel-grid quantile vectors, and the piecewise-linear CDF reconstruction
// used by the width solvers.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace vsn {

// One sensor frame's interest points as normalized horizontal coordinates in
// [0,1], kept sorted ascending. Immutable after construction.
struct FrameDistribution {
  std::vector<double> points;

  static FrameDistribution from_points(std::vector<double> pts) {
    std::sort(pts.begin(), pts.end());
    if (!pts.empty() && (pts.front() < 0.0 || pts.back() > 1.0))
      throw std::invalid_argument(
          "interest point coordinates must lie in [0,1]");
    return FrameDistribution{std::move(pts)};
  }

  int count() const { return static_cast<int>(points.size()); }
};

// Right-continuous step CDF: number of points at coordinates <= x.
inline int cdf_eval(const FrameDistribution& dist, double x) {
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("cdf_eval coordinate outside [0,1]");
  return static_cast<int>(
      std::upper_bound(dist.points.begin(), dist.points.end(), x) -
      dist.points.begin());
}

// Points falling in the half-open slice (a, b].
inline int points_in_slice(const FrameDistribution& dist, double a, double b) {
  return cdf_eval(dist, std::min(1.0, std::max(0.0, b))) -
         cdf_eval(dist, std::min(1.0, std::max(0.0, a)));
}

struct QuantileVector {
  std::vector<int> values;  // Q-1 pixel coordinates, nondecreasing
  bool degenerate = false;  // set when the distribution was empty
};

// q(p) = smallest pixel coordinate x in [0..w] with p/Q <= F(x)/count, for
// 1 <= p < Q. An empty distribution yields all zeros, flagged degenerate.
inline QuantileVector quantile_vector(const FrameDistribution& dist, int Q,
                                      int w) {
  if (Q < 2) throw std::invalid_argument("quantile count must be >= 2");
  QuantileVector out;
  out.values.assign(Q - 1, 0);
  const long long total = dist.count();
  if (total == 0) {
    out.degenerate = true;
    return out;
  }
  for (int p = 1; p < Q; ++p) {
    // Smallest integer point count k with k >= p*total/Q.
    long long k = (static_cast<long long>(p) * total + Q - 1) / Q;
    double coord = dist.points[static_cast<std::size_t>(k - 1)];
    int px = static_cast<int>(std::ceil(coord * w - 1e-9));
    out.values[p - 1] = std::min(std::max(px, 0), w);
  }
  return out;
}

// Piecewise-linear CDF over normalized coordinates, built from a quantile
// vector. Repeated quantile positions produce right-continuous jumps. Values
// are expected point counts (eval(1) == total).
class PiecewiseLinearCdf {
 public:
  PiecewiseLinearCdf() = default;

  static PiecewiseLinearCdf from_quantiles(const QuantileVector& q, int Q,
                                           int w, double total) {
    std::vector<std::pair<double, double>> knots;
    knots.emplace_back(0.0, 0.0);
    for (int p = 1; p < Q; ++p)
      knots.emplace_back(static_cast<double>(q.values[p - 1]) / w,
                         total * p / Q);
    knots.emplace_back(1.0, total);
    return PiecewiseLinearCdf(std::move(knots));
  }

  static PiecewiseLinearCdf uniform(double total) {
    return PiecewiseLinearCdf({{0.0, 0.0}, {1.0, total}});
  }

  // Expected count of points at coordinates <= x (right-continuous).
  double eval(double x) const {
    if (xs_.empty()) return 0.0;
    if (x <= xs_.front()) return x < xs_.front() ? 0.0 : y_hi_.front();
    if (x >= xs_.back()) return y_hi_.back();
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
    if (xs_[i] == x) return y_hi_[i];
    double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
    return y_hi_[i] + t * (y_lo_[i + 1] - y_hi_[i]);
  }

  double mass(double a, double b) const { return eval(b) - eval(a); }
  double total() const { return xs_.empty() ? 0.0 : y_hi_.back(); }

 private:
  explicit PiecewiseLinearCdf(std::vector<std::pair<double, double>> knots) {
    // Collapse duplicate x positions into jump knots (first y = left limit,
    // last y = right-continuous value).
    for (const auto& [x, y] : knots) {
      if (!xs_.empty() && xs_.back() == x) {
        y_hi_.back() = std::max(y_hi_.back(), y);
      } else {
        xs_.push_back(x);
        y_lo_.push_back(y);
        y_hi_.push_back(y);
      }
    }
  }

  std::vector<double> xs_;
  std::vector<double> y_lo_;  // value approached from the left
  std::vector<double> y_hi_;  // value at and just after the knot
};

}  // namespace vsn
