#pragma once

// Prediction/reference association: distance matrices, minimum-cost
// bipartite assignment (Hungarian / Kuhn-Munkres), and threshold masks.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "seld/geometry.hpp"

namespace seld {

// Dense row-major M x N matrix; rows are predictions, columns references.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  DistanceMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) throw ConfigError("distance matrix size mismatch");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

struct Assignment {
  // Sorted by prediction index.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double cost = 0.0;

  std::size_t size() const { return pairs.size(); }
};

// Slack on the inclusive threshold test, in degrees. Distances that equal a
// threshold analytically can land a few ulps above it.
inline constexpr double kThresholdTolerance = 1e-9;

class ThresholdMask {
 public:
  ThresholdMask(const DistanceMatrix& d, double theta)
      : theta_(theta), rows_(d.rows()), cols_(d.cols()), passes_(d.rows() * d.cols()) {
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) passes_[i * cols_ + j] = d(i, j) <= theta + kThresholdTolerance;
  }

  double theta() const { return theta_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool operator()(std::size_t i, std::size_t j) const { return passes_[i * cols_ + j] != 0; }

  // Number of assigned pairs whose entry passes, i.e. ||T (.) A||_1.
  std::size_t count_passing(const Assignment& a) const {
    std::size_t k = 0;
    for (const auto& [i, j] : a.pairs) k += (*this)(i, j) ? 1 : 0;
    return k;
  }

 private:
  double theta_;
  std::size_t rows_, cols_;
  std::vector<char> passes_;
};

inline DistanceMatrix build_distance_matrix(std::span<const Direction> preds,
                                            std::span<const Direction> refs) {
  DistanceMatrix d(preds.size(), refs.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const auto pi = preds[i].unit_vector();
    for (std::size_t j = 0; j < refs.size(); ++j) d(i, j) = angular_distance(pi, refs[j].unit_vector());
  }
  return d;
}

// Minimum-cost matching of size min(M, N). Rectangular inputs are padded to
// square with a constant sentinel larger than any real matching cost; pairs
// touching padding are dropped afterwards.
inline Assignment hungarian(const DistanceMatrix& d) {
  Assignment out;
  if (d.empty()) return out;

  const std::size_t m = d.rows();
  const std::size_t n = d.cols();
  const std::size_t size = std::max(m, n);

  double max_entry = 0.0;
  for (double v : d.values()) max_entry = std::max(max_entry, v);
  const double sentinel = (std::max(max_entry, 180.0) + 1.0) * static_cast<double>(size);

  auto cost = [&](std::size_t i, std::size_t j) {
    return (i < m && j < n) ? d(i, j) : sentinel;
  };

  // Shortest augmenting path formulation with row/column potentials,
  // 1-based with column 0 as the virtual source. O(size^3).
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(size + 1, 0.0), v(size + 1, 0.0);
  std::vector<std::size_t> row_of_col(size + 1, 0), way(size + 1, 0);
  std::vector<double> min_slack(size + 1);
  std::vector<char> used(size + 1);

  for (std::size_t row = 1; row <= size; ++row) {
    row_of_col[0] = row;
    std::size_t col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r = row_of_col[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= size; ++c) {
        if (used[c]) continue;
        const double slack = cost(r - 1, c - 1) - u[r] - v[c];
        if (slack < min_slack[c]) {
          min_slack[c] = slack;
          way[c] = col0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= size; ++c) {
        if (used[c]) {
          u[row_of_col[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (row_of_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      row_of_col[col0] = row_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }

  for (std::size_t c = 1; c <= size; ++c) {
    const std::size_t i = row_of_col[c] - 1;
    const std::size_t j = c - 1;
    if (i < m && j < n) out.pairs.emplace_back(i, j);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [i, j] : out.pairs) out.cost += d(i, j);
  return out;
}

inline ThresholdMask threshold_mask(const DistanceMatrix& d, double theta) {
  if (!(theta >= 0.0)) throw ConfigError("threshold must be non-negative");
  return ThresholdMask(d, theta);
}

}  // namespace seld
