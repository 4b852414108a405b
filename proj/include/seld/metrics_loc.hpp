#pragma once

// Class-agnostic localization metrics: localization error (LE), localization
// recall (LR), event count recall (ECR) and their thresholded variants.
// Classes are ignored; every frame associates all predictions with all
// references.

#include <cstddef>
#include <optional>
#include <vector>

#include "seld/annotations.hpp"
#include "seld/assignment.hpp"

namespace seld {

enum class LeAveraging {
  kMicro,  // total assigned distance / total assigned pairs
  kMacro,  // mean of per-frame LE over frames with at least one pair
};

struct ThresholdedLocalization {
  double theta = 0.0;
  std::optional<double> le;
  std::optional<double> lr;
  double ecr = 0.0;
};

struct LocalizationReport {
  std::optional<double> le;
  std::optional<double> lr;
  std::optional<double> ecr;  // undefined only for an empty frame list
  std::vector<ThresholdedLocalization> thresholded;
};

// Running sums over frames; merging two accumulators equals accumulating the
// concatenated frame streams.
class LocalizationAccumulator {
 public:
  LocalizationAccumulator() = default;
  explicit LocalizationAccumulator(std::vector<double> thetas)
      : thetas_(std::move(thetas)), per_theta_(thetas_.size()) {}

  void add_frame(const std::vector<Direction>& preds, const std::vector<Direction>& refs) {
    const std::size_t m = preds.size();
    const std::size_t n = refs.size();
    ++frames_;
    ref_total_ += n;
    if (m == n) ++count_hits_;

    if (m == 0 || n == 0) {
      for (std::size_t t = 0; t < thetas_.size(); ++t) {
        if (n == 0) ++per_theta_[t].count_hits;  // K_theta = 0 = N
      }
      return;
    }
    const auto d = build_distance_matrix(preds, refs);
    const auto a = hungarian(d);
    distance_sum_ += a.cost;
    assigned_ += a.size();
    frame_le_sum_ += a.cost / static_cast<double>(a.size());
    ++frames_with_pairs_;

    for (std::size_t t = 0; t < thetas_.size(); ++t) {
      auto& acc = per_theta_[t];
      std::size_t k = 0;
      for (const auto& [i, j] : a.pairs) {
        if (d(i, j) <= thetas_[t] + kThresholdTolerance) {
          ++k;
          acc.distance_sum += d(i, j);
        }
      }
      acc.assigned += k;
      if (k == n) ++acc.count_hits;
    }
  }

  void add_frame(const FramePair& f) { add_frame(all_directions(f.pred), all_directions(f.ref)); }

  LocalizationAccumulator& operator+=(const LocalizationAccumulator& o) {
    if (thetas_.empty() && frames_ == 0 && !o.thetas_.empty()) {
      thetas_ = o.thetas_;
      per_theta_.assign(thetas_.size(), {});
    }
    if (o.thetas_ != thetas_) throw ConfigError("cannot merge accumulators with different thresholds");
    frames_ += o.frames_;
    ref_total_ += o.ref_total_;
    count_hits_ += o.count_hits_;
    distance_sum_ += o.distance_sum_;
    assigned_ += o.assigned_;
    frame_le_sum_ += o.frame_le_sum_;
    frames_with_pairs_ += o.frames_with_pairs_;
    for (std::size_t t = 0; t < per_theta_.size(); ++t) {
      per_theta_[t].distance_sum += o.per_theta_[t].distance_sum;
      per_theta_[t].assigned += o.per_theta_[t].assigned;
      per_theta_[t].count_hits += o.per_theta_[t].count_hits;
    }
    return *this;
  }

  LocalizationReport report(LeAveraging averaging = LeAveraging::kMicro) const {
    LocalizationReport r;
    if (averaging == LeAveraging::kMicro) {
      if (assigned_ > 0) r.le = distance_sum_ / static_cast<double>(assigned_);
    } else if (frames_with_pairs_ > 0) {
      r.le = frame_le_sum_ / static_cast<double>(frames_with_pairs_);
    }
    if (ref_total_ > 0) r.lr = static_cast<double>(assigned_) / static_cast<double>(ref_total_);
    if (frames_ > 0) r.ecr = static_cast<double>(count_hits_) / static_cast<double>(frames_);
    for (std::size_t t = 0; t < thetas_.size(); ++t) {
      const auto& acc = per_theta_[t];
      ThresholdedLocalization th;
      th.theta = thetas_[t];
      if (acc.assigned > 0) th.le = acc.distance_sum / static_cast<double>(acc.assigned);
      if (ref_total_ > 0) th.lr = static_cast<double>(acc.assigned) / static_cast<double>(ref_total_);
      th.ecr = frames_ > 0 ? static_cast<double>(acc.count_hits) / static_cast<double>(frames_) : 0.0;
      r.thresholded.push_back(th);
    }
    return r;
  }

  const std::vector<double>& thetas() const { return thetas_; }
  std::size_t frames() const { return frames_; }

 private:
  struct PerTheta {
    double distance_sum = 0.0;
    std::size_t assigned = 0;
    std::size_t count_hits = 0;
  };

  std::vector<double> thetas_;
  std::vector<PerTheta> per_theta_;
  std::size_t frames_ = 0;
  std::size_t ref_total_ = 0;
  std::size_t count_hits_ = 0;
  double distance_sum_ = 0.0;
  std::size_t assigned_ = 0;
  double frame_le_sum_ = 0.0;
  std::size_t frames_with_pairs_ = 0;
};

inline LocalizationReport localization_metrics(const std::vector<FramePair>& frames, const std::vector<double>& thetas,
                                               LeAveraging averaging = LeAveraging::kMicro) {
  LocalizationAccumulator acc(thetas);
  for (const auto& f : frames) acc.add_frame(f);
  return acc.report(averaging);
}

inline LocalizationReport localization_metrics(const std::vector<FrameSnapshot>& pred,
                                               const std::vector<FrameSnapshot>& ref,
                                               const std::vector<double>& thetas,
                                               LeAveraging averaging = LeAveraging::kMicro) {
  return localization_metrics(align_frames(pred, ref), thetas, averaging);
}

}  // namespace seld
