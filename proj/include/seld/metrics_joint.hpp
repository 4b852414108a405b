#pragma once

// Joint metrics: class-aware localization (LE_CD, LR_CD) and location-aware
// detection (ER_theta, F_theta).
//
// Per unit (frame or segment) and per class c:
//   1. split predictions and references by class into P_c, R_c;
//   2. associate them with the Hungarian algorithm on D_c;
//   3. count K_c = min(M_c, N_c) and K_c,theta (associations within theta);
//   4. TP = K_c,theta
//      FP = max(0, M_c - N_c) + min(M_c, N_c) - K_c,theta
//      FN = max(0, N_c - M_c)
//
// Segment units use M_c, N_c = maximum simultaneous per-frame counts in the
// segment. The segment distance of a class is the mean of its frame-level
// matched distances (frame-average mode) or the distance between the
// spherical means of each side (segment-mean mode, and the fallback when the
// two sides never co-occur in a frame).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "seld/annotations.hpp"
#include "seld/assignment.hpp"
#include "seld/metrics_det.hpp"

namespace seld {

enum class LocMode { kFrameAverage, kSegmentMean };

struct ClassSlice {
  std::size_t class_index = 0;
  std::vector<Direction> pred_dirs;
  std::vector<Direction> ref_dirs;

  std::size_t m() const { return pred_dirs.size(); }
  std::size_t n() const { return ref_dirs.size(); }
};

struct ClassCounts {
  std::size_t class_index = 0;
  std::size_t m = 0, n = 0;
  std::size_t k = 0;        // min(M_c, N_c)
  std::size_t k_theta = 0;  // associations passing the threshold
  std::size_t tp = 0, fp = 0, fn = 0;
  double distance_sum = 0.0;  // sum of associated distances
  std::size_t pairs = 0;      // number of associated distances in distance_sum
};

// One slice per class with a nonempty side, ordered by class index.
inline std::vector<ClassSlice> class_slices(const FrameSnapshot& pred, const FrameSnapshot& ref) {
  std::map<std::size_t, ClassSlice> by_class;
  for (const auto& inst : pred.instances) {
    auto& s = by_class[inst.class_index];
    s.class_index = inst.class_index;
    s.pred_dirs.push_back(inst.direction);
  }
  for (const auto& inst : ref.instances) {
    auto& s = by_class[inst.class_index];
    s.class_index = inst.class_index;
    s.ref_dirs.push_back(inst.direction);
  }
  std::vector<ClassSlice> out;
  out.reserve(by_class.size());
  for (auto& [_, s] : by_class) out.push_back(std::move(s));
  return out;
}

// Counting equations given the multiplicities and how many associations pass.
inline ClassCounts counts_from(std::size_t class_index, std::size_t m, std::size_t n, std::size_t k_theta) {
  ClassCounts c;
  c.class_index = class_index;
  c.m = m;
  c.n = n;
  c.k = std::min(m, n);
  c.k_theta = k_theta;
  c.tp = k_theta;
  c.fp = (m > n ? m - n : 0) + c.k - k_theta;
  c.fn = n > m ? n - m : 0;
  return c;
}

inline ClassCounts joint_counts(const ClassSlice& slice, double theta) {
  if (!(theta >= 0.0)) throw ConfigError("threshold must be non-negative");
  if (slice.pred_dirs.empty() || slice.ref_dirs.empty()) {
    return counts_from(slice.class_index, slice.m(), slice.n(), 0);
  }
  const auto d = build_distance_matrix(slice.pred_dirs, slice.ref_dirs);
  const auto a = hungarian(d);
  const auto mask = threshold_mask(d, theta);
  auto c = counts_from(slice.class_index, slice.m(), slice.n(), mask.count_passing(a));
  c.distance_sum = a.cost;
  c.pairs = a.size();
  return c;
}

// Segment-level counts for one class. `fallbacks` is incremented whenever a
// spherical mean degenerates and the first direction is used instead.
inline ClassCounts segment_class_counts(std::size_t class_index, const SegmentClass& sc, double theta, LocMode mode,
                                        std::size_t* fallbacks = nullptr) {
  std::size_t m = sc.pred_max;
  std::size_t n = sc.ref_max;
  if (mode == LocMode::kSegmentMean) {
    m = sc.pred_active ? 1 : 0;
    n = sc.ref_active ? 1 : 0;
  }
  const std::size_t k = std::min(m, n);
  if (k == 0) return counts_from(class_index, m, n, 0);

  auto mean_of = [&](const UnitVector3& sum, const Direction& first) {
    if (std::sqrt(sum.x * sum.x + sum.y * sum.y + sum.z * sum.z) <= 1e-9) {
      if (fallbacks) ++*fallbacks;
      return first;
    }
    return Direction::from_vector(sum);
  };

  double distance = 0.0;
  if (mode == LocMode::kFrameAverage && sc.matched_pairs > 0) {
    distance = sc.matched_distance_sum / static_cast<double>(sc.matched_pairs);
  } else {
    distance = angular_distance(mean_of(sc.pred_sum, sc.pred_first), mean_of(sc.ref_sum, sc.ref_first));
  }
  auto c = counts_from(class_index, m, n, distance <= theta + kThresholdTolerance ? k : 0);
  c.distance_sum = distance * static_cast<double>(k);
  c.pairs = k;
  return c;
}

struct ClassLocalization {
  std::size_t class_index = 0;
  std::optional<double> le;
  std::optional<double> lr;
};

struct ClassAwareLocalization {
  std::optional<double> le_cd;
  std::optional<double> lr_cd;
  std::vector<ClassLocalization> per_class;  // classes with any reference
};

struct LocationAwareDetection {
  double theta = 0.0;
  std::optional<double> er;
  std::optional<double> f;
  DetectionCounts totals;
};

// Thresholds for location-aware detection: a list of global thresholds with
// optional per-class overrides that replace the global value for that class.
struct ThresholdSet {
  std::vector<double> global;
  std::map<std::size_t, double> per_class;

  double for_class(std::size_t t, std::size_t class_index) const {
    auto it = per_class.find(class_index);
    return it == per_class.end() ? global[t] : it->second;
  }
};

// Accumulates ClassCounts over units. Localization sums are non-thresholded;
// detection sums are kept per configured threshold.
class JointAccumulator {
 public:
  JointAccumulator() = default;
  JointAccumulator(std::size_t num_classes, ThresholdSet thresholds)
      : thresholds_(std::move(thresholds)),
        classes_(num_classes),
        detection_(thresholds_.global.size()) {}

  // Adds one unit. `per_theta[t]` holds the unit's class counts under
  // threshold t; localization terms are read from per_theta[0] (they do not
  // depend on the threshold).
  void add_unit(const std::vector<std::vector<ClassCounts>>& per_theta) {
    if (per_theta.size() != detection_.size()) throw ConfigError("threshold count mismatch");
    if (!per_theta.empty()) {
      for (const auto& c : per_theta.front()) {
        auto& acc = classes_.at(c.class_index);
        acc.distance_sum += c.distance_sum;
        acc.pairs += c.pairs;
        acc.k += c.k;
        acc.n += c.n;
        acc.m += c.m;
      }
    }
    for (std::size_t t = 0; t < per_theta.size(); ++t) {
      std::size_t tp = 0, fp = 0, fn = 0, n_ref = 0;
      for (const auto& c : per_theta[t]) {
        tp += c.tp;
        fp += c.fp;
        fn += c.fn;
        n_ref += c.n;
      }
      detection_[t] += DetectionCounts::from_tp_fp_fn(tp, fp, fn, n_ref);
    }
  }

  void add_segment(const SegmentView& seg, LocMode mode) {
    std::vector<std::vector<ClassCounts>> per_theta(detection_.size());
    for (std::size_t c = 0; c < seg.classes.size(); ++c) {
      const auto& sc = seg.classes[c];
      if (!sc.ref_active && !sc.pred_active) continue;
      for (std::size_t t = 0; t < per_theta.size(); ++t) {
        per_theta[t].push_back(
            segment_class_counts(c, sc, thresholds_.for_class(t, c), mode, t == 0 ? &mean_fallbacks_ : nullptr));
      }
    }
    add_unit(per_theta);
  }

  void add_frame(const FrameSnapshot& pred, const FrameSnapshot& ref) {
    std::vector<std::vector<ClassCounts>> per_theta(detection_.size());
    for (const auto& slice : class_slices(pred, ref)) {
      for (std::size_t t = 0; t < per_theta.size(); ++t) {
        per_theta[t].push_back(joint_counts(slice, thresholds_.for_class(t, slice.class_index)));
      }
    }
    add_unit(per_theta);
  }

  JointAccumulator& operator+=(const JointAccumulator& o) {
    if (classes_.empty() && detection_.empty()) {
      *this = o;
      return *this;
    }
    if (o.classes_.size() != classes_.size() || o.detection_.size() != detection_.size()) {
      throw ConfigError("cannot merge joint accumulators with different shapes");
    }
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      classes_[c].distance_sum += o.classes_[c].distance_sum;
      classes_[c].pairs += o.classes_[c].pairs;
      classes_[c].k += o.classes_[c].k;
      classes_[c].n += o.classes_[c].n;
      classes_[c].m += o.classes_[c].m;
    }
    for (std::size_t t = 0; t < detection_.size(); ++t) detection_[t] += o.detection_[t];
    mean_fallbacks_ += o.mean_fallbacks_;
    return *this;
  }

  // LE_c = assigned distance / assigned pairs within the class; LR_c =
  // sum K_c / sum N_c. LE_CD and LR_CD are means over classes that have
  // any reference; classes never referenced are excluded.
  ClassAwareLocalization class_aware_localization() const {
    ClassAwareLocalization out;
    double le_sum = 0.0, lr_sum = 0.0;
    std::size_t le_classes = 0, lr_classes = 0;
    for (std::size_t c = 0; c < classes_.size(); ++c) {
      const auto& acc = classes_[c];
      if (acc.n == 0) continue;
      ClassLocalization cl;
      cl.class_index = c;
      cl.lr = static_cast<double>(acc.k) / static_cast<double>(acc.n);
      lr_sum += *cl.lr;
      ++lr_classes;
      if (acc.pairs > 0) {
        cl.le = acc.distance_sum / static_cast<double>(acc.pairs);
        le_sum += *cl.le;
        ++le_classes;
      }
      out.per_class.push_back(cl);
    }
    if (lr_classes > 0) out.lr_cd = lr_sum / static_cast<double>(lr_classes);
    if (le_classes > 0) out.le_cd = le_sum / static_cast<double>(le_classes);
    return out;
  }

  std::vector<LocationAwareDetection> location_aware_detection() const {
    std::vector<LocationAwareDetection> out;
    for (std::size_t t = 0; t < detection_.size(); ++t) {
      out.push_back({thresholds_.global[t], detection_[t].error_rate(), detection_[t].f1(), detection_[t]});
    }
    return out;
  }

  std::size_t mean_fallbacks() const { return mean_fallbacks_; }
  const ThresholdSet& thresholds() const { return thresholds_; }

 private:
  struct PerClass {
    double distance_sum = 0.0;
    std::size_t pairs = 0;
    std::size_t k = 0;
    std::size_t n = 0;
    std::size_t m = 0;
  };

  ThresholdSet thresholds_;
  std::vector<PerClass> classes_;
  std::vector<DetectionCounts> detection_;
  std::size_t mean_fallbacks_ = 0;
};

// Throws Undefined when no class has any association.
inline ClassAwareLocalization class_aware_localization(const JointAccumulator& acc) {
  auto r = acc.class_aware_localization();
  if (!r.le_cd) throw Undefined("class-aware localization error undefined: no class has an association");
  return r;
}

// ER_theta and F_theta over segment views at a single threshold.
inline LocationAwareDetection location_aware_detection(std::span<const SegmentView> segments, double theta,
                                                       LocMode mode = LocMode::kFrameAverage) {
  if (segments.empty()) throw EmptyReference("no segments");
  JointAccumulator acc(segments.front().classes.size(), ThresholdSet{{theta}, {}});
  for (const auto& s : segments) acc.add_segment(s, mode);
  auto r = acc.location_aware_detection().front();
  if (!r.er) throw EmptyReference("location-aware error rate undefined without reference activity");
  return r;
}

}  // namespace seld
