#pragma once

// Location-agnostic, segment-based detection metrics: error rate and F1.
// A class is active in a segment if it is active in at least one member
// frame; activity is binary per class.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "seld/annotations.hpp"

namespace seld {

struct DetectionCounts {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t substitutions = 0, deletions = 0, insertions = 0;
  std::size_t n_ref = 0;

  // Fills S/D/I from FN and FP.
  static DetectionCounts from_tp_fp_fn(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t n_ref) {
    DetectionCounts c{tp, fp, fn, 0, 0, 0, n_ref};
    c.substitutions = std::min(fn, fp);
    c.deletions = fn - c.substitutions;
    c.insertions = fp - c.substitutions;
    return c;
  }

  DetectionCounts& operator+=(const DetectionCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    substitutions += o.substitutions;
    deletions += o.deletions;
    insertions += o.insertions;
    n_ref += o.n_ref;
    return *this;
  }

  std::size_t errors() const { return substitutions + deletions + insertions; }

  std::optional<double> error_rate() const {
    if (n_ref == 0) return std::nullopt;
    return static_cast<double>(errors()) / static_cast<double>(n_ref);
  }

  std::optional<double> f1() const {
    const std::size_t denom = 2 * tp + fp + fn;
    if (denom == 0) return std::nullopt;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }

  friend bool operator==(const DetectionCounts&, const DetectionCounts&) = default;
};

inline DetectionCounts segment_detection_counts(const SegmentView& seg) {
  std::size_t tp = 0, fp = 0, fn = 0, n_ref = 0;
  for (const auto& c : seg.classes) {
    if (c.ref_active) ++n_ref;
    if (c.ref_active && c.pred_active) ++tp;
    else if (c.pred_active) ++fp;
    else if (c.ref_active) ++fn;
  }
  return DetectionCounts::from_tp_fp_fn(tp, fp, fn, n_ref);
}

inline std::vector<DetectionCounts> detection_counts(std::span<const SegmentView> segments) {
  std::vector<DetectionCounts> out;
  out.reserve(segments.size());
  for (const auto& s : segments) out.push_back(segment_detection_counts(s));
  return out;
}

inline DetectionCounts total(std::span<const DetectionCounts> counts) {
  DetectionCounts sum;
  for (const auto& c : counts) sum += c;
  return sum;
}

// Throws EmptyReference when there is no reference activity.
inline double error_rate(std::span<const DetectionCounts> counts) {
  const auto r = total(counts).error_rate();
  if (!r) throw EmptyReference("error rate undefined without reference activity");
  return *r;
}

// Micro-averaged F1. Throws Undefined when reference and prediction are both
// empty.
inline double f1_score(std::span<const DetectionCounts> counts) {
  const auto f = total(counts).f1();
  if (!f) throw Undefined("F1 undefined for empty reference and prediction");
  return *f;
}

}  // namespace seld
