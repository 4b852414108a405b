#pragma once

// End-to-end scoring of reference/prediction file pairs. Each file is reduced
// to a FileAccumulator of additive sums; reports, leave-one-out partials and
// dataset merges are all computed from those sums.

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "seld/annotations.hpp"
#include "seld/metrics_det.hpp"
#include "seld/metrics_joint.hpp"
#include "seld/metrics_loc.hpp"
#include "seld/stats.hpp"

namespace seld {

struct EvaluationConfig {
  double frame_hop = kDefaultFrameHop;
  double segment_length = kDefaultSegmentLength;
  std::vector<double> thetas{10.0, 30.0};
  std::map<std::string, double> class_thetas;  // label -> threshold override
  LocMode loc_mode = LocMode::kFrameAverage;
  LeAveraging le_averaging = LeAveraging::kMicro;
  double confidence = 0.95;

  void validate() const {
    if (thetas.empty()) throw ConfigError("at least one threshold is required");
    for (double t : thetas)
      if (!(t > 0.0 && t <= 180.0)) throw ConfigError("thresholds must be in (0, 180]");
    for (const auto& [label, t] : class_thetas)
      if (!(t > 0.0 && t <= 180.0)) throw ConfigError("threshold for class '" + label + "' must be in (0, 180]");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must be in (0, 1)");
    frames_per_segment(frame_hop, segment_length);
  }

  ThresholdSet threshold_set(const Vocabulary& vocab) const {
    ThresholdSet set{thetas, {}};
    for (const auto& [label, t] : class_thetas) set.per_class[vocab.index(label)] = t;
    return set;
  }
};

// Name suffix for a threshold: integral values print without decimals.
inline std::string theta_tag(double theta) {
  if (theta == std::floor(theta) && theta < 1e9) return std::to_string(static_cast<long long>(theta));
  return detail::format_number(theta);
}

struct FileAccumulator {
  LocalizationAccumulator loc;        // frame-wise, class-agnostic
  DetectionCounts detection;          // segment-wise, location-agnostic
  JointAccumulator joint;             // segment-wise
  JointAccumulator joint_frames;      // frame-wise "(f)" variants
  std::size_t frames = 0;
  std::size_t segments = 0;

  FileAccumulator& operator+=(const FileAccumulator& o) {
    loc += o.loc;
    detection += o.detection;
    joint += o.joint;
    joint_frames += o.joint_frames;
    frames += o.frames;
    segments += o.segments;
    return *this;
  }
};

inline FileAccumulator evaluate_frames(const std::vector<FramePair>& frames, std::size_t num_classes,
                                       const ThresholdSet& thresholds, const EvaluationConfig& config) {
  FileAccumulator acc{LocalizationAccumulator(config.thetas), {}, JointAccumulator(num_classes, thresholds),
                      JointAccumulator(num_classes, thresholds), frames.size(), 0};
  for (const auto& f : frames) {
    acc.loc.add_frame(f);
    acc.joint_frames.add_frame(f.pred, f.ref);
  }
  const auto segments = segmentize(frames, num_classes, config.frame_hop, config.segment_length);
  acc.segments = segments.size();
  for (const auto& s : segments) {
    acc.detection += segment_detection_counts(s);
    acc.joint.add_segment(s, config.loc_mode);
  }
  return acc;
}

// The frame grid covers every reference event and every prediction row.
inline FileAccumulator evaluate_file(const std::vector<EventRecord>& reference,
                                     const std::vector<FrameSnapshot>& prediction, const Vocabulary& vocab,
                                     const EvaluationConfig& config) {
  std::size_t total = frames_needed(reference, config.frame_hop);
  for (const auto& s : prediction) total = std::max(total, s.frame_index + 1);
  auto frames = align_frames(densify(prediction, total), rasterize(reference, config.frame_hop, total));
  return evaluate_frames(frames, vocab.size(), config.threshold_set(vocab), config);
}

enum class MetricGroup { kIndependent, kThresholdedLocalization, kJoint, kJointFrames };

struct MetricValue {
  std::string name;
  std::optional<double> value;
  Better better = Better::kLower;
  MetricGroup group = MetricGroup::kIndependent;
};

struct ClassMetrics {
  std::string label;
  std::optional<double> le;
  std::optional<double> lr;
};

struct Interval {
  std::optional<double> low;
  std::optional<double> high;
  std::string error;  // non-empty when the interval could not be computed
};

struct MetricReport {
  std::vector<MetricValue> metrics;  // fixed presentation order
  std::vector<ClassMetrics> per_class;
  std::map<std::string, Interval> intervals;  // filled by the jackknife
  std::size_t files = 0;
  std::size_t frames = 0;
  std::size_t segments = 0;
  std::size_t mean_fallbacks = 0;

  const MetricValue* find(const std::string& name) const {
    for (const auto& m : metrics)
      if (m.name == name) return &m;
    return nullptr;
  }
  std::optional<double> value(const std::string& name) const {
    const auto* m = find(name);
    if (!m) throw ConfigError("unknown metric '" + name + "'");
    return m->value;
  }
};

inline MetricReport make_report(const FileAccumulator& acc, const Vocabulary& vocab, const EvaluationConfig& config) {
  MetricReport r;
  r.frames = acc.frames;
  r.segments = acc.segments;
  r.mean_fallbacks = acc.joint.mean_fallbacks() + acc.joint_frames.mean_fallbacks();
  auto add = [&](std::string name, std::optional<double> v, Better b, MetricGroup g) {
    r.metrics.push_back({std::move(name), v, b, g});
  };
  using enum Better;
  using enum MetricGroup;

  add("ER", acc.detection.error_rate(), kLower, kIndependent);
  add("F1", acc.detection.f1(), kHigher, kIndependent);
  const auto loc = acc.loc.report(config.le_averaging);
  add("LE", loc.le, kLower, kIndependent);
  add("LR", loc.lr, kHigher, kIndependent);
  add("ECR", loc.ecr, kHigher, kIndependent);
  for (const auto& th : loc.thresholded) {
    const auto tag = theta_tag(th.theta);
    add("LE_" + tag, th.le, kLower, kThresholdedLocalization);
    add("LR_" + tag, th.lr, kHigher, kThresholdedLocalization);
    add("ECR_" + tag, th.ecr, kHigher, kThresholdedLocalization);
  }

  auto add_joint = [&](const JointAccumulator& j, const std::string& suffix, MetricGroup g) {
    const auto cl = j.class_aware_localization();
    add("LE_CD" + suffix, cl.le_cd, kLower, g);
    add("LR_CD" + suffix, cl.lr_cd, kHigher, g);
    for (const auto& det : j.location_aware_detection()) {
      const auto tag = theta_tag(det.theta);
      add("ER_" + tag + suffix, det.er, kLower, g);
      add("F_" + tag + suffix, det.f, kHigher, g);
    }
    return cl;
  };
  const auto cl = add_joint(acc.joint, "", kJoint);
  add_joint(acc.joint_frames, "(f)", kJointFrames);

  for (const auto& c : cl.per_class) r.per_class.push_back({vocab.label(c.class_index), c.le, c.lr});
  return r;
}

// A parsed file pair, ready to score.
struct FilePair {
  std::string name;
  std::vector<EventRecord> reference;
  std::vector<FrameSnapshot> prediction;
};

// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. The first exception
// (lowest index) is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

inline std::vector<FileAccumulator> evaluate_files(const std::vector<FilePair>& files, const Vocabulary& vocab,
                                                   const EvaluationConfig& config, std::size_t jobs = 1) {
  config.validate();
  std::vector<FileAccumulator> out(files.size());
  parallel_for(files.size(), jobs,
               [&](std::size_t i) { out[i] = evaluate_file(files[i].reference, files[i].prediction, vocab, config); });
  return out;
}

inline FileAccumulator merge(const std::vector<FileAccumulator>& files) {
  FileAccumulator total;
  for (const auto& f : files) total += f;
  return total;
}

inline MetricReport report_for(const std::vector<FileAccumulator>& files, const Vocabulary& vocab,
                               const EvaluationConfig& config) {
  auto r = make_report(merge(files), vocab, config);
  r.files = files.size();
  return r;
}

// Leave-one-file-out jackknife intervals for every metric in `report`.
inline void add_jackknife_intervals(MetricReport& report, const std::vector<FileAccumulator>& files,
                                    const Vocabulary& vocab, const EvaluationConfig& config, std::size_t jobs = 1) {
  const std::size_t n = files.size();
  if (n < 2) throw TooFewFiles("jackknife needs at least 2 files, got " + std::to_string(n));
  std::vector<MetricReport> partials(n);
  parallel_for(n, jobs, [&](std::size_t left_out) {
    FileAccumulator acc;
    for (std::size_t i = 0; i < n; ++i)
      if (i != left_out) acc += files[i];
    partials[left_out] = make_report(acc, vocab, config);
  });
  for (std::size_t k = 0; k < report.metrics.size(); ++k) {
    const auto& metric = report.metrics[k];
    Interval iv;
    if (!metric.value) {
      iv.error = "undefined metric";
    } else {
      std::vector<double> values(n);
      for (std::size_t i = 0; i < n && iv.error.empty(); ++i) {
        const auto v = partials[i].metrics[k].value;
        if (!v) iv.error = "UndefinedPartial: metric undefined when leaving out file " + std::to_string(i);
        else values[i] = *v;
      }
      if (iv.error.empty()) {
        const auto est = jackknife_from_partials(*metric.value, values, config.confidence);
        iv.low = est.low;
        iv.high = est.high;
      }
    }
    report.intervals[metric.name] = iv;
  }
}

}  // namespace seld
