#pragma once

// Event lists, frame snapshots and one-second segment views, plus the CSV
// formats used to exchange them.
//
//   reference:   class_label,onset_s,offset_s,azimuth_deg,elevation_deg[,distance_m]
//   prediction:  frame_index,class_index,azimuth_deg,elevation_deg
//   vocabulary:  one class label per line, line number (0-based) = class index

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "seld/assignment.hpp"
#include "seld/errors.hpp"
#include "seld/geometry.hpp"

namespace seld {

inline constexpr double kDefaultFrameHop = 0.02;
inline constexpr double kDefaultSegmentLength = 1.0;

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) throw ConfigError("empty class label at index " + std::to_string(i));
      if (!index_.emplace(labels_[i], i).second) {
        throw ConfigError("duplicate class label '" + labels_[i] + "'");
      }
    }
  }

  std::size_t size() const { return labels_.size(); }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::string& label(std::size_t index) const {
    if (index >= labels_.size()) throw UnknownClass("class index " + std::to_string(index));
    return labels_[index];
  }
  std::optional<std::size_t> find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  std::size_t index(std::string_view label) const {
    if (auto i = find(label)) return *i;
    throw UnknownClass("unknown class label '" + std::string(label) + "'");
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct EventRecord {
  std::size_t class_index = 0;
  double onset = 0.0;   // seconds
  double offset = 0.0;  // seconds, exclusive
  Direction direction;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

struct Instance {
  std::size_t class_index = 0;
  Direction direction;

  friend bool operator==(const Instance&, const Instance&) = default;
};

// Multiset of active (class, direction) instances in one frame.
struct FrameSnapshot {
  std::size_t frame_index = 0;
  std::vector<Instance> instances;

  friend bool operator==(const FrameSnapshot&, const FrameSnapshot&) = default;
};

struct FramePair {
  FrameSnapshot pred;
  FrameSnapshot ref;
};

inline std::vector<Direction> directions_of_class(const FrameSnapshot& s, std::size_t class_index) {
  std::vector<Direction> out;
  for (const auto& inst : s.instances)
    if (inst.class_index == class_index) out.push_back(inst.direction);
  return out;
}

inline std::vector<Direction> all_directions(const FrameSnapshot& s) {
  std::vector<Direction> out;
  out.reserve(s.instances.size());
  for (const auto& inst : s.instances) out.push_back(inst.direction);
  return out;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

inline std::optional<double> to_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::optional<long long> to_integer(std::string_view s) {
  long long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
  return v;
}

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

// Calls fn(line_number, fields) for each non-blank line.
template <class Fn>
void for_each_row(std::istream& in, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = line;
    if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
    if (trim(view).empty()) continue;
    fn(line_no, split_csv(view));
  }
}

}  // namespace detail

inline Vocabulary parse_vocabulary(std::istream& in) {
  std::vector<std::string> labels;
  std::string line;
  while (std::getline(in, line)) {
    auto t = detail::trim(line);
    if (labels.empty() && t.starts_with("\xEF\xBB\xBF")) t.remove_prefix(3);
    if (t.empty()) continue;
    labels.emplace_back(t);
  }
  return Vocabulary(std::move(labels));
}

inline Vocabulary parse_vocabulary(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return parse_vocabulary(in);
}

inline std::vector<EventRecord> parse_reference(std::istream& in, const Vocabulary& vocab,
                                                const std::string& source = "<reference>") {
  std::vector<EventRecord> events;
  bool first_row = true;
  detail::for_each_row(in, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    const bool header_candidate = first_row;
    first_row = false;
    if (f.size() != 5 && f.size() != 6) {
      if (header_candidate) return;
      throw ParseError(source, line_no, "expected 5 or 6 fields, got " + std::to_string(f.size()));
    }
    auto onset = detail::to_double(f[1]);
    if (header_candidate && !onset) return;  // header row
    auto offset = detail::to_double(f[2]);
    auto az = detail::to_double(f[3]);
    auto el = detail::to_double(f[4]);
    if (!onset || !offset || !az || !el) throw ParseError(source, line_no, "malformed numeric field");
    if (f.size() == 6 && !f[5].empty() && !detail::to_double(f[5])) {
      throw ParseError(source, line_no, "malformed distance field");
    }
    const auto cls = vocab.find(f[0]);
    if (!cls) {
      throw UnknownClass(source + ":" + std::to_string(line_no) + ": unknown class label '" +
                         std::string(f[0]) + "'");
    }
    if (!(*onset >= 0.0) || !(*onset < *offset)) {
      throw InvalidInterval(source + ":" + std::to_string(line_no) + ": onset " + std::string(f[1]) +
                            " must be >= 0 and < offset " + std::string(f[2]));
    }
    try {
      events.push_back({*cls, *onset, *offset, Direction(*az, *el)});
    } catch (const InvalidDirection& e) {
      throw ParseError(source, line_no, e.what());
    }
  });
  return events;
}

inline std::vector<EventRecord> parse_reference(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = detail::open_input(path);
  return parse_reference(in, vocab, path.string());
}

// Sparse, ascending list of frames that contain at least one prediction.
inline std::vector<FrameSnapshot> parse_prediction(std::istream& in, const Vocabulary& vocab,
                                                   const std::string& source = "<prediction>") {
  std::map<std::size_t, FrameSnapshot> frames;
  bool first_row = true;
  detail::for_each_row(in, [&](std::size_t line_no, const std::vector<std::string_view>& f) {
    const bool header_candidate = first_row;
    first_row = false;
    long long frame = -1;  // stays negative when the field is not an integer
    bool frame_ok = false;
    if (!f.empty()) {
      if (const auto v = detail::to_integer(f[0])) {
        frame = *v;
        frame_ok = true;
      }
    }
    if (header_candidate && !frame_ok) return;
    if (f.size() != 4) throw ParseError(source, line_no, "expected 4 fields, got " + std::to_string(f.size()));
    const auto cls = detail::to_integer(f[1]);
    const auto az = detail::to_double(f[2]);
    const auto el = detail::to_double(f[3]);
    if (!frame_ok || frame < 0) throw ParseError(source, line_no, "malformed frame index");
    if (!cls || *cls < 0) throw ParseError(source, line_no, "malformed class index");
    if (!az || !el) throw ParseError(source, line_no, "malformed numeric field");
    if (static_cast<std::size_t>(*cls) >= vocab.size()) {
      throw UnknownClass(source + ":" + std::to_string(line_no) + ": class index " + std::string(f[1]) +
                         " >= " + std::to_string(vocab.size()));
    }
    const auto index = static_cast<std::size_t>(frame);
    auto& snap = frames[index];
    snap.frame_index = index;
    try {
      snap.instances.push_back({static_cast<std::size_t>(*cls), Direction(*az, *el)});
    } catch (const InvalidDirection& e) {
      throw ParseError(source, line_no, e.what());
    }
  });
  std::vector<FrameSnapshot> out;
  out.reserve(frames.size());
  for (auto& [_, s] : frames) out.push_back(std::move(s));
  return out;
}

inline std::vector<FrameSnapshot> parse_prediction(const std::filesystem::path& path, const Vocabulary& vocab) {
  auto in = detail::open_input(path);
  return parse_prediction(in, vocab, path.string());
}

// Inclusive frame range covered by [onset, offset) at the given hop. Frame l
// spans [l*hop, (l+1)*hop). A small tolerance absorbs decimal round-off so
// that e.g. 1.00 s at 0.02 s lands exactly on frame 50.
struct FrameSpan {
  std::size_t first = 0;
  std::size_t last = 0;
};

inline FrameSpan frame_span(double onset, double offset, double hop) {
  constexpr double eps = 1e-9;
  const double first = std::floor(onset / hop + eps);
  double last = std::ceil(offset / hop - eps) - 1.0;
  if (last < first) last = first;
  return {static_cast<std::size_t>(std::max(0.0, first)), static_cast<std::size_t>(std::max(0.0, last))};
}

// Number of frames needed to hold every event.
inline std::size_t frames_needed(const std::vector<EventRecord>& events, double hop) {
  std::size_t n = 0;
  for (const auto& e : events) n = std::max(n, frame_span(e.onset, e.offset, hop).last + 1);
  return n;
}

inline std::vector<FrameSnapshot> rasterize(const std::vector<EventRecord>& events, double frame_hop,
                                            std::size_t total_frames) {
  if (!(frame_hop > 0.0)) throw ConfigError("frame hop must be positive");
  std::vector<FrameSnapshot> frames(total_frames);
  for (std::size_t l = 0; l < total_frames; ++l) frames[l].frame_index = l;
  for (const auto& e : events) {
    const auto span = frame_span(e.onset, e.offset, frame_hop);
    for (std::size_t l = span.first; l <= span.last && l < total_frames; ++l) {
      frames[l].instances.push_back({e.class_index, e.direction});
    }
  }
  return frames;
}

// Expand a sparse frame list into `total_frames` consecutive snapshots.
// Frames at or beyond `total_frames` are dropped.
inline std::vector<FrameSnapshot> densify(const std::vector<FrameSnapshot>& sparse, std::size_t total_frames) {
  std::vector<FrameSnapshot> frames(total_frames);
  for (std::size_t l = 0; l < total_frames; ++l) frames[l].frame_index = l;
  for (const auto& s : sparse) {
    if (s.frame_index >= total_frames) continue;
    auto& dst = frames[s.frame_index].instances;
    dst.insert(dst.end(), s.instances.begin(), s.instances.end());
  }
  return frames;
}

inline std::vector<FramePair> align_frames(std::vector<FrameSnapshot> pred, std::vector<FrameSnapshot> ref) {
  if (pred.size() != ref.size()) {
    throw LengthMismatch("prediction has " + std::to_string(pred.size()) + " frames, reference has " +
                         std::to_string(ref.size()));
  }
  std::vector<FramePair> out(pred.size());
  for (std::size_t l = 0; l < pred.size(); ++l) out[l] = {std::move(pred[l]), std::move(ref[l])};
  return out;
}

inline std::string serialize_reference(const std::vector<EventRecord>& events, const Vocabulary& vocab) {
  std::string out;
  for (const auto& e : events) {
    out += vocab.label(e.class_index);
    for (double v : {e.onset, e.offset, e.direction.azimuth(), e.direction.elevation()}) {
      out += ',';
      out += detail::format_number(v);
    }
    out += '\n';
  }
  return out;
}

// Rows ordered by frame, then in instance order within the frame.
inline std::string serialize_frames(const std::vector<FrameSnapshot>& frames) {
  std::string out;
  for (const auto& f : frames) {
    for (const auto& inst : f.instances) {
      out += std::to_string(f.frame_index);
      out += ',';
      out += std::to_string(inst.class_index);
      out += ',';
      out += detail::format_number(inst.direction.azimuth());
      out += ',';
      out += detail::format_number(inst.direction.elevation());
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Segments

// Per-class aggregate of one segment.
struct SegmentClass {
  bool ref_active = false;
  bool pred_active = false;
  std::size_t ref_max = 0;   // max simultaneous reference instances in a member frame
  std::size_t pred_max = 0;  // same for predictions
  // Frame-level class-aware associations inside the segment.
  double matched_distance_sum = 0.0;
  std::size_t matched_pairs = 0;
  // Unit-vector sums of every instance in the segment, for spherical means.
  UnitVector3 ref_sum{0.0, 0.0, 0.0};
  UnitVector3 pred_sum{0.0, 0.0, 0.0};
  Direction ref_first;
  Direction pred_first;
};

struct SegmentView {
  std::size_t segment_index = 0;
  std::vector<SegmentClass> classes;  // indexed by class
};

inline std::size_t frames_per_segment(double frame_hop, double segment_length) {
  if (!(frame_hop > 0.0) || !(segment_length > 0.0)) throw ConfigError("hop and segment length must be positive");
  const double ratio = segment_length / frame_hop;
  const double k = std::round(ratio);
  if (k < 1.0 || std::abs(ratio - k) > 1e-6 * std::max(1.0, k)) {
    throw ConfigError("segment length " + detail::format_number(segment_length) +
                      " s is not a multiple of the frame hop " + detail::format_number(frame_hop) + " s");
  }
  return static_cast<std::size_t>(k);
}

inline std::vector<SegmentView> segmentize(const std::vector<FramePair>& frames, std::size_t num_classes,
                                           double frame_hop, double segment_length) {
  const std::size_t per_segment = frames_per_segment(frame_hop, segment_length);
  const std::size_t n_segments = (frames.size() + per_segment - 1) / per_segment;
  std::vector<SegmentView> segments(n_segments);
  for (std::size_t s = 0; s < n_segments; ++s) {
    segments[s].segment_index = s;
    segments[s].classes.resize(num_classes);
  }

  std::vector<std::size_t> ref_count(num_classes), pred_count(num_classes);
  std::vector<std::vector<Direction>> ref_dirs(num_classes), pred_dirs(num_classes);
  for (std::size_t l = 0; l < frames.size(); ++l) {
    auto& seg = segments[l / per_segment];
    for (std::size_t c = 0; c < num_classes; ++c) {
      ref_dirs[c].clear();
      pred_dirs[c].clear();
    }
    for (const auto& inst : frames[l].ref.instances) {
      if (inst.class_index >= num_classes) throw UnknownClass("class index " + std::to_string(inst.class_index));
      ref_dirs[inst.class_index].push_back(inst.direction);
    }
    for (const auto& inst : frames[l].pred.instances) {
      if (inst.class_index >= num_classes) throw UnknownClass("class index " + std::to_string(inst.class_index));
      pred_dirs[inst.class_index].push_back(inst.direction);
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      auto& sc = seg.classes[c];
      const auto& r = ref_dirs[c];
      const auto& p = pred_dirs[c];
      if (r.empty() && p.empty()) continue;
      for (const auto& d : r) {
        if (!sc.ref_active && &d == &r.front()) sc.ref_first = d;
        const auto v = d.unit_vector();
        sc.ref_sum = {sc.ref_sum.x + v.x, sc.ref_sum.y + v.y, sc.ref_sum.z + v.z};
      }
      for (const auto& d : p) {
        if (!sc.pred_active && &d == &p.front()) sc.pred_first = d;
        const auto v = d.unit_vector();
        sc.pred_sum = {sc.pred_sum.x + v.x, sc.pred_sum.y + v.y, sc.pred_sum.z + v.z};
      }
      sc.ref_active = sc.ref_active || !r.empty();
      sc.pred_active = sc.pred_active || !p.empty();
      sc.ref_max = std::max(sc.ref_max, r.size());
      sc.pred_max = std::max(sc.pred_max, p.size());
      if (!r.empty() && !p.empty()) {
        const auto a = hungarian(build_distance_matrix(p, r));
        sc.matched_distance_sum += a.cost;
        sc.matched_pairs += a.size();
      }
    }
  }
  return segments;
}

}  // namespace seld
