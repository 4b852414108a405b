#pragma once

// Deterministic error injection for metric validation: derive predictions
// from references with controlled deletions, insertions, class substitutions,
// fixed-magnitude DoA jitter and location swaps between overlapping events.
//
// Random numbers come from std::mt19937_64 (its output sequence is fixed by
// the C++ standard). Uniform deviates are built from the raw 64-bit words
// here rather than through <random> distributions, whose algorithms differ
// between standard libraries. Each error type draws from its own stream so
// changing one rate does not reshuffle the others.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "seld/annotations.hpp"
#include "seld/geometry.hpp"

namespace seld {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n) {
    return std::min(n - 1, static_cast<std::size_t>(uniform() * static_cast<double>(n)));
  }

 private:
  std::mt19937_64 engine_;
};

// Derive an independent stream seed (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct PerturbationSpec {
  double doa_jitter_deg = 0.0;     // exact angular offset of every kept event
  double deletion_prob = 0.0;
  double insertion_rate = 0.0;     // expected spurious events per minute
  double substitution_prob = 0.0;  // relabel to a uniformly drawn other class
  bool swap_locations = false;     // exchange DoAs of overlapping event pairs
  double swap_prob = 1.0;          // chance that a given overlapping pair is swapped
  std::uint64_t seed = 0;
  double frame_hop = kDefaultFrameHop;  // swap boundaries snap to this grid

  void validate() const {
    auto ratio = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(name) + " must be in [0, 1]");
    };
    ratio(deletion_prob, "deletion_prob");
    ratio(substitution_prob, "substitution_prob");
    ratio(swap_prob, "swap_prob");
    if (!(doa_jitter_deg >= 0.0 && doa_jitter_deg <= 180.0)) throw ConfigError("doa_jitter_deg must be in [0, 180]");
    if (!(frame_hop > 0.0)) throw ConfigError("frame_hop must be positive");
    if (!(insertion_rate >= 0.0) || !std::isfinite(insertion_rate)) {
      throw ConfigError("insertion_rate must be non-negative");
    }
  }
};

enum class InjectionKind { kDeletion, kInsertion, kSubstitution, kJitter, kSwap };

inline const char* to_string(InjectionKind k) {
  switch (k) {
    case InjectionKind::kDeletion: return "deletion";
    case InjectionKind::kInsertion: return "insertion";
    case InjectionKind::kSubstitution: return "substitution";
    case InjectionKind::kJitter: return "jitter";
    case InjectionKind::kSwap: return "swap";
  }
  return "?";
}

struct Injection {
  InjectionKind kind;
  std::size_t source_index = 0;  // input event; output index for insertions
  std::size_t other_index = 0;   // swap partner
  std::size_t from_class = 0;
  std::size_t to_class = 0;
  Direction from_direction;
  Direction to_direction;
  double onset = 0.0;
  double offset = 0.0;
};

struct PerturbationResult {
  std::vector<EventRecord> events;
  std::vector<Injection> log;
};

// Grid of insertion DoAs: 10 degree spacing, elevation in [-40, 40].
inline Direction grid_direction(Rng& rng) {
  const double az = -180.0 + 10.0 * static_cast<double>(rng.index(36));
  const double el = -40.0 + 10.0 * static_cast<double>(rng.index(9));
  return Direction(az, el);
}

inline bool overlaps(const EventRecord& a, const EventRecord& b) {
  return a.onset < b.offset && b.onset < a.offset;
}

// `num_classes` bounds substitutions and insertions; `duration` is the scene
// length for insertions (0 = latest reference offset).
//
// Swaps exchange the DoAs of two overlapping events only while both are
// active: each event is split into before/during/after pieces and the
// pieces inside the common interval trade directions. The interval is widened
// to whole frames so that no frame holds two pieces of one event; each event
// still covers exactly the frames it covered before. Deletion, substitution
// and jitter decisions are drawn once per input event and shared by its
// pieces.
inline PerturbationResult perturb(const std::vector<EventRecord>& events, const PerturbationSpec& spec,
                                  std::size_t num_classes, double duration = 0.0) {
  spec.validate();
  PerturbationResult out;

  if (duration <= 0.0) {
    for (const auto& e : events) duration = std::max(duration, e.offset);
  }

  // Output pieces of each input event, in time order.
  std::vector<std::vector<EventRecord>> pieces(events.size());
  for (std::size_t i = 0; i < events.size(); ++i) pieces[i].push_back(events[i]);

  if (spec.swap_locations) {
    Rng rng(derive_seed(spec.seed, 0));
    std::vector<std::size_t> order(events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return events[a].onset < events[b].onset; });
    std::vector<char> paired(events.size(), 0);
    for (std::size_t a = 0; a < order.size(); ++a) {
      const std::size_t i = order[a];
      if (paired[i]) continue;
      for (std::size_t b = a + 1; b < order.size(); ++b) {
        const std::size_t j = order[b];
        if (paired[j] || !overlaps(events[i], events[j])) continue;
        paired[i] = paired[j] = 1;
        if (rng.uniform() >= spec.swap_prob) break;
        const double hop = spec.frame_hop;
        const double start = std::floor(std::max(events[i].onset, events[j].onset) / hop + 1e-9) * hop;
        const double stop = std::ceil(std::min(events[i].offset, events[j].offset) / hop - 1e-9) * hop;
        out.log.push_back({InjectionKind::kSwap, i, j, events[i].class_index, events[j].class_index,
                           events[i].direction, events[j].direction, start, stop});
        auto split = [&](std::size_t self, const Direction& other_dir) {
          const auto& e = events[self];
          std::vector<EventRecord> p;
          if (e.onset < start) p.push_back({e.class_index, e.onset, start, e.direction});
          p.push_back({e.class_index, std::max(e.onset, start), std::min(e.offset, stop), other_dir});
          if (stop < e.offset) p.push_back({e.class_index, stop, e.offset, e.direction});
          pieces[self] = std::move(p);
        };
        split(i, events[j].direction);
        split(j, events[i].direction);
        break;
      }
    }
  }

  Rng delete_rng(derive_seed(spec.seed, 1));
  Rng subst_rng(derive_seed(spec.seed, 2));
  Rng jitter_rng(derive_seed(spec.seed, 3));
  for (std::size_t i = 0; i < events.size(); ++i) {
    // Fixed number of draws per event keeps streams aligned across specs.
    const double u_delete = delete_rng.uniform();
    const double u_subst = subst_rng.uniform();
    const std::size_t class_draw = num_classes > 1 ? subst_rng.index(num_classes - 1) : 0;
    const double bearing = jitter_rng.uniform(0.0, 360.0);

    const auto& original = events[i];
    if (u_delete < spec.deletion_prob) {
      out.log.push_back({InjectionKind::kDeletion, i, 0, original.class_index, original.class_index,
                         original.direction, original.direction, original.onset, original.offset});
      continue;
    }
    std::size_t cls = original.class_index;
    if (num_classes > 1 && u_subst < spec.substitution_prob) {
      cls = class_draw >= original.class_index ? class_draw + 1 : class_draw;
      out.log.push_back({InjectionKind::kSubstitution, i, 0, original.class_index, cls, original.direction,
                         original.direction, original.onset, original.offset});
    }
    for (auto e : pieces[i]) {
      e.class_index = cls;
      if (spec.doa_jitter_deg > 0.0) {
        const Direction moved = offset_direction(e.direction, spec.doa_jitter_deg, bearing);
        out.log.push_back({InjectionKind::kJitter, i, 0, cls, cls, e.direction, moved, e.onset, e.offset});
        e.direction = moved;
      }
      out.events.push_back(e);
    }
  }

  if (spec.insertion_rate > 0.0 && num_classes > 0 && duration > 0.0) {
    Rng rng(derive_seed(spec.seed, 4));
    const double per_second = spec.insertion_rate / 60.0;
    double t = 0.0;
    while (true) {
      t += -std::log(1.0 - rng.uniform()) / per_second;
      const std::size_t cls = rng.index(num_classes);
      const double length = rng.uniform(0.5, 2.0);
      const Direction dir = grid_direction(rng);
      if (t >= duration) break;
      EventRecord e{cls, t, std::min(duration, t + length), dir};
      out.log.push_back({InjectionKind::kInsertion, out.events.size(), 0, cls, cls, dir, dir, e.onset, e.offset});
      out.events.push_back(e);
    }
  }
  return out;
}

// Layout of a synthetic reference scene. Events are laid out on `tracks`
// independent timelines; within a track events never overlap. With
// `align_s` > 0 onsets and durations are snapped to that grid.
struct SceneSpec {
  double duration_s = 60.0;
  std::size_t events_per_track = 10;
  std::size_t tracks = 1;
  double min_event_s = 1.0;
  double max_event_s = 3.0;
  double align_s = 0.0;
  double min_separation_deg = 10.0;  // between overlapping events
};

inline std::vector<EventRecord> generate_scene(const SceneSpec& scene, std::size_t num_classes, std::uint64_t seed) {
  if (num_classes == 0) throw ConfigError("scene generation needs at least one class");
  if (!(scene.min_event_s > 0.0) || scene.max_event_s < scene.min_event_s) {
    throw ConfigError("invalid event duration range");
  }
  Rng rng(seed);
  auto snap = [&](double v) { return scene.align_s > 0.0 ? std::floor(v / scene.align_s) * scene.align_s : v; };

  std::vector<EventRecord> events;
  for (std::size_t track = 0; track < scene.tracks; ++track) {
    const std::size_t n = scene.events_per_track;
    std::vector<double> lengths(n);
    double busy = 0.0;
    for (auto& len : lengths) {
      len = rng.uniform(scene.min_event_s, scene.max_event_s);
      if (scene.align_s > 0.0) len = std::max(scene.align_s, std::round(len / scene.align_s) * scene.align_s);
      busy += len;
    }
    const double free = scene.duration_s - busy;
    if (free < 0.0) throw ConfigError("scene too short for the requested events");
    std::vector<double> weights(n + 1);
    double wsum = 0.0;
    for (auto& w : weights) {
      w = rng.uniform() + 1e-3;
      wsum += w;
    }
    double t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      t += snap(free * weights[i] / wsum);
      EventRecord e{rng.index(num_classes), t, t + lengths[i], Direction()};
      // Keep simultaneous events apart; fall back to any grid point if the
      // constraint cannot be met.
      for (int attempt = 0; attempt < 1000; ++attempt) {
        e.direction = grid_direction(rng);
        bool ok = true;
        for (const auto& other : events) {
          if (overlaps(e, other) && angular_distance(e.direction, other.direction) < scene.min_separation_deg) {
            ok = false;
            break;
          }
        }
        if (ok) break;
      }
      events.push_back(e);
      t += lengths[i];
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const EventRecord& a, const EventRecord& b) { return a.onset < b.onset; });
  return events;
}

// Frame-level prediction CSV for an event list (empty frames omitted).
inline std::string serialize_prediction(const std::vector<EventRecord>& events, double frame_hop) {
  return serialize_frames(rasterize(events, frame_hop, frames_needed(events, frame_hop)));
}

}  // namespace seld
