// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "seld/cli.hpp"
#include "seld/seld.hpp"
#include "brute_force.hpp"

namespace {

using namespace seld;
namespace fs = std::filesystem;

struct Outcome {
  bool ok = true;
  std::string detail;
};

// Records the first failed check.
class Checker {
 public:
  void require(bool cond, const std::string& what) {
    if (!cond && out_.ok) {
      out_.ok = false;
      out_.detail = what;
    }
  }
  void near(std::optional<double> v, double expected, double tol, const std::string& what) {
    std::ostringstream os;
    os << what << " = " << (v ? std::to_string(*v) : "undefined") << ", expected " << expected;
    require(v && std::abs(*v - expected) <= tol, os.str());
  }
  Outcome& outcome() { return out_; }

 private:
  Outcome out_;
};

int failures = 0;

void run(int id, const std::string& name, double limit_s, const std::function<void(Checker&)>& body) {
  Checker c;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_s > 0.0) {
    std::ostringstream os;
    os << "runtime " << elapsed << " s exceeds " << limit_s << " s";
    c.require(elapsed < limit_s, os.str());
  }
  const auto& o = c.outcome();
  if (!o.ok) ++failures;
  std::printf("[%s] %2d %-34s %8.3f s%s%s\n", o.ok ? "PASS" : "FAIL", id, name.c_str(), elapsed,
              o.detail.empty() ? "" : "  ", o.detail.c_str());
}

Vocabulary labels(std::size_t n) {
  std::vector<std::string> l;
  for (std::size_t c = 0; c < n; ++c) l.push_back("class" + std::to_string(c));
  return Vocabulary(l);
}

FilePair make_pair(std::string name, std::vector<EventRecord> ref, const std::vector<EventRecord>& pred,
                   double hop = kDefaultFrameHop) {
  return {std::move(name), std::move(ref), rasterize(pred, hop, frames_needed(pred, hop))};
}

MetricReport score(const std::vector<FilePair>& files, const Vocabulary& vocab, const EvaluationConfig& config,
                   std::size_t jobs = 4) {
  return report_for(evaluate_files(files, vocab, config, jobs), vocab, config);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& tag) {
  auto p = fs::temp_directory_path() / ("seld_acceptance_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// 1. Two overlapping events with swapped locations.
void fig3(Checker& c) {
  const Vocabulary vocab({"speech", "dog"});
  const std::vector<EventRecord> ref{{0, 0.5, 2.5, Direction(-80, 0)}, {1, 0.5, 2.5, Direction(80, 0)}};
  PerturbationSpec swap;
  swap.swap_locations = true;
  EvaluationConfig config;
  config.thetas = {10.0};

  const auto r = score({make_pair("s", ref, perturb(ref, swap, 2).events)}, vocab, config, 1);
  c.near(r.value("ER"), 0.0, 1e-9, "ER");
  c.near(r.value("F1"), 1.0, 1e-9, "F1");
  c.near(r.value("LE"), 0.0, 1e-6, "LE");
  c.near(r.value("ECR"), 1.0, 1e-9, "ECR");
  c.near(r.value("ER_10"), 1.0, 1e-9, "ER_10");
  c.near(r.value("F_10"), 0.0, 1e-9, "F_10");
  c.near(r.value("LE_CD"), 160.0, 1e-6, "LE_CD");
  c.near(r.value("LR_CD"), 1.0, 1e-9, "LR_CD");

  const auto twin = score({make_pair("s", ref, ref)}, vocab, config, 1);
  for (const auto& [name, want, tol] : std::vector<std::tuple<std::string, double, double>>{
           {"ER", 0, 1e-9}, {"F1", 1, 1e-9}, {"LE", 0, 1e-6}, {"ECR", 1, 1e-9}, {"ER_10", 0, 1e-9},
           {"F_10", 1, 1e-9}, {"LE_CD", 0, 1e-6}, {"LR_CD", 1, 1e-9}}) {
    c.near(twin.value(name), want, tol, "unswapped " + name);
  }
}

// 2. Four references, three predictions; the dog prediction is within 10
// degrees, the car horn one is 20 degrees off.
void fig4(Checker& c) {
  enum : std::size_t { kDog, kCarHorn, kChild, kCat };
  FramePair f;
  f.ref.instances = {{kDog, Direction(-60, 0)}, {kDog, Direction(60, 10)}, {kCarHorn, Direction(150, 0)},
                     {kChild, Direction(-120, -20)}};
  f.pred.instances = {{kDog, Direction(-55, 2)}, {kCarHorn, Direction(170, 0)}, {kCat, Direction(0, 30)}};
  c.require(angular_distance(f.pred.instances[0].direction, f.ref.instances[0].direction) <= 10.0, "d1 > 10");
  c.require(angular_distance(f.pred.instances[1].direction, f.ref.instances[2].direction) > 10.0, "d2 <= 10");

  JointAccumulator acc(4, ThresholdSet{{10.0, 30.0}, {}});
  for (const auto& s : segmentize(std::vector<FramePair>(50, f), 4, 0.02, 1.0))
    acc.add_segment(s, LocMode::kFrameAverage);
  const auto det = acc.location_aware_detection();
  const auto& t10 = det[0].totals;
  c.require(t10.tp == 1 && t10.fp == 2 && t10.fn == 2,
            "counts TP/FP/FN = " + std::to_string(t10.tp) + "/" + std::to_string(t10.fp) + "/" +
                std::to_string(t10.fn));
  c.require(det[0].f && *det[0].f == 1.0 / 3.0, "F_10 != 1/3");
  c.require(det[1].totals.fn == t10.fn, "FN differs between 10 and 30 degrees");
}

// 3. Hungarian against exhaustive search.
void assignment_oracle(Checker& c) {
  Rng rng(2024);
  std::size_t checked = 0;
  for (int trial = 0; trial < 12000; ++trial) {
    const std::size_t m = 1 + rng.index(6), n = 1 + rng.index(6);
    DistanceMatrix d(m, n);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) = rng.uniform(0.0, 180.0);
    const double got = hungarian(d).cost;
    const double want = testing::brute_force_min_cost(d);
    c.require(std::abs(got - want) <= 1e-12, "trial " + std::to_string(trial) + " cost mismatch");
    ++checked;
  }
  c.require(checked >= 10000, "fewer than 10000 matrices");
}

std::vector<std::vector<EventRecord>> corpus(std::size_t files, const SceneSpec& scene, std::size_t classes,
                                             std::uint64_t seed) {
  std::vector<std::vector<EventRecord>> out;
  for (std::size_t i = 0; i < files; ++i) out.push_back(generate_scene(scene, classes, derive_seed(seed, i)));
  return out;
}

// 4. Fixed-magnitude jitter on non-overlapping scenes.
void jitter_oracle(Checker& c) {
  SceneSpec scene;
  scene.tracks = 1;
  scene.align_s = 0.1;
  const auto vocab = labels(13);
  const auto refs = corpus(100, scene, vocab.size(), 4);
  PerturbationSpec spec;
  spec.doa_jitter_deg = 5.0;
  std::vector<FilePair> files;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    spec.seed = 100 + i;
    files.push_back(make_pair(std::to_string(i), refs[i], perturb(refs[i], spec, vocab.size()).events));
  }
  EvaluationConfig config;
  config.thetas = {10.0, 3.0};
  const auto r = score(files, vocab, config);
  c.near(r.value("LE_CD"), 5.0, 0.01, "LE_CD");
  c.near(r.value("LR_CD"), 1.0, 1e-9, "LR_CD");
  c.near(r.value("F_10"), 1.0, 1e-9, "F_10");
  c.near(r.value("F_3"), 0.0, 1e-9, "F_3");
}

// 5. Deletions at rate 0.3 over 2000 segment-aligned events.
void deletion_oracle(Checker& c) {
  SceneSpec scene;
  scene.tracks = 1;
  scene.events_per_track = 20;
  scene.min_event_s = scene.max_event_s = 2.0;
  scene.align_s = 1.0;
  const auto vocab = labels(13);
  const auto refs = corpus(100, scene, vocab.size(), 5);
  PerturbationSpec spec;
  spec.deletion_prob = 0.3;
  std::vector<FilePair> files;
  std::size_t events = 0, deleted = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    spec.seed = 500 + i;
    const auto out = perturb(refs[i], spec, vocab.size());
    events += refs[i].size();
    deleted += out.log.size();
    files.push_back(make_pair(std::to_string(i), refs[i], out.events));
  }
  c.require(events >= 2000, "fewer than 2000 events");
  const auto r = score(files, vocab, EvaluationConfig{});
  const auto lr = r.value("LR_CD");
  c.near(lr ? std::optional<double>(1.0 - *lr) : std::nullopt, 0.3, 0.03, "1 - LR_CD");
  c.near(r.value("ER"), static_cast<double>(deleted) / static_cast<double>(events), 1e-12, "ER vs deletions/N");
}

// 6. Threshold sweep on a fixture with every error type.
void threshold_sweep(Checker& c) {
  SceneSpec scene;
  scene.tracks = 2;
  const auto vocab = labels(6);
  const auto refs = corpus(20, scene, vocab.size(), 6);
  PerturbationSpec spec{15.0, 0.1, 4.0, 0.1, true, 0.5, 0};
  std::vector<FilePair> files;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    spec.seed = 600 + i;
    files.push_back(make_pair(std::to_string(i), refs[i], perturb(refs[i], spec, vocab.size(), 60.0).events));
  }
  EvaluationConfig config;
  config.thetas = {1, 2, 5, 10, 20, 30, 60, 180};
  const auto r = score(files, vocab, config);
  for (std::size_t t = 1; t < config.thetas.size(); ++t) {
    const auto lo = theta_tag(config.thetas[t - 1]), hi = theta_tag(config.thetas[t]);
    c.require(*r.value("F_" + lo) <= *r.value("F_" + hi), "F_" + lo + " > F_" + hi);
    c.require(*r.value("ER_" + lo) >= *r.value("ER_" + hi), "ER_" + lo + " < ER_" + hi);
    c.require(*r.value("LR_" + lo) <= *r.value("LR_" + hi), "LR_" + lo + " > LR_" + hi);
  }

  // Location-agnostic instance-level F over segments, from raw frame counts.
  const std::size_t per_segment = frames_per_segment(config.frame_hop, config.segment_length);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& file : files) {
    std::size_t total = frames_needed(file.reference, config.frame_hop);
    for (const auto& s : file.prediction) total = std::max(total, s.frame_index + 1);
    const auto ref = rasterize(file.reference, config.frame_hop, total);
    const auto pred = densify(file.prediction, total);
    for (std::size_t start = 0; start < total; start += per_segment) {
      std::vector<std::size_t> m(vocab.size()), n(vocab.size());
      for (std::size_t l = start; l < std::min(total, start + per_segment); ++l) {
        for (std::size_t k = 0; k < vocab.size(); ++k) {
          m[k] = std::max(m[k], directions_of_class(pred[l], k).size());
          n[k] = std::max(n[k], directions_of_class(ref[l], k).size());
        }
      }
      for (std::size_t k = 0; k < vocab.size(); ++k) {
        tp += std::min(m[k], n[k]);
        fp += m[k] - std::min(m[k], n[k]);
        fn += n[k] - std::min(m[k], n[k]);
      }
    }
  }
  const double f = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  c.near(r.value("F_180"), f, 1e-12, "F_180 vs instance-level F");
}

// 7. Jackknife intervals.
void jackknife(Checker& c) {
  const std::vector<double> constant(9, 0.37);
  const auto flat = jackknife_from_partials(0.37, constant);
  c.near(flat.high - flat.low, 0.0, 1e-12, "constant metric width");

  const std::vector<double> partials{0.4, 0.5, 0.6};
  const auto est = jackknife_from_partials(0.5, partials);
  c.near(est.low, 0.0031724576499337858, 1e-9, "n=3 low");
  c.near(est.high, 0.99682754235006621, 1e-9, "n=3 high");

  // Dataset-level intervals on random synthetic fixtures.
  const auto vocab = labels(4);
  SceneSpec scene;
  scene.duration_s = 20.0;
  scene.events_per_track = 4;
  scene.tracks = 2;
  std::size_t checked = 0;
  for (std::uint64_t fixture = 0; fixture < 100; ++fixture) {
    const auto refs = corpus(5, scene, vocab.size(), 7000 + fixture);
    PerturbationSpec spec{10.0, 0.2, 3.0, 0.1, false, 1.0, 0};
    std::vector<FilePair> files;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      spec.seed = fixture * 100 + i;
      files.push_back(make_pair(std::to_string(i), refs[i], perturb(refs[i], spec, vocab.size(), 20.0).events));
    }
    EvaluationConfig config;
    const auto accs = evaluate_files(files, vocab, config, 4);
    auto report = report_for(accs, vocab, config);
    add_jackknife_intervals(report, accs, vocab, config, 4);
    for (const auto& m : report.metrics) {
      const auto& iv = report.intervals.at(m.name);
      if (!m.value || !iv.error.empty()) continue;
      ++checked;
      c.require(*iv.low <= *m.value + 1e-12 && *m.value <= *iv.high + 1e-12,
                "fixture " + std::to_string(fixture) + ": " + m.name + " outside its interval");
    }
  }
  c.require(checked >= 100, "too few defined intervals");
}

// 8. Rankings and rank correlation.
void ranking(Checker& c) {
  const std::vector<double> f1{96.7, 95.5, 94.7};
  c.require(average_ranks(f1, Better::kHigher) == std::vector<double>{1, 2, 3}, "F1 ranks");
  const std::vector<double> a{1, 2, 3, 4}, rev{4, 3, 2, 1}, b{2, 1, 4, 3};
  c.require(spearman(a, a) == 1.0, "identical rankings");
  c.require(spearman(a, rev) == -1.0, "reversed rankings");
  c.near(spearman(a, b), 0.6, 1e-15, "no-tie fixture");
}

// 9. Byte-identical outputs across runs and thread counts.
void determinism(Checker& c) {
  const auto root = scratch("determinism");
  {
    std::ofstream(root / "vocab.txt") << "alarm\nbaby\ncrash\ndog\nengine\nfire\n";
  }
  auto synth = [&](const std::string& out) {
    cli::Options o;
    o.vocab = root / "vocab.txt";
    o.generate = 8;
    o.scene.tracks = 2;
    o.perturbation = {6.0, 0.2, 5.0, 0.1, true, 0.5, 99};
    o.out = root / out;
    cli::cmd_synth(o);
  };
  synth("a");
  synth("b");
  for (const auto& sub : {"ref", "pred"}) {
    for (const auto& entry : fs::directory_iterator(root / "a" / sub)) {
      const auto name = entry.path().filename();
      c.require(slurp(entry.path()) == slurp(root / "b" / sub / name), std::string(sub) + "/" + name.string());
    }
  }

  cli::Options e;
  e.ref_dir = root / "a" / "ref";
  e.pred_dir = root / "a" / "pred";
  e.format = cli::Format::kJson;
  e.jackknife = true;
  e.per_class = true;
  e.jobs = 1;
  const auto first = cli::cmd_evaluate(e);
  const auto second = cli::cmd_evaluate(e);
  e.jobs = 4;
  const auto parallel = cli::cmd_evaluate(e);
  c.require(first == second, "evaluate differs between runs");
  c.require(first == parallel, "evaluate differs between 1 and 4 jobs");
  fs::remove_all(root);
}

// 10. A system with random DoA-to-class association ranks better on the
// official metrics than on the joint ones.
void rank_shift(Checker& c) {
  const auto vocab = labels(8);
  SceneSpec scene;
  scene.tracks = 2;
  const auto refs = corpus(20, scene, vocab.size(), 10);
  const std::vector<std::pair<std::string, PerturbationSpec>> systems{
      {"random_association", {1.0, 0.0, 0.0, 0.0, true, 0.5, 0}},
      {"jitter_deletion", {3.0, 0.1, 0.0, 0.0, false, 1.0, 0}},
      {"jitter_insertion", {5.0, 0.0, 4.0, 0.0, false, 1.0, 0}},
      {"jitter_substitution", {8.0, 0.0, 0.0, 0.1, false, 1.0, 0}},
      {"mixed", {2.0, 0.05, 2.0, 0.0, false, 1.0, 0}}};
  EvaluationConfig config;
  std::vector<std::string> ids;
  std::vector<MetricReport> reports;
  for (std::size_t s = 0; s < systems.size(); ++s) {
    auto spec = systems[s].second;
    std::vector<FilePair> files;
    for (std::size_t i = 0; i < refs.size(); ++i) {
      spec.seed = 1000 * (s + 1) + i;
      files.push_back(make_pair(std::to_string(i), refs[i], perturb(refs[i], spec, vocab.size(), 60.0).events));
    }
    ids.push_back(systems[s].first);
    reports.push_back(score(files, vocab, config));
  }
  const auto official = cli::rank_reports(ids, reports, cli::metric_set_names("official", config));
  const auto joint = cli::rank_reports(ids, reports, cli::metric_set_names("joint", config));
  const double o = official.cumulative.final_rank[0], j = joint.cumulative.final_rank[0];
  c.require(o < j, "official rank " + std::to_string(o) + " not better than joint rank " + std::to_string(j));
}

}  // namespace

int main() {
  run(1, "swapped-location golden scene", 1.0, fig3);
  run(2, "mixed-scene golden counts", 1.0, fig4);
  run(3, "assignment vs brute force", 30.0, assignment_oracle);
  run(4, "jitter oracle", 60.0, jitter_oracle);
  run(5, "deletion oracle", 0.0, deletion_oracle);
  run(6, "threshold monotonicity sweep", 0.0, threshold_sweep);
  run(7, "jackknife sanity", 0.0, jackknife);
  run(8, "ranking and correlation", 0.0, ranking);
  run(9, "determinism", 0.0, determinism);
  run(10, "rank shift under random association", 0.0, rank_shift);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
