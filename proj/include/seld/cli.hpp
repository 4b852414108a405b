#pragma once

// Batch workflows behind the `seld` command-line tool: evaluate, jackknife,
// rank, correlate and synth. Each command returns its rendered output so it
// can be driven from tests as well as from main().

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "seld/annotations.hpp"
#include "seld/evaluation.hpp"
#include "seld/stats.hpp"
#include "seld/synth.hpp"

namespace seld::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

inline constexpr int kReportSchemaVersion = 1;

enum class Format { kTable, kJson };

struct Options {
  fs::path ref_dir;
  fs::path pred_dir;
  fs::path vocab;
  fs::path out;
  std::vector<std::pair<std::string, fs::path>> systems;  // rank / correlate
  EvaluationConfig config;
  Format format = Format::kTable;
  bool per_class = false;
  bool jackknife = false;
  std::size_t jobs = 1;
  std::string metric_set = "official";  // rank: official | joint

  // synth
  PerturbationSpec perturbation;
  std::size_t generate = 0;  // > 0: also generate this many reference scenes
  SceneSpec scene;
};

// ---------------------------------------------------------------------------
// Loading

inline Vocabulary resolve_vocabulary(const Options& o) {
  if (!o.vocab.empty()) return parse_vocabulary(o.vocab);
  const auto beside = o.ref_dir / "vocabulary.txt";
  if (fs::exists(beside)) return parse_vocabulary(beside);
  throw ConfigError("no vocabulary: pass --vocab or place vocabulary.txt beside the references");
}

// Reference CSV files in `dir`, sorted by filename.
inline std::vector<fs::path> list_csv(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

// Pairs every reference with the prediction of the same file name. Throws
// MissingPair for an unmatched file on either side.
inline std::vector<FilePair> load_pairs(const fs::path& ref_dir, const fs::path& pred_dir, const Vocabulary& vocab) {
  const auto refs = list_csv(ref_dir);
  const auto preds = list_csv(pred_dir);
  std::set<std::string> pred_names;
  for (const auto& p : preds) pred_names.insert(p.filename().string());
  std::set<std::string> ref_names;
  for (const auto& r : refs) ref_names.insert(r.filename().string());

  if (refs.empty()) throw MissingPair("no reference files in '" + ref_dir.string() + "'");
  for (const auto& name : ref_names) {
    if (!pred_names.count(name)) throw MissingPair("no prediction for reference '" + name + "' in '" + pred_dir.string() + "'");
  }
  for (const auto& name : pred_names) {
    if (!ref_names.count(name)) throw MissingPair("no reference for prediction '" + name + "' in '" + ref_dir.string() + "'");
  }

  std::vector<FilePair> pairs;
  pairs.reserve(refs.size());
  for (const auto& r : refs) {
    const auto name = r.filename().string();
    pairs.push_back({name, parse_reference(r, vocab), parse_prediction(pred_dir / name, vocab)});
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Number formatting shared by JSON and tables

// Rounds to 6 significant digits so serialized reports are stable.
inline double round6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  const double r = std::strtod(buf, nullptr);
  return r == 0.0 ? 0.0 : r;
}

inline json number_or_undefined(const std::optional<double>& v) {
  if (!v) return "undefined";
  return round6(*v);
}

inline std::string cell(const std::optional<double>& v, int decimals = 3) {
  if (!v) return "undefined";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, round6(*v));
  return buf;
}

inline const char* to_string(LocMode m) { return m == LocMode::kFrameAverage ? "frame-average" : "segment-mean"; }
inline const char* to_string(LeAveraging a) { return a == LeAveraging::kMicro ? "micro" : "macro"; }

inline json config_json(const EvaluationConfig& c) {
  json j;
  j["frame_hop"] = round6(c.frame_hop);
  j["segment_length"] = round6(c.segment_length);
  j["thetas"] = json::array();
  for (double t : c.thetas) j["thetas"].push_back(round6(t));
  j["class_thetas"] = json::object();
  for (const auto& [label, t] : c.class_thetas) j["class_thetas"][label] = round6(t);
  j["loc_mode"] = to_string(c.loc_mode);
  j["le_averaging"] = to_string(c.le_averaging);
  j["confidence"] = round6(c.confidence);
  return j;
}

inline json report_json(const MetricReport& r, const EvaluationConfig& config, bool per_class) {
  json j;
  j["schema"] = "seld-metrics";
  j["schema_version"] = kReportSchemaVersion;
  j["config"] = config_json(config);
  j["counts"] = {{"files", r.files}, {"frames", r.frames}, {"segments", r.segments}};
  j["metrics"] = json::object();
  for (const auto& m : r.metrics) j["metrics"][m.name] = number_or_undefined(m.value);
  if (!r.intervals.empty()) {
    j["intervals"] = json::object();
    for (const auto& [name, iv] : r.intervals) {
      if (!iv.error.empty()) j["intervals"][name] = {{"error", iv.error}};
      else j["intervals"][name] = {{"low", round6(*iv.low)}, {"high", round6(*iv.high)}};
    }
  }
  if (per_class) {
    j["per_class"] = json::object();
    for (const auto& c : r.per_class) {
      j["per_class"][c.label] = {{"LE", number_or_undefined(c.le)}, {"LR", number_or_undefined(c.lr)}};
    }
  }
  j["warnings"] = json::array();
  if (r.mean_fallbacks > 0) {
    j["warnings"].push_back(std::to_string(r.mean_fallbacks) +
                            " degenerate spherical mean(s) replaced by the first direction");
  }
  return j;
}

// Fixed-width text table: one header row, then one row per entry.
inline std::string render_rows(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows)
    for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) os << "  ";
      os << cells[c] << std::string(width[c] - cells[c].size(), ' ');
    }
    os << '\n';
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  os << std::string(total + 2 * (width.size() - 1), '-') << '\n';
  for (const auto& row : rows) line(row);
  return os.str();
}

inline std::string value_cell(const MetricReport& r, const MetricValue& m) {
  auto text = cell(m.value);
  auto it = r.intervals.find(m.name);
  if (it != r.intervals.end()) {
    if (it->second.error.empty()) text += " ± " + cell((*it->second.high - *it->second.low) / 2.0);
    else text += " ± undefined";
  }
  return text;
}

inline std::string report_table(const MetricReport& r, const std::string& system, bool per_class) {
  std::ostringstream os;
  const std::pair<MetricGroup, const char*> groups[] = {
      {MetricGroup::kIndependent, "Independent metrics"},
      {MetricGroup::kThresholdedLocalization, "Thresholded localization"},
      {MetricGroup::kJoint, "Joint metrics (segments)"},
      {MetricGroup::kJointFrames, "Joint metrics (frames)"}};
  bool first = true;
  for (const auto& [group, title] : groups) {
    std::vector<std::string> header{"system"};
    std::vector<std::string> row{system};
    for (const auto& m : r.metrics) {
      if (m.group != group) continue;
      header.push_back(m.name);
      row.push_back(value_cell(r, m));
    }
    if (!first) os << '\n';
    first = false;
    os << title << '\n' << render_rows(header, {row});
  }
  if (per_class) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& c : r.per_class) rows.push_back({c.label, cell(c.le), cell(c.lr)});
    os << "\nPer class\n" << render_rows({"class", "LE", "LR"}, rows);
  }
  if (r.mean_fallbacks > 0) os << "\nwarning: " << r.mean_fallbacks << " degenerate spherical mean(s)\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Commands

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline MetricReport evaluate_dataset(const Options& o, const fs::path& pred_dir, const Vocabulary& vocab,
                                     std::vector<FileAccumulator>* files_out = nullptr) {
  const auto pairs = load_pairs(o.ref_dir, pred_dir, vocab);
  auto files = evaluate_files(pairs, vocab, o.config, o.jobs);
  auto report = report_for(files, vocab, o.config);
  if (o.jackknife) add_jackknife_intervals(report, files, vocab, o.config, o.jobs);
  if (files_out) *files_out = std::move(files);
  return report;
}

inline std::string cmd_evaluate(const Options& o) {
  o.config.validate();
  const auto vocab = resolve_vocabulary(o);
  const auto report = evaluate_dataset(o, o.pred_dir, vocab);
  if (o.format == Format::kJson) return dump(report_json(report, o.config, o.per_class));
  return report_table(report, o.pred_dir.filename().string(), o.per_class);
}

struct RankTable {
  std::vector<std::string> systems;
  std::vector<std::string> metrics;
  std::vector<Better> better;
  std::vector<std::vector<double>> values;  // [metric][system]
  std::vector<std::vector<double>> ranks;   // [metric][system]
  CumulativeRank cumulative;
};

inline std::vector<std::string> metric_set_names(const std::string& set, const EvaluationConfig& config) {
  if (set == "official") return {"ER", "F1", "LE", "ECR"};
  if (set == "joint") {
    const auto tag = theta_tag(config.thetas.front());
    return {"LE_CD", "LR_CD", "ER_" + tag, "F_" + tag};
  }
  throw ConfigError("unknown metric set '" + set + "' (expected official or joint)");
}

inline RankTable rank_reports(const std::vector<std::string>& systems, const std::vector<MetricReport>& reports,
                              const std::vector<std::string>& metrics) {
  RankTable t;
  t.systems = systems;
  t.metrics = metrics;
  for (const auto& name : metrics) {
    std::vector<std::optional<double>> values;
    Better better = Better::kLower;
    for (std::size_t s = 0; s < reports.size(); ++s) {
      const auto* m = reports[s].find(name);
      if (!m) throw ConfigError("unknown metric '" + name + "'");
      better = m->better;
      values.push_back(m->value);
    }
    std::vector<double> ranks;
    try {
      ranks = metric_ranks(values, better);
    } catch (const UndefinedValue& e) {
      throw UndefinedValue(name + ": " + e.what());
    }
    std::vector<double> defined;
    for (const auto& v : values) defined.push_back(*v);
    t.better.push_back(better);
    t.values.push_back(std::move(defined));
    t.ranks.push_back(std::move(ranks));
  }
  t.cumulative = cumulative_rank(t.ranks);
  return t;
}

inline std::vector<MetricReport> evaluate_systems(const Options& o, const Vocabulary& vocab) {
  std::vector<MetricReport> reports;
  for (const auto& [id, dir] : o.systems) reports.push_back(evaluate_dataset(o, dir, vocab));
  return reports;
}

inline std::vector<std::string> system_ids(const Options& o) {
  std::vector<std::string> ids;
  for (const auto& [id, _] : o.systems) ids.push_back(id);
  return ids;
}

inline std::string render_rank(const RankTable& t, const std::string& metric_set, Format format) {
  std::vector<std::size_t> order(t.systems.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (t.cumulative.final_rank[a] != t.cumulative.final_rank[b])
      return t.cumulative.final_rank[a] < t.cumulative.final_rank[b];
    return t.systems[a] < t.systems[b];
  });
  if (format == Format::kJson) {
    json j;
    j["schema"] = "seld-rank";
    j["schema_version"] = kReportSchemaVersion;
    j["metric_set"] = metric_set;
    j["metrics"] = t.metrics;
    j["systems"] = json::array();
    for (std::size_t s : order) {
      json row;
      row["id"] = t.systems[s];
      for (std::size_t m = 0; m < t.metrics.size(); ++m) {
        row["values"][t.metrics[m]] = round6(t.values[m][s]);
        row["ranks"][t.metrics[m]] = round6(t.ranks[m][s]);
      }
      row["rank_sum"] = round6(t.cumulative.rank_sum[s]);
      row["final_rank"] = round6(t.cumulative.final_rank[s]);
      j["systems"].push_back(row);
    }
    return dump(j);
  }
  std::vector<std::string> header{"rank", "system"};
  for (const auto& m : t.metrics) header.push_back(m);
  for (const auto& m : t.metrics) header.push_back("I_" + m);
  header.push_back("sum");
  std::vector<std::vector<std::string>> rows;
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", round6(v));
    return std::string(buf);
  };
  for (std::size_t s : order) {
    std::vector<std::string> row{num(t.cumulative.final_rank[s]), t.systems[s]};
    for (std::size_t m = 0; m < t.metrics.size(); ++m) row.push_back(cell(t.values[m][s]));
    for (std::size_t m = 0; m < t.metrics.size(); ++m) row.push_back(num(t.ranks[m][s]));
    row.push_back(num(t.cumulative.rank_sum[s]));
    rows.push_back(std::move(row));
  }
  return "Ranking (" + metric_set + " metrics)\n" + render_rows(header, rows);
}

inline std::string cmd_rank(const Options& o) {
  o.config.validate();
  if (o.systems.size() < 2) throw ConfigError("rank needs at least 2 systems");
  const auto vocab = resolve_vocabulary(o);
  const auto names = metric_set_names(o.metric_set, o.config);
  const auto table = rank_reports(system_ids(o), evaluate_systems(o, vocab), names);
  return render_rank(table, o.metric_set, o.format);
}

struct CorrelationMatrix {
  std::vector<std::string> metrics;
  std::vector<std::vector<std::optional<double>>> rho;  // nullopt: degenerate
  std::vector<std::vector<std::string>> errors;
};

// Spearman correlation between the system orderings induced by each metric.
// Each metric is first converted to ranks (1 = best) so that agreeing
// metrics correlate positively regardless of direction.
inline CorrelationMatrix correlate_rankings(const std::vector<std::string>& names,
                                            const std::vector<std::vector<double>>& ranks) {
  CorrelationMatrix cm;
  cm.metrics = names;
  const std::size_t k = names.size();
  cm.rho.assign(k, std::vector<std::optional<double>>(k));
  cm.errors.assign(k, std::vector<std::string>(k));
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b) {
      try {
        cm.rho[a][b] = spearman(ranks[a], ranks[b]);
      } catch (const Error& e) {
        cm.errors[a][b] = e.kind();
      }
    }
  }
  return cm;
}

// Metrics compared by `correlate`: the official four, the cumulative official
// rank, and the joint metrics at segment and frame level.
inline std::vector<std::string> correlation_metric_names(const EvaluationConfig& config) {
  std::vector<std::string> names{"ER", "F1", "LE", "ECR"};
  for (const std::string suffix : {"", "(f)"}) {
    names.push_back("LE_CD" + suffix);
    names.push_back("LR_CD" + suffix);
    for (double t : config.thetas) {
      names.push_back("ER_" + theta_tag(t) + suffix);
      names.push_back("F_" + theta_tag(t) + suffix);
    }
  }
  return names;
}

inline std::string cmd_correlate(const Options& o) {
  o.config.validate();
  if (o.systems.size() < 3) throw ConfigError("correlate needs at least 3 systems");
  const auto vocab = resolve_vocabulary(o);
  const auto reports = evaluate_systems(o, vocab);
  const auto ids = system_ids(o);

  const auto official = rank_reports(ids, reports, metric_set_names("official", o.config));
  const auto names = correlation_metric_names(o.config);
  const auto table = rank_reports(ids, reports, names);
  std::vector<std::string> all_names{"rank"};
  std::vector<std::vector<double>> all_ranks{official.cumulative.final_rank};
  for (std::size_t m = 0; m < names.size(); ++m) {
    all_names.push_back(names[m]);
    all_ranks.push_back(table.ranks[m]);
  }
  const auto cm = correlate_rankings(all_names, all_ranks);

  if (o.format == Format::kJson) {
    json j;
    j["schema"] = "seld-correlation";
    j["schema_version"] = kReportSchemaVersion;
    j["systems"] = ids;
    j["metrics"] = cm.metrics;
    j["matrix"] = json::object();
    for (std::size_t a = 0; a < cm.metrics.size(); ++a)
      for (std::size_t b = 0; b < cm.metrics.size(); ++b)
        j["matrix"][cm.metrics[a]][cm.metrics[b]] =
            cm.rho[a][b] ? json(round6(*cm.rho[a][b])) : json(cm.errors[a][b]);
    return dump(j);
  }
  std::vector<std::string> header{""};
  for (const auto& m : cm.metrics) header.push_back(m);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t a = 0; a < cm.metrics.size(); ++a) {
    std::vector<std::string> row{cm.metrics[a]};
    for (std::size_t b = 0; b < cm.metrics.size(); ++b)
      row.push_back(cm.rho[a][b] ? cell(cm.rho[a][b], 2) : cm.errors[a][b]);
    rows.push_back(std::move(row));
  }
  return "Spearman rank correlation\n" + render_rows(header, rows);
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline json injection_json(const Injection& inj, const Vocabulary& vocab) {
  json j;
  j["kind"] = to_string(inj.kind);
  j["event"] = inj.source_index;
  j["onset"] = round6(inj.onset);
  j["offset"] = round6(inj.offset);
  switch (inj.kind) {
    case InjectionKind::kSwap:
      j["partner"] = inj.other_index;
      [[fallthrough]];
    case InjectionKind::kJitter:
      j["from_direction"] = {round6(inj.from_direction.azimuth()), round6(inj.from_direction.elevation())};
      j["to_direction"] = {round6(inj.to_direction.azimuth()), round6(inj.to_direction.elevation())};
      j["class"] = vocab.label(inj.from_class);
      break;
    case InjectionKind::kSubstitution:
      j["from_class"] = vocab.label(inj.from_class);
      j["to_class"] = vocab.label(inj.to_class);
      break;
    case InjectionKind::kDeletion:
    case InjectionKind::kInsertion:
      j["class"] = vocab.label(inj.from_class);
      j["direction"] = {round6(inj.from_direction.azimuth()), round6(inj.from_direction.elevation())};
      break;
  }
  return j;
}

// Writes one prediction file per reference (per-file seed = seed + index in
// filename order) and an injection log. With `generate` > 0 the references
// are synthesized first into <out>/ref and predictions go to <out>/pred.
inline std::string cmd_synth(const Options& o) {
  o.perturbation.validate();
  if (o.out.empty()) throw ConfigError("synth needs --out");
  const double hop = o.config.frame_hop;

  Vocabulary vocab;
  std::vector<std::pair<std::string, std::vector<EventRecord>>> refs;
  fs::path pred_dir = o.out;
  if (o.generate > 0) {
    if (o.vocab.empty()) throw ConfigError("synth --generate needs --vocab");
    vocab = parse_vocabulary(o.vocab);
    const auto ref_dir = o.out / "ref";
    pred_dir = o.out / "pred";
    fs::create_directories(ref_dir);
    std::string vocab_text;
    for (const auto& l : vocab.labels()) vocab_text += l + "\n";
    write_file(ref_dir / "vocabulary.txt", vocab_text);
    for (std::size_t i = 0; i < o.generate; ++i) {
      char name[32];
      std::snprintf(name, sizeof(name), "scene_%04zu.csv", i);
      auto events = generate_scene(o.scene, vocab.size(), derive_seed(o.perturbation.seed, 1000 + i));
      write_file(ref_dir / name, serialize_reference(events, vocab));
      refs.emplace_back(name, std::move(events));
    }
  } else {
    vocab = resolve_vocabulary(o);
    for (const auto& path : list_csv(o.ref_dir)) refs.emplace_back(path.filename().string(), parse_reference(path, vocab));
  }
  fs::create_directories(pred_dir);

  json log;
  log["schema"] = "seld-injections";
  log["schema_version"] = kReportSchemaVersion;
  log["spec"] = {{"doa_jitter_deg", round6(o.perturbation.doa_jitter_deg)},
                 {"deletion_prob", round6(o.perturbation.deletion_prob)},
                 {"insertion_rate", round6(o.perturbation.insertion_rate)},
                 {"substitution_prob", round6(o.perturbation.substitution_prob)},
                 {"swap_locations", o.perturbation.swap_locations},
                 {"swap_prob", round6(o.perturbation.swap_prob)},
                 {"seed", o.perturbation.seed}};
  log["files"] = json::object();
  std::size_t injected = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    auto spec = o.perturbation;
    spec.seed = o.perturbation.seed + i;
    spec.frame_hop = hop;
    const double duration = o.generate > 0 ? o.scene.duration_s : 0.0;
    const auto result = perturb(refs[i].second, spec, vocab.size(), duration);
    write_file(pred_dir / refs[i].first, serialize_prediction(result.events, hop));
    json entries = json::array();
    for (const auto& inj : result.log) entries.push_back(injection_json(inj, vocab));
    injected += result.log.size();
    log["files"][refs[i].first] = std::move(entries);
  }
  write_file(pred_dir / "injections.json", dump(log));

  std::ostringstream os;
  os << "wrote " << refs.size() << " prediction file(s) to " << pred_dir.string() << " (" << injected
     << " injected error(s))\n";
  return os.str();
}

}  // namespace seld::cli
