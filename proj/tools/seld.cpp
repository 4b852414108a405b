// seld: evaluate, rank and stress-test sound event localization and
// detection outputs. See README.md for the file formats.

#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "seld/cli.hpp"

namespace {

using seld::cli::Options;

// Flags of the form KEY=VALUE, split after parsing.
struct RawFlags {
  std::vector<std::string> theta_class;
  std::vector<std::string> systems;
};

std::pair<std::string, std::string> split_key_value(const std::string& s, const char* flag) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size()) {
    throw seld::ConfigError(std::string(flag) + " expects KEY=VALUE, got '" + s + "'");
  }
  return {s.substr(0, eq), s.substr(eq + 1)};
}

void apply_raw_flags(const RawFlags& raw, Options& o) {
  for (const auto& s : raw.theta_class) {
    auto [label, value] = split_key_value(s, "--theta-class");
    std::size_t used = 0;
    double theta = 0.0;
    try {
      theta = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != value.size()) throw seld::ConfigError("--theta-class: bad threshold '" + value + "'");
    o.config.class_thetas[label] = theta;
  }
  for (const auto& s : raw.systems) {
    auto [id, dir] = split_key_value(s, "--system");
    o.systems.emplace_back(id, dir);
  }
}

void add_evaluation_flags(CLI::App& cmd, Options& o, RawFlags& raw, bool needs_pred) {
  cmd.add_option("--ref", o.ref_dir, "Directory of reference CSV files")->required();
  if (needs_pred) cmd.add_option("--pred", o.pred_dir, "Directory of prediction CSV files")->required();
  cmd.add_option("--vocab", o.vocab, "Vocabulary file (default: <ref>/vocabulary.txt)");
  cmd.add_option("--hop", o.config.frame_hop, "Frame hop in seconds")->capture_default_str();
  cmd.add_option("--segment", o.config.segment_length, "Segment length in seconds")->capture_default_str();
  cmd.add_option("--theta", o.config.thetas, "Angular threshold in degrees (repeatable)")->capture_default_str();
  cmd.add_option("--theta-class", raw.theta_class, "Per-class threshold CLASS=DEG (repeatable)");
  cmd.add_option("--loc-mode", o.config.loc_mode, "Segment localization mode")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, seld::LocMode>{{"frame-average", seld::LocMode::kFrameAverage},
                                               {"segment-mean", seld::LocMode::kSegmentMean}}));
  cmd.add_option("--le-averaging", o.config.le_averaging, "Multi-frame LE averaging")
      ->transform(CLI::CheckedTransformer(std::map<std::string, seld::LeAveraging>{
          {"micro", seld::LeAveraging::kMicro}, {"macro", seld::LeAveraging::kMacro}}));
  cmd.add_option("--confidence", o.config.confidence, "Jackknife confidence level")->capture_default_str();
  cmd.add_option("--format", o.format, "Output format")
      ->transform(CLI::CheckedTransformer(std::map<std::string, seld::cli::Format>{
          {"table", seld::cli::Format::kTable}, {"json", seld::cli::Format::kJson}}));
  cmd.add_option("--out", o.out, "Write the output to this file instead of stdout");
  cmd.add_option("--jobs", o.jobs, "Worker threads for file-level parallelism")->capture_default_str();
}

void add_system_flags(CLI::App& cmd, RawFlags& raw) {
  cmd.add_option("--system", raw.systems, "System prediction directory as ID=DIR (repeatable)")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sound event localization and detection evaluation"};
  app.set_config("--config", "", "TOML/INI configuration file; flags override it");
  app.fallthrough();
  app.require_subcommand(1);

  Options o;
  RawFlags raw;

  auto* evaluate = app.add_subcommand("evaluate", "Score one system against the references");
  add_evaluation_flags(*evaluate, o, raw, true);
  evaluate->add_flag("--per-class", o.per_class, "Include per-class LE/LR");

  auto* jackknife = app.add_subcommand("jackknife", "Evaluate with leave-one-file-out confidence intervals");
  add_evaluation_flags(*jackknife, o, raw, true);
  jackknife->add_flag("--per-class", o.per_class, "Include per-class LE/LR");

  auto* rank = app.add_subcommand("rank", "Rank several systems by cumulative metric rank");
  add_evaluation_flags(*rank, o, raw, false);
  add_system_flags(*rank, raw);
  rank->add_option("--metric-set", o.metric_set, "official (ER, F1, LE, ECR) or joint (LE_CD, LR_CD, ER, F)")
      ->check(CLI::IsMember({"official", "joint"}))
      ->capture_default_str();

  auto* correlate = app.add_subcommand("correlate", "Spearman correlation between metric rankings");
  add_evaluation_flags(*correlate, o, raw, false);
  add_system_flags(*correlate, raw);

  auto* synth = app.add_subcommand("synth", "Derive perturbed predictions from references");
  synth->add_option("--ref", o.ref_dir, "Directory of reference CSV files");
  synth->add_option("--vocab", o.vocab, "Vocabulary file (default: <ref>/vocabulary.txt)");
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--hop", o.config.frame_hop, "Frame hop in seconds")->capture_default_str();
  synth->add_option("--seed", o.perturbation.seed, "Random seed")->capture_default_str();
  synth->add_option("--jitter", o.perturbation.doa_jitter_deg, "Exact DoA offset in degrees")->capture_default_str();
  synth->add_option("--delete", o.perturbation.deletion_prob, "Deletion probability")->capture_default_str();
  synth->add_option("--insert-rate", o.perturbation.insertion_rate, "Spurious events per minute")
      ->capture_default_str();
  synth->add_option("--substitute", o.perturbation.substitution_prob, "Class substitution probability")
      ->capture_default_str();
  synth->add_flag("--swap", o.perturbation.swap_locations, "Swap DoAs of overlapping event pairs");
  synth->add_option("--swap-prob", o.perturbation.swap_prob, "Probability of swapping an overlapping pair")
      ->capture_default_str();
  synth->add_option("--generate", o.generate, "Generate this many reference scenes first");
  synth->add_option("--duration", o.scene.duration_s, "Generated scene length in seconds")->capture_default_str();
  synth->add_option("--events", o.scene.events_per_track, "Generated events per track")->capture_default_str();
  synth->add_option("--tracks", o.scene.tracks, "Generated overlapping tracks")->capture_default_str();
  synth->add_option("--align", o.scene.align_s, "Snap generated onsets/durations to this grid (s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    apply_raw_flags(raw, o);
    std::string output;
    if (evaluate->parsed()) {
      output = seld::cli::cmd_evaluate(o);
    } else if (jackknife->parsed()) {
      o.jackknife = true;
      output = seld::cli::cmd_evaluate(o);
    } else if (rank->parsed()) {
      output = seld::cli::cmd_rank(o);
    } else if (correlate->parsed()) {
      output = seld::cli::cmd_correlate(o);
    } else if (synth->parsed()) {
      std::cout << seld::cli::cmd_synth(o);
      return 0;
    }
    if (!o.out.empty()) seld::cli::write_file(o.out, output);
    else std::cout << output;
  } catch (const seld::Error& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", e.kind()}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", {{"kind", "InternalError"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
