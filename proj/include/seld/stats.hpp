#pragma once

// Jackknife confidence intervals, challenge-style ranking and Spearman rank
// correlation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "seld/errors.hpp"

namespace seld {

struct JackknifeEstimate {
  double point = 0.0;           // metric on all files
  double pseudo_mean = 0.0;     // mean of the pseudo-values
  double low = 0.0;
  double high = 0.0;
  double confidence = 0.95;
  std::size_t n = 0;
};

// Two-sided Student-t critical value t_{(1+confidence)/2, dof}.
inline double student_t_critical(double confidence, std::size_t dof) {
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("confidence must be in (0, 1)");
  if (dof == 0) throw TooFewFiles("Student-t quantile needs at least one degree of freedom");
  boost::math::students_t dist(static_cast<double>(dof));
  return boost::math::quantile(dist, 0.5 * (1.0 + confidence));
}

// Interval from the full-sample estimate and the n leave-one-out partials.
// Pseudo-values phi_i = n*point - (n-1)*partial_i; bounds are
// mean(phi) -/+ t * sd(phi) / sqrt(n).
inline JackknifeEstimate jackknife_from_partials(double point, std::span<const double> partials,
                                                 double confidence = 0.95) {
  const std::size_t n = partials.size();
  if (n < 2) throw TooFewFiles("jackknife needs at least 2 files, got " + std::to_string(n));
  const double nd = static_cast<double>(n);
  std::vector<double> pseudo(n);
  for (std::size_t i = 0; i < n; ++i) pseudo[i] = nd * point - (nd - 1.0) * partials[i];
  const double mean = std::accumulate(pseudo.begin(), pseudo.end(), 0.0) / nd;
  double ss = 0.0;
  for (double p : pseudo) ss += (p - mean) * (p - mean);
  const double sd = std::sqrt(ss / (nd - 1.0));
  const double half = student_t_critical(confidence, n - 1) * sd / std::sqrt(nd);
  return {point, mean, mean - half, mean + half, confidence, n};
}

// `evaluate(indices)` returns the metric over the files listed in `indices`
// (std::nullopt when undefined). Evaluated once on all files and once per
// leave-one-out subset.
template <class Evaluate>
JackknifeEstimate jackknife_ci(std::size_t n_files, Evaluate&& evaluate, double confidence = 0.95) {
  if (n_files < 2) throw TooFewFiles("jackknife needs at least 2 files, got " + std::to_string(n_files));
  std::vector<std::size_t> all(n_files);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::optional<double> point = evaluate(std::span<const std::size_t>(all));
  if (!point) throw UndefinedPartial("metric undefined on the full file set");

  std::vector<double> partials(n_files);
  std::vector<std::size_t> subset;
  subset.reserve(n_files - 1);
  for (std::size_t left_out = 0; left_out < n_files; ++left_out) {
    subset.clear();
    for (std::size_t i = 0; i < n_files; ++i)
      if (i != left_out) subset.push_back(i);
    const std::optional<double> partial = evaluate(std::span<const std::size_t>(subset));
    if (!partial) throw UndefinedPartial("metric undefined when leaving out file " + std::to_string(left_out));
    partials[left_out] = *partial;
  }
  return jackknife_from_partials(*point, partials, confidence);
}

enum class Better { kHigher, kLower };

// Average ranks, rank 1 = best. Ties share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> values, Better better) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return better == Better::kHigher ? values[a] > values[b] : values[a] < values[b];
  });
  std::vector<double> ranks(n);
  for (std::size_t start = 0; start < n;) {
    std::size_t end = start + 1;
    while (end < n && values[order[end]] == values[order[start]]) ++end;
    const double rank = 0.5 * static_cast<double>(start + 1 + end);  // mean of start+1 .. end
    for (std::size_t k = start; k < end; ++k) ranks[order[k]] = rank;
    start = end;
  }
  return ranks;
}

// Throws UndefinedValue if any system lacks the metric.
inline std::vector<double> metric_ranks(std::span<const std::optional<double>> values, Better better) {
  std::vector<double> defined;
  defined.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) throw UndefinedValue("system " + std::to_string(i) + " has no value for the metric");
    defined.push_back(*values[i]);
  }
  return average_ranks(defined, better);
}

inline std::vector<double> metric_ranks(std::span<const double> values, Better better) {
  return average_ranks(values, better);
}

struct CumulativeRank {
  std::vector<double> rank_sum;
  std::vector<double> final_rank;
};

// `ranks[metric][system]`. Final ranks sort the per-system sums ascending.
inline CumulativeRank cumulative_rank(const std::vector<std::vector<double>>& ranks) {
  CumulativeRank out;
  if (ranks.empty()) return out;
  const std::size_t n = ranks.front().size();
  out.rank_sum.assign(n, 0.0);
  for (const auto& metric : ranks) {
    if (metric.size() != n) throw LengthMismatch("every metric must rank the same systems");
    for (std::size_t j = 0; j < n; ++j) out.rank_sum[j] += metric[j];
  }
  out.final_rank = average_ranks(out.rank_sum, Better::kLower);
  return out;
}

// Pearson correlation of the tie-averaged rank vectors.
inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch("spearman inputs differ in length");
  if (a.size() < 2) throw DegenerateRanks("spearman needs at least 2 systems");
  const auto ra = average_ranks(a, Better::kLower);
  const auto rb = average_ranks(b, Better::kLower);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateRanks("constant ranking has no rank correlation");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

}  // namespace seld
