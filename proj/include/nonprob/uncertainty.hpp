#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "nonprob/errors.hpp"
#include "nonprob/pipeline.hpp"
#include "nonprob/rng.hpp"

namespace nonprob {

enum class ResamplingMethod { bootstrap, jackknife };

struct UncertaintyEstimate {
  double point = 0.0;
  double se = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::vector<double> replicates;
  ResamplingMethod method = ResamplingMethod::bootstrap;
  std::size_t B = 0;
  std::size_t failed_replicates = 0;
};

namespace detail {

inline double percentile(std::vector<double> sorted, double p) {
  // sorted must be ascending; linear interpolation between order statistics
  if (sorted.empty()) return 0.0;
  double idx = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(idx));
  auto hi = static_cast<std::size_t>(std::ceil(idx));
  double frac = idx - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline double stddev(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

}  // namespace detail

/// Nonparametric bootstrap over sample rows; census inputs stay fixed.
/// Replicate seeds derive from the master seed by counter.
inline UncertaintyEstimate bootstrap(const EstimatorSpec& spec,
                                     const Dataset& sample,
                                     const CensusInputs& census, std::size_t B,
                                     std::uint64_t seed) {
  if (B < 2) throw config_error("invalid-B", "bootstrap requires B >= 2");
  Estimate point = run_estimator(spec, sample, census);

  UncertaintyEstimate out;
  out.method = ResamplingMethod::bootstrap;
  out.B = B;
  out.point = point.value;

  const std::size_t n = sample.n();
  for (std::size_t b = 0; b < B; ++b) {
    Rng rng(derive_seed(seed, b));
    std::vector<std::size_t> idx(n);
    for (std::size_t j = 0; j < n; ++j) idx[j] = rng.uniform_index(n);
    Dataset resample = sample.subset(idx);
    EstimatorSpec rep_spec = spec;
    rep_spec.seed = derive_seed(seed, B + b);  // for internally seeded methods
    try {
      out.replicates.push_back(run_estimator(rep_spec, resample, census).value);
    } catch (const Error&) {
      out.failed_replicates++;
    }
  }
  if (out.failed_replicates * 5 > B)
    throw resampling_error("unstable-resampling",
                           std::to_string(out.failed_replicates) + " of " +
                               std::to_string(B) + " replicates failed");

  double mean = 0.0;
  for (double r : out.replicates) mean += r;
  mean /= static_cast<double>(out.replicates.size());
  out.se = detail::stddev(out.replicates, mean);
  std::vector<double> sorted = out.replicates;
  std::sort(sorted.begin(), sorted.end());
  out.ci_low = detail::percentile(sorted, 0.025);
  out.ci_high = detail::percentile(sorted, 0.975);
  return out;
}

/// Delete-one jackknife with the classical variance factor (n-1)/n and a
/// normal-approximation interval.
inline UncertaintyEstimate jackknife(const EstimatorSpec& spec,
                                     const Dataset& sample,
                                     const CensusInputs& census) {
  const std::size_t n = sample.n();
  if (n < 2) throw config_error("invalid-sample", "jackknife requires n >= 2");
  Estimate point = run_estimator(spec, sample, census);

  UncertaintyEstimate out;
  out.method = ResamplingMethod::jackknife;
  out.B = n;
  out.point = point.value;

  std::vector<std::size_t> idx(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) idx[k++] = j;
    try {
      out.replicates.push_back(run_estimator(spec, sample.subset(idx), census).value);
    } catch (const Error& e) {
      throw estimation_error("jackknife-replicate-failed",
                             "delete-one replicate " + std::to_string(i) +
                                 " failed: " + e.what());
    }
  }

  double mean = 0.0;
  for (double r : out.replicates) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double r : out.replicates) ss += (r - mean) * (r - mean);
  out.se = std::sqrt(static_cast<double>(n - 1) / static_cast<double>(n) * ss);
  out.ci_low = out.point - 1.96 * out.se;
  out.ci_high = out.point + 1.96 * out.se;
  return out;
}

}  // namespace nonprob
