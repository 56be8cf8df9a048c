#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"
#include "nonprob/glm.hpp"
#include "nonprob/modelling.hpp"
#include "nonprob/rng.hpp"
#include "nonprob/weighting.hpp"

namespace nonprob {

struct MatchedSet {
  struct Pair {
    std::size_t reference_row;
    std::size_t sample_row;
    double distance;
  };
  std::vector<Pair> pairs;
  std::vector<std::size_t> unmatched_sample_rows;
};

struct MatchResult {
  MatchedSet matched;
  Estimate estimate;
};

/// Sequential nearest-neighbor matching without replacement. Reference rows
/// are processed in order; each takes its closest unmatched sample row by
/// Euclidean distance on the one-hot encoded covariates, ties broken by
/// lowest sample row index.
inline MatchResult match_sample(const Dataset& nonprob,
                                const ReferenceSample& reference) {
  if (!(nonprob.schema() == reference.dataset.schema()))
    throw data_error("schema-mismatch", "matching requires a common covariate schema");
  if (reference.dataset.n() > nonprob.n())
    throw estimation_error("insufficient-donors",
                           "reference has more rows than the non-probability sample");
  const auto& y = nonprob.target();

  // one-hot squared distance between two categorical rows: 2 per mismatch
  auto sq_dist = [](const std::vector<int>& a, const std::vector<int>& b) {
    double d = 0.0;
    for (std::size_t v = 0; v < a.size(); ++v)
      if (a[v] != b[v]) d += 2.0;
    return d;
  };

  std::vector<bool> taken(nonprob.n(), false);
  MatchResult out;
  double acc = 0.0;
  for (std::size_t r = 0; r < reference.dataset.n(); ++r) {
    const auto& ref_row = reference.dataset.rows()[r];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < nonprob.n(); ++j) {
      if (taken[j]) continue;
      double d = sq_dist(ref_row, nonprob.rows()[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    taken[best_j] = true;
    out.matched.pairs.push_back({r, best_j, std::sqrt(best)});
    acc += y[best_j];
  }
  for (std::size_t j = 0; j < nonprob.n(); ++j)
    if (!taken[j]) out.matched.unmatched_sample_rows.push_back(j);
  out.estimate = Estimate{acc / static_cast<double>(reference.dataset.n()), "match",
                          reference.dataset.n()};
  return out;
}

struct Subsample {
  std::vector<std::size_t> rows;
  std::vector<double> draw_probs;
};

struct InverseSampleResult {
  Subsample subsample;
  Estimate estimate;
};

/// Second-phase subsampling: m rows drawn without replacement with
/// probability proportional to the importance weights; the estimate is the
/// plain mean of the subsample.
inline InverseSampleResult inverse_sample(const Dataset& big,
                                          const std::vector<double>& importance,
                                          std::size_t m, std::uint64_t seed) {
  if (m > big.n())
    throw config_error("invalid-subsample-size", "m exceeds the sample size");
  if (importance.size() != big.n())
    throw estimation_error("dimension-mismatch", "one importance weight per row required");
  for (double w : importance)
    if (!(w > 0.0))
      throw estimation_error("invalid-weights", "importance weights must be positive");
  const auto& y = big.target();

  Rng rng(seed);
  auto picked = weighted_sample_without_replacement(rng, importance, m);
  double total = 0.0;
  for (double w : importance) total += w;

  InverseSampleResult out;
  double acc = 0.0;
  for (std::size_t idx : picked) {
    out.subsample.rows.push_back(idx);
    out.subsample.draw_probs.push_back(importance[idx] / total);
    acc += y[idx];
  }
  out.estimate = Estimate{m > 0 ? acc / static_cast<double>(m) : 0.0, "inverse", m};
  return out;
}

// Importance weights as per-cell population-share / sample-share ratios.
inline std::vector<double> cell_share_importance(const Dataset& sample,
                                                 const PopulationCells& cells) {
  auto ids = assign_cells(sample, cells.index);
  std::vector<double> cell_n(cells.index.n_cells(), 0.0);
  for (std::size_t id : ids) cell_n[id] += 1.0;
  std::vector<double> out(sample.n());
  for (std::size_t j = 0; j < sample.n(); ++j) {
    double pop_share = static_cast<double>(cells.counts[ids[j]]) /
                       static_cast<double>(cells.N);
    double sample_share = cell_n[ids[j]] / static_cast<double>(sample.n());
    out[j] = pop_share / sample_share;
  }
  return out;
}

struct DrpOptions {
  PropensityOptions propensity;
  bool outcome_pairwise_interactions = false;
  Scale poststrat_scale = Scale::response;
  // Optional covariate subsets for deliberate model misspecification studies;
  // empty means use the full schema.
  std::vector<std::string> propensity_vars;
  std::vector<std::string> outcome_vars;
};

struct DrpResult {
  Estimate estimate;
  double correction_term = 0.0;
  double poststrat_term = 0.0;
  PropensityScores propensity;
};

/// Doubly-robust post-stratification: inverse-propensity-weighted mean of the
/// outcome-model residuals plus the post-stratified model predictions.
inline DrpResult drp_estimate(const Dataset& nonprob, const PopulationCells& cells,
                              const ReferenceSample& reference,
                              const DrpOptions& opts = {}) {
  const auto& y = nonprob.target();

  // propensity model on the stacked frame
  Dataset prop_sample = opts.propensity_vars.empty()
                            ? nonprob.without_target()
                            : nonprob.without_target().project(opts.propensity_vars);
  ReferenceSample prop_ref =
      opts.propensity_vars.empty()
          ? reference
          : ReferenceSample(reference.dataset.project(opts.propensity_vars),
                            reference.inclusion_probs);
  CombinedFrame frame = stack_with_indicator(prop_sample, prop_ref);
  PropensityScores ps = estimate_propensity(frame, opts.propensity);

  // outcome model on the non-probability sample alone
  Dataset outcome_sample =
      opts.outcome_vars.empty() ? nonprob : nonprob.project(opts.outcome_vars);
  DesignMatrix X = encode_design(outcome_sample, opts.outcome_pairwise_interactions);
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) yv(static_cast<Eigen::Index>(j)) = y[j];
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(yv.size());
  FitResult outcome_fit = nonprob.target_is_binary()
                              ? fit_weighted_logistic(X, yv, ones)
                              : fit_wls(X, yv, ones);
  Eigen::VectorXd yhat = predict(outcome_fit, X, opts.poststrat_scale);

  const double floor = 1e-6;
  double num = 0.0, denom = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    double pi = ps.scores[j];
    if (pi <= floor)
      throw estimation_error("unstable-propensity",
                             "propensity score at or below " + std::to_string(floor));
    num += (y[j] - yhat(static_cast<Eigen::Index>(j))) / pi;
    denom += 1.0 / pi;
  }

  DrpResult out;
  out.propensity = ps;
  out.correction_term = num / denom;
  out.poststrat_term =
      poststratify(outcome_fit, X.info, cells, opts.poststrat_scale).value;
  out.estimate =
      Estimate{out.correction_term + out.poststrat_term, "drp", nonprob.n()};
  return out;
}

}  // namespace nonprob
