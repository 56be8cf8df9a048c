#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"
#include "nonprob/glm.hpp"

namespace nonprob {

struct WeightVector {
  std::vector<double> weights;
  bool normalized = false;  // sum-to-n
};

struct PropensityScores {
  std::vector<double> scores;  // one per sample row, strictly in (0,1)
  FitResult model;
};

struct Estimate {
  double value = 0.0;
  std::string method;
  std::size_t n_used = 0;
};

struct RakingOptions {
  int max_iter = 1000;
  double tol = 1e-10;  // max relative margin error
  std::optional<std::pair<double, double>> trim_bounds;
};

namespace detail {

struct MarginLayout {
  // member_rows[v][l]: sample row indices at level l of variable v
  std::vector<std::vector<std::vector<std::size_t>>> member_rows;
  // target_weight[v][l]: level share scaled to sum n
  std::vector<std::vector<double>> target_weight;
};

inline MarginLayout margin_layout(const Dataset& sample,
                                  const PopulationMargins& margins) {
  const auto& schema = sample.schema();
  for (std::size_t v = 0; v < schema.n_variables(); ++v) {
    const auto& var = schema.variables()[v];
    std::size_t mv = margins.schema.variable_index(var.name);
    for (const auto& level : var.levels)
      margins.schema.level_index(mv, level);  // throws if absent
  }
  MarginLayout layout;
  double n = static_cast<double>(sample.n());
  layout.member_rows.resize(schema.n_variables());
  layout.target_weight.resize(schema.n_variables());
  for (std::size_t v = 0; v < schema.n_variables(); ++v) {
    const auto& var = schema.variables()[v];
    std::size_t mv = margins.schema.variable_index(var.name);
    layout.member_rows[v].resize(var.levels.size());
    layout.target_weight[v].resize(var.levels.size());
    for (std::size_t l = 0; l < var.levels.size(); ++l) {
      int ml = margins.schema.level_index(mv, var.levels[l]);
      double share = margins.totals[mv][static_cast<std::size_t>(ml)] / margins.N;
      layout.target_weight[v][l] = share * n;
    }
  }
  for (std::size_t j = 0; j < sample.n(); ++j) {
    const auto& row = sample.rows()[j];
    for (std::size_t v = 0; v < row.size(); ++v)
      layout.member_rows[v][static_cast<std::size_t>(row[v])].push_back(j);
  }
  for (std::size_t v = 0; v < layout.target_weight.size(); ++v) {
    for (std::size_t l = 0; l < layout.target_weight[v].size(); ++l) {
      if (layout.target_weight[v][l] > 0 && layout.member_rows[v][l].empty())
        throw estimation_error(
            "infeasible-margins",
            "positive population total but no sample rows for " +
                sample.schema().variables()[v].name + "=" +
                sample.schema().variables()[v].levels[l]);
    }
  }
  return layout;
}

inline double max_relative_margin_error(const MarginLayout& layout,
                                        const std::vector<double>& w) {
  double worst = 0.0;
  for (std::size_t v = 0; v < layout.target_weight.size(); ++v) {
    for (std::size_t l = 0; l < layout.target_weight[v].size(); ++l) {
      double target = layout.target_weight[v][l];
      if (target <= 0) continue;
      double got = 0.0;
      for (std::size_t j : layout.member_rows[v][l]) got += w[j];
      worst = std::max(worst, std::abs(got - target) / target);
    }
  }
  return worst;
}

inline void normalize_sum_to_n(std::vector<double>& w) {
  double sum = 0.0;
  for (double x : w) sum += x;
  double n = static_cast<double>(w.size());
  for (double& x : w) x *= n / sum;
}

// One IPF pass per variable per iteration, variables in schema order.
inline WeightVector ipf(const Dataset& sample, const MarginLayout& layout,
                        std::vector<double> w, const RakingOptions& opts) {
  double err = max_relative_margin_error(layout, w);
  int iter = 0;
  while (err > opts.tol) {
    if (iter++ >= opts.max_iter)
      throw estimation_error("raking-no-convergence",
                             "margin error " + std::to_string(err) + " after " +
                                 std::to_string(opts.max_iter) + " iterations");
    for (std::size_t v = 0; v < layout.target_weight.size(); ++v) {
      for (std::size_t l = 0; l < layout.target_weight[v].size(); ++l) {
        double target = layout.target_weight[v][l];
        const auto& rows = layout.member_rows[v][l];
        if (rows.empty()) continue;
        double got = 0.0;
        for (std::size_t j : rows) got += w[j];
        if (target <= 0.0)
          throw estimation_error(
              "infeasible-margins",
              "zero population total but sample rows present at a level");
        double factor = target / got;
        for (std::size_t j : rows) w[j] *= factor;
      }
    }
    err = max_relative_margin_error(layout, w);
  }
  (void)sample;
  normalize_sum_to_n(w);
  return WeightVector{std::move(w), true};
}

}  // namespace detail

inline WeightVector rake(const Dataset& sample, const PopulationMargins& margins,
                         const RakingOptions& opts = {}) {
  if (sample.n() == 0) throw data_error("empty-dataset", "cannot rake an empty sample");
  auto layout = detail::margin_layout(sample, margins);
  std::vector<double> w(sample.n(), 1.0);
  return detail::ipf(sample, layout, std::move(w), opts);
}

// Iterated clamp-and-rerake until no weight needs clamping.
inline WeightVector trim_weights(const WeightVector& w, double low, double high,
                                 const Dataset& sample,
                                 const PopulationMargins& margins,
                                 const RakingOptions& opts = {}) {
  if (!(low < high))
    throw config_error("invalid-trim-bounds", "trim requires low < high");
  if (low > 1.0 || high < 1.0)
    throw estimation_error("trim-infeasible",
                           "sum-to-n normalization needs low <= 1 <= high");
  auto layout = detail::margin_layout(sample, margins);
  std::vector<double> cur = w.weights;
  const int max_rounds = 50;
  const double slack = 1e-9;
  for (int round = 0; round < max_rounds; ++round) {
    bool clamped = false;
    for (double& x : cur) {
      if (x < low - slack) { x = low; clamped = true; }
      else if (x > high + slack) { x = high; clamped = true; }
    }
    if (!clamped) return WeightVector{std::move(cur), true};
    try {
      // re-rake from the clamped weights, then damp back into bounds
      RakingOptions relaxed = opts;
      relaxed.max_iter = std::max(opts.max_iter, 200);
      cur = detail::ipf(sample, layout, cur, relaxed).weights;
    } catch (const Error&) {
      throw estimation_error("trim-infeasible",
                             "no calibrated weights exist within the trim bounds");
    }
  }
  // bounds and calibration in genuine tension; keep the bounds, restore the
  // sum by scaling only weights strictly inside them
  for (double& x : cur) x = std::min(std::max(x, low), high);
  const double n = static_cast<double>(cur.size());
  for (int pass = 0; pass < 100; ++pass) {
    double sum = 0.0;
    for (double x : cur) sum += x;
    if (std::abs(sum - n) <= 1e-9 * n) break;
    double interior = 0.0;
    for (double x : cur)
      if (x > low + slack && x < high - slack) interior += x;
    if (interior <= 0.0) break;
    double factor = 1.0 + (n - sum) / interior;
    for (double& x : cur)
      if (x > low + slack && x < high - slack)
        x = std::min(std::max(x * factor, low), high);
  }
  return WeightVector{std::move(cur), true};
}

inline Estimate weighted_mean(const Dataset& sample, const WeightVector& w) {
  const auto& y = sample.target();
  if (w.weights.size() != sample.n())
    throw estimation_error("dimension-mismatch", "weight length does not match sample");
  double acc = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) acc += y[j] * w.weights[j];
  return Estimate{acc / static_cast<double>(sample.n()), "weighted_mean", sample.n()};
}

// Which side of the stacked frame carries the 1/pi regression weight.
enum class PropensityWeighting {
  inverse_probability,  // S=0 rows weighted 1/pi, S=1 rows weighted 1
  probability,          // literal reading: S=0 rows weighted pi
};

struct PropensityOptions {
  PropensityWeighting weighting = PropensityWeighting::inverse_probability;
  double clip = 1e-6;
  bool pairwise_interactions = false;
  LogisticOptions logistic;
};

inline PropensityScores estimate_propensity(const CombinedFrame& frame,
                                            const PropensityOptions& opts = {}) {
  if (frame.n_sample == 0 || frame.n_sample == frame.dataset.n())
    throw estimation_error("degenerate-outcome",
                           "stacked frame needs both sample and reference rows");
  DesignMatrix X = encode_design(frame.dataset, opts.pairwise_interactions);
  Eigen::VectorXd s(static_cast<Eigen::Index>(frame.dataset.n()));
  Eigen::VectorXd w(static_cast<Eigen::Index>(frame.dataset.n()));
  for (std::size_t j = 0; j < frame.dataset.n(); ++j) {
    s(static_cast<Eigen::Index>(j)) = frame.indicator[j];
    double bw = frame.base_weights[j];
    if (frame.indicator[j] == 0 && opts.weighting == PropensityWeighting::probability)
      bw = 1.0 / bw;  // base weight stores 1/pi
    w(static_cast<Eigen::Index>(j)) = bw;
  }
  FitResult fit = fit_weighted_logistic(X, s, w, opts.logistic);
  Eigen::VectorXd p = predict(fit, X, Scale::response);
  PropensityScores ps;
  ps.model = fit;
  ps.scores.reserve(frame.n_sample);
  for (std::size_t j = 0; j < frame.n_sample; ++j) {
    double v = p(static_cast<Eigen::Index>(j));
    v = std::min(std::max(v, opts.clip), 1.0 - opts.clip);
    ps.scores.push_back(v);
  }
  return ps;
}

enum class IpwNormalization { paper, hajek };

inline Estimate psipw_estimate(const Dataset& sample, const PropensityScores& ps,
                               IpwNormalization normalization = IpwNormalization::hajek) {
  const auto& y = sample.target();
  if (ps.scores.size() != sample.n())
    throw estimation_error("dimension-mismatch",
                           "propensity score length does not match sample");
  const double floor = 1e-6;
  double num = 0.0, denom = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) {
    double pi = ps.scores[j];
    if (pi <= floor)
      throw estimation_error("unstable-propensity",
                             "propensity score at or below " + std::to_string(floor));
    num += y[j] / pi;
    denom += 1.0 / pi;
  }
  double value = normalization == IpwNormalization::hajek
                     ? num / denom
                     : num / static_cast<double>(sample.n());
  return Estimate{value,
                  normalization == IpwNormalization::hajek ? "psipw_hajek" : "psipw_paper",
                  sample.n()};
}

}  // namespace nonprob
