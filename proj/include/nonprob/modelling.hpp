#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"
#include "nonprob/glm.hpp"
#include "nonprob/weighting.hpp"

namespace nonprob {

struct CellEstimate {
  std::size_t cell_id = 0;
  double mu_c = 0.0;      // model estimate for the cell
  long long n_c = 0;      // sample rows in the cell
  double sigma2_c = 0.0;  // within-cell outcome variance
  long long N_c = 0;
};

struct ShrinkageFactors {
  std::vector<double> delta_c;  // +inf for empty cells
  double sigma2_Y = 0.0;        // between-cell variance
  double grand_mean = 0.0;
};

struct CellSummaries {
  std::vector<CellEstimate> cells;
  ShrinkageFactors shrinkage;
};

/// Population-weighted aggregation of model predictions over cell profiles.
inline Estimate poststratify(const FitResult& fit, const DesignInfo& info,
                             const PopulationCells& cells,
                             Scale scale = Scale::response) {
  if (cells.N < 1) throw data_error("empty-population", "census has no population");
  double acc = 0.0;
  for (std::size_t c = 0; c < cells.counts.size(); ++c) {
    if (cells.counts[c] == 0) continue;
    auto profile = cells.index.levels_of(c);
    // project the cell profile onto the model's covariates
    std::vector<int> levels(info.schema().n_variables());
    for (std::size_t v = 0; v < levels.size(); ++v) {
      const auto& name = info.schema().variables()[v].name;
      std::size_t src = cells.index.schema().variable_index(name);
      levels[v] = profile[src];
    }
    double yhat = predict_row(fit, info, levels, scale);
    acc += static_cast<double>(cells.counts[c]) / static_cast<double>(cells.N) * yhat;
  }
  return Estimate{acc, "poststratify", 0};
}

/// Fit the outcome GLM on the sample (family chosen by target type) and
/// post-stratify its predictions over the census cells.
inline Estimate poststratified_model_estimate(const Dataset& sample,
                                              const PopulationCells& cells,
                                              Scale scale = Scale::response,
                                              bool pairwise_interactions = false) {
  DesignMatrix X = encode_design(sample, pairwise_interactions);
  const auto& y = sample.target();
  Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
  for (std::size_t j = 0; j < y.size(); ++j) yv(static_cast<Eigen::Index>(j)) = y[j];
  Eigen::VectorXd w = Eigen::VectorXd::Ones(yv.size());
  FitResult fit = sample.target_is_binary() ? fit_weighted_logistic(X, yv, w)
                                            : fit_wls(X, yv, w);
  Estimate est = poststratify(fit, X.info, cells, scale);
  est.n_used = sample.n();
  return est;
}

struct MrpOptions {
  bool weight_between_cell_variance = true;  // N_c-weight sigma2_Y
};

inline CellSummaries cell_summaries(const Dataset& sample,
                                    const PopulationCells& cells,
                                    const MrpOptions& opts = {}) {
  const auto& y = sample.target();
  auto ids = assign_cells(sample, cells.index);
  std::size_t C = cells.index.n_cells();
  std::vector<long long> n_c(C, 0);
  std::vector<double> sum(C, 0.0), sumsq(C, 0.0);
  for (std::size_t j = 0; j < ids.size(); ++j) {
    n_c[ids[j]]++;
    sum[ids[j]] += y[j];
    sumsq[ids[j]] += y[j] * y[j];
  }

  std::size_t populated = 0;
  for (std::size_t c = 0; c < C; ++c)
    if (n_c[c] > 0) populated++;
  if (populated < 2)
    throw estimation_error("between-cell-variance-undefined",
                           "fewer than 2 populated cells");

  CellSummaries out;
  out.cells.resize(C);
  double grand_num = 0.0, grand_den = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    auto& ce = out.cells[c];
    ce.cell_id = c;
    ce.n_c = n_c[c];
    ce.N_c = cells.counts[c];
    if (n_c[c] > 0) {
      double m = sum[c] / static_cast<double>(n_c[c]);
      ce.mu_c = m;
      ce.sigma2_c = n_c[c] > 1
                        ? (sumsq[c] - static_cast<double>(n_c[c]) * m * m) /
                              static_cast<double>(n_c[c] - 1)
                        : 0.0;
      ce.sigma2_c = std::max(ce.sigma2_c, 0.0);
      double wc = static_cast<double>(cells.counts[c]);
      grand_num += wc * m;
      grand_den += wc;
    }
  }
  double grand_mean = grand_den > 0 ? grand_num / grand_den : 0.0;

  // between-cell variance across populated cells
  double var_num = 0.0, var_den = 0.0, unw_mean_num = 0.0, unw_den = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (n_c[c] == 0) continue;
    unw_mean_num += out.cells[c].mu_c;
    unw_den += 1.0;
  }
  double center = opts.weight_between_cell_variance ? grand_mean
                                                    : unw_mean_num / unw_den;
  for (std::size_t c = 0; c < C; ++c) {
    if (n_c[c] == 0) continue;
    double d = out.cells[c].mu_c - center;
    double wc = opts.weight_between_cell_variance
                    ? static_cast<double>(cells.counts[c])
                    : 1.0;
    var_num += wc * d * d;
    var_den += wc;
  }
  double sigma2_Y = var_den > 0 ? var_num / var_den : 0.0;

  // pooled within-cell variance, used for cells with n_c <= 1 where the
  // plug-in sigma2_c degenerates to 0
  double pooled_num = 0.0, pooled_den = 0.0;
  for (std::size_t c = 0; c < C; ++c) {
    if (n_c[c] > 1) {
      pooled_num += static_cast<double>(n_c[c] - 1) * out.cells[c].sigma2_c;
      pooled_den += static_cast<double>(n_c[c] - 1);
    }
  }
  double sigma2_pooled = pooled_den > 0 ? pooled_num / pooled_den : 0.0;

  out.shrinkage.sigma2_Y = sigma2_Y;
  out.shrinkage.grand_mean = grand_mean;
  out.shrinkage.delta_c.resize(C);
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < C; ++c) {
    if (n_c[c] == 0) {
      out.shrinkage.delta_c[c] = inf;
    } else if (sigma2_Y <= 0.0) {
      out.shrinkage.delta_c[c] = 0.0;  // all cell means equal; no shrinkage
    } else {
      double s2 = n_c[c] > 1 ? out.cells[c].sigma2_c : sigma2_pooled;
      out.shrinkage.delta_c[c] =
          s2 / (static_cast<double>(n_c[c]) * sigma2_Y);
    }
  }
  return out;
}

/// Partial-pooling estimator: each cell mean is shrunk toward the grand mean
/// by its delta, then aggregated with census shares. Empty cells borrow the
/// grand mean entirely.
inline Estimate mrp_estimate(const Dataset& sample, const PopulationCells& cells,
                             const MrpOptions& opts = {}) {
  CellSummaries cs = cell_summaries(sample, cells, opts);
  double acc = 0.0;
  for (std::size_t c = 0; c < cs.cells.size(); ++c) {
    long long Nc = cs.cells[c].N_c;
    if (Nc == 0) continue;
    double share = static_cast<double>(Nc) / static_cast<double>(cells.N);
    double delta = cs.shrinkage.delta_c[c];
    double pooled;
    if (std::isinf(delta)) {
      pooled = cs.shrinkage.grand_mean;
    } else {
      pooled = (cs.cells[c].mu_c + delta * cs.shrinkage.grand_mean) / (1.0 + delta);
    }
    acc += share * pooled;
  }
  return Estimate{acc, "mrp", sample.n()};
}

}  // namespace nonprob
