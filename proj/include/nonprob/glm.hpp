#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"

namespace nonprob {

enum class Family { linear, logistic };
enum class Scale { link, response };

/// Encoding layout: intercept + treatment-coded dummies (first declared level
/// of each variable is the reference), optionally followed by pairwise
/// interaction products of the dummies.
class DesignInfo {
 public:
  DesignInfo() = default;

  explicit DesignInfo(const CovariateSchema& schema,
                      bool pairwise_interactions = false)
      : schema_(schema), interactions_(pairwise_interactions) {
    column_names_.push_back("(intercept)");
    for (std::size_t v = 0; v < schema.n_variables(); ++v) {
      const auto& var = schema.variables()[v];
      reference_levels_.push_back(var.levels.front());
      for (std::size_t l = 1; l < var.levels.size(); ++l) {
        main_terms_.push_back({v, static_cast<int>(l)});
        column_names_.push_back(var.name + "." + var.levels[l]);
      }
    }
    if (interactions_) {
      for (std::size_t a = 0; a < main_terms_.size(); ++a) {
        for (std::size_t b = a + 1; b < main_terms_.size(); ++b) {
          if (main_terms_[a].variable == main_terms_[b].variable) continue;
          interaction_terms_.push_back({a, b});
          column_names_.push_back(column_names_[1 + a] + ":" + column_names_[1 + b]);
        }
      }
    }
  }

  const CovariateSchema& schema() const { return schema_; }
  std::size_t n_columns() const { return column_names_.size(); }
  const std::vector<std::string>& column_names() const { return column_names_; }
  const std::vector<std::string>& reference_levels() const { return reference_levels_; }

  Eigen::VectorXd encode_row(const std::vector<int>& levels) const {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_columns()));
    x(0) = 1.0;
    for (std::size_t t = 0; t < main_terms_.size(); ++t)
      if (levels[main_terms_[t].variable] == main_terms_[t].level)
        x(static_cast<Eigen::Index>(1 + t)) = 1.0;
    for (std::size_t t = 0; t < interaction_terms_.size(); ++t) {
      const auto& [a, b] = interaction_terms_[t];
      x(static_cast<Eigen::Index>(1 + main_terms_.size() + t)) =
          x(static_cast<Eigen::Index>(1 + a)) * x(static_cast<Eigen::Index>(1 + b));
    }
    return x;
  }

  Eigen::MatrixXd encode(const Dataset& dataset) const {
    if (!(dataset.schema() == schema_))
      throw data_error("design-mismatch", "dataset schema does not match design layout");
    Eigen::MatrixXd X(static_cast<Eigen::Index>(dataset.n()),
                      static_cast<Eigen::Index>(n_columns()));
    for (std::size_t j = 0; j < dataset.n(); ++j)
      X.row(static_cast<Eigen::Index>(j)) = design_row(dataset.rows()[j]);
    return X;
  }

 private:
  struct MainTerm {
    std::size_t variable;
    int level;
  };
  Eigen::RowVectorXd design_row(const std::vector<int>& levels) const {
    return encode_row(levels).transpose();
  }

  CovariateSchema schema_;
  bool interactions_ = false;
  std::vector<MainTerm> main_terms_;
  std::vector<std::pair<std::size_t, std::size_t>> interaction_terms_;
  std::vector<std::string> column_names_;
  std::vector<std::string> reference_levels_;
};

struct DesignMatrix {
  DesignInfo info;
  Eigen::MatrixXd values;
};

inline DesignMatrix encode_design(const Dataset& dataset,
                                  bool pairwise_interactions = false) {
  if (dataset.n() == 0)
    throw data_error("empty-dataset", "cannot encode an empty dataset");
  DesignInfo info(dataset.schema(), pairwise_interactions);
  return DesignMatrix{info, info.encode(dataset)};
}

struct FitResult {
  Eigen::VectorXd coefficients;
  Family family = Family::linear;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
};

inline double inverse_logit(double eta) {
  if (eta >= 0) {
    double e = std::exp(-eta);
    return 1.0 / (1.0 + e);
  }
  double e = std::exp(eta);
  return e / (1.0 + e);
}

namespace detail {

// Rank check on the sqrt(w)-scaled design; throws naming the dependent columns.
inline void check_full_rank(const Eigen::MatrixXd& Xw, const DesignInfo& info) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Xw);
  qr.setThreshold(1e-10);
  if (qr.rank() < Xw.cols()) {
    auto perm = qr.colsPermutation().indices();
    std::string cols;
    for (Eigen::Index i = qr.rank(); i < Xw.cols(); ++i) {
      if (!cols.empty()) cols += ",";
      cols += info.column_names()[static_cast<std::size_t>(perm(i))];
    }
    throw estimation_error("singular-design", "collinear columns: " + cols);
  }
}

}  // namespace detail

inline FitResult fit_wls(const DesignMatrix& X, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& w) {
  if (y.size() != X.values.rows() || w.size() != X.values.rows())
    throw estimation_error("dimension-mismatch", "y/w length does not match design rows");
  if ((w.array() <= 0.0).any())
    throw estimation_error("invalid-weights", "regression weights must be positive");
  Eigen::ArrayXd sw = w.array().sqrt();
  Eigen::MatrixXd Xw = X.values.array().colwise() * sw;
  Eigen::VectorXd yw = y.array() * sw;
  detail::check_full_rank(Xw, X.info);
  FitResult fit;
  fit.family = Family::linear;
  fit.coefficients = Xw.colPivHouseholderQr().solve(yw);
  fit.converged = true;
  fit.iterations = 1;
  fit.final_gradient_norm =
      (X.values.transpose() * (w.asDiagonal() * (y - X.values * fit.coefficients)))
          .norm();
  return fit;
}

struct LogisticOptions {
  int max_iter = 100;
  double tol = 1e-8;               // max |coefficient change| and score norm
  double separation_bound = 30.0;  // |beta| beyond this flags separation
};

inline FitResult fit_weighted_logistic(const DesignMatrix& X,
                                       const Eigen::VectorXd& s,
                                       const Eigen::VectorXd& w,
                                       const LogisticOptions& opts = {}) {
  const Eigen::Index n = X.values.rows();
  if (s.size() != n || w.size() != n)
    throw estimation_error("dimension-mismatch", "s/w length does not match design rows");
  if ((w.array() <= 0.0).any())
    throw estimation_error("invalid-weights", "regression weights must be positive");
  bool has0 = false, has1 = false;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (s(j) == 0.0) has0 = true;
    else if (s(j) == 1.0) has1 = true;
    else throw estimation_error("invalid-outcome", "s must be 0/1");
  }
  if (!has0 || !has1)
    throw estimation_error("degenerate-outcome", "s contains a single class");

  auto loglik = [&](const Eigen::VectorXd& beta) {
    double ll = 0.0;
    Eigen::VectorXd eta = X.values * beta;
    for (Eigen::Index j = 0; j < n; ++j) {
      // log sigma / log(1-sigma) computed stably from eta
      double e = eta(j);
      double log_p = e >= 0 ? -std::log1p(std::exp(-e)) : e - std::log1p(std::exp(e));
      double log_q = e >= 0 ? -e - std::log1p(std::exp(-e)) : -std::log1p(std::exp(e));
      ll += w(j) * (s(j) * log_p + (1.0 - s(j)) * log_q);
    }
    return ll;
  };

  FitResult fit;
  fit.family = Family::logistic;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(X.values.cols());
  double ll = loglik(beta);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    Eigen::VectorXd eta = X.values * beta;
    Eigen::VectorXd mu(n), v(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      mu(j) = inverse_logit(eta(j));
      v(j) = std::max(mu(j) * (1.0 - mu(j)), 1e-12);
    }
    Eigen::VectorXd score = X.values.transpose() * (w.asDiagonal() * (s - mu));
    Eigen::ArrayXd irls_w = w.array() * v.array();
    Eigen::MatrixXd Xw = X.values.array().colwise() * irls_w.sqrt();
    if (iter == 1) detail::check_full_rank(Xw, X.info);
    Eigen::MatrixXd H = Xw.transpose() * Xw;
    Eigen::VectorXd step = H.ldlt().solve(score);

    // step-halving keeps the weighted log-likelihood non-decreasing
    double step_scale = 1.0;
    Eigen::VectorXd beta_new;
    double ll_new;
    for (int h = 0; h < 30; ++h) {
      beta_new = beta + step_scale * step;
      ll_new = loglik(beta_new);
      if (ll_new >= ll - 1e-12) break;
      step_scale *= 0.5;
    }

    double max_change = (beta_new - beta).cwiseAbs().maxCoeff();
    beta = beta_new;
    ll = ll_new;
    fit.iterations = iter;

    if (beta.cwiseAbs().maxCoeff() > opts.separation_bound)
      throw estimation_error("separation",
                             "coefficients diverging; data are (quasi-)separated");

    Eigen::VectorXd eta2 = X.values * beta;
    Eigen::VectorXd mu2(n);
    for (Eigen::Index j = 0; j < n; ++j) mu2(j) = inverse_logit(eta2(j));
    double score_norm =
        (X.values.transpose() * (w.asDiagonal() * (s - mu2))).norm();
    fit.final_gradient_norm = score_norm;
    if (max_change < opts.tol || score_norm < opts.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.coefficients = beta;
  return fit;
}

inline Eigen::VectorXd predict(const FitResult& fit, const DesignMatrix& X,
                               Scale scale = Scale::response) {
  if (X.values.cols() != fit.coefficients.size())
    throw estimation_error("design-mismatch",
                           "design column count does not match fitted coefficients");
  Eigen::VectorXd eta = X.values * fit.coefficients;
  if (scale == Scale::link || fit.family == Family::linear) return eta;
  Eigen::VectorXd out(eta.size());
  for (Eigen::Index j = 0; j < eta.size(); ++j) out(j) = inverse_logit(eta(j));
  return out;
}

inline double predict_row(const FitResult& fit, const DesignInfo& info,
                          const std::vector<int>& levels,
                          Scale scale = Scale::response) {
  Eigen::VectorXd x = info.encode_row(levels);
  if (x.size() != fit.coefficients.size())
    throw estimation_error("design-mismatch",
                           "design column count does not match fitted coefficients");
  double eta = x.dot(fit.coefficients);
  if (scale == Scale::link || fit.family == Family::linear) return eta;
  return inverse_logit(eta);
}

}  // namespace nonprob
