#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"
#include "nonprob/pipeline.hpp"
#include "nonprob/rng.hpp"
#include "nonprob/uncertainty.hpp"

namespace nonprob {

/// Per-dummy coefficients keyed by (variable index, level index); level 0 of
/// each variable is the reference and carries no coefficient.
struct DummyCoefficients {
  double intercept = 0.0;
  std::map<std::pair<std::size_t, int>, double> by_level;

  double linear_predictor(const std::vector<int>& levels) const {
    double eta = intercept;
    for (const auto& [key, coef] : by_level)
      if (levels[key.first] == key.second) eta += coef;
    return eta;
  }
};

struct PopulationConfig {
  CovariateSchema schema;
  long long N = 0;
  std::vector<double> cell_probs;  // per cell_id, sums to 1
  DummyCoefficients outcome;
  Family outcome_family = Family::logistic;
  double noise_sd = 1.0;  // linear family only
  std::uint64_t seed = 1;
};

struct SelectionMechanism {
  double base_rate = 0.1;
  DummyCoefficients covariate;  // gamma_X (its intercept field is unused)
  double outcome_coeff = 0.0;   // gamma_Y; nonzero => non-ignorable

  double probability(const std::vector<int>& levels, double y) const {
    double eta = std::log(base_rate / (1.0 - base_rate)) +
                 covariate.linear_predictor(levels) + outcome_coeff * y;
    return inverse_logit(eta);
  }
};

struct Population {
  Dataset dataset;  // all N rows, with Y
  PopulationCells cells;
  double true_mean = 0.0;
};

inline Population generate_population(const PopulationConfig& cfg) {
  if (cfg.N < 1) throw config_error("invalid-population", "N must be >= 1");
  CellIndex index(cfg.schema);
  if (cfg.cell_probs.size() != index.n_cells())
    throw config_error("invalid-population", "one cell probability per cell required");
  double total = 0.0;
  for (double p : cfg.cell_probs) {
    if (p < 0) throw config_error("invalid-population", "negative cell probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw config_error("invalid-population", "cell probabilities must sum to 1");

  Rng rng(cfg.seed);
  std::vector<std::vector<int>> rows;
  std::vector<double> y;
  std::vector<long long> counts(index.n_cells(), 0);
  rows.reserve(static_cast<std::size_t>(cfg.N));
  y.reserve(static_cast<std::size_t>(cfg.N));
  double sum_y = 0.0;
  for (long long i = 0; i < cfg.N; ++i) {
    std::size_t cell = rng.categorical(cfg.cell_probs);
    counts[cell]++;
    auto levels = index.levels_of(cell);
    double eta = cfg.outcome.linear_predictor(levels);
    double yi;
    if (cfg.outcome_family == Family::logistic) {
      yi = rng.bernoulli(inverse_logit(eta)) ? 1.0 : 0.0;
    } else {
      yi = eta + cfg.noise_sd * rng.gaussian();
    }
    rows.push_back(std::move(levels));
    y.push_back(yi);
    sum_y += yi;
  }
  Population pop;
  pop.dataset = Dataset(cfg.schema, std::move(rows), std::move(y));
  pop.cells = PopulationCells(index, std::move(counts));
  pop.true_mean = sum_y / static_cast<double>(cfg.N);
  return pop;
}

/// Poisson sampling: each population row enters independently with its
/// mechanism probability.
inline Dataset apply_selection(const Population& pop, const SelectionMechanism& mech,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> picked;
  const auto& y = pop.dataset.target();
  for (std::size_t i = 0; i < pop.dataset.n(); ++i) {
    double p = mech.probability(pop.dataset.rows()[i], y[i]);
    if (rng.bernoulli(p)) picked.push_back(i);
  }
  if (picked.empty())
    throw estimation_error("empty-sample", "selection mechanism produced no rows");
  // row order carries no information; shuffle so that order-sensitive
  // consumers (greedy matching) do not inherit the population ordering
  for (std::size_t i = picked.size(); i > 1; --i)
    std::swap(picked[i - 1], picked[rng.uniform_index(i)]);
  return pop.dataset.subset(picked);
}

struct Scenario {
  std::string name;
  PopulationConfig population;
  SelectionMechanism selection;
  std::size_t replications = 2;
  std::vector<EstimatorSpec> estimators;
  std::size_t bootstrap_B = 0;  // >0 adds CI coverage columns
};

struct MetricsRow {
  std::string scenario;
  std::string estimator;
  double truth = 0.0;
  double bias = 0.0;
  double abs_bias = 0.0;
  double rmse = 0.0;
  double mc_se = 0.0;  // Monte-Carlo SE of the bias
  double coverage = std::numeric_limits<double>::quiet_NaN();
  double mean_n = 0.0;
  std::size_t replications = 0;
  std::size_t failures = 0;
  std::string flags;  // "biased" and/or "unstable"
};

struct MetricsTable {
  std::vector<MetricsRow> rows;

  std::string to_csv() const {
    std::ostringstream os;
    os << "scenario,estimator,truth,bias,abs_bias,rmse,mc_se,coverage,mean_n,"
          "replications,failures,flags\n";
    os.precision(10);
    for (const auto& r : rows) {
      os << r.scenario << ',' << r.estimator << ',' << r.truth << ',' << r.bias
         << ',' << r.abs_bias << ',' << r.rmse << ',' << r.mc_se << ',';
      if (std::isnan(r.coverage)) os << "";
      else os << r.coverage;
      os << ',' << r.mean_n << ',' << r.replications << ',' << r.failures << ','
         << r.flags << '\n';
    }
    return os.str();
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(5);
    for (const auto& r : rows) {
      os << r.scenario << "  " << r.estimator << "  bias=" << r.bias
         << "  rmse=" << r.rmse << "  mc_se=" << r.mc_se;
      if (!std::isnan(r.coverage)) os << "  coverage=" << r.coverage;
      os << "  n=" << r.mean_n << "  R=" << r.replications;
      if (r.failures) os << "  failures=" << r.failures;
      if (!r.flags.empty()) os << "  [" << r.flags << "]";
      os << '\n';
    }
    return os.str();
  }
};

/// Population fixed per scenario, selection re-drawn per replication.
inline MetricsTable run_benchmark(const std::vector<Scenario>& scenarios,
                                  std::uint64_t seed) {
  MetricsTable table;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    const Scenario& sc = scenarios[s];
    if (sc.replications < 2)
      throw config_error("invalid-replications", "benchmark requires R >= 2");
    PopulationConfig pop_cfg = sc.population;
    pop_cfg.seed = derive_seed(seed ^ pop_cfg.seed, s);
    Population pop = generate_population(pop_cfg);

    CensusInputs census;
    census.cells = pop.cells;
    census.margins = margins_from_cells(pop.cells);

    struct Acc {
      std::vector<double> estimates;
      std::size_t failures = 0;
      std::size_t covered = 0;
      std::size_t ci_count = 0;
    };
    std::vector<Acc> accs(sc.estimators.size());
    double total_n = 0.0;

    for (std::size_t r = 0; r < sc.replications; ++r) {
      std::uint64_t rep_seed = derive_seed(pop_cfg.seed, 1000 + r);
      Dataset sample = apply_selection(pop, sc.selection, rep_seed);
      total_n += static_cast<double>(sample.n());
      for (std::size_t e = 0; e < sc.estimators.size(); ++e) {
        EstimatorSpec spec = sc.estimators[e];
        spec.seed = derive_seed(rep_seed, e);
        try {
          if (sc.bootstrap_B > 0) {
            auto unc = bootstrap(spec, sample, census, sc.bootstrap_B,
                                 derive_seed(rep_seed, 100 + e));
            accs[e].estimates.push_back(unc.point);
            accs[e].ci_count++;
            if (unc.ci_low <= pop.true_mean && pop.true_mean <= unc.ci_high)
              accs[e].covered++;
          } else {
            accs[e].estimates.push_back(run_estimator(spec, sample, census).value);
          }
        } catch (const Error&) {
          accs[e].failures++;
        }
      }
    }

    for (std::size_t e = 0; e < sc.estimators.size(); ++e) {
      MetricsRow row;
      row.scenario = sc.name;
      row.estimator = method_name(sc.estimators[e].method);
      row.truth = pop.true_mean;
      row.replications = sc.replications;
      row.failures = accs[e].failures;
      row.mean_n = total_n / static_cast<double>(sc.replications);
      const auto& est = accs[e].estimates;
      if (!est.empty()) {
        double mean = 0.0, msq = 0.0;
        for (double v : est) {
          mean += v;
          msq += (v - pop.true_mean) * (v - pop.true_mean);
        }
        mean /= static_cast<double>(est.size());
        row.bias = mean - pop.true_mean;
        row.abs_bias = std::abs(row.bias);
        row.rmse = std::sqrt(msq / static_cast<double>(est.size()));
        double var = 0.0;
        for (double v : est) var += (v - mean) * (v - mean);
        var /= est.size() > 1 ? static_cast<double>(est.size() - 1) : 1.0;
        row.mc_se = std::sqrt(var / static_cast<double>(est.size()));
      }
      if (accs[e].ci_count > 0)
        row.coverage = static_cast<double>(accs[e].covered) /
                       static_cast<double>(accs[e].ci_count);
      bool unstable = accs[e].failures * 5 > sc.replications;
      bool biased = !est.empty() && row.mc_se > 0 && row.abs_bias > 3.0 * row.mc_se;
      if (biased) row.flags = "biased";
      if (unstable) row.flags += (row.flags.empty() ? "" : ",") + std::string("unstable");
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

}  // namespace nonprob
