#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nonprob/errors.hpp"

namespace nonprob {

/// Ordered categorical covariates: variable names with their level lists.
class CovariateSchema {
 public:
  struct Variable {
    std::string name;
    std::vector<std::string> levels;
  };

  CovariateSchema() = default;

  CovariateSchema(std::initializer_list<Variable> variables)
      : CovariateSchema(std::vector<Variable>(variables)) {}

  explicit CovariateSchema(std::vector<Variable> variables)
      : variables_(std::move(variables)) {
    std::set<std::string> names;
    for (const auto& v : variables_) {
      if (!names.insert(v.name).second)
        throw data_error("invalid-schema", "duplicate variable name '" + v.name + "'");
      if (v.levels.size() < 2)
        throw data_error("invalid-schema",
                         "variable '" + v.name + "' needs at least 2 levels");
      std::set<std::string> lvls(v.levels.begin(), v.levels.end());
      if (lvls.size() != v.levels.size())
        throw data_error("invalid-schema",
                         "variable '" + v.name + "' has duplicate levels");
    }
  }

  const std::vector<Variable>& variables() const { return variables_; }
  std::size_t n_variables() const { return variables_.size(); }

  std::size_t variable_index(const std::string& name) const {
    for (std::size_t i = 0; i < variables_.size(); ++i)
      if (variables_[i].name == name) return i;
    throw data_error("unknown-variable", "no variable named '" + name + "'");
  }

  // Index of a level within variable v, or throws naming both.
  int level_index(std::size_t v, const std::string& level) const {
    const auto& lv = variables_[v].levels;
    auto it = std::find(lv.begin(), lv.end(), level);
    if (it == lv.end())
      throw data_error("unknown-level", "variable '" + variables_[v].name +
                                            "' has no level '" + level + "'");
    return static_cast<int>(it - lv.begin());
  }

  bool operator==(const CovariateSchema& other) const {
    if (variables_.size() != other.variables_.size()) return false;
    for (std::size_t i = 0; i < variables_.size(); ++i) {
      if (variables_[i].name != other.variables_[i].name) return false;
      if (variables_[i].levels != other.variables_[i].levels) return false;
    }
    return true;
  }

  // Names of variables whose definition differs between the two schemas.
  static std::vector<std::string> difference(const CovariateSchema& a,
                                             const CovariateSchema& b) {
    std::vector<std::string> out;
    std::size_t m = std::max(a.variables_.size(), b.variables_.size());
    for (std::size_t i = 0; i < m; ++i) {
      if (i >= a.variables_.size()) {
        out.push_back(b.variables_[i].name);
      } else if (i >= b.variables_.size()) {
        out.push_back(a.variables_[i].name);
      } else if (a.variables_[i].name != b.variables_[i].name ||
                 a.variables_[i].levels != b.variables_[i].levels) {
        out.push_back(a.variables_[i].name);
      }
    }
    return out;
  }

 private:
  std::vector<Variable> variables_;
};

/// Rectangular table of categorical rows (stored as level indices) with an
/// optional per-row target.
class Dataset {
 public:
  Dataset() = default;

  Dataset(CovariateSchema schema, std::vector<std::vector<int>> rows,
          std::optional<std::vector<double>> target = std::nullopt)
      : schema_(std::move(schema)),
        rows_(std::move(rows)),
        target_(std::move(target)) {
    for (const auto& row : rows_) {
      if (row.size() != schema_.n_variables())
        throw data_error("invalid-row", "row width does not match schema");
      for (std::size_t v = 0; v < row.size(); ++v) {
        int L = static_cast<int>(schema_.variables()[v].levels.size());
        if (row[v] < 0 || row[v] >= L)
          throw data_error("unknown-level",
                           "variable '" + schema_.variables()[v].name +
                               "' has no level index " + std::to_string(row[v]));
      }
    }
    if (target_ && target_->size() != rows_.size())
      throw data_error("invalid-target", "target length does not match row count");
  }

  const CovariateSchema& schema() const { return schema_; }
  const std::vector<std::vector<int>>& rows() const { return rows_; }
  std::size_t n() const { return rows_.size(); }

  bool has_target() const { return target_.has_value(); }
  const std::vector<double>& target() const {
    if (!target_) throw data_error("no-target", "dataset carries no target variable");
    return *target_;
  }

  // Binary iff every target value is exactly 0 or 1.
  bool target_is_binary() const {
    for (double y : target())
      if (y != 0.0 && y != 1.0) return false;
    return true;
  }

  Dataset without_target() const { return Dataset(schema_, rows_); }

  Dataset subset(const std::vector<std::size_t>& indices) const {
    std::vector<std::vector<int>> rows;
    rows.reserve(indices.size());
    std::optional<std::vector<double>> target;
    if (target_) target.emplace();
    for (std::size_t i : indices) {
      rows.push_back(rows_[i]);
      if (target_) target->push_back((*target_)[i]);
    }
    return Dataset(schema_, std::move(rows), std::move(target));
  }

  // Keeps only the named variables, in the order given.
  Dataset project(const std::vector<std::string>& variable_names) const {
    std::vector<std::size_t> idx;
    std::vector<CovariateSchema::Variable> vars;
    for (const auto& name : variable_names) {
      std::size_t v = schema_.variable_index(name);
      idx.push_back(v);
      vars.push_back(schema_.variables()[v]);
    }
    std::vector<std::vector<int>> rows;
    rows.reserve(rows_.size());
    for (const auto& row : rows_) {
      std::vector<int> r;
      r.reserve(idx.size());
      for (std::size_t v : idx) r.push_back(row[v]);
      rows.push_back(std::move(r));
    }
    return Dataset(CovariateSchema(std::move(vars)), std::move(rows), target_);
  }

 private:
  CovariateSchema schema_;
  std::vector<std::vector<int>> rows_;
  std::optional<std::vector<double>> target_;
};

/// Exhaustive enumeration of level combinations, row-major over the schema's
/// declared variable order. cell_ids run 0..(prod levels)-1.
class CellIndex {
 public:
  CellIndex() = default;

  explicit CellIndex(const CovariateSchema& schema) : schema_(schema) {
    if (schema.n_variables() == 0)
      throw data_error("invalid-schema", "cannot build cells from an empty schema");
    n_cells_ = 1;
    for (const auto& v : schema.variables()) n_cells_ *= v.levels.size();
  }

  const CovariateSchema& schema() const { return schema_; }
  std::size_t n_cells() const { return n_cells_; }

  // Level combination for a cell, one level index per schema variable.
  std::vector<int> levels_of(std::size_t cell_id) const {
    std::vector<int> out(schema_.n_variables());
    std::size_t rem = cell_id;
    for (std::size_t v = schema_.n_variables(); v-- > 0;) {
      std::size_t L = schema_.variables()[v].levels.size();
      out[v] = static_cast<int>(rem % L);
      rem /= L;
    }
    return out;
  }

  std::size_t cell_of(const std::vector<int>& levels) const {
    std::size_t id = 0;
    for (std::size_t v = 0; v < schema_.n_variables(); ++v)
      id = id * schema_.variables()[v].levels.size() + static_cast<std::size_t>(levels[v]);
    return id;
  }

  std::string label_of(std::size_t cell_id) const {
    auto lv = levels_of(cell_id);
    std::string out;
    for (std::size_t v = 0; v < lv.size(); ++v) {
      if (v) out += ",";
      out += schema_.variables()[v].levels[static_cast<std::size_t>(lv[v])];
    }
    return out;
  }

 private:
  CovariateSchema schema_;
  std::size_t n_cells_ = 0;
};

inline CellIndex build_cell_index(const CovariateSchema& schema) {
  return CellIndex(schema);
}

inline std::vector<std::size_t> assign_cells(const Dataset& dataset,
                                             const CellIndex& index) {
  if (!(dataset.schema() == index.schema()))
    throw data_error("schema-mismatch", "dataset schema does not match cell index");
  std::vector<std::size_t> out;
  out.reserve(dataset.n());
  for (const auto& row : dataset.rows()) out.push_back(index.cell_of(row));
  return out;
}

/// Cross-tabulated census: population count per cell.
struct PopulationCells {
  CellIndex index;
  std::vector<long long> counts;  // N_c per cell_id
  long long N = 0;

  PopulationCells() = default;
  PopulationCells(CellIndex idx, std::vector<long long> cnts)
      : index(std::move(idx)), counts(std::move(cnts)) {
    if (counts.size() != index.n_cells())
      throw data_error("invalid-cells", "count vector does not cover every cell");
    for (long long c : counts)
      if (c < 0) throw data_error("invalid-cells", "negative cell count");
    N = 0;
    for (long long c : counts) N += c;
  }
};

/// Per-variable marginal totals T(X_p).
struct PopulationMargins {
  CovariateSchema schema;
  // totals[v][l] is the population total of level l of variable v.
  std::vector<std::vector<double>> totals;
  double N = 0;

  PopulationMargins() = default;
  PopulationMargins(CovariateSchema s, std::vector<std::vector<double>> t)
      : schema(std::move(s)), totals(std::move(t)) {
    if (totals.size() != schema.n_variables())
      throw data_error("invalid-margins", "one total vector per variable required");
    N = 0;
    for (std::size_t v = 0; v < totals.size(); ++v) {
      if (totals[v].size() != schema.variables()[v].levels.size())
        throw data_error("invalid-margins",
                         "totals for '" + schema.variables()[v].name +
                             "' do not cover every level");
      double sum = 0;
      for (double x : totals[v]) {
        if (x < 0) throw data_error("invalid-margins", "negative level total");
        sum += x;
      }
      if (v == 0) {
        N = sum;
      } else if (std::abs(sum - N) > 1e-6 * std::max(1.0, N)) {
        throw data_error("invalid-margins",
                         "level totals of '" + schema.variables()[v].name +
                             "' do not sum to the population size");
      }
    }
  }
};

inline PopulationMargins margins_from_cells(const PopulationCells& cells) {
  const auto& schema = cells.index.schema();
  std::vector<std::vector<double>> totals(schema.n_variables());
  for (std::size_t v = 0; v < schema.n_variables(); ++v)
    totals[v].assign(schema.variables()[v].levels.size(), 0.0);
  for (std::size_t c = 0; c < cells.counts.size(); ++c) {
    auto lv = cells.index.levels_of(c);
    for (std::size_t v = 0; v < lv.size(); ++v)
      totals[v][static_cast<std::size_t>(lv[v])] += static_cast<double>(cells.counts[c]);
  }
  return PopulationMargins(schema, std::move(totals));
}

/// Probability-style reference: covariate rows with known inclusion
/// probabilities, no target.
struct ReferenceSample {
  Dataset dataset;
  std::vector<double> inclusion_probs;

  ReferenceSample() = default;
  ReferenceSample(Dataset d, std::vector<double> probs)
      : dataset(std::move(d)), inclusion_probs(std::move(probs)) {
    if (inclusion_probs.size() != dataset.n())
      throw data_error("invalid-reference", "one inclusion probability per row required");
    for (double p : inclusion_probs)
      if (!(p > 0.0) || p > 1.0)
        throw data_error("invalid-reference", "inclusion probabilities must be in (0,1]");
  }
};

// Rows per cell = round-half-away-from-zero(scale * N_c), at least 1 for any
// nonempty cell; each row carries pi = 1/N_c.
inline ReferenceSample synthesize_reference(const PopulationCells& cells,
                                            double scale) {
  if (!(scale > 0.0) || scale > 1.0)
    throw config_error("invalid-scale", "reference scale must be in (0,1]");
  if (cells.N < 1)
    throw data_error("empty-population", "all census cells are empty");
  std::vector<std::vector<int>> rows;
  std::vector<double> probs;
  for (std::size_t c = 0; c < cells.counts.size(); ++c) {
    long long Nc = cells.counts[c];
    if (Nc == 0) continue;
    auto n_rows = static_cast<long long>(
        std::floor(scale * static_cast<double>(Nc) + 0.5));
    n_rows = std::max<long long>(n_rows, 1);
    auto levels = cells.index.levels_of(c);
    double pi = 1.0 / static_cast<double>(Nc);
    for (long long r = 0; r < n_rows; ++r) {
      rows.push_back(levels);
      probs.push_back(pi);
    }
  }
  return ReferenceSample(Dataset(cells.index.schema(), std::move(rows)),
                         std::move(probs));
}

/// Sample stacked on top of the reference with membership indicator S and the
/// regression base weights used by the propensity model.
struct CombinedFrame {
  Dataset dataset;             // target absent
  std::vector<int> indicator;  // 1 = non-probability sample row, 0 = reference
  std::vector<double> base_weights;
  std::size_t n_sample = 0;
};

inline CombinedFrame stack_with_indicator(const Dataset& sample,
                                          const ReferenceSample& reference) {
  if (!(sample.schema() == reference.dataset.schema())) {
    auto diff = CovariateSchema::difference(sample.schema(), reference.dataset.schema());
    std::string names;
    for (const auto& d : diff) names += (names.empty() ? "" : ",") + d;
    throw data_error("schema-mismatch",
                     "sample and reference schemas differ in: " + names);
  }
  std::vector<std::vector<int>> rows = sample.rows();
  rows.insert(rows.end(), reference.dataset.rows().begin(),
              reference.dataset.rows().end());
  CombinedFrame frame;
  frame.dataset = Dataset(sample.schema(), std::move(rows));
  frame.n_sample = sample.n();
  frame.indicator.assign(sample.n(), 1);
  frame.indicator.insert(frame.indicator.end(), reference.dataset.n(), 0);
  frame.base_weights.assign(sample.n(), 1.0);
  for (double pi : reference.inclusion_probs)
    frame.base_weights.push_back(1.0 / pi);
  return frame;
}

/// Common-support diagnostic: populated census cells with no sample rows.
struct ValidationReport {
  struct Violation {
    std::size_t cell_id;
    std::string label;
    long long population_count;
  };
  std::vector<Violation> violations;
  bool support_ok = true;
};

inline ValidationReport common_support_report(const Dataset& sample,
                                              const PopulationCells& cells) {
  auto ids = assign_cells(sample, cells.index);
  std::vector<long long> sample_counts(cells.index.n_cells(), 0);
  for (std::size_t id : ids) sample_counts[id]++;
  ValidationReport report;
  for (std::size_t c = 0; c < cells.counts.size(); ++c) {
    if (cells.counts[c] > 0 && sample_counts[c] == 0) {
      report.violations.push_back(
          {c, cells.index.label_of(c), cells.counts[c]});
    }
  }
  report.support_ok = report.violations.empty();
  return report;
}

}  // namespace nonprob
