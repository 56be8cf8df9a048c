#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"

namespace nonprob {
namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

inline std::vector<std::vector<std::string>> read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("file-error", "cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto fields = split_line(line);
    if (!rows.empty() && fields.size() != rows.front().size())
      throw data_error("parse-error", path + ":" + std::to_string(line_no) +
                                          ": ragged row");
    for (const auto& f : fields)
      if (f.empty())
        throw data_error("missing-value", path + ":" + std::to_string(line_no) +
                                              ": empty field");
    rows.push_back(std::move(fields));
  }
  if (rows.empty()) throw data_error("parse-error", path + ": empty file");
  return rows;
}

}  // namespace csv

/// Sample CSV: one column per covariate plus an optional target column.
/// When no schema is given, levels are taken in first-appearance order.
inline Dataset read_sample_csv(const std::string& path,
                               const std::optional<std::string>& target_column,
                               const std::optional<CovariateSchema>& schema = {}) {
  auto table = csv::read_table(path);
  const auto& header = table.front();

  std::optional<std::size_t> target_col;
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (target_column && header[c] == *target_column) {
      target_col = c;
    } else {
      cov_cols.push_back(c);
      cov_names.push_back(header[c]);
    }
  }
  if (target_column && !target_col)
    throw data_error("missing-column",
                     path + ": no column named '" + *target_column + "'");

  CovariateSchema effective;
  if (schema) {
    // column order follows the schema, not the file
    std::vector<std::size_t> ordered;
    for (const auto& v : schema->variables()) {
      bool found = false;
      for (std::size_t i = 0; i < cov_names.size(); ++i) {
        if (cov_names[i] == v.name) {
          ordered.push_back(cov_cols[i]);
          found = true;
          break;
        }
      }
      if (!found)
        throw data_error("missing-column", path + ": no column named '" + v.name + "'");
    }
    cov_cols = ordered;
    effective = *schema;
  } else {
    std::vector<CovariateSchema::Variable> vars(cov_cols.size());
    for (std::size_t i = 0; i < cov_cols.size(); ++i) vars[i].name = cov_names[i];
    for (std::size_t r = 1; r < table.size(); ++r) {
      for (std::size_t i = 0; i < cov_cols.size(); ++i) {
        const auto& value = table[r][cov_cols[i]];
        auto& levels = vars[i].levels;
        if (std::find(levels.begin(), levels.end(), value) == levels.end())
          levels.push_back(value);
      }
    }
    effective = CovariateSchema(std::move(vars));
  }

  std::vector<std::vector<int>> rows;
  std::optional<std::vector<double>> target;
  if (target_col) target.emplace();
  for (std::size_t r = 1; r < table.size(); ++r) {
    std::vector<int> row(cov_cols.size());
    for (std::size_t i = 0; i < cov_cols.size(); ++i) {
      try {
        row[i] = effective.level_index(i, table[r][cov_cols[i]]);
      } catch (const Error& e) {
        throw data_error("unknown-level",
                         path + ":" + std::to_string(r + 1) + ": " + e.what());
      }
    }
    rows.push_back(std::move(row));
    if (target_col) {
      try {
        target->push_back(std::stod(table[r][*target_col]));
      } catch (const std::exception&) {
        throw data_error("parse-error", path + ":" + std::to_string(r + 1) +
                                            ": non-numeric target value");
      }
    }
  }
  return Dataset(effective, std::move(rows), std::move(target));
}

/// Cells CSV: one column per covariate plus an integer `count` column.
/// Unlisted level combinations get count 0.
inline PopulationCells read_cells_csv(const std::string& path) {
  auto table = csv::read_table(path);
  const auto& header = table.front();
  std::optional<std::size_t> count_col;
  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "count") count_col = c;
    else {
      cov_cols.push_back(c);
      cov_names.push_back(header[c]);
    }
  }
  if (!count_col) throw data_error("missing-column", path + ": no 'count' column");
  if (cov_cols.empty())
    throw data_error("invalid-schema", path + ": no covariate columns");

  std::vector<CovariateSchema::Variable> vars(cov_cols.size());
  for (std::size_t i = 0; i < cov_cols.size(); ++i) vars[i].name = cov_names[i];
  for (std::size_t r = 1; r < table.size(); ++r) {
    for (std::size_t i = 0; i < cov_cols.size(); ++i) {
      const auto& value = table[r][cov_cols[i]];
      auto& levels = vars[i].levels;
      if (std::find(levels.begin(), levels.end(), value) == levels.end())
        levels.push_back(value);
    }
  }
  CovariateSchema schema(std::move(vars));
  CellIndex index(schema);
  std::vector<long long> counts(index.n_cells(), 0);
  for (std::size_t r = 1; r < table.size(); ++r) {
    std::vector<int> levels(cov_cols.size());
    for (std::size_t i = 0; i < cov_cols.size(); ++i)
      levels[i] = schema.level_index(i, table[r][cov_cols[i]]);
    long long cnt;
    try {
      cnt = std::stoll(table[r][*count_col]);
    } catch (const std::exception&) {
      throw data_error("parse-error", path + ":" + std::to_string(r + 1) +
                                          ": non-integer count");
    }
    if (cnt < 0)
      throw data_error("parse-error", path + ":" + std::to_string(r + 1) +
                                          ": negative count");
    counts[index.cell_of(levels)] += cnt;
  }
  return PopulationCells(index, std::move(counts));
}

/// Margins CSV: columns variable,level,total.
inline PopulationMargins read_margins_csv(const std::string& path) {
  auto table = csv::read_table(path);
  const auto& header = table.front();
  if (header.size() != 3 || header[0] != "variable" || header[1] != "level" ||
      header[2] != "total")
    throw data_error("parse-error", path + ": expected header variable,level,total");

  std::vector<CovariateSchema::Variable> vars;
  std::vector<std::vector<double>> totals;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& vname = table[r][0];
    const auto& level = table[r][1];
    double total;
    try {
      total = std::stod(table[r][2]);
    } catch (const std::exception&) {
      throw data_error("parse-error", path + ":" + std::to_string(r + 1) +
                                          ": non-numeric total");
    }
    std::size_t vi = vars.size();
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i].name == vname) vi = i;
    if (vi == vars.size()) {
      vars.push_back({vname, {}});
      totals.emplace_back();
    }
    vars[vi].levels.push_back(level);
    totals[vi].push_back(total);
  }
  return PopulationMargins(CovariateSchema(std::move(vars)), std::move(totals));
}

/// Reference CSV: covariate columns plus an `inclusion_prob` column.
inline ReferenceSample read_reference_csv(const std::string& path,
                                          const std::optional<CovariateSchema>& schema = {}) {
  auto table = csv::read_table(path);
  const auto& header = table.front();
  std::optional<std::size_t> prob_col;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == "inclusion_prob") prob_col = c;
  if (!prob_col)
    throw data_error("missing-column", path + ": no 'inclusion_prob' column");

  // reuse the sample reader by treating the probability as a target column
  Dataset with_probs = read_sample_csv(path, std::string("inclusion_prob"), schema);
  std::vector<double> probs = with_probs.target();
  return ReferenceSample(with_probs.without_target(), std::move(probs));
}

}  // namespace nonprob
