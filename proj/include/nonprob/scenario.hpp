#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nonprob/errors.hpp"
#include "nonprob/simulation.hpp"

namespace nonprob {
namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

// "gender.female: 0.8, region.centre: -0.5"
inline void parse_coefs(const std::string& text, const CovariateSchema& schema,
                        DummyCoefficients& out) {
  if (trim(text).empty()) return;
  for (const auto& part : split(text, ',')) {
    auto colon = part.find(':');
    if (colon == std::string::npos)
      throw config_error("scenario-parse", "expected 'variable.level: value' in '" + part + "'");
    std::string key = trim(part.substr(0, colon));
    double value = std::stod(trim(part.substr(colon + 1)));
    auto dot = key.find('.');
    if (dot == std::string::npos)
      throw config_error("scenario-parse", "coefficient key '" + key + "' needs variable.level");
    std::size_t v = schema.variable_index(key.substr(0, dot));
    int l = schema.level_index(v, key.substr(dot + 1));
    if (l == 0)
      throw config_error("scenario-parse",
                         "'" + key + "' is a reference level and carries no coefficient");
    out.by_level[{v, l}] = value;
  }
}

}  // namespace detail

/// Scenario files are flat key = value text with # comments. Keys:
///   name, seed, N, replications, schema, cell_probs, outcome.family,
///   outcome.intercept, outcome.coef, outcome.noise_sd, selection.base_rate,
///   selection.coef, selection.outcome_coef, estimators, reference_scale,
///   subsample_fraction, bootstrap_B, normalization,
///   drp.outcome_vars, drp.propensity_vars, poststrat.outcome_vars
inline Scenario parse_scenario(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("scenario-parse",
                         "line " + std::to_string(line_no) + ": expected key = value");
    kv[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
  }

  auto get = [&](const std::string& key) -> std::string {
    auto it = kv.find(key);
    if (it == kv.end())
      throw config_error("scenario-parse", "missing key '" + key + "'");
    return it->second;
  };
  auto get_or = [&](const std::string& key, const std::string& dflt) {
    auto it = kv.find(key);
    return it == kv.end() ? dflt : it->second;
  };

  Scenario sc;
  sc.name = get_or("name", "scenario");

  // schema = gender: male, female | region: north, centre, south
  std::vector<CovariateSchema::Variable> vars;
  for (const auto& vdef : detail::split(get("schema"), '|')) {
    auto colon = vdef.find(':');
    if (colon == std::string::npos)
      throw config_error("scenario-parse", "schema entry '" + vdef + "' needs name: levels");
    CovariateSchema::Variable var;
    var.name = detail::trim(vdef.substr(0, colon));
    var.levels = detail::split(vdef.substr(colon + 1), ',');
    vars.push_back(std::move(var));
  }
  sc.population.schema = CovariateSchema(std::move(vars));
  CellIndex index(sc.population.schema);

  sc.population.N = std::stoll(get("N"));
  sc.population.seed = std::stoull(get_or("seed", "1"));
  sc.replications = std::stoul(get("replications"));

  std::string probs = get_or("cell_probs", "uniform");
  if (probs == "uniform") {
    sc.population.cell_probs.assign(index.n_cells(),
                                    1.0 / static_cast<double>(index.n_cells()));
  } else {
    for (const auto& p : detail::split(probs, ','))
      sc.population.cell_probs.push_back(std::stod(p));
  }

  std::string family = get_or("outcome.family", "logistic");
  if (family == "logistic") sc.population.outcome_family = Family::logistic;
  else if (family == "linear") sc.population.outcome_family = Family::linear;
  else throw config_error("scenario-parse", "unknown outcome family '" + family + "'");
  sc.population.outcome.intercept = std::stod(get_or("outcome.intercept", "0"));
  sc.population.noise_sd = std::stod(get_or("outcome.noise_sd", "1"));
  detail::parse_coefs(get_or("outcome.coef", ""), sc.population.schema,
                      sc.population.outcome);

  sc.selection.base_rate = std::stod(get_or("selection.base_rate", "0.1"));
  sc.selection.outcome_coeff = std::stod(get_or("selection.outcome_coef", "0"));
  detail::parse_coefs(get_or("selection.coef", ""), sc.population.schema,
                      sc.selection.covariate);

  sc.bootstrap_B = std::stoul(get_or("bootstrap_B", "0"));

  double reference_scale = std::stod(get_or("reference_scale", "0.1"));
  double subsample_fraction = std::stod(get_or("subsample_fraction", "0.5"));
  IpwNormalization norm = get_or("normalization", "hajek") == "paper"
                              ? IpwNormalization::paper
                              : IpwNormalization::hajek;

  for (const auto& name : detail::split(get_or("estimators", "unweighted"), ',')) {
    EstimatorSpec spec;
    spec.method = method_from_name(name);
    spec.reference_scale = reference_scale;
    spec.subsample_fraction = subsample_fraction;
    spec.normalization = norm;
    if (spec.method == Method::drp) {
      if (!get_or("drp.outcome_vars", "").empty())
        spec.drp.outcome_vars = detail::split(get("drp.outcome_vars"), ',');
      if (!get_or("drp.propensity_vars", "").empty())
        spec.drp.propensity_vars = detail::split(get("drp.propensity_vars"), ',');
    }
    if (spec.method == Method::poststrat &&
        !get_or("poststrat.outcome_vars", "").empty())
      spec.outcome_vars = detail::split(get("poststrat.outcome_vars"), ',');
    sc.estimators.push_back(std::move(spec));
  }
  return sc;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("file-error", "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_scenario(buf.str());
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw config_error("scenario-parse", path + ": " + e.what());
  }
}

}  // namespace nonprob
