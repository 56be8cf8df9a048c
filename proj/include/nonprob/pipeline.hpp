#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nonprob/data.hpp"
#include "nonprob/errors.hpp"
#include "nonprob/estimators.hpp"
#include "nonprob/modelling.hpp"
#include "nonprob/rng.hpp"
#include "nonprob/weighting.hpp"

namespace nonprob {

enum class Method {
  unweighted,
  raking,
  psipw,
  poststrat,
  mrp,
  match,
  inverse,
  drp,
};

inline std::string method_name(Method m) {
  switch (m) {
    case Method::unweighted: return "unweighted";
    case Method::raking: return "raking";
    case Method::psipw: return "psipw";
    case Method::poststrat: return "poststrat";
    case Method::mrp: return "mrp";
    case Method::match: return "match";
    case Method::inverse: return "inverse";
    case Method::drp: return "drp";
  }
  return "?";
}

inline Method method_from_name(const std::string& name) {
  for (Method m : {Method::unweighted, Method::raking, Method::psipw,
                   Method::poststrat, Method::mrp, Method::match,
                   Method::inverse, Method::drp})
    if (method_name(m) == name) return m;
  throw config_error("unknown-method", "no estimator named '" + name + "'");
}

/// Census-side inputs; methods pick what they need and synthesize a reference
/// from cells when none is supplied.
struct CensusInputs {
  std::optional<PopulationCells> cells;
  std::optional<PopulationMargins> margins;
  std::optional<ReferenceSample> reference;

  const PopulationCells& require_cells(Method m) const {
    if (!cells)
      throw config_error("missing-input",
                         method_name(m) + " requires cross-tabulated cells");
    return *cells;
  }
  PopulationMargins effective_margins(Method m) const {
    if (margins) return *margins;
    if (cells) return margins_from_cells(*cells);
    throw config_error("missing-input", method_name(m) + " requires margins or cells");
  }
  ReferenceSample effective_reference(Method m, double scale) const {
    if (reference) return *reference;
    if (cells) return synthesize_reference(*cells, scale);
    throw config_error("missing-input",
                       method_name(m) + " requires a reference sample or cells");
  }
};

struct EstimatorSpec {
  Method method = Method::unweighted;
  RakingOptions raking;
  bool apply_trim = false;
  double trim_low = 0.2, trim_high = 5.0;
  IpwNormalization normalization = IpwNormalization::hajek;
  PropensityOptions propensity;
  MrpOptions mrp;
  DrpOptions drp;
  Scale poststrat_scale = Scale::response;
  bool outcome_pairwise_interactions = false;
  std::vector<std::string> outcome_vars;  // poststrat model restriction
  double reference_scale = 0.1;           // synthesized-reference size vs N
  double subsample_fraction = 0.5;        // inverse sampling m = fraction * n
  std::uint64_t seed = 42;
};

inline Estimate run_estimator(const EstimatorSpec& spec, const Dataset& sample,
                              const CensusInputs& census) {
  switch (spec.method) {
    case Method::unweighted: {
      const auto& y = sample.target();
      double acc = 0.0;
      for (double v : y) acc += v;
      return Estimate{acc / static_cast<double>(sample.n()), "unweighted", sample.n()};
    }
    case Method::raking: {
      auto margins = census.effective_margins(spec.method);
      WeightVector w = rake(sample, margins, spec.raking);
      if (spec.apply_trim)
        w = trim_weights(w, spec.trim_low, spec.trim_high, sample, margins,
                         spec.raking);
      Estimate est = weighted_mean(sample, w);
      est.method = "raking";
      return est;
    }
    case Method::psipw: {
      auto reference = census.effective_reference(spec.method, spec.reference_scale);
      CombinedFrame frame = stack_with_indicator(sample.without_target(), reference);
      PropensityScores ps = estimate_propensity(frame, spec.propensity);
      return psipw_estimate(sample, ps, spec.normalization);
    }
    case Method::poststrat: {
      const auto& cells = census.require_cells(spec.method);
      Dataset model_sample =
          spec.outcome_vars.empty() ? sample : sample.project(spec.outcome_vars);
      Estimate est = poststratified_model_estimate(
          model_sample, cells, spec.poststrat_scale,
          spec.outcome_pairwise_interactions);
      est.method = "poststrat";
      return est;
    }
    case Method::mrp: {
      return mrp_estimate(sample, census.require_cells(spec.method), spec.mrp);
    }
    case Method::match: {
      auto reference = census.effective_reference(spec.method, spec.reference_scale);
      return match_sample(sample, reference).estimate;
    }
    case Method::inverse: {
      const auto& cells = census.require_cells(spec.method);
      auto importance = cell_share_importance(sample, cells);
      auto m = static_cast<std::size_t>(spec.subsample_fraction *
                                        static_cast<double>(sample.n()));
      m = std::max<std::size_t>(m, 1);
      return inverse_sample(sample, importance, m, spec.seed).estimate;
    }
    case Method::drp: {
      const auto& cells = census.require_cells(spec.method);
      auto reference = census.effective_reference(spec.method, spec.reference_scale);
      DrpOptions opts = spec.drp;
      opts.propensity = spec.propensity;
      return drp_estimate(sample, cells, reference, opts).estimate;
    }
  }
  throw config_error("unknown-method", "unhandled estimator tag");
}

}  // namespace nonprob
