// Batch CLI: estimate a population mean from a non-probability sample with a
// chosen correction method, or run a simulation benchmark from a scenario file.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "nonprob/csv.hpp"
#include "nonprob/pipeline.hpp"
#include "nonprob/report.hpp"
#include "nonprob/scenario.hpp"
#include "nonprob/simulation.hpp"
#include "nonprob/uncertainty.hpp"

namespace {

using namespace nonprob;

struct EstimateArgs {
  std::string method;
  std::string sample_path;
  std::string target;
  std::string cells_path, margins_path, reference_path;
  std::size_t bootstrap_B = 1000;
  bool use_jackknife = false;
  std::uint64_t seed = 42;
  std::string trim;
  std::string normalization = "hajek";
  double reference_scale = 0.1;
  std::string out_path;
};

struct SimulateArgs {
  std::string scenario_path;
  std::string out_prefix = "benchmark";
  std::optional<std::uint64_t> seed;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("file-error", "cannot write " + path);
  out << content;
}

int run_estimate(const EstimateArgs& args) {
  EstimatorSpec spec;
  spec.method = method_from_name(args.method);
  spec.seed = args.seed;
  spec.reference_scale = args.reference_scale;
  spec.normalization = args.normalization == "paper" ? IpwNormalization::paper
                                                     : IpwNormalization::hajek;
  if (!args.trim.empty()) {
    auto comma = args.trim.find(',');
    if (comma == std::string::npos)
      throw config_error("invalid-trim", "--trim expects LOW,HIGH");
    spec.apply_trim = true;
    spec.trim_low = std::stod(args.trim.substr(0, comma));
    spec.trim_high = std::stod(args.trim.substr(comma + 1));
  }

  CensusInputs census;
  std::optional<CovariateSchema> schema;
  if (!args.cells_path.empty()) {
    census.cells = read_cells_csv(args.cells_path);
    schema = census.cells->index.schema();
  }
  if (!args.margins_path.empty()) census.margins = read_margins_csv(args.margins_path);
  if (!args.reference_path.empty())
    census.reference = read_reference_csv(args.reference_path, schema);

  if (args.target.empty())
    throw config_error("missing-target", "--target is required for estimation");
  Dataset sample = read_sample_csv(args.sample_path, args.target, schema);

  Estimate point = run_estimator(spec, sample, census);
  UncertaintyEstimate unc =
      args.use_jackknife
          ? jackknife(spec, sample, census)
          : bootstrap(spec, sample, census, args.bootstrap_B, args.seed);

  ReportDocument report;
  report.add("method", point.method);
  report.add("point", point.value);
  report.add("se", unc.se);
  report.add("ci_low", unc.ci_low);
  report.add("ci_high", unc.ci_high);
  report.add("ci_style", args.use_jackknife ? "jackknife-normal" : "bootstrap-percentile");
  report.add("n", sample.n());
  report.add("replicates", unc.replicates.size());
  report.add("replicate_failures", unc.failed_replicates);

  // diagnostics
  if (spec.method == Method::raking) {
    auto margins = census.effective_margins(spec.method);
    WeightVector w = rake(sample, margins, spec.raking);
    if (spec.apply_trim)
      w = trim_weights(w, spec.trim_low, spec.trim_high, sample, margins, spec.raking);
    auto layout = detail::margin_layout(sample, margins);
    report.add("raking_margin_error", detail::max_relative_margin_error(layout, w.weights));
    double lo = w.weights[0], hi = w.weights[0];
    for (double x : w.weights) { lo = std::min(lo, x); hi = std::max(hi, x); }
    report.add("weight_min", lo);
    report.add("weight_max", hi);
  }
  if (spec.method == Method::psipw || spec.method == Method::drp) {
    auto reference = census.effective_reference(spec.method, spec.reference_scale);
    auto frame = stack_with_indicator(sample.without_target(), reference);
    auto ps = estimate_propensity(frame, spec.propensity);
    double lo = ps.scores[0], hi = ps.scores[0];
    for (double x : ps.scores) { lo = std::min(lo, x); hi = std::max(hi, x); }
    report.add("propensity_min", lo);
    report.add("propensity_max", hi);
  }
  if (census.cells) {
    auto support = common_support_report(sample, *census.cells);
    report.add("common_support_violations", support.violations.size());
    for (const auto& v : support.violations)
      report.add("unsupported_cell", v.label);
  }

  // effective options and provenance
  report.add("option.bootstrap_B",
             args.use_jackknife ? std::string("-") : std::to_string(args.bootstrap_B));
  report.add("option.seed", std::to_string(args.seed));
  report.add("option.normalization", args.normalization);
  report.add("option.trim", args.trim.empty() ? "off" : args.trim);
  report.add("option.reference_scale", spec.reference_scale);
  report.add("input.sample", args.sample_path + " fnv1a:" + file_digest(args.sample_path));
  if (!args.cells_path.empty())
    report.add("input.cells", args.cells_path + " fnv1a:" + file_digest(args.cells_path));
  if (!args.margins_path.empty())
    report.add("input.margins",
               args.margins_path + " fnv1a:" + file_digest(args.margins_path));
  if (!args.reference_path.empty())
    report.add("input.reference",
               args.reference_path + " fnv1a:" + file_digest(args.reference_path));
  report.add("version", std::string(kVersion));

  std::string text = report.render_text();
  if (args.out_path.empty()) {
    std::cout << text;
  } else {
    write_file(args.out_path, text);
    write_file(args.out_path + ".kv", report.render_kv());
  }
  return 0;
}

int run_simulate(const SimulateArgs& args) {
  Scenario sc = load_scenario(args.scenario_path);
  std::uint64_t seed = args.seed ? *args.seed : sc.population.seed;
  MetricsTable table = run_benchmark({sc}, seed);
  write_file(args.out_prefix + ".csv", table.to_csv());
  write_file(args.out_prefix + ".txt", table.to_text());
  std::cout << table.to_text();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"selection-bias correction for non-probability samples"};
  app.require_subcommand(1);

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "estimate a population mean");
  estimate->add_option("--method", est.method,
                       "unweighted|raking|psipw|poststrat|mrp|match|inverse|drp")
      ->required();
  estimate->add_option("--sample", est.sample_path, "sample CSV")->required();
  estimate->add_option("--target", est.target, "target column name");
  estimate->add_option("--cells", est.cells_path, "cross-tabulated census CSV");
  estimate->add_option("--margins", est.margins_path, "marginal totals CSV");
  estimate->add_option("--reference", est.reference_path, "reference sample CSV");
  estimate->add_option("--bootstrap", est.bootstrap_B, "bootstrap replicates");
  estimate->add_flag("--jackknife", est.use_jackknife, "delete-one jackknife instead");
  estimate->add_option("--seed", est.seed, "master RNG seed");
  estimate->add_option("--trim", est.trim, "weight trim bounds LOW,HIGH");
  estimate->add_option("--normalization", est.normalization, "paper|hajek");
  estimate->add_option("--reference-scale", est.reference_scale,
                       "synthesized reference size as a fraction of N");
  estimate->add_option("--out", est.out_path, "report path (sidecar at PATH.kv)");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "run a scenario benchmark");
  simulate->add_option("--scenario", sim.scenario_path, "scenario file")->required();
  simulate->add_option("--out", sim.out_prefix, "output prefix for .csv/.txt");
  simulate->add_option("--seed", sim.seed, "override the scenario seed");

  try {
    app.parse(argc, argv);
    if (estimate->parsed()) return run_estimate(est);
    return run_simulate(sim);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error config cli-parse: " << e.what() << std::endl;
    return 2;
  } catch (const nonprob::Error& e) {
    const char* category =
        e.code() == nonprob::ErrorCode::config      ? "config"
        : e.code() == nonprob::ErrorCode::data       ? "data"
        : e.code() == nonprob::ErrorCode::resampling ? "resampling"
                                                     : "estimation";
    std::cerr << "error " << category << " " << e.what() << std::endl;
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error estimation unexpected: " << e.what() << std::endl;
    return 4;
  }
}
