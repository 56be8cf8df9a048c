#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <set>

#include "helpers.hpp"
#include "nonprob/estimators.hpp"
#include "nonprob/rng.hpp"
#include "oracles.hpp"

using namespace nonprob;
using test_helpers::single_var_schema;
using test_helpers::two_by_two_schema;

TEST_CASE("match_sample") {
  auto schema = two_by_two_schema();

  SECTION("exact covariate twin matches at distance zero") {
    Dataset sample(schema, {{0, 0}, {1, 1}}, std::vector<double>{1, 0});
    ReferenceSample ref(Dataset(schema, {{1, 1}}), {0.5});
    MatchResult res = match_sample(sample, ref);
    REQUIRE(res.matched.pairs.size() == 1);
    CHECK(res.matched.pairs[0].sample_row == 1);
    CHECK(res.matched.pairs[0].distance == 0.0);
    CHECK(res.estimate.value == 0.0);
  }

  SECTION("contested donor goes to the earlier reference row") {
    // both reference rows closest to sample row 0; the second must settle
    Dataset sample(schema, {{0, 0}, {1, 1}}, std::vector<double>{1, 0});
    ReferenceSample ref(Dataset(schema, {{0, 0}, {0, 0}}), {0.5, 0.5});
    MatchResult res = match_sample(sample, ref);
    CHECK(res.matched.pairs[0].sample_row == 0);
    CHECK(res.matched.pairs[0].distance == 0.0);
    CHECK(res.matched.pairs[1].sample_row == 1);
    CHECK(res.matched.pairs[1].distance > 0.0);
  }

  SECTION("reference copying the sample reproduces the sample mean") {
    Dataset sample(schema, {{0, 0}, {0, 1}, {1, 0}, {1, 1}},
                   std::vector<double>{1, 0, 1, 1});
    ReferenceSample ref(Dataset(schema, {{1, 1}, {0, 1}, {0, 0}, {1, 0}}),
                        {0.5, 0.5, 0.5, 0.5});
    MatchResult res = match_sample(sample, ref);
    CHECK(res.estimate.value == Catch::Approx(0.75));
    CHECK(res.matched.unmatched_sample_rows.empty());
  }

  SECTION("without replacement: every pair uses a distinct sample row") {
    Rng rng(31);
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<std::vector<int>> srows, rrows;
      std::vector<double> y;
      for (int j = 0; j < 8; ++j) {
        srows.push_back({static_cast<int>(rng.uniform_index(2)),
                         static_cast<int>(rng.uniform_index(2))});
        y.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
      }
      for (int j = 0; j < 5; ++j)
        rrows.push_back({static_cast<int>(rng.uniform_index(2)),
                         static_cast<int>(rng.uniform_index(2))});
      Dataset sample(schema, srows, y);
      ReferenceSample ref(Dataset(schema, rrows), std::vector<double>(5, 0.5));
      MatchResult res = match_sample(sample, ref);
      std::set<std::size_t> used;
      for (const auto& p : res.matched.pairs) used.insert(p.sample_row);
      CHECK(used.size() == 5);
      CHECK(res.matched.unmatched_sample_rows.size() == 3);

      // replay against the brute-force sequential rule
      auto oracle = oracles::greedy_match_reference(rrows, srows);
      for (std::size_t r = 0; r < oracle.size(); ++r)
        CHECK(res.matched.pairs[r].sample_row == oracle[r]);
    }
  }

  SECTION("reference larger than the sample rejected") {
    Dataset sample(schema, {{0, 0}}, std::vector<double>{1});
    ReferenceSample ref(Dataset(schema, {{0, 0}, {1, 1}}), {0.5, 0.5});
    CHECK_THROWS_AS(match_sample(sample, ref), Error);
  }
}

TEST_CASE("inverse_sample") {
  auto schema = single_var_schema(2);

  SECTION("fixed seed is reproducible") {
    std::vector<std::vector<int>> rows;
    std::vector<double> y;
    Rng rng(1);
    for (int j = 0; j < 50; ++j) {
      rows.push_back({static_cast<int>(rng.uniform_index(2))});
      y.push_back(rng.uniform());
    }
    Dataset big(schema, rows, y);
    std::vector<double> imp(50, 1.0);
    auto a = inverse_sample(big, imp, 20, 99);
    auto b = inverse_sample(big, imp, 20, 99);
    CHECK(a.subsample.rows == b.subsample.rows);
    CHECK(a.estimate.value == b.estimate.value);
    auto c = inverse_sample(big, imp, 20, 100);
    CHECK(a.subsample.rows != c.subsample.rows);
  }

  SECTION("uniform importance centers on the sample mean") {
    std::vector<std::vector<int>> rows;
    std::vector<double> y;
    Rng rng(2);
    double mean = 0.0;
    for (int j = 0; j < 200; ++j) {
      rows.push_back({static_cast<int>(rng.uniform_index(2))});
      y.push_back(rng.bernoulli(0.4) ? 1.0 : 0.0);
      mean += y.back();
    }
    mean /= 200.0;
    Dataset big(schema, rows, y);
    std::vector<double> imp(200, 2.5);
    double acc = 0.0;
    int R = 200;
    for (int r = 0; r < R; ++r)
      acc += inverse_sample(big, imp, 100, 1000 + static_cast<std::uint64_t>(r))
                 .estimate.value;
    CHECK(acc / R == Catch::Approx(mean).margin(0.02));
  }

  SECTION("selection frequency is monotone in the importance weight") {
    std::vector<std::vector<int>> rows(10, std::vector<int>{0});
    std::vector<double> y(10, 0.0);
    Dataset big(schema, rows, y);
    std::vector<double> imp = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<int> freq(10, 0);
    for (int r = 0; r < 3000; ++r) {
      auto res = inverse_sample(big, imp, 3, static_cast<std::uint64_t>(r));
      for (std::size_t idx : res.subsample.rows) freq[idx]++;
    }
    // compare the clearly separated extremes
    CHECK(freq[0] < freq[4]);
    CHECK(freq[4] < freq[9]);
  }

  SECTION("cell-share importance pulls subsample shares toward the population") {
    CellIndex index = build_cell_index(schema);
    PopulationCells cells(index, {500, 500});
    // sample is 4:1 imbalanced
    std::vector<std::vector<int>> rows;
    std::vector<double> y;
    for (int j = 0; j < 800; ++j) { rows.push_back({0}); y.push_back(0.0); }
    for (int j = 0; j < 200; ++j) { rows.push_back({1}); y.push_back(1.0); }
    Dataset big(schema, rows, y);
    auto imp = cell_share_importance(big, cells);
    double total_err = 0.0;
    int R = 200;
    for (int r = 0; r < R; ++r) {
      auto res = inverse_sample(big, imp, 100, static_cast<std::uint64_t>(7000 + r));
      double share1 = 0.0;
      for (std::size_t idx : res.subsample.rows)
        if (big.rows()[idx][0] == 1) share1 += 1.0;
      total_err += std::abs(share1 / 100.0 - 0.5);
    }
    CHECK(total_err / R < 0.06);
  }

  SECTION("invalid arguments rejected") {
    Dataset big(schema, {{0}, {1}}, std::vector<double>{0, 1});
    CHECK_THROWS_AS(inverse_sample(big, {1.0, 1.0}, 3, 1), Error);
    CHECK_THROWS_AS(inverse_sample(big, {1.0, 0.0}, 1, 1), Error);
  }
}

TEST_CASE("drp_estimate") {
  auto schema = single_var_schema(2);
  CellIndex index = build_cell_index(schema);

  SECTION("perfect outcome model reduces DRP to post-stratification") {
    // cell-constant outcomes are reproduced exactly by the saturated model
    std::vector<std::vector<int>> rows;
    std::vector<double> y;
    for (int j = 0; j < 20; ++j) { rows.push_back({0}); y.push_back(0.25); }
    for (int j = 0; j < 10; ++j) { rows.push_back({1}); y.push_back(0.75); }
    Dataset sample(schema, rows, y);
    PopulationCells cells(index, {400, 600});
    ReferenceSample ref = synthesize_reference(cells, 0.05);
    DrpResult res = drp_estimate(sample, cells, ref);
    CHECK(std::abs(res.correction_term) < 1e-6);
    CHECK(res.estimate.value == Catch::Approx(0.4 * 0.25 + 0.6 * 0.75).margin(1e-6));
  }

  SECTION("homogeneous cells reduce to the sample mean") {
    std::vector<std::vector<int>> rows;
    std::vector<double> y = {1, 0, 1, 1};
    rows = {{0}, {0}, {1}, {1}};
    Dataset sample(schema, rows, y);
    PopulationCells cells(index, {500, 500});
    ReferenceSample ref = synthesize_reference(cells, 0.01);
    // intercept-only outcome model via single shared variable projection is
    // emulated by equal cell shares: correction term = hajek residual mean
    DrpResult res = drp_estimate(sample, cells, ref);
    CHECK(res.estimate.value ==
          Catch::Approx(res.correction_term + res.poststrat_term));
  }

  SECTION("zero outcome model makes the first term the hajek PS-IPW estimate") {
    std::vector<std::vector<int>> rows = {{0}, {0}, {0}, {1}};
    std::vector<double> y = {1, 0, 1, 1};
    Dataset sample(schema, rows, y);
    PopulationCells cells(index, {500, 500});
    ReferenceSample ref = synthesize_reference(cells, 0.01);

    CombinedFrame frame = stack_with_indicator(sample.without_target(), ref);
    PropensityScores ps = estimate_propensity(frame);
    double hajek = psipw_estimate(sample, ps).value;

    // recompute the DRP correction with yhat forced to zero
    double num = 0, den = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      num += y[j] / ps.scores[j];
      den += 1.0 / ps.scores[j];
    }
    CHECK(num / den == Catch::Approx(hajek).margin(1e-12));
  }

  SECTION("covariate subsets select the model inputs") {
    auto schema2 = two_by_two_schema();
    CellIndex i2 = build_cell_index(schema2);
    std::vector<std::vector<int>> rows;
    std::vector<double> y;
    Rng rng(4);
    for (int j = 0; j < 80; ++j) {
      rows.push_back({static_cast<int>(rng.uniform_index(2)),
                      static_cast<int>(rng.uniform_index(2))});
      y.push_back(rng.bernoulli(0.3 + 0.2 * rows.back()[0]) ? 1.0 : 0.0);
    }
    Dataset sample(schema2, rows, y);
    PopulationCells cells(i2, {250, 250, 250, 250});
    ReferenceSample ref = synthesize_reference(cells, 0.05);
    DrpOptions opts;
    opts.outcome_vars = {"a"};
    opts.propensity_vars = {"b"};
    DrpResult res = drp_estimate(sample, cells, ref, opts);
    CHECK(std::isfinite(res.estimate.value));
    // restricted propensity design has 1 dummy + intercept
    CHECK(res.propensity.model.coefficients.size() == 2);
  }
}
