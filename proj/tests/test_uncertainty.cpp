#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "helpers.hpp"
#include "nonprob/rng.hpp"
#include "nonprob/uncertainty.hpp"

using namespace nonprob;
using test_helpers::single_var_schema;

namespace {

Dataset binary_sample(std::size_t n, double p, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<int>> rows;
  std::vector<double> y;
  for (std::size_t j = 0; j < n; ++j) {
    rows.push_back({static_cast<int>(rng.uniform_index(2))});
    y.push_back(rng.bernoulli(p) ? 1.0 : 0.0);
  }
  return Dataset(single_var_schema(2), std::move(rows), std::move(y));
}

}  // namespace

TEST_CASE("bootstrap") {
  EstimatorSpec spec;  // unweighted mean
  CensusInputs census;

  SECTION("constant outcome collapses the interval") {
    Dataset sample(single_var_schema(2), {{0}, {1}, {0}},
                   std::vector<double>{0.7, 0.7, 0.7});
    auto unc = bootstrap(spec, sample, census, 50, 1);
    CHECK(unc.se == Catch::Approx(0.0).margin(1e-12));
    CHECK(unc.ci_low == Catch::Approx(unc.point).margin(1e-12));
    CHECK(unc.ci_high == Catch::Approx(unc.point).margin(1e-12));
  }

  SECTION("binary SRS standard error near the binomial closed form") {
    Dataset sample = binary_sample(400, 0.35, 12);
    double pbar = 0.0;
    for (double v : sample.target()) pbar += v;
    pbar /= 400.0;
    auto unc = bootstrap(spec, sample, census, 2000, 7);
    double closed = std::sqrt(pbar * (1 - pbar) / 400.0);
    CHECK(std::abs(unc.se - closed) / closed < 0.15);
  }

  SECTION("same seed gives bit-identical replicates") {
    Dataset sample = binary_sample(60, 0.5, 3);
    auto a = bootstrap(spec, sample, census, 100, 42);
    auto b = bootstrap(spec, sample, census, 100, 42);
    CHECK(a.replicates == b.replicates);
    auto c = bootstrap(spec, sample, census, 100, 43);
    CHECK(a.replicates != c.replicates);
  }

  SECTION("percentile interval contains the median replicate") {
    Dataset sample = binary_sample(80, 0.4, 5);
    auto unc = bootstrap(spec, sample, census, 301, 9);
    std::vector<double> sorted = unc.replicates;
    std::sort(sorted.begin(), sorted.end());
    double median = sorted[sorted.size() / 2];
    CHECK(unc.ci_low <= median);
    CHECK(median <= unc.ci_high);
  }

  SECTION("row-order invariance of the se distribution") {
    Dataset sample = binary_sample(100, 0.45, 8);
    auto base = bootstrap(spec, sample, census, 400, 11);
    Rng rng(77);
    for (int p = 0; p < 10; ++p) {
      std::vector<std::size_t> perm(100);
      for (std::size_t j = 0; j < 100; ++j) perm[j] = j;
      for (std::size_t j = 99; j > 0; --j)
        std::swap(perm[j], perm[rng.uniform_index(j + 1)]);
      auto permuted = bootstrap(spec, sample.subset(perm), census, 400, 11);
      CHECK(std::abs(permuted.se - base.se) < 0.35 * base.se + 1e-12);
    }
  }

  SECTION("excessive replicate failures raise a resampling error") {
    // raking a 2-row sample where resamples often lose a needed level
    EstimatorSpec rspec;
    rspec.method = Method::raking;
    CensusInputs c2;
    CellIndex index = build_cell_index(single_var_schema(2));
    c2.margins = margins_from_cells(PopulationCells(index, {50, 50}));
    Dataset tiny(single_var_schema(2), {{0}, {1}}, std::vector<double>{0, 1});
    CHECK_THROWS_AS(bootstrap(rspec, tiny, c2, 200, 1), Error);
  }

  SECTION("B below 2 rejected") {
    Dataset sample = binary_sample(10, 0.5, 2);
    CHECK_THROWS_AS(bootstrap(spec, sample, census, 1, 1), Error);
  }
}

TEST_CASE("jackknife") {
  EstimatorSpec spec;
  CensusInputs census;

  SECTION("jackknife of the mean equals s/sqrt(n) exactly") {
    Dataset sample = binary_sample(150, 0.3, 6);
    auto unc = jackknife(spec, sample, census);
    const auto& y = sample.target();
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= 150.0;
    double s2 = 0.0;
    for (double v : y) s2 += (v - mean) * (v - mean);
    s2 /= 149.0;
    CHECK(unc.se == Catch::Approx(std::sqrt(s2 / 150.0)).margin(1e-10));
  }

  SECTION("constant outcome gives zero se") {
    Dataset sample(single_var_schema(2), {{0}, {1}, {1}},
                   std::vector<double>{2.5, 2.5, 2.5});
    CHECK(jackknife(spec, sample, census).se == 0.0);
  }

  SECTION("n = 2 with y = (0,1) gives se = 0.5") {
    Dataset sample(single_var_schema(2), {{0}, {1}}, std::vector<double>{0, 1});
    auto unc = jackknife(spec, sample, census);
    CHECK(unc.se == Catch::Approx(0.5).margin(1e-12));
    CHECK(unc.replicates.size() == 2);
    CHECK(unc.ci_low == Catch::Approx(0.5 - 1.96 * 0.5));
  }

  SECTION("n below 2 rejected") {
    Dataset sample(single_var_schema(2), {{0}}, std::vector<double>{1});
    CHECK_THROWS_AS(jackknife(spec, sample, census), Error);
  }

  SECTION("failing replicate is propagated with its index") {
    EstimatorSpec rspec;
    rspec.method = Method::raking;
    CensusInputs c2;
    CellIndex index = build_cell_index(single_var_schema(2));
    c2.margins = margins_from_cells(PopulationCells(index, {50, 50}));
    // deleting the single level-1 row makes raking infeasible
    Dataset sample(single_var_schema(2), {{0}, {0}, {1}}, std::vector<double>{0, 1, 1});
    try {
      jackknife(rspec, sample, c2);
      FAIL("expected propagated failure");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("replicate 2") != std::string::npos);
    }
  }
}

TEST_CASE("determinism of the full uncertainty path") {
  EstimatorSpec spec;
  spec.method = Method::mrp;
  CensusInputs census;
  CellIndex index = build_cell_index(single_var_schema(2));
  census.cells = PopulationCells(index, {60, 40});
  Dataset sample = binary_sample(120, 0.4, 10);

  auto a = bootstrap(spec, sample, census, 150, 5);
  auto b = bootstrap(spec, sample, census, 150, 5);
  CHECK(a.point == b.point);
  CHECK(a.se == b.se);
  CHECK(a.ci_low == b.ci_low);
  CHECK(a.ci_high == b.ci_high);
  CHECK(a.replicates == b.replicates);
}
