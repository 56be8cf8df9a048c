#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* p = std::getenv("NONPROB_CLI");
  REQUIRE(p != nullptr);
  return p;
}

std::string scenario_dir() {
  const char* p = std::getenv("NONPROB_SCENARIOS");
  REQUIRE(p != nullptr);
  return p;
}

fs::path work_dir() {
  fs::path dir = fs::temp_directory_path() / "nonprob_cli_test";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunResult {
  int exit_code;
  std::string out, err;
};

RunResult run(const std::string& args) {
  fs::path dir = work_dir();
  fs::path out = dir / "stdout.txt";
  fs::path err = dir / "stderr.txt";
  std::string cmd =
      cli_path() + " " + args + " > " + out.string() + " 2> " + err.string();
  int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (status >> 8) & 0xff;
  r.out = read_file(out);
  r.err = read_file(err);
  return r;
}

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    auto eq = line.find('=');
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

// 8 rows, 4 per gender level; mean 0.625
const char* kSampleCsv =
    "gender,vote\n"
    "male,1\nmale,0\nmale,1\nmale,0\n"
    "female,1\nfemale,1\nfemale,1\nfemale,0\n";

const char* kMarginsCsv =
    "variable,level,total\n"
    "gender,male,500\n"
    "gender,female,500\n";

const char* kCellsCsv =
    "gender,count\n"
    "male,500\n"
    "female,500\n";

fs::path fixture(const char* name, const char* content) {
  fs::path p = work_dir() / name;
  write_file(p, content);
  return p;
}

}  // namespace

TEST_CASE("estimate with balanced margins reproduces the sample mean") {
  fs::path sample = fixture("sample.csv", kSampleCsv);
  fs::path margins = fixture("margins.csv", kMarginsCsv);
  fs::path report = work_dir() / "report.txt";

  auto r = run("estimate --method raking --sample " + sample.string() +
               " --target vote --margins " + margins.string() +
               " --bootstrap 80 --seed 5 --out " + report.string());
  INFO(r.err);
  REQUIRE(r.exit_code == 0);

  auto kv = parse_kv(read_file(report.string() + ".kv"));
  CHECK(std::stod(kv.at("point")) == Catch::Approx(0.625).margin(1e-12));
  CHECK(std::stod(kv.at("raking_margin_error")) < 1e-8);
  CHECK(kv.at("method") == "raking");
  CHECK(kv.at("ci_style") == "bootstrap-percentile");
  CHECK(kv.at("option.seed") == "5");
  CHECK(kv.at("input.sample").find("fnv1a:") != std::string::npos);
  // the text report carries the same fields
  std::string text = read_file(report);
  CHECK(text.find("nonprob estimate report") == 0);
  CHECK(text.find("point") != std::string::npos);
}

TEST_CASE("reports are byte-identical across reruns with the same seed") {
  fs::path sample = fixture("sample.csv", kSampleCsv);
  fs::path margins = fixture("margins.csv", kMarginsCsv);
  fs::path a = work_dir() / "rep_a.txt";
  fs::path b = work_dir() / "rep_b.txt";

  std::string base = "estimate --method raking --sample " + sample.string() +
                     " --target vote --margins " + margins.string() +
                     " --bootstrap 60 --seed 17 --out ";
  REQUIRE(run(base + a.string()).exit_code == 0);
  REQUIRE(run(base + b.string()).exit_code == 0);
  CHECK(read_file(a) == read_file(b));
  CHECK(read_file(a.string() + ".kv") == read_file(b.string() + ".kv"));

  fs::path c = work_dir() / "rep_c.txt";
  REQUIRE(run("estimate --method raking --sample " + sample.string() +
              " --target vote --margins " + margins.string() +
              " --bootstrap 60 --seed 18 --out " + c.string())
              .exit_code == 0);
  CHECK(read_file(a.string() + ".kv") != read_file(c.string() + ".kv"));
}

TEST_CASE("propensity and cell methods run from a cells file") {
  fs::path sample = fixture("sample.csv", kSampleCsv);
  fs::path cells = fixture("cells.csv", kCellsCsv);

  for (const char* method : {"psipw", "poststrat", "mrp", "drp"}) {
    fs::path report = work_dir() / (std::string("cells_") + method + ".txt");
    auto r = run(std::string("estimate --method ") + method + " --sample " +
                 sample.string() + " --target vote --cells " + cells.string() +
                 " --bootstrap 40 --seed 3 --out " + report.string());
    INFO(method << ": " << r.err);
    REQUIRE(r.exit_code == 0);
    auto kv = parse_kv(read_file(report.string() + ".kv"));
    double point = std::stod(kv.at("point"));
    CHECK(point > 0.0);
    CHECK(point < 1.0);
    CHECK(kv.at("common_support_violations") == "0");
  }
}

TEST_CASE("jackknife flag switches the interval style") {
  fs::path sample = fixture("sample.csv", kSampleCsv);
  fs::path report = work_dir() / "jk.txt";
  auto r = run("estimate --method unweighted --sample " + sample.string() +
               " --target vote --jackknife --out " + report.string());
  INFO(r.err);
  REQUIRE(r.exit_code == 0);
  auto kv = parse_kv(read_file(report.string() + ".kv"));
  CHECK(kv.at("ci_style") == "jackknife-normal");
  CHECK(kv.at("replicates") == "8");
  CHECK(kv.at("option.bootstrap_B") == "-");
}

TEST_CASE("exit codes distinguish config and data failures") {
  fs::path sample = fixture("sample.csv", kSampleCsv);
  fs::path margins = fixture("margins.csv", kMarginsCsv);

  SECTION("unknown estimator name is a config error") {
    auto r = run("estimate --method wizardry --sample " + sample.string() +
                 " --target vote --margins " + margins.string());
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("error config") == 0);
  }

  SECTION("missing target column option is a config error") {
    auto r = run("estimate --method unweighted --sample " + sample.string());
    CHECK(r.exit_code == 2);
  }

  SECTION("malformed trim bounds are a config error") {
    auto r = run("estimate --method raking --sample " + sample.string() +
                 " --target vote --margins " + margins.string() + " --trim 3");
    CHECK(r.exit_code == 2);
  }

  SECTION("nonexistent sample file is a data error") {
    auto r = run("estimate --method unweighted --sample /no/such/file.csv"
                 " --target vote");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("error data") == 0);
  }

  SECTION("raking without margins or cells is a config error") {
    auto r = run("estimate --method raking --sample " + sample.string() +
                 " --target vote");
    CHECK(r.exit_code == 2);
    CHECK(r.err.find("missing-input") != std::string::npos);
  }
}

TEST_CASE("simulate runs a bundled scenario deterministically") {
  fs::path prefix_a = work_dir() / "bench_a";
  fs::path prefix_b = work_dir() / "bench_b";
  std::string scenario = scenario_dir() + std::string("/srs.scenario");

  auto ra = run("simulate --scenario " + scenario + " --out " + prefix_a.string());
  INFO(ra.err);
  REQUIRE(ra.exit_code == 0);
  auto rb = run("simulate --scenario " + scenario + " --out " + prefix_b.string());
  REQUIRE(rb.exit_code == 0);

  std::string csv_a = read_file(prefix_a.string() + ".csv");
  CHECK(csv_a == read_file(prefix_b.string() + ".csv"));
  CHECK(csv_a.find("scenario,estimator") == 0);
  CHECK(csv_a.find("srs,raking") != std::string::npos);
  CHECK(read_file(prefix_a.string() + ".txt") ==
        read_file(prefix_b.string() + ".txt"));

  // an explicit seed override changes the table
  fs::path prefix_c = work_dir() / "bench_c";
  REQUIRE(run("simulate --scenario " + scenario + " --seed 999 --out " +
              prefix_c.string())
              .exit_code == 0);
  CHECK(csv_a != read_file(prefix_c.string() + ".csv"));
}

TEST_CASE("simulate rejects a missing scenario file with a data error") {
  auto r = run("simulate --scenario /no/such/file.scenario");
  CHECK(r.exit_code == 3);
}
