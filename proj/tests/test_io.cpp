#include <doctest.h>

#include <pivotband/io.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

using namespace pivotband;
namespace fs = std::filesystem;

namespace {
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("pivotband_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& name, const std::string& content) const {
    const auto p = (path / name).string();
    std::ofstream(p) << content;
    return p;
  }
};

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::io;
}
}  // namespace

TEST_CASE("csv loading drops incomplete rows") {
  TempDir dir;
  std::string text = "y,x,z\n";
  for (int i = 0; i < 10; ++i) {
    const std::string y = i == 3 ? "NA" : std::to_string(i);
    const std::string x = i == 7 ? "" : std::to_string(0.5 * i);
    text += y + "," + x + ",\"q" + std::to_string(i) + ",r\"\n";
  }
  const auto path = dir.write("d.csv", text);
  const auto r = load_csv(path, "y", {"x"}, true);
  CHECK(r.total_rows == 10);
  CHECK(r.dropped == 2);
  CHECK(r.data.n() == 8);
  CHECK(r.data.columns() == 2);
  CHECK(r.data.labels()[0] == kInterceptLabel);
  CHECK(r.data.labels()[1] == "x");
  CHECK(r.data.y()[3] == 4.0);
  CHECK(r.data.X()(3, 1) == 2.0);

  const auto y_only = load_csv(path, "y", {}, false);
  CHECK(y_only.data.n() == 9);
  CHECK_FALSE(y_only.data.has_design());
}

TEST_CASE("csv loading errors") {
  TempDir dir;
  const auto header_only = dir.write("h.csv", "y,x\n");
  CHECK(code_of([&] { load_csv(header_only, "y", {"x"}, true); }) == ErrorCode::empty_data);

  const auto bad = dir.write("b.csv", "y,x\n1,2\n3,abc\n");
  try {
    load_csv(bad, "y", {"x"}, true);
    FAIL("non-numeric cell accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    const std::string msg = e.what();
    CHECK(msg.find("row 2") != std::string::npos);
    CHECK(msg.find("x") != std::string::npos);
  }
  CHECK(code_of([&] { load_csv(bad, "w", {}, false); }) == ErrorCode::parse);
  CHECK(code_of([&] { load_csv((dir.path / "missing.csv").string(), "y", {}, false); }) == ErrorCode::io);
}

TEST_CASE("dataset round trip is exact") {
  TempDir dir;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  Matrix X(25, 2);
  Vector y(25);
  for (Index i = 0; i < 25; ++i) {
    X(i, 0) = 1.0;
    X(i, 1) = normal(rng) * 1e-7 + normal(rng) * 1e5;
    y[i] = normal(rng) / 3.0;
  }
  const Dataset d(y, X, {std::string(kInterceptLabel), "x"});
  const auto path = (dir.path / "round.csv").string();
  write_dataset_csv(d, path);
  const auto back = load_csv(path, "y", {"x"}, true);
  CHECK(back.data.y() == y);
  CHECK(back.data.X() == X);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("10:100:10") == std::vector<Index>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
  CHECK(parse_grid("10:25:10") == std::vector<Index>{10, 20});
  CHECK(parse_grid("5,8,13") == std::vector<Index>{5, 8, 13});
  CHECK_THROWS_AS(parse_grid("10,5"), Error);
  CHECK_THROWS_AS(parse_grid("1:10:0"), Error);
  CHECK_THROWS_AS(parse_grid("a:b"), Error);
  CHECK(split_list("a, b,c") == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("coverage table round trip") {
  std::vector<CoverageRecord> records;
  for (long k = 0; k < 6; ++k) {
    CoverageRecord r;
    r.scenario = "slr_hetero";
    r.method = k % 2 ? Method::pivot : Method::hc3;
    r.n = 10 * (k + 1);
    r.reps = 2000;
    r.covered = 1700 + 37 * k;
    r.degenerate = k;
    r.seed = 42;
    records.push_back(r);
  }
  const std::string text = coverage_csv(records);
  std::istringstream lines(text);
  std::string header;
  std::getline(lines, header);
  CHECK(header == "scenario,method,n,reps,covered,degenerate,coverage,mc_stderr,seed");

  const auto back = parse_coverage_csv(text);
  REQUIRE(back.size() == records.size());
  std::string line;
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].method == records[i].method);
    CHECK(back[i].n == records[i].n);
    CHECK(back[i].covered == records[i].covered);
    CHECK(back[i].degenerate == records[i].degenerate);
    CHECK(back[i].seed == 42);
    // The stored stderr column agrees with one recomputed from the counts.
    std::getline(lines, line);
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 9);
    const double c = static_cast<double>(back[i].covered) / static_cast<double>(back[i].reps - back[i].degenerate);
    CHECK(std::abs(std::stod(cells[7]) - std::sqrt(c * (1 - c) / (back[i].reps - back[i].degenerate))) <= 1e-12);
    CHECK(std::abs(std::stod(cells[6]) - c) <= 1e-12);
  }

  TempDir dir;
  const auto path = (dir.path / "cov.csv").string();
  write_coverage_csv(records, path);
  CHECK(read_file(path) == text);
  CHECK(read_coverage_csv(path).size() == records.size());
  CHECK_FALSE(fs::exists(path + ".tmp"));
  CHECK_THROWS_AS(parse_coverage_csv("scenario,method\nx,y\n"), Error);
}

TEST_CASE("run manifest round trip") {
  RunManifest m;
  m.command = "simulate";
  m.argv = {"simulate", "--scenario", "poisson_nb", "--seed", "7"};
  m.config = {{"reps", 100}, {"alpha", 0.05}};
  m.seed = 7;
  m.started = utc_timestamp();
  m.finished = utc_timestamp();
  m.assumptions = scenario_assumptions(Scenario::make(ScenarioKind::poisson_nb));
  m.outputs = {"coverage.csv"};
  const auto j = to_json(m);
  CHECK(j.at("library_version") == library_version());
  CHECK(j.at("coverage_schema_version") == kCoverageSchemaVersion);
  const auto back = manifest_from_json(j);
  CHECK(back.argv == m.argv);
  CHECK(back.config == m.config);
  CHECK(back.seed == 7);
  CHECK(back.outputs == m.outputs);
  CHECK(back.assumptions == m.assumptions);
  CHECK(manifest_path("out/cov.csv") == "out/cov.csv.manifest.json");

  TempDir dir;
  const auto out = (dir.path / "cov.csv").string();
  write_manifest(m, out);
  CHECK(manifest_from_json(nlohmann::json::parse(read_file(manifest_path(out)))).command == "simulate");
}
