#include <doctest.h>

#include <pivotband/simulation.hpp>

#include <random>

using namespace pivotband;

namespace {
SimConfig small_config(ScenarioKind kind, long reps = 200) {
  SimConfig c;
  c.scenario = Scenario::make(kind);
  c.n_grid = {10, 20};
  c.reps = reps;
  c.methods = c.scenario.default_methods();
  c.seed = 11;
  c.threads = 1;
  return c;
}

bool same(const std::vector<CoverageRecord>& a, const std::vector<CoverageRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].method != b[i].method || a[i].n != b[i].n || a[i].covered != b[i].covered ||
        a[i].degenerate != b[i].degenerate)
      return false;
  return true;
}
}  // namespace

TEST_CASE("negative binomial counts have mean 3 and variance 3.9") {
  const Scenario s = Scenario::make(ScenarioKind::poisson_nb);
  CHECK(s.nb_variance() == doctest::Approx(3.9));
  const Vector y = gen_dataset(s, 1000000, 2024, 0).y();
  const double n = static_cast<double>(y.size());
  const double mean = y.mean();
  const double var = (y.array() - mean).square().sum() / (n - 1);
  const double fourth = (y.array() - mean).pow(4).mean();
  CHECK(std::abs(mean - 3.0) < std::min(0.01, 4.0 * std::sqrt(3.9 / n)));
  CHECK(std::abs(var - 3.9) < std::min(0.03, 4.0 * std::sqrt((fourth - var * var) / n)));
  CHECK(y.minCoeff() >= 0.0);
  CHECK((y.array() == y.array().round()).all());
}

TEST_CASE("heteroscedastic regression noise") {
  const Scenario s = Scenario::make(ScenarioKind::origin_hetero);
  const Dataset d = gen_dataset(s, 400000, 5, 0);
  const Vector x = d.X().col(0);
  const Vector e = d.y() - x;
  CHECK(std::abs(x.mean()) < 0.01);
  CHECK(std::abs(e.mean()) < 0.01);
  // E(1 + |x|) = 1 + sqrt(2/pi)
  CHECK(e.array().square().mean() == doctest::Approx(1.0 + std::sqrt(2.0 / 3.141592653589793)).epsilon(0.01));
  // Variance tracks |x|: squared residuals are positively correlated with |x|.
  const Eigen::ArrayXd ax = x.array().abs() - x.array().abs().mean();
  const Eigen::ArrayXd e2 = e.array().square() - e.array().square().mean();
  CHECK((ax * e2).mean() > 0.3);

  const Scenario slr = Scenario::make(ScenarioKind::slr_hetero);
  const Dataset ds = gen_dataset(slr, 50, 5, 0);
  CHECK(ds.columns() == 2);
  CHECK((ds.X().col(0).array() == 1.0).all());
}

TEST_CASE("stream seeds") {
  CHECK(stream_seed(1, "a", 10, 0) == stream_seed(1, "a", 10, 0));
  CHECK(stream_seed(1, "a", 10, 0) != stream_seed(1, "a", 10, 1));
  CHECK(stream_seed(1, "a", 10, 0) != stream_seed(1, "a", 20, 0));
  CHECK(stream_seed(1, "a", 10, 0) != stream_seed(1, "b", 10, 0));
  CHECK(stream_seed(1, "a", 10, 0) != stream_seed(2, "a", 10, 0));
  const Scenario s = Scenario::make(ScenarioKind::slr_hetero);
  CHECK(gen_dataset(s, 30, 9, 4).y() == gen_dataset(s, 30, 9, 4).y());
  CHECK(gen_dataset(s, 30, 9, 4).y() != gen_dataset(s, 30, 9, 5).y());
}

TEST_CASE("coverage runs are reproducible and independent of threading") {
  for (auto kind : {ScenarioKind::poisson_nb, ScenarioKind::origin_hetero, ScenarioKind::slr_hetero}) {
    auto c = small_config(kind, 60);
    const auto one = run_coverage(c);
    c.threads = 3;
    const auto three = run_coverage(c);
    CHECK(same(one, three));
    CHECK(same(one, run_coverage(c)));
    CHECK(one.size() == c.n_grid.size() * c.methods.size());
    c.seed = 12;
    CHECK_FALSE(same(one, run_coverage(c)));
  }
}

TEST_CASE("record bookkeeping") {
  auto c = small_config(ScenarioKind::origin_hetero, 1);
  for (const auto& r : run_coverage(c)) {
    CHECK(r.reps == 1);
    CHECK((r.covered == 0 || r.covered == 1));
    CHECK(r.scenario == "origin_hetero");
    CHECK(r.seed == 11);
  }
  CoverageRecord r;
  r.reps = 100;
  r.covered = 90;
  r.degenerate = 10;
  CHECK(r.coverage() == doctest::Approx(1.0));
  CHECK(r.mc_stderr() == doctest::Approx(0.0));
  r.covered = 45;
  CHECK(r.coverage() == doctest::Approx(0.5));
  CHECK(r.mc_stderr() == doctest::Approx(std::sqrt(0.25 / 90.0)));
  r.degenerate = 100;
  r.covered = 0;
  CHECK(std::isnan(r.coverage()));
}

TEST_CASE("shifting the truth leaves every coverage decision unchanged") {
  auto c = small_config(ScenarioKind::slr_hetero, 100);
  const auto base = run_coverage(c);
  c.scenario.truth << -3.0, 7.5;
  CHECK(same(base, run_coverage(c)));

  auto o = small_config(ScenarioKind::origin_hetero, 100);
  const auto obase = run_coverage(o);
  o.scenario.truth[0] = -2.0;
  CHECK(same(obase, run_coverage(o)));
}

TEST_CASE("configuration errors") {
  auto expect_config = [](const SimConfig& c) {
    try {
      validate(c);
      FAIL("invalid configuration accepted");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::config);
    }
  };
  auto c = small_config(ScenarioKind::poisson_nb);
  CHECK_NOTHROW(validate(c));
  auto bad = c;
  bad.reps = 0;
  expect_config(bad);
  bad = c;
  bad.alpha = 1.0;
  expect_config(bad);
  bad = c;
  bad.n_grid = {};
  expect_config(bad);
  bad = c;
  bad.n_grid = {1};
  expect_config(bad);
  bad = c;
  bad.methods = {};
  expect_config(bad);
  auto slr = small_config(ScenarioKind::slr_hetero);
  slr.methods = {Method::hc4};
  expect_config(slr);
  CHECK_THROWS_AS(run_coverage(slr), Error);
}

TEST_CASE("worker count") {
  CHECK(worker_count(3) == 3);
  CHECK(worker_count(0) >= 1);
}

namespace {
Dataset synthetic_population(Index size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix X(size, 2);
  Vector y(size);
  for (Index i = 0; i < size; ++i) {
    const double x = normal(rng);
    X(i, 0) = 1.0;
    X(i, 1) = x;
    y[i] = 1.0 + x + std::sqrt(1.0 + std::abs(x)) * normal(rng);
  }
  return Dataset(y, X);
}
}  // namespace

TEST_CASE("population subsampling") {
  const Dataset pop = synthetic_population(200, 1);
  PopulationConfig c;
  c.sizes = {200};
  c.reps = 20;
  c.methods = {Method::pivot, Method::sandwich, Method::hc3};
  c.seed = 3;
  c.threads = 1;
  // A census reproduces the truth exactly.
  for (const auto& r : population_study(pop, c)) CHECK(r.covered == 20);

  c.sizes = {20, 50};
  const auto a = population_study(pop, c);
  c.threads = 2;
  CHECK(same(a, population_study(pop, c)));

  c.include_intercept = false;
  const auto profiled = population_study(pop, c);
  CHECK(profiled.size() == 6);

  c.sizes = {201};
  CHECK_THROWS_AS(population_study(pop, c), Error);
}

TEST_CASE("pivot coverage on a large synthetic population") {
  const Dataset pop = synthetic_population(100000, 77);
  PopulationConfig c;
  c.sizes = {100};
  c.reps = 2000;
  c.methods = {Method::pivot};
  c.seed = 8;
  const auto records = population_study(pop, c);
  REQUIRE(records.size() == 1);
  CHECK(std::abs(records[0].coverage() - 0.95) <= 0.02);
}
