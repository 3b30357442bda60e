#include <doctest.h>

#include <pivotband/model.hpp>

#include "oracles.hpp"

using namespace pivotband;

namespace {

Dataset origin_data(std::initializer_list<double> x, std::initializer_list<double> y) {
  Matrix X(static_cast<Index>(x.size()), 1);
  Index i = 0;
  for (double v : x) X(i++, 0) = v;
  Vector yy(static_cast<Index>(y.size()));
  i = 0;
  for (double v : y) yy[i++] = v;
  return Dataset(yy, X);
}

}  // namespace

TEST_CASE("dataset invariants are checked at construction") {
  CHECK_THROWS_AS(Dataset(Vector(0)), Error);
  Matrix X(3, 2);
  X << 1, 2, 1, 2, 1, 2;  // second column is twice the first
  try {
    Dataset(Vector::Ones(3), X);
    FAIL("rank-deficient design accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_design);
  }
  CHECK_THROWS_AS(Dataset(Vector::Ones(2), Matrix::Ones(3, 1)), Error);
  const Dataset ok(Vector::Ones(3), Matrix::Identity(3, 3));
  CHECK(ok.columns() == 3);
}

TEST_CASE("closed-form MLEs") {
  SUBCASE("poisson mean is the sample mean") {
    const Dataset d(Vector::LinSpaced(3, 1, 3));
    const auto fit = mle_fit(WorkingModel(ModelKind::poisson_mean), d);
    CHECK(fit.theta[0] == doctest::Approx(2.0));
    CHECK_FALSE(fit.sigma2.has_value());
  }
  SUBCASE("origin regression exact fit") {
    const auto d = origin_data({1, 2, 3, -1}, {2, 4, 6, -2});
    const auto fit = mle_fit(WorkingModel(ModelKind::origin_regression), d);
    CHECK(fit.theta[0] == doctest::Approx(2.0));
    CHECK(*fit.sigma2 == doctest::Approx(0.0));
  }
  SUBCASE("intercept-only linear regression on a constant response") {
    const Dataset d(Vector::Constant(5, 4.25), Matrix::Ones(5, 1));
    const auto fit = mle_fit(WorkingModel(ModelKind::linear_regression), d);
    CHECK(fit.theta[0] == doctest::Approx(4.25));
    CHECK(*fit.sigma2 == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("poisson rejects negative responses") {
    const Dataset d(Vector::LinSpaced(3, -1, 1));
    CHECK_THROWS_AS(mle_fit(WorkingModel(ModelKind::poisson_mean), d), Error);
  }
}

TEST_CASE("zero covariate column fails the rank check") {
  Matrix X = Matrix::Zero(2, 1);
  try {
    Dataset(Vector::Ones(2), X);
    FAIL("zero covariate accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::singular_design);
  }
}

TEST_CASE("score sums match the closed forms") {
  const Dataset pois(Vector::LinSpaced(3, 1, 3));
  const WorkingModel pm(ModelKind::poisson_mean);
  // sum y / theta - n = 6 - 3
  CHECK(score_sum(pm, pois, Vector::Constant(1, 1.0))[0] == doctest::Approx(3.0));

  const auto orig = origin_data({1, 1}, {1, 1});
  CHECK(score_sum(WorkingModel(ModelKind::origin_regression), orig, Vector::Zero(1))[0] == doctest::Approx(2.0));

  try {
    score_sum(pm, pois, Vector::Constant(1, 0.0));
    FAIL("theta = 0 accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::domain);
  }
}

TEST_CASE("score vanishes at the MLE for random datasets") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Index n = 5 + trial % 40;
    const Dataset pois(oracle::random_counts(rng, n, 2.5) + Vector::Ones(n));
    const WorkingModel pm(ModelKind::poisson_mean);
    CHECK(std::abs(score_sum(pm, pois, mle_fit(pm, pois).theta)[0]) < 1e-8);

    auto [X, y] = oracle::random_regression(rng, n, 3, true);
    const Dataset lin(y, X);
    const WorkingModel lm(ModelKind::linear_regression);
    CHECK(score_sum(lm, lin, mle_fit(lm, lin).theta).cwiseAbs().maxCoeff() < 1e-8);

    auto [Xo, yo] = oracle::random_regression(rng, n, 1, false);
    const Dataset org(yo, Xo);
    const WorkingModel om(ModelKind::origin_regression);
    CHECK(std::abs(score_sum(om, org, mle_fit(om, org).theta)[0]) < 1e-8);
  }
}

TEST_CASE("scores and Hessians agree with finite differences") {
  std::mt19937_64 rng(5);
  auto [X, y] = oracle::random_regression(rng, 12, 3, true);
  const Dataset lin(y, X);
  const Dataset pois(oracle::random_counts(rng, 12, 3.0));
  const Dataset org(y, X.col(2));

  const auto check = [](const WorkingModel& model, const Dataset& data, const Vector& theta) {
    for (Index i = 0; i < data.n(); ++i) {
      const Vector g = oracle::gradient([&](const Vector& t) { return model.log_density(data, t, i); }, theta);
      const Vector s = model.score(data, theta, i);
      CHECK((g - s).norm() <= 1e-6 * std::max(1.0, s.norm()));
      const Matrix J = oracle::jacobian([&](const Vector& t) { return model.score(data, t, i); }, theta);
      const Matrix H = model.hessian(data, theta, i);
      CHECK((J - H).norm() <= 1e-6 * std::max(1.0, H.norm()));
    }
  };
  check(WorkingModel(ModelKind::linear_regression, 1.7), lin, Vector::LinSpaced(3, -0.3, 0.8));
  check(WorkingModel(ModelKind::poisson_mean), pois, Vector::Constant(1, 2.2));
  check(WorkingModel(ModelKind::origin_regression, 0.6), org, Vector::Constant(1, 0.4));
}

TEST_CASE("mean-value identity is exact for Gaussian linear models") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    auto [X, y] = oracle::random_regression(rng, 20, 2 + trial % 3, true);
    const Dataset d(y, X);
    const WorkingModel m(ModelKind::linear_regression, 0.5 + trial % 4);
    const Vector hat = mle_fit(m, d).theta;
    Vector theta = hat;
    for (Index k = 0; k < theta.size(); ++k) theta[k] += normal(rng);
    const Vector lhs = -score_sum(m, d, theta);
    const Vector rhs = m.hessian_sum(d, theta) * (hat - theta);
    CHECK((lhs - rhs).norm() <= 1e-10 * std::max(1.0, lhs.norm()));
  }
}
