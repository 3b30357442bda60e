#include "pivotband/model.hpp"

#include <cmath>
#include <numbers>

namespace pivotband {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::domain: return "domain";
    case ErrorCode::singular_design: return "singular_design";
    case ErrorCode::degenerate_covariate: return "degenerate_covariate";
    case ErrorCode::bread_singular: return "bread_singular";
    case ErrorCode::degenerate_meat: return "degenerate_meat";
    case ErrorCode::degenerate_leverage: return "degenerate_leverage";
    case ErrorCode::unsupported_correction: return "unsupported_correction";
    case ErrorCode::numeric_domain: return "numeric_domain";
    case ErrorCode::parse: return "parse";
    case ErrorCode::empty_data: return "empty_data";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

Dataset::Dataset(Vector y, std::optional<Matrix> X, std::vector<std::string> labels)
    : y_(std::move(y)), X_(std::move(X)), labels_(std::move(labels)) {
  if (y_.size() < 1) throw Error(ErrorCode::empty_data, "dataset needs at least one observation");
  if (!y_.allFinite()) throw Error(ErrorCode::invalid_argument, "responses must be finite");
  if (X_) {
    if (X_->rows() != y_.size())
      throw Error(ErrorCode::invalid_argument, "design row count does not match response length");
    if (X_->cols() < 1) throw Error(ErrorCode::invalid_argument, "design has no columns");
    if (!X_->allFinite()) throw Error(ErrorCode::invalid_argument, "design must be finite");
    if (X_->cols() > X_->rows())
      throw Error(ErrorCode::singular_design, "design has more columns than rows");
    Eigen::ColPivHouseholderQR<Matrix> qr(*X_);
    if (qr.rank() < X_->cols())
      throw Error(ErrorCode::singular_design, "design matrix is rank deficient");
  }
  if (!labels_.empty() && X_ && static_cast<Index>(labels_.size()) != X_->cols())
    throw Error(ErrorCode::invalid_argument, "label count does not match design columns");
}

const Matrix& Dataset::X() const {
  if (!X_) throw Error(ErrorCode::invalid_argument, "dataset has no design matrix");
  return *X_;
}

Dataset Dataset::with_response(Vector y) const { return Dataset(std::move(y), X_, labels_); }

std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::poisson_mean: return "poisson";
    case ModelKind::origin_regression: return "origin";
    case ModelKind::linear_regression: return "linear";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "poisson" || name == "poisson_mean") return ModelKind::poisson_mean;
  if (name == "origin" || name == "origin_regression") return ModelKind::origin_regression;
  if (name == "linear" || name == "linear_regression") return ModelKind::linear_regression;
  throw Error(ErrorCode::invalid_argument, "unknown model '" + std::string(name) + "'");
}

WorkingModel::WorkingModel(ModelKind kind, double sigma2) : kind_(kind), sigma2_(sigma2) {
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw Error(ErrorCode::invalid_argument, "model scale sigma2 must be positive and finite");
}

Index WorkingModel::dimension(const Dataset& data) const {
  switch (kind_) {
    case ModelKind::poisson_mean:
    case ModelKind::origin_regression: return 1;
    case ModelKind::linear_regression: return data.columns();
  }
  return 0;
}

void WorkingModel::validate(const Dataset& data) const {
  switch (kind_) {
    case ModelKind::poisson_mean:
      if ((data.y().array() < 0.0).any())
        throw Error(ErrorCode::domain, "poisson model requires non-negative responses");
      return;
    case ModelKind::origin_regression:
      if (!data.has_design() || data.columns() != 1)
        throw Error(ErrorCode::invalid_argument,
                    "regression through the origin needs exactly one covariate column");
      return;
    case ModelKind::linear_regression:
      if (!data.has_design())
        throw Error(ErrorCode::invalid_argument, "linear regression needs a design matrix");
      return;
  }
}

void WorkingModel::check_theta(const Dataset& data, const Vector& theta) const {
  if (theta.size() != dimension(data))
    throw Error(ErrorCode::invalid_argument, "parameter length does not match model dimension");
  if (!theta.allFinite()) throw Error(ErrorCode::domain, "parameter must be finite");
  if (kind_ == ModelKind::poisson_mean && !(theta[0] > 0.0))
    throw Error(ErrorCode::domain, "poisson mean must be positive");
}

double WorkingModel::log_density(const Dataset& data, const Vector& theta, Index i) const {
  check_theta(data, theta);
  const double y = data.y()[i];
  if (kind_ == ModelKind::poisson_mean) return y * std::log(theta[0]) - theta[0] - std::lgamma(y + 1.0);
  const double fitted = data.X().row(i).dot(theta);
  const double r = y - fitted;
  return -0.5 * std::log(2.0 * std::numbers::pi * sigma2_) - r * r / (2.0 * sigma2_);
}

Vector WorkingModel::score(const Dataset& data, const Vector& theta, Index i) const {
  check_theta(data, theta);
  if (kind_ == ModelKind::poisson_mean) return Vector::Constant(1, data.y()[i] / theta[0] - 1.0);
  const double r = data.y()[i] - data.X().row(i).dot(theta);
  return data.X().row(i).transpose() * (r / sigma2_);
}

Matrix WorkingModel::hessian(const Dataset& data, const Vector& theta, Index i) const {
  check_theta(data, theta);
  if (kind_ == ModelKind::poisson_mean)
    return Matrix::Constant(1, 1, -data.y()[i] / (theta[0] * theta[0]));
  const auto x = data.X().row(i);
  return -(x.transpose() * x) / sigma2_;
}

Matrix WorkingModel::scores(const Dataset& data, const Vector& theta) const {
  validate(data);
  check_theta(data, theta);
  if (kind_ == ModelKind::poisson_mean) return (data.y().array() / theta[0] - 1.0).matrix();
  const Vector resid = (data.y() - data.X() * theta) / sigma2_;
  return data.X().array().colwise() * resid.array();
}

Matrix WorkingModel::hessian_sum(const Dataset& data, const Vector& theta) const {
  validate(data);
  check_theta(data, theta);
  if (kind_ == ModelKind::poisson_mean)
    return Matrix::Constant(1, 1, -data.y().sum() / (theta[0] * theta[0]));
  const Matrix& X = data.X();
  return -(X.transpose() * X) / sigma2_;
}

ParamPoint mle_fit(const WorkingModel& model, const Dataset& data) {
  model.validate(data);
  const Index n = data.n();
  switch (model.kind()) {
    case ModelKind::poisson_mean:
      return {Vector::Constant(1, data.y().mean()), std::nullopt};
    case ModelKind::origin_regression: {
      const auto x = data.X().col(0);
      const double sxx = x.squaredNorm();
      if (!(sxx > 0.0)) throw Error(ErrorCode::degenerate_covariate, "sum of squared covariates is zero");
      const double slope = x.dot(data.y()) / sxx;
      const double rss = (data.y() - slope * x).squaredNorm();
      return {Vector::Constant(1, slope), rss / static_cast<double>(n)};
    }
    case ModelKind::linear_regression: {
      const Matrix& X = data.X();
      Eigen::LLT<Matrix> llt(X.transpose() * X);
      if (llt.info() != Eigen::Success)
        throw Error(ErrorCode::singular_design, "normal equations are not positive definite");
      Vector beta = llt.solve(X.transpose() * data.y());
      const double rss = (data.y() - X * beta).squaredNorm();
      return {std::move(beta), rss / static_cast<double>(n)};
    }
  }
  throw Error(ErrorCode::invalid_argument, "unknown model");
}

Vector score_sum(const WorkingModel& model, const Dataset& data, const Vector& theta) {
  return model.scores(data, theta).colwise().sum().transpose();
}

}  // namespace pivotband
