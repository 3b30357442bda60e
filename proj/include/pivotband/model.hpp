#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pivotband/error.hpp"

namespace pivotband {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Responses plus an optional design matrix. Immutable once constructed;
/// the constructor enforces n >= 1, matching row counts and full column rank.
class Dataset {
 public:
  explicit Dataset(Vector y, std::optional<Matrix> X = std::nullopt,
                   std::vector<std::string> labels = {});

  const Vector& y() const noexcept { return y_; }
  bool has_design() const noexcept { return X_.has_value(); }
  const Matrix& X() const;
  Index n() const noexcept { return y_.size(); }
  /// Column count of the design, 0 when there is none.
  Index columns() const noexcept { return X_ ? X_->cols() : 0; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Same design, different response.
  Dataset with_response(Vector y) const;

 private:
  Vector y_;
  std::optional<Matrix> X_;
  std::vector<std::string> labels_;
};

/// A parameter value of the working model plus the optional Gaussian nuisance
/// scale. sigma2 may be zero for an exact fit.
struct ParamPoint {
  Vector theta;
  std::optional<double> sigma2;
};

enum class ModelKind { poisson_mean, origin_regression, linear_regression };

std::string_view to_string(ModelKind kind) noexcept;
ModelKind parse_model_kind(std::string_view name);

/// Assumed (possibly misspecified) likelihood. Scores and Hessians are
/// per-observation derivatives of the log-density. For the Gaussian models the
/// scale sigma2 multiplies every score by 1/sigma2; downstream pivot and
/// sandwich quantities do not depend on it.
class WorkingModel {
 public:
  explicit WorkingModel(ModelKind kind, double sigma2 = 1.0);

  ModelKind kind() const noexcept { return kind_; }
  double sigma2() const noexcept { return sigma2_; }
  WorkingModel with_sigma2(double sigma2) const { return WorkingModel(kind_, sigma2); }
  bool has_nuisance() const noexcept { return kind_ != ModelKind::poisson_mean; }

  Index dimension(const Dataset& data) const;
  /// Throws when the dataset cannot be used with this model.
  void validate(const Dataset& data) const;

  double log_density(const Dataset& data, const Vector& theta, Index i) const;
  Vector score(const Dataset& data, const Vector& theta, Index i) const;
  Matrix hessian(const Dataset& data, const Vector& theta, Index i) const;

  /// n x p matrix whose i-th row is the score of observation i.
  Matrix scores(const Dataset& data, const Vector& theta) const;
  /// Sum over observations of the per-observation Hessian.
  Matrix hessian_sum(const Dataset& data, const Vector& theta) const;

 private:
  void check_theta(const Dataset& data, const Vector& theta) const;

  ModelKind kind_;
  double sigma2_;
};

/// Closed-form maximum (misspecified) likelihood estimate. For the Gaussian
/// models sigma2 is set to RSS / n.
ParamPoint mle_fit(const WorkingModel& model, const Dataset& data);

/// Sum of per-observation scores at theta.
Vector score_sum(const WorkingModel& model, const Dataset& data, const Vector& theta);

}  // namespace pivotband
