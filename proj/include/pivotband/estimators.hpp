#pragma once

#include <optional>
#include <string_view>

#include "pivotband/model.hpp"

namespace pivotband {

/// Bread and meat at a parameter point:
///   A = -(1/n) sum of Hessians,  B = (1/n) sum of score outer products.
struct MomentMatrices {
  Matrix A;
  Matrix B;
  ParamPoint at;
  Index n = 0;
};

/// Post-hoc corrections to the sandwich. Labels follow the hc1..hc5 naming
/// used in the robust-variance literature this library compares against:
/// hc1 leverage-weighted meat, hc2 n/(n-p) scaling, hc3 jackknife weights,
/// hc4 adjusted normal quantile, hc5 t quantile with estimated df.
enum class CorrectionKind { none, hc1, hc2, hc3, hc4, hc5, mle_info };

std::string_view to_string(CorrectionKind kind) noexcept;
CorrectionKind parse_correction(std::string_view name);

/// How a scalar Wald interval turns alpha into a critical value.
struct QuantilePolicy {
  enum class Kind { normal, adjusted_normal, student_t };
  Kind kind = Kind::normal;
  /// Relative variance Var(V)/E(V)^2 of the variance estimate (adjusted_normal).
  double kappa = 0.0;
  /// Degrees of freedom (student_t).
  double df = 0.0;

  /// Critical value q for a two-sided level 1 - alpha interval.
  double two_sided(double alpha) const;
};

/// Covariance of the estimator itself (already divided by n) together with the
/// quantile policy the interval should use.
struct CorrectedCovariance {
  CorrectionKind kind = CorrectionKind::none;
  Matrix cov;
  QuantilePolicy policy;
};

MomentMatrices moment_matrices(const WorkingModel& model, const Dataset& data, const Vector& theta);

/// Asymptotic sandwich A^-1 B A^-1 evaluated at the MLE. Divide by n for the
/// variance of the estimator.
Matrix sandwich_cov(const WorkingModel& model, const Dataset& data);
Matrix sandwich_cov(const WorkingModel& model, const Dataset& data, const ParamPoint& fit);

/// Diagonal of the hat matrix of the design.
Vector leverage(const Dataset& data);
/// Leverage as seen by a model: the iid Poisson mean uses an intercept-only design.
Vector leverage(const WorkingModel& model, const Dataset& data);

/// Per-observation weights applied to score outer products in the meat.
Vector meat_weights(CorrectionKind kind, const Vector& leverage);

/// hc4 and hc5 target a scalar: either p == 1 or an explicit contrast.
CorrectedCovariance corrected_cov(const WorkingModel& model, const Dataset& data, CorrectionKind kind,
                                  const std::optional<Vector>& contrast = std::nullopt);
CorrectedCovariance corrected_cov(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
                                  CorrectionKind kind,
                                  const std::optional<Vector>& contrast = std::nullopt);

}  // namespace pivotband
