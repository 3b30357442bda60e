#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "pivotband/estimators.hpp"

namespace pivotband {

/// Interval/region construction methods. Everything except `pivot` is a Wald
/// construction around the MLE with the corresponding covariance.
enum class Method { mle_info, sandwich, hc1, hc2, hc3, hc4, hc5, pivot };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view name);
/// Comma-separated list, e.g. "pivot,sandwich,hc3".
std::vector<Method> parse_methods(std::string_view list);
/// Correction backing a Wald method; nullopt for the pivot.
std::optional<CorrectionKind> correction_of(Method method) noexcept;
/// Whether the method is defined for a joint target of dimension p.
bool supports_dimension(Method method, Index p) noexcept;

/// Meat-standardised score at theta. For p == 1 `value` is the signed
/// statistic t; `qform` is always the quadratic form (t^2 when p == 1).
struct PivotStat {
  double value = 0.0;
  double qform = 0.0;
  ParamPoint at;
  Index n = 0;
  Index p = 0;
};

PivotStat pivot_stat(const WorkingModel& model, const Dataset& data, const Vector& theta);

/// Wald quadratic form (theta_hat - theta)' Cov^-1 (theta_hat - theta) with
/// the method's estimator covariance.
double wald_stat(const CorrectedCovariance& cov, const Vector& theta_hat, const Vector& theta);

/// Critical value on the quadratic-form scale: q^2 for scalar targets (q from
/// the quantile policy), chi-squared_{p,1-alpha} otherwise.
double region_threshold(Method method, Index p, double alpha,
                        const QuantilePolicy& policy = QuantilePolicy{});

bool covers(const WorkingModel& model, const Dataset& data, const Vector& theta_star, Method method,
            double alpha);
bool covers(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
            const Vector& theta_star, Method method, double alpha);

struct IntervalResult {
  Method method = Method::pivot;
  double estimate = 0.0;
  /// Unbounded ends hold the edge of the parameter space (+-inf, or 0 for
  /// the lower end of a Poisson mean).
  double lower = 0.0;
  double upper = 0.0;
  bool lower_bounded = true;
  bool upper_bounded = true;
  double alpha = 0.05;
  double quantile_used = 0.0;
  int lower_iterations = 0;
  int upper_iterations = 0;
  /// The acceptance set had further components that were discarded.
  bool disconnected = false;
};

IntervalResult pivot_interval(const WorkingModel& model, const Dataset& data, double alpha);
/// Scalar Wald interval; with a contrast it targets contrast' theta.
IntervalResult wald_interval(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                             const std::optional<Vector>& contrast = std::nullopt);
/// Dispatches to pivot_interval or wald_interval.
IntervalResult interval(const WorkingModel& model, const Dataset& data, Method method, double alpha);

struct BoundaryPoint {
  Vector direction;
  double radius = 0.0;
  bool bounded = true;
  int iterations = 0;
};

struct RegionResult {
  Method method = Method::pivot;
  double chi2_threshold = 0.0;
  ParamPoint center;
  std::optional<bool> contains_query;
  std::vector<BoundaryPoint> boundary;
};

/// For each unit direction u, the radius r with stat(theta_hat - r u) equal to
/// the threshold.
RegionResult region_boundary(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                             const std::vector<Vector>& directions);
RegionResult region_membership(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                               const Vector& query);

/// `count` unit vectors evenly spaced on the circle, starting at (1, 0).
std::vector<Vector> circle_directions(int count);

struct GapPoint {
  Index n = 0;
  double scaled_gap = 0.0;
};

/// sqrt(n) |r_first - r_second| along one direction for each dataset.
std::vector<GapPoint> scaled_radius_gap(const WorkingModel& model, const std::vector<Dataset>& datasets,
                                   const Vector& direction, double alpha, Method first = Method::pivot,
                                   Method second = Method::sandwich);

}  // namespace pivotband
