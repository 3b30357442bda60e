#include "pivotband/inference.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "pivotband/quantile.hpp"
#include "pivotband/root_search.hpp"

namespace pivotband {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Bisection stops well inside the 1e-10 relative target.
constexpr double kRootTolerance = 1e-13;
// Smallest pivot of a Cholesky factor, relative to the largest diagonal
// entry, for a matrix to count as nonsingular.
constexpr double kSingularRatio = 1e-13;

// Cholesky of a symmetric PSD matrix, rejecting numerically singular input.
Eigen::LLT<Matrix> factor_psd(const Matrix& m, ErrorCode code, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success || !m.allFinite()) throw Error(code, what);
  const double scale = m.diagonal().cwiseAbs().maxCoeff();
  const Vector pivots = llt.matrixL().toDenseMatrix().diagonal();
  if (!(scale > 0.0) || (pivots.array().square() <= kSingularRatio * scale).any()) throw Error(code, what);
  return llt;
}

double domain_lower_edge(const WorkingModel& model) {
  return model.kind() == ModelKind::poisson_mean ? 0.0 : -kInf;
}

double standard_error(const CorrectedCovariance& cov, const std::optional<Vector>& contrast) {
  const double var = contrast ? contrast->dot(cov.cov * *contrast) : cov.cov(0, 0);
  return std::sqrt(std::max(var, 0.0));
}

// Radius along -u at which `excess(theta)` turns non-negative.
BoundaryPoint solve_radius(const std::function<std::optional<double>(const Vector&)>& excess,
                           const WorkingModel& model, const ParamPoint& fit, const Vector& u,
                           double initial_step) {
  CrossingOptions opts;
  opts.rel_tol = kRootTolerance;
  opts.initial_step = initial_step;
  if (model.kind() == ModelKind::poisson_mean && u[0] > 0.0) opts.domain_edge = fit.theta[0] / u[0];
  const auto along = [&](double r) { return excess(Vector(fit.theta - r * u)); };
  const Crossing c = find_crossing(along, 0.0, +1, opts);
  BoundaryPoint bp;
  bp.direction = u;
  bp.bounded = c.found;
  bp.radius = c.found ? c.root : (std::isfinite(opts.domain_edge) ? opts.domain_edge : kInf);
  bp.iterations = c.expansions + c.bisections;
  return bp;
}

double sandwich_radius_guess(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
                             const Vector& u, double threshold) {
  try {
    const CorrectedCovariance sw = corrected_cov(model, data, fit, CorrectionKind::none);
    const auto llt = factor_psd(sw.cov, ErrorCode::degenerate_meat, "sandwich covariance is singular");
    const double curvature = u.dot(llt.solve(u));
    if (curvature > 0.0 && std::isfinite(curvature)) return std::sqrt(threshold / curvature);
  } catch (const Error&) {
  }
  return 0.1 * std::max(fit.theta.norm(), 1.0);
}

BoundaryPoint method_radius(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
                            Method method, double alpha, const Vector& u) {
  const Index p = model.dimension(data);
  if (method == Method::pivot) {
    const double thr = region_threshold(method, p, alpha);
    const auto excess = [&](const Vector& theta) -> std::optional<double> {
      try {
        return pivot_stat(model, data, theta).qform - thr;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::degenerate_meat) return std::nullopt;
        throw;
      }
    };
    return solve_radius(excess, model, fit, u, sandwich_radius_guess(model, data, fit, u, thr));
  }
  const CorrectedCovariance cov = corrected_cov(model, data, fit, *correction_of(method));
  const double thr = region_threshold(method, p, alpha, cov.policy);
  // Factor once so every trial point reuses it.
  const auto llt = factor_psd(cov.cov, ErrorCode::degenerate_meat, "estimator covariance is singular");
  const auto excess = [&](const Vector& theta) -> std::optional<double> {
    const Vector d = fit.theta - theta;
    return d.dot(llt.solve(d)) - thr;
  };
  return solve_radius(excess, model, fit, u, sandwich_radius_guess(model, data, fit, u, thr));
}

std::vector<Vector> normalized(const std::vector<Vector>& directions, Index p) {
  std::vector<Vector> out;
  out.reserve(directions.size());
  for (const auto& d : directions) {
    if (d.size() != p) throw Error(ErrorCode::invalid_argument, "direction length does not match dimension");
    const double norm = d.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw Error(ErrorCode::invalid_argument, "direction must be a nonzero finite vector");
    out.push_back(d / norm);
  }
  return out;
}

}  // namespace

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::mle_info: return "mle_info";
    case Method::sandwich: return "sandwich";
    case Method::hc1: return "hc1";
    case Method::hc2: return "hc2";
    case Method::hc3: return "hc3";
    case Method::hc4: return "hc4";
    case Method::hc5: return "hc5";
    case Method::pivot: return "pivot";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "pivot") return Method::pivot;
  switch (parse_correction(name)) {
    case CorrectionKind::none: return Method::sandwich;
    case CorrectionKind::hc1: return Method::hc1;
    case CorrectionKind::hc2: return Method::hc2;
    case CorrectionKind::hc3: return Method::hc3;
    case CorrectionKind::hc4: return Method::hc4;
    case CorrectionKind::hc5: return Method::hc5;
    case CorrectionKind::mle_info: return Method::mle_info;
  }
  throw Error(ErrorCode::invalid_argument, "unknown method '" + std::string(name) + "'");
}

std::vector<Method> parse_methods(std::string_view list) {
  std::vector<Method> out;
  std::stringstream ss{std::string(list)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    bool seen = false;
    for (Method prev : out) seen = seen || prev == m;
    if (!seen) out.push_back(m);
  }
  if (out.empty()) throw Error(ErrorCode::invalid_argument, "method list is empty");
  return out;
}

std::optional<CorrectionKind> correction_of(Method method) noexcept {
  switch (method) {
    case Method::mle_info: return CorrectionKind::mle_info;
    case Method::sandwich: return CorrectionKind::none;
    case Method::hc1: return CorrectionKind::hc1;
    case Method::hc2: return CorrectionKind::hc2;
    case Method::hc3: return CorrectionKind::hc3;
    case Method::hc4: return CorrectionKind::hc4;
    case Method::hc5: return CorrectionKind::hc5;
    case Method::pivot: return std::nullopt;
  }
  return std::nullopt;
}

bool supports_dimension(Method method, Index p) noexcept {
  if (p < 1) return false;
  if (method == Method::hc4 || method == Method::hc5) return p == 1;
  return true;
}

PivotStat pivot_stat(const WorkingModel& model, const Dataset& data, const Vector& theta) {
  const Matrix scores = model.scores(data, theta);
  if (!scores.allFinite()) throw Error(ErrorCode::numeric_domain, "score is not finite");
  const double n = static_cast<double>(data.n());
  const Vector g = scores.colwise().sum().transpose() / std::sqrt(n);
  const Matrix B = 0.5 * (scores.transpose() * scores + (scores.transpose() * scores).transpose()) / n;
  PivotStat out;
  out.at = ParamPoint{theta, std::nullopt};
  out.n = data.n();
  out.p = g.size();
  if (out.p == 1) {
    if (!(B(0, 0) > 0.0)) throw Error(ErrorCode::degenerate_meat, "meat is zero at this parameter");
    out.value = g[0] / std::sqrt(B(0, 0));
    out.qform = out.value * out.value;
    return out;
  }
  const auto llt = factor_psd(B, ErrorCode::degenerate_meat, "meat matrix is singular at this parameter");
  out.qform = g.dot(llt.solve(g));
  out.value = std::sqrt(std::max(out.qform, 0.0));
  return out;
}

double wald_stat(const CorrectedCovariance& cov, const Vector& theta_hat, const Vector& theta) {
  const Vector d = theta_hat - theta;
  const auto llt = factor_psd(cov.cov, ErrorCode::degenerate_meat, "estimator covariance is singular");
  return d.dot(llt.solve(d));
}

double region_threshold(Method method, Index p, double alpha, const QuantilePolicy& policy) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must lie in (0, 1)");
  if (p == 1) {
    const double q = method == Method::pivot ? quantile(Distribution::std_normal, 1.0 - alpha / 2.0)
                                             : policy.two_sided(alpha);
    return q * q;
  }
  return quantile(Distribution::chi2, 1.0 - alpha, static_cast<double>(p));
}

bool covers(const WorkingModel& model, const Dataset& data, const Vector& theta_star, Method method,
            double alpha) {
  return covers(model, data, mle_fit(model, data), theta_star, method, alpha);
}

bool covers(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
            const Vector& theta_star, Method method, double alpha) {
  const Index p = model.dimension(data);
  if (!supports_dimension(method, p))
    throw Error(ErrorCode::unsupported_correction,
                std::string(to_string(method)) + " is not available for joint targets");
  if (theta_star.size() != p) throw Error(ErrorCode::invalid_argument, "target length does not match model");
  if (theta_star == fit.theta) return true;

  if (method == Method::pivot) {
    const PivotStat ps = pivot_stat(model, data, theta_star);
    if (p == 1) return std::abs(ps.value) <= quantile(Distribution::std_normal, 1.0 - alpha / 2.0);
    return ps.qform <= region_threshold(method, p, alpha);
  }
  const CorrectedCovariance cov = corrected_cov(model, data, fit, *correction_of(method));
  if (p == 1) {
    const double se = standard_error(cov, std::nullopt);
    if (!(se > 0.0)) throw Error(ErrorCode::degenerate_meat, "estimator variance is zero");
    return std::abs(fit.theta[0] - theta_star[0]) <= cov.policy.two_sided(alpha) * se;
  }
  return wald_stat(cov, fit.theta, theta_star) <= region_threshold(method, p, alpha, cov.policy);
}

IntervalResult pivot_interval(const WorkingModel& model, const Dataset& data, double alpha) {
  if (model.dimension(data) != 1)
    throw Error(ErrorCode::invalid_argument, "pivot intervals need a scalar parameter; use a region");
  const ParamPoint fit = mle_fit(model, data);
  const double theta_hat = fit.theta[0];
  const double z = quantile(Distribution::std_normal, 1.0 - alpha / 2.0);

  double step = 0.0;
  try {
    step = standard_error(corrected_cov(model, data, fit, CorrectionKind::none), std::nullopt);
  } catch (const Error&) {
  }
  if (!(step > 0.0) || !std::isfinite(step)) step = 0.1 * std::max(std::abs(theta_hat), 1.0);

  const auto excess = [&](double theta) -> std::optional<double> {
    try {
      return std::abs(pivot_stat(model, data, Vector::Constant(1, theta)).value) - z;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::degenerate_meat) return std::nullopt;
      throw;
    }
  };

  IntervalResult out;
  out.method = Method::pivot;
  out.estimate = theta_hat;
  out.alpha = alpha;
  out.quantile_used = z;

  CrossingOptions opts;
  opts.initial_step = step;
  opts.rel_tol = kRootTolerance;

  const double edge = domain_lower_edge(model);
  if (theta_hat > edge) {
    opts.domain_edge = edge;
    const Crossing lo = find_crossing(excess, theta_hat, -1, opts);
    out.lower_bounded = lo.found;
    out.lower = lo.found ? lo.root : edge;
    out.lower_iterations = lo.expansions + lo.bisections;
    out.disconnected = out.disconnected || lo.reentry;
  } else {
    out.lower_bounded = false;
    out.lower = edge;
  }
  opts.domain_edge = kInf;
  const Crossing hi = find_crossing(excess, theta_hat, +1, opts);
  out.upper_bounded = hi.found;
  out.upper = hi.found ? hi.root : kInf;
  out.upper_iterations = hi.expansions + hi.bisections;
  out.disconnected = out.disconnected || hi.reentry;
  return out;
}

IntervalResult wald_interval(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                             const std::optional<Vector>& contrast) {
  if (method == Method::pivot) throw Error(ErrorCode::invalid_argument, "pivot is not a Wald method");
  const Index p = model.dimension(data);
  if (p > 1 && !contrast)
    throw Error(ErrorCode::invalid_argument, "Wald intervals for p > 1 need a contrast");
  const ParamPoint fit = mle_fit(model, data);
  const CorrectedCovariance cov = corrected_cov(model, data, fit, *correction_of(method), contrast);
  IntervalResult out;
  out.method = method;
  out.estimate = contrast ? contrast->dot(fit.theta) : fit.theta[0];
  out.alpha = alpha;
  out.quantile_used = cov.policy.two_sided(alpha);
  const double half = out.quantile_used * standard_error(cov, contrast);
  out.lower = out.estimate - half;
  out.upper = out.estimate + half;
  return out;
}

IntervalResult interval(const WorkingModel& model, const Dataset& data, Method method, double alpha) {
  return method == Method::pivot ? pivot_interval(model, data, alpha) : wald_interval(model, data, method, alpha);
}

RegionResult region_boundary(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                             const std::vector<Vector>& directions) {
  const Index p = model.dimension(data);
  if (p < 2) throw Error(ErrorCode::invalid_argument, "regions need p >= 2; use an interval");
  if (!supports_dimension(method, p))
    throw Error(ErrorCode::unsupported_correction,
                std::string(to_string(method)) + " is not available for joint targets");
  const ParamPoint fit = mle_fit(model, data);
  RegionResult out;
  out.method = method;
  out.center = fit;
  out.chi2_threshold = region_threshold(method, p, alpha);
  for (const Vector& u : normalized(directions, p))
    out.boundary.push_back(method_radius(model, data, fit, method, alpha, u));
  return out;
}

RegionResult region_membership(const WorkingModel& model, const Dataset& data, Method method, double alpha,
                               const Vector& query) {
  const Index p = model.dimension(data);
  const ParamPoint fit = mle_fit(model, data);
  RegionResult out;
  out.method = method;
  out.center = fit;
  out.chi2_threshold = region_threshold(method, p, alpha);
  out.contains_query = covers(model, data, fit, query, method, alpha);
  return out;
}

std::vector<Vector> circle_directions(int count) {
  if (count < 1) throw Error(ErrorCode::invalid_argument, "need at least one direction");
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
    Vector u(2);
    u << std::cos(angle), std::sin(angle);
    out.push_back(u);
  }
  return out;
}

std::vector<GapPoint> scaled_radius_gap(const WorkingModel& model, const std::vector<Dataset>& datasets,
                                   const Vector& direction, double alpha, Method first, Method second) {
  std::vector<GapPoint> out;
  out.reserve(datasets.size());
  for (const Dataset& data : datasets) {
    const Index p = model.dimension(data);
    const Vector u = normalized({direction}, p).front();
    const ParamPoint fit = mle_fit(model, data);
    const BoundaryPoint a = method_radius(model, data, fit, first, alpha, u);
    const BoundaryPoint b = method_radius(model, data, fit, second, alpha, u);
    const double gap = (a.bounded && b.bounded) ? std::abs(a.radius - b.radius) : kInf;
    out.push_back({data.n(), std::sqrt(static_cast<double>(data.n())) * gap});
  }
  return out;
}

}  // namespace pivotband
