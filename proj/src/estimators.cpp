#include "pivotband/estimators.hpp"

#include <cmath>
#include <limits>

#include "pivotband/quantile.hpp"

namespace pivotband {
namespace {

// Largest leverage treated as strictly below one.
constexpr double kLeverageCeiling = 1.0 - 1e-12;
// Fay-Graubard cap on the leverage used in the hc5 bias correction.
constexpr double kHc5LeverageCap = 0.75;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Eigen::LLT<Matrix> factor_bread(const Matrix& A) {
  Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success || !A.allFinite())
    throw Error(ErrorCode::bread_singular, "bread matrix A_n is not positive definite");
  return llt;
}

Matrix weighted_meat(const Matrix& scores, const Vector& weights) {
  const Matrix weighted = scores.array().colwise() * weights.array();
  return symmetrize(weighted.transpose() * scores) / static_cast<double>(scores.rows());
}

Matrix sandwich_from(const Eigen::LLT<Matrix>& bread, const Matrix& meat) {
  const Matrix left = bread.solve(meat);
  return symmetrize(bread.solve(left.transpose()));
}

// Design used for leverage and for the working-model df approximation.
Matrix effective_design(const WorkingModel& model, const Dataset& data) {
  if (model.kind() == ModelKind::poisson_mean) return Matrix::Ones(data.n(), 1);
  return data.X();
}

// Satterthwaite approximation for V = sum_i a_i r_i^2 with r = (I - H) e and
// e iid normal under the working model: returns E(V)^2 / Var(V) * 2, the
// equivalent chi-squared degrees of freedom.
double satterthwaite_df(const Matrix& design, const Vector& contrast, const Vector& weights) {
  const Index n = design.rows();
  Eigen::LLT<Matrix> gram(design.transpose() * design);
  if (gram.info() != Eigen::Success)
    throw Error(ErrorCode::singular_design, "design is not of full column rank");
  const Vector c = design * gram.solve(contrast);
  const Vector a = weights.array() * c.array().square();
  Matrix residual_maker = -design * gram.solve(design.transpose());
  residual_maker.diagonal().array() += 1.0;
  double mean = 0.0;
  double var = 0.0;
  for (Index i = 0; i < n; ++i) mean += a[i] * residual_maker(i, i);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) var += a[i] * a[j] * residual_maker(i, j) * residual_maker(i, j);
  if (!(var > 0.0)) return std::numeric_limits<double>::infinity();
  return mean * mean / var;
}

}  // namespace

std::string_view to_string(CorrectionKind kind) noexcept {
  switch (kind) {
    case CorrectionKind::none: return "sandwich";
    case CorrectionKind::hc1: return "hc1";
    case CorrectionKind::hc2: return "hc2";
    case CorrectionKind::hc3: return "hc3";
    case CorrectionKind::hc4: return "hc4";
    case CorrectionKind::hc5: return "hc5";
    case CorrectionKind::mle_info: return "mle_info";
  }
  return "unknown";
}

CorrectionKind parse_correction(std::string_view name) {
  if (name == "sandwich" || name == "none") return CorrectionKind::none;
  if (name == "hc1") return CorrectionKind::hc1;
  if (name == "hc2") return CorrectionKind::hc2;
  if (name == "hc3") return CorrectionKind::hc3;
  if (name == "hc4") return CorrectionKind::hc4;
  if (name == "hc5") return CorrectionKind::hc5;
  if (name == "mle_info" || name == "mle") return CorrectionKind::mle_info;
  throw Error(ErrorCode::invalid_argument, "unknown correction '" + std::string(name) + "'");
}

double QuantilePolicy::two_sided(double alpha) const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::domain, "alpha must lie in (0, 1)");
  const double z = quantile(Distribution::std_normal, 1.0 - alpha / 2.0);
  switch (kind) {
    case Kind::normal: return z;
    case Kind::student_t:
      if (!std::isfinite(df)) return z;
      return quantile(Distribution::student_t, 1.0 - alpha / 2.0, std::max(df, 1.0));
    case Kind::adjusted_normal: {
      if (!(kappa > 0.0)) return z;
      // Second-order coverage of q * sqrt(V) when V has relative variance kappa:
      //   2 Phi(q) - 1 - phi(q) q (1 + q^2) kappa / 4.
      const auto coverage = [&](double q) {
        return 2.0 * normal_cdf(q) - 1.0 - normal_pdf(q) * q * (1.0 + q * q) * kappa / 4.0;
      };
      const double target = 1.0 - alpha;
      double lo = z;
      double hi = z;
      for (int k = 0; k < 8 && coverage(hi) < target; ++k) hi *= 1.5;
      // Expansion no longer reaches the target: fall back to the matching t.
      if (coverage(hi) < target)
        return quantile(Distribution::student_t, 1.0 - alpha / 2.0, std::max(2.0 / kappa, 1.0));
      for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (coverage(mid) < target ? lo : hi) = mid;
      }
      return hi;
    }
  }
  return z;
}

MomentMatrices moment_matrices(const WorkingModel& model, const Dataset& data, const Vector& theta) {
  const Matrix scores = model.scores(data, theta);
  const Matrix hsum = model.hessian_sum(data, theta);
  if (!scores.allFinite() || !hsum.allFinite())
    throw Error(ErrorCode::numeric_domain, "score or Hessian is not finite");
  const double n = static_cast<double>(data.n());
  MomentMatrices out;
  out.A = symmetrize(-hsum / n);
  out.B = weighted_meat(scores, Vector::Ones(data.n()));
  out.at = ParamPoint{theta, std::nullopt};
  out.n = data.n();
  return out;
}

Matrix sandwich_cov(const WorkingModel& model, const Dataset& data) {
  return sandwich_cov(model, data, mle_fit(model, data));
}

Matrix sandwich_cov(const WorkingModel& model, const Dataset& data, const ParamPoint& fit) {
  const MomentMatrices mm = moment_matrices(model, data, fit.theta);
  return sandwich_from(factor_bread(mm.A), mm.B);
}

Vector leverage(const Dataset& data) {
  const Matrix& X = data.X();
  Eigen::LLT<Matrix> gram(X.transpose() * X);
  if (gram.info() != Eigen::Success)
    throw Error(ErrorCode::singular_design, "design is not of full column rank");
  const Matrix solved = gram.solve(X.transpose());  // p x n
  return (X.array() * solved.transpose().array()).rowwise().sum().matrix();
}

Vector leverage(const WorkingModel& model, const Dataset& data) {
  if (model.kind() == ModelKind::poisson_mean)
    return Vector::Constant(data.n(), 1.0 / static_cast<double>(data.n()));
  model.validate(data);
  return leverage(data);
}

Vector meat_weights(CorrectionKind kind, const Vector& h) {
  switch (kind) {
    case CorrectionKind::hc1:
    case CorrectionKind::hc3: {
      if ((h.array() >= kLeverageCeiling).any())
        throw Error(ErrorCode::degenerate_leverage, "leverage of one makes the correction undefined");
      const Vector w = (1.0 - h.array()).inverse().matrix();
      return kind == CorrectionKind::hc1 ? w : Vector(w.array().square().matrix());
    }
    case CorrectionKind::hc5:
      return (1.0 - h.array().min(kHc5LeverageCap)).inverse().matrix();
    default:
      return Vector::Ones(h.size());
  }
}

CorrectedCovariance corrected_cov(const WorkingModel& model, const Dataset& data, CorrectionKind kind,
                                  const std::optional<Vector>& contrast) {
  return corrected_cov(model, data, mle_fit(model, data), kind, contrast);
}

CorrectedCovariance corrected_cov(const WorkingModel& model, const Dataset& data, const ParamPoint& fit,
                                  CorrectionKind kind, const std::optional<Vector>& contrast) {
  const Index p = model.dimension(data);
  const double n = static_cast<double>(data.n());
  CorrectedCovariance out;
  out.kind = kind;

  if (kind == CorrectionKind::hc4 || kind == CorrectionKind::hc5) {
    if (p > 1 && !contrast)
      throw Error(ErrorCode::unsupported_correction,
                  std::string(to_string(kind)) + " is defined for scalar targets only");
    if (contrast && contrast->size() != p)
      throw Error(ErrorCode::invalid_argument, "contrast length does not match model dimension");
  }

  if (kind == CorrectionKind::mle_info) {
    // Model-based variance uses the fitted nuisance scale, not the working one.
    double scale = 1.0;
    WorkingModel unit = model;
    if (model.has_nuisance()) {
      scale = fit.sigma2.value_or(model.sigma2());
      unit = model.with_sigma2(1.0);
    }
    const MomentMatrices mm = moment_matrices(unit, data, fit.theta);
    const auto bread = factor_bread(mm.A);
    out.cov = symmetrize(bread.solve(Matrix::Identity(p, p))) * (scale / n);
    return out;
  }

  const MomentMatrices mm = moment_matrices(model, data, fit.theta);
  const auto bread = factor_bread(mm.A);
  const Vector h = leverage(model, data);
  Matrix meat = mm.B;
  if (kind == CorrectionKind::hc1 || kind == CorrectionKind::hc3 || kind == CorrectionKind::hc5)
    meat = weighted_meat(model.scores(data, fit.theta), meat_weights(kind, h));
  out.cov = sandwich_from(bread, meat) / n;

  if (kind == CorrectionKind::hc2) {
    if (!(n > static_cast<double>(p)))
      throw Error(ErrorCode::domain, "hc2 needs more observations than parameters");
    out.cov *= n / (n - static_cast<double>(p));
  }
  if (kind == CorrectionKind::hc4 || kind == CorrectionKind::hc5) {
    const Vector l = contrast.value_or(Vector::Ones(1));
    const Matrix design = effective_design(model, data);
    const double df = satterthwaite_df(design, l, meat_weights(kind, h));
    if (kind == CorrectionKind::hc4) {
      out.policy.kind = QuantilePolicy::Kind::adjusted_normal;
      out.policy.kappa = std::isfinite(df) ? 2.0 / df : 0.0;
    } else {
      out.policy.kind = QuantilePolicy::Kind::student_t;
      out.policy.df = df;
    }
  }
  return out;
}

}  // namespace pivotband
