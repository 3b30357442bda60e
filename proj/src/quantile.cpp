#include "pivotband/quantile.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>

#include "pivotband/error.hpp"

namespace pivotband {

double quantile(Distribution dist, double prob, double df) {
  if (!(prob > 0.0 && prob < 1.0))
    throw Error(ErrorCode::domain, "quantile probability must lie strictly between 0 and 1");
  switch (dist) {
    case Distribution::std_normal:
      return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
    case Distribution::chi2:
      if (!(df >= 1.0)) throw Error(ErrorCode::domain, "chi-squared quantile needs df >= 1");
      return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
    case Distribution::student_t:
      if (!(df >= 1.0)) throw Error(ErrorCode::domain, "student t quantile needs df >= 1");
      return boost::math::quantile(boost::math::students_t_distribution<double>(df), prob);
  }
  throw Error(ErrorCode::invalid_argument, "unknown distribution");
}

double normal_cdf(double x) { return boost::math::cdf(boost::math::normal_distribution<double>(), x); }

double normal_pdf(double x) { return boost::math::pdf(boost::math::normal_distribution<double>(), x); }

}  // namespace pivotband
