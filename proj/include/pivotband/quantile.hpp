#pragma once

#include <limits>

namespace pivotband {

enum class Distribution { std_normal, chi2, student_t };

/// Inverse CDF. df is required for chi2 and student_t and ignored otherwise.
double quantile(Distribution dist, double prob,
                double df = std::numeric_limits<double>::quiet_NaN());

double normal_cdf(double x);
double normal_pdf(double x);

}  // namespace pivotband
