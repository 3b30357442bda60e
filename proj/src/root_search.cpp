#include "pivotband/root_search.hpp"

#include <algorithm>
#include <cmath>

#include "pivotband/error.hpp"

namespace pivotband {

Crossing find_crossing(const std::function<std::optional<double>(double)>& f, double origin,
                       int direction, const CrossingOptions& options) {
  if (direction != 1 && direction != -1)
    throw Error(ErrorCode::invalid_argument, "search direction must be +1 or -1");
  if (!(options.initial_step > 0.0) || !std::isfinite(options.initial_step))
    throw Error(ErrorCode::invalid_argument, "initial step must be positive and finite");

  Crossing out;
  const double sign = static_cast<double>(direction);
  const auto reaches_edge = [&](double x) {
    return std::isfinite(options.domain_edge) && sign * (x - options.domain_edge) >= 0.0;
  };

  double inside = origin;
  double last_trial = origin;
  int k = 0;
  for (; k < options.max_expansions; ++k) {
    double trial = origin + sign * options.initial_step * std::ldexp(1.0, k);
    if (reaches_edge(trial)) trial = last_trial + 0.5 * (options.domain_edge - last_trial);
    last_trial = trial;
    const auto value = f(trial);
    if (!value) continue;
    if (*value >= 0.0) {
      out.found = true;
      out.outside = trial;
      break;
    }
    inside = trial;
  }
  out.expansions = std::min(k + 1, options.max_expansions);
  if (!out.found) {
    out.inside = inside;
    return out;
  }

  // Remaining budget: look for re-entry into the set beyond the crossing.
  double probe = out.outside;
  for (int j = k + 1; j < options.max_expansions; ++j) {
    double trial = origin + sign * options.initial_step * std::ldexp(1.0, j);
    if (reaches_edge(trial)) trial = probe + 0.5 * (options.domain_edge - probe);
    probe = trial;
    const auto value = f(trial);
    if (value && *value < 0.0) {
      out.reentry = true;
      break;
    }
  }

  out.expansion_inside = inside;
  out.expansion_outside = out.outside;
  double lo = inside;
  double hi = out.outside;
  for (int it = 0; it < 400; ++it) {
    const double scale = std::max(std::abs(lo), std::abs(hi));
    if (std::abs(hi - lo) <= options.rel_tol * scale || scale == 0.0) break;
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    ++out.bisections;
    const auto value = f(mid);
    // Undefined points (all scores zero) sit at the centre of the set.
    if (!value || *value < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  out.inside = lo;
  out.outside = hi;
  out.root = 0.5 * (lo + hi);
  return out;
}

}  // namespace pivotband
