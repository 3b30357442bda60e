#pragma once

#include <functional>
#include <limits>
#include <optional>

namespace pivotband {

struct CrossingOptions {
  double initial_step = 1.0;
  int max_expansions = 60;
  double rel_tol = 1e-10;
  /// Boundary of the admissible region on the searched side. Trial points
  /// that would reach it are replaced by halving the remaining gap.
  double domain_edge = std::numeric_limits<double>::infinity();
};

struct Crossing {
  bool found = false;
  double root = std::numeric_limits<double>::quiet_NaN();
  /// Final bracket: f(inside) < 0 <= f(outside).
  double inside = 0.0;
  double outside = 0.0;
  /// Bracket accepted at the end of the expansion phase, before bisection.
  double expansion_inside = 0.0;
  double expansion_outside = 0.0;
  int expansions = 0;
  int bisections = 0;
  /// f went negative again at some expansion point past the crossing.
  bool reentry = false;
};

/// Walks outward from origin (where f < 0) in the given direction (+1 or -1)
/// with doubling steps until f >= 0, then bisects. f returns nullopt for
/// points where it is undefined; those points are skipped.
Crossing find_crossing(const std::function<std::optional<double>(double)>& f, double origin,
                       int direction, const CrossingOptions& options);

}  // namespace pivotband
