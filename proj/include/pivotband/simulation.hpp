#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pivotband/inference.hpp"

namespace pivotband {

enum class ScenarioKind {
  poisson_nb,     // negative binomial counts (mean 3, variance 3.9), Poisson working model
  origin_hetero,  // y = theta x + e, Var e = 1 + |x|, regression through the origin
  slr_hetero,     // y = t0 + t1 x + e, Var e = 1 + |x|, simple linear regression
  slr_homo,       // correctly specified homoscedastic simple linear regression
};

std::string_view to_string(ScenarioKind kind) noexcept;
ScenarioKind parse_scenario(std::string_view name);

struct Scenario {
  ScenarioKind kind = ScenarioKind::poisson_nb;
  /// Pseudo-true parameter of the working model.
  Vector truth;
  /// Negative binomial constants, realised as a Gamma(shape, mean/shape) mixture of Poissons.
  double nb_mean = 3.0;
  double nb_shape = 10.0;

  static Scenario make(ScenarioKind kind);

  WorkingModel model() const;
  Index dimension() const { return truth.size(); }
  /// Every method defined for this scenario's dimension.
  std::vector<Method> default_methods() const;
  double nb_variance() const { return nb_mean + nb_mean * nb_mean / nb_shape; }
};

struct SimConfig {
  Scenario scenario;
  std::vector<Index> n_grid;
  long reps = 2000;
  double alpha = 0.05;
  std::vector<Method> methods;
  std::uint64_t seed = 0;
  /// 0 means PIVOTBAND_THREADS or the hardware concurrency.
  unsigned threads = 0;
};

/// Throws ErrorCode::config on an invalid configuration.
void validate(const SimConfig& config);

struct CoverageRecord {
  std::string scenario;
  Method method = Method::pivot;
  Index n = 0;
  long reps = 0;
  long covered = 0;
  long degenerate = 0;
  std::uint64_t seed = 0;

  long effective_reps() const noexcept { return reps - degenerate; }
  /// covered / (reps - degenerate); NaN when every replicate was degenerate.
  double coverage() const noexcept;
  double mc_stderr() const noexcept;
};

/// Seed of the random stream for one replicate, keyed by every coordinate so
/// that results do not depend on scheduling.
std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t n,
                          std::uint64_t replicate) noexcept;

Dataset gen_dataset(const Scenario& scenario, Index n, std::uint64_t seed, std::uint64_t replicate);

std::vector<CoverageRecord> run_coverage(const SimConfig& config);

struct PopulationConfig {
  std::vector<Index> sizes;
  long reps = 2000;
  double alpha = 0.05;
  std::vector<Method> methods;
  std::uint64_t seed = 0;
  /// When false the intercept is profiled out (sample-centred data) and only
  /// the remaining coefficients form the joint target.
  bool include_intercept = true;
  unsigned threads = 0;
};

/// Repeated simple random samples without replacement from a finite
/// population; the pseudo-true parameter is the OLS fit on the whole population.
std::vector<CoverageRecord> population_study(const Dataset& population, const PopulationConfig& config);

/// Resolved worker count: explicit request, else PIVOTBAND_THREADS, else hardware.
unsigned worker_count(unsigned requested);

}  // namespace pivotband
