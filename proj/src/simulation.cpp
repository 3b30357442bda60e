#include "pivotband/simulation.hpp"

#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/poisson_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace pivotband {
namespace {

enum Outcome : std::uint8_t { kMissed = 0, kCovered = 1, kDegenerate = 2 };

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Runs body(i) for i in [0, count) on `workers` threads. The first exception
// thrown by any worker is rethrown on the caller.
template <typename Body>
void parallel_for(std::size_t count, unsigned workers, Body&& body) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Coverage outcome of every method on one dataset. Library errors mark the
// method degenerate for this replicate; anything else propagates.
void evaluate_methods(const WorkingModel& model, const Dataset& data, const Vector& truth,
                      const std::vector<Method>& methods, double alpha, std::uint8_t* outcomes) {
  std::optional<ParamPoint> fit;
  try {
    fit = mle_fit(model, data);
  } catch (const Error&) {
    std::fill(outcomes, outcomes + methods.size(), kDegenerate);
    return;
  }
  for (std::size_t m = 0; m < methods.size(); ++m) {
    try {
      outcomes[m] = covers(model, data, *fit, truth, methods[m], alpha) ? kCovered : kMissed;
    } catch (const Error&) {
      outcomes[m] = kDegenerate;
    }
  }
}

CoverageRecord tally(std::string scenario, Method method, Index n, std::uint64_t seed,
                     const std::vector<std::uint8_t>& outcomes, std::size_t method_index,
                     std::size_t method_count, long reps) {
  CoverageRecord rec{std::move(scenario), method, n, reps, 0, 0, seed};
  for (long r = 0; r < reps; ++r) {
    const auto o = outcomes[static_cast<std::size_t>(r) * method_count + method_index];
    if (o == kCovered) ++rec.covered;
    if (o == kDegenerate) ++rec.degenerate;
  }
  return rec;
}

void check_methods(const std::vector<Method>& methods, Index p) {
  if (methods.empty()) throw Error(ErrorCode::config, "no methods requested");
  for (Method m : methods)
    if (!supports_dimension(m, p))
      throw Error(ErrorCode::config, std::string(to_string(m)) + " is not defined for a " +
                                         std::to_string(p) + "-dimensional target");
}

void check_alpha_reps(double alpha, long reps) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::config, "alpha must lie in (0, 1)");
  if (reps < 1) throw Error(ErrorCode::config, "reps must be at least 1");
}

}  // namespace

std::string_view to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::poisson_nb: return "poisson_nb";
    case ScenarioKind::origin_hetero: return "origin_hetero";
    case ScenarioKind::slr_hetero: return "slr_hetero";
    case ScenarioKind::slr_homo: return "slr_homo";
  }
  return "unknown";
}

ScenarioKind parse_scenario(std::string_view name) {
  if (name == "poisson_nb") return ScenarioKind::poisson_nb;
  if (name == "origin_hetero") return ScenarioKind::origin_hetero;
  if (name == "slr_hetero") return ScenarioKind::slr_hetero;
  if (name == "slr_homo") return ScenarioKind::slr_homo;
  throw Error(ErrorCode::config, "unknown scenario '" + std::string(name) + "'");
}

Scenario Scenario::make(ScenarioKind kind) {
  Scenario s;
  s.kind = kind;
  switch (kind) {
    case ScenarioKind::poisson_nb: s.truth = Vector::Constant(1, s.nb_mean); break;
    case ScenarioKind::origin_hetero: s.truth = Vector::Constant(1, 1.0); break;
    case ScenarioKind::slr_hetero:
    case ScenarioKind::slr_homo: s.truth = Vector::Constant(2, 1.0); break;
  }
  return s;
}

WorkingModel Scenario::model() const {
  switch (kind) {
    case ScenarioKind::poisson_nb: return WorkingModel(ModelKind::poisson_mean);
    case ScenarioKind::origin_hetero: return WorkingModel(ModelKind::origin_regression);
    default: return WorkingModel(ModelKind::linear_regression);
  }
}

std::vector<Method> Scenario::default_methods() const {
  std::vector<Method> out = {Method::mle_info, Method::sandwich, Method::hc1, Method::hc2, Method::hc3};
  if (dimension() == 1) {
    out.push_back(Method::hc4);
    out.push_back(Method::hc5);
  }
  out.push_back(Method::pivot);
  return out;
}

void validate(const SimConfig& config) {
  check_alpha_reps(config.alpha, config.reps);
  if (config.n_grid.empty()) throw Error(ErrorCode::config, "sample-size grid is empty");
  for (std::size_t i = 0; i < config.n_grid.size(); ++i) {
    if (config.n_grid[i] < 2) throw Error(ErrorCode::config, "sample sizes must be at least 2");
    if (i > 0 && config.n_grid[i] <= config.n_grid[i - 1])
      throw Error(ErrorCode::config, "sample-size grid must be strictly increasing");
  }
  check_methods(config.methods, config.scenario.dimension());
  const Index expected = config.scenario.kind == ScenarioKind::poisson_nb ||
                                 config.scenario.kind == ScenarioKind::origin_hetero
                             ? 1
                             : 2;
  if (config.scenario.truth.size() != expected)
    throw Error(ErrorCode::config, "scenario truth has the wrong dimension");
}

double CoverageRecord::coverage() const noexcept {
  const long eff = effective_reps();
  if (eff <= 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(covered) / static_cast<double>(eff);
}

double CoverageRecord::mc_stderr() const noexcept {
  const double c = coverage();
  return std::sqrt(c * (1.0 - c) / static_cast<double>(effective_reps()));
}

std::uint64_t stream_seed(std::uint64_t seed, std::string_view stream, std::uint64_t n,
                          std::uint64_t replicate) noexcept {
  std::uint64_t tag = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : stream) tag = (tag ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ tag);
  h = splitmix64(h ^ n);
  return splitmix64(h ^ replicate);
}

Dataset gen_dataset(const Scenario& scenario, Index n, std::uint64_t seed, std::uint64_t replicate) {
  if (n < 2) throw Error(ErrorCode::config, "generated datasets need n >= 2");
  std::mt19937_64 rng(stream_seed(seed, to_string(scenario.kind), static_cast<std::uint64_t>(n), replicate));
  Vector y(n);
  if (scenario.kind == ScenarioKind::poisson_nb) {
    boost::random::gamma_distribution<double> rate(scenario.nb_shape, scenario.nb_mean / scenario.nb_shape);
    for (Index i = 0; i < n; ++i) {
      boost::random::poisson_distribution<long, double> counts(rate(rng));
      y[i] = static_cast<double>(counts(rng));
    }
    return Dataset(std::move(y));
  }

  boost::random::normal_distribution<double> normal(0.0, 1.0);
  const bool origin = scenario.kind == ScenarioKind::origin_hetero;
  const bool hetero = scenario.kind != ScenarioKind::slr_homo;
  Matrix X(n, origin ? 1 : 2);
  for (Index i = 0; i < n; ++i) {
    const double x = normal(rng);
    const double sd = hetero ? std::sqrt(1.0 + std::abs(x)) : 1.0;
    const double noise = sd * normal(rng);
    if (origin) {
      X(i, 0) = x;
      y[i] = scenario.truth[0] * x + noise;
    } else {
      X(i, 0) = 1.0;
      X(i, 1) = x;
      y[i] = scenario.truth[0] + scenario.truth[1] * x + noise;
    }
  }
  return Dataset(std::move(y), std::move(X));
}

unsigned worker_count(unsigned requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("PIVOTBAND_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<CoverageRecord> run_coverage(const SimConfig& config) {
  validate(config);
  const WorkingModel model = config.scenario.model();
  const std::size_t mcount = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.reps);
  const unsigned workers = worker_count(config.threads);
  const std::string name(to_string(config.scenario.kind));

  std::vector<CoverageRecord> records;
  records.reserve(config.n_grid.size() * mcount);
  std::vector<std::uint8_t> outcomes(reps * mcount);
  for (Index n : config.n_grid) {
    parallel_for(reps, workers, [&](std::size_t r) {
      const Dataset data = gen_dataset(config.scenario, n, config.seed, r);
      evaluate_methods(model, data, config.scenario.truth, config.methods, config.alpha, &outcomes[r * mcount]);
    });
    for (std::size_t m = 0; m < mcount; ++m)
      records.push_back(tally(name, config.methods[m], n, config.seed, outcomes, m, mcount, config.reps));
  }
  return records;
}

std::vector<CoverageRecord> population_study(const Dataset& population, const PopulationConfig& config) {
  check_alpha_reps(config.alpha, config.reps);
  const WorkingModel model(ModelKind::linear_regression);
  model.validate(population);
  const Index N = population.n();
  const Matrix& Xpop = population.X();
  if (config.sizes.empty()) throw Error(ErrorCode::config, "no sample sizes requested");
  for (Index s : config.sizes) {
    if (s < 1) throw Error(ErrorCode::config, "sample sizes must be positive");
    if (s > N)
      throw Error(ErrorCode::config, "sample size " + std::to_string(s) + " exceeds population size " +
                                         std::to_string(N));
  }

  Vector truth = mle_fit(model, population).theta;
  Index intercept = -1;
  if (!config.include_intercept) {
    for (Index j = 0; j < Xpop.cols() && intercept < 0; ++j)
      if ((Xpop.col(j).array() == 1.0).all()) intercept = j;
    if (intercept < 0) throw Error(ErrorCode::config, "no intercept column to exclude");
    if (Xpop.cols() < 2) throw Error(ErrorCode::config, "excluding the intercept leaves no coefficients");
  }
  std::vector<Index> keep;
  for (Index j = 0; j < Xpop.cols(); ++j)
    if (j != intercept) keep.push_back(j);
  const Vector target = truth(keep);
  check_methods(config.methods, static_cast<Index>(keep.size()));

  const std::size_t mcount = config.methods.size();
  const auto reps = static_cast<std::size_t>(config.reps);
  const unsigned workers = worker_count(config.threads);
  std::vector<CoverageRecord> records;
  std::vector<std::uint8_t> outcomes(reps * mcount);

  for (Index size : config.sizes) {
    parallel_for(reps, workers, [&](std::size_t r) {
      std::mt19937_64 rng(stream_seed(config.seed, "population", static_cast<std::uint64_t>(size), r));
      std::vector<Index> idx(static_cast<std::size_t>(N));
      std::iota(idx.begin(), idx.end(), Index{0});
      for (Index i = 0; i < size; ++i) {
        boost::random::uniform_int_distribution<Index> pick(i, N - 1);
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(pick(rng))]);
      }
      idx.resize(static_cast<std::size_t>(size));
      std::sort(idx.begin(), idx.end());

      Vector y = population.y()(idx);
      Matrix X = Xpop(idx, keep);
      if (intercept >= 0) {
        y.array() -= y.mean();
        X.rowwise() -= X.colwise().mean();
      }
      std::uint8_t* out = &outcomes[r * mcount];
      try {
        const Dataset sample(std::move(y), std::move(X));
        evaluate_methods(model, sample, target, config.methods, config.alpha, out);
      } catch (const Error&) {
        std::fill(out, out + mcount, kDegenerate);
      }
    });
    for (std::size_t m = 0; m < mcount; ++m)
      records.push_back(tally("population", config.methods[m], size, config.seed, outcomes, m, mcount, config.reps));
  }
  return records;
}

}  // namespace pivotband
