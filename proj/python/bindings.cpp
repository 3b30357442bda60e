#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <pivotband/io.hpp>
#include <pivotband/quantile.hpp>
#include <pivotband/simulation.hpp>

#include <limits>

namespace py = pybind11;
namespace pb = pivotband;
using namespace py::literals;

namespace {

pb::Dataset make_data(const pb::Vector& y, const std::optional<pb::Matrix>& X) { return pb::Dataset(y, X); }

pb::WorkingModel make_model(const std::string& kind, double sigma2 = 1.0) {
  return pb::WorkingModel(pb::parse_model_kind(kind), sigma2);
}

pb::Distribution parse_distribution(const std::string& name) {
  if (name == "std_normal" || name == "normal") return pb::Distribution::std_normal;
  if (name == "chi2") return pb::Distribution::chi2;
  if (name == "student_t" || name == "t") return pb::Distribution::student_t;
  throw pb::Error(pb::ErrorCode::invalid_argument, "unknown distribution '" + name + "'");
}

py::dict interval_dict(const pb::IntervalResult& r) {
  return py::dict("method"_a = std::string(pb::to_string(r.method)), "estimate"_a = r.estimate, "lower"_a = r.lower,
                  "upper"_a = r.upper, "lower_bounded"_a = r.lower_bounded, "upper_bounded"_a = r.upper_bounded,
                  "alpha"_a = r.alpha, "quantile"_a = r.quantile_used, "disconnected"_a = r.disconnected);
}

py::list records_list(const std::vector<pb::CoverageRecord>& records) {
  py::list out;
  for (const auto& r : records)
    out.append(py::dict("scenario"_a = r.scenario, "method"_a = std::string(pb::to_string(r.method)), "n"_a = r.n,
                        "reps"_a = r.reps, "covered"_a = r.covered, "degenerate"_a = r.degenerate,
                        "coverage"_a = r.coverage(), "mc_stderr"_a = r.mc_stderr(), "seed"_a = r.seed));
  return out;
}

std::vector<pb::Method> methods_or_default(const std::optional<std::vector<std::string>>& names,
                                           const std::vector<pb::Method>& fallback) {
  if (!names) return fallback;
  std::vector<pb::Method> out;
  for (const auto& n : *names) out.push_back(pb::parse_method(n));
  return out;
}

}  // namespace

PYBIND11_MODULE(_pivotband, m) {
  m.doc() = "Score-pivot confidence intervals and regions under model misspecification";
  m.attr("__version__") = pb::library_version();

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> error_type;
  error_type.call_once_and_store_result(
      [&]() { return py::object(py::exception<pb::Error>(m, "PivotbandError", PyExc_ValueError)); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const pb::Error& e) {
      py::object type = error_type.get_stored();
      py::object inst = type(e.what());
      inst.attr("code") = std::string(pb::to_string(e.code()));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  m.def(
      "fit",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X) {
        const auto fit = pb::mle_fit(make_model(model), make_data(y, X));
        return py::dict("theta"_a = fit.theta, "sigma2"_a = fit.sigma2);
      },
      "model"_a, "y"_a, "X"_a = py::none(), "Maximum-likelihood fit of the working model.");

  m.def(
      "sandwich_cov",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X) {
        return pb::sandwich_cov(make_model(model), make_data(y, X));
      },
      "model"_a, "y"_a, "X"_a = py::none(), "Asymptotic sandwich A^-1 B A^-1 at the MLE (not divided by n).");

  m.def(
      "corrected_cov",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X,
         const std::string& correction, const std::optional<pb::Vector>& contrast) {
        const auto c = pb::corrected_cov(make_model(model), make_data(y, X), pb::parse_correction(correction), contrast);
        return py::dict("cov"_a = c.cov, "df"_a = c.policy.df, "kappa"_a = c.policy.kappa);
      },
      "model"_a, "y"_a, "X"_a = py::none(), "correction"_a = "sandwich", "contrast"_a = py::none(),
      "Covariance of the estimator (divided by n) with a small-sample correction.");

  m.def(
      "pivot_stat",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X, const pb::Vector& theta,
         double sigma2) {
        const auto s = pb::pivot_stat(make_model(model, sigma2), make_data(y, X), theta);
        return py::dict("value"_a = s.value, "qform"_a = s.qform);
      },
      "model"_a, "y"_a, "X"_a = py::none(), "theta"_a, "sigma2"_a = 1.0);

  m.def(
      "covers",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X, const pb::Vector& theta,
         const std::string& method, double alpha, double sigma2) {
        return pb::covers(make_model(model, sigma2), make_data(y, X), theta, pb::parse_method(method), alpha);
      },
      "model"_a, "y"_a, "X"_a = py::none(), "theta"_a, "method"_a = "pivot", "alpha"_a = 0.05, "sigma2"_a = 1.0);

  m.def(
      "interval",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X, const std::string& method,
         double alpha) {
        return interval_dict(pb::interval(make_model(model), make_data(y, X), pb::parse_method(method), alpha));
      },
      "model"_a, "y"_a, "X"_a = py::none(), "method"_a = "pivot", "alpha"_a = 0.05,
      "Confidence interval for a scalar parameter.");

  m.def(
      "region",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X, const std::string& method,
         double alpha, int directions) {
        const auto dirs = pb::circle_directions(directions);
        const auto r = pb::region_boundary(make_model(model), make_data(y, X), pb::parse_method(method), alpha, dirs);
        pb::Matrix u(static_cast<pb::Index>(dirs.size()), 2);
        pb::Vector radius(u.rows());
        std::vector<bool> bounded;
        for (std::size_t k = 0; k < dirs.size(); ++k) {
          u.row(static_cast<pb::Index>(k)) = r.boundary[k].direction.transpose();
          radius[static_cast<pb::Index>(k)] = r.boundary[k].radius;
          bounded.push_back(r.boundary[k].bounded);
        }
        return py::dict("center"_a = r.center.theta, "threshold"_a = r.chi2_threshold, "directions"_a = u,
                        "radius"_a = radius, "bounded"_a = bounded);
      },
      "model"_a, "y"_a, "X"_a, "method"_a = "pivot", "alpha"_a = 0.05, "directions"_a = 72,
      "Joint region boundary: radius along -u from the MLE for evenly spaced unit vectors u.");

  m.def(
      "region_contains",
      [](const std::string& model, const pb::Vector& y, const std::optional<pb::Matrix>& X, const pb::Vector& query,
         const std::string& method, double alpha) {
        return *pb::region_membership(make_model(model), make_data(y, X), pb::parse_method(method), alpha, query)
                    .contains_query;
      },
      "model"_a, "y"_a, "X"_a, "query"_a, "method"_a = "pivot", "alpha"_a = 0.05);

  m.def(
      "generate",
      [](const std::string& scenario, pb::Index n, std::uint64_t seed, std::uint64_t replicate) {
        const auto d = pb::gen_dataset(pb::Scenario::make(pb::parse_scenario(scenario)), n, seed, replicate);
        return py::make_tuple(d.y(), d.has_design() ? py::cast(d.X()) : py::none());
      },
      "scenario"_a, "n"_a, "seed"_a = 0, "replicate"_a = 0, "One simulated dataset; returns (y, X or None).");

  m.def(
      "run_coverage",
      [](const std::string& scenario, std::vector<pb::Index> n_grid, long reps, double alpha,
         const std::optional<std::vector<std::string>>& methods, std::uint64_t seed, unsigned threads) {
        pb::SimConfig c;
        c.scenario = pb::Scenario::make(pb::parse_scenario(scenario));
        c.n_grid = std::move(n_grid);
        c.reps = reps;
        c.alpha = alpha;
        c.methods = methods_or_default(methods, c.scenario.default_methods());
        c.seed = seed;
        c.threads = threads;
        py::gil_scoped_release release;
        auto records = pb::run_coverage(c);
        py::gil_scoped_acquire acquire;
        return records_list(records);
      },
      "scenario"_a, "n_grid"_a, "reps"_a = 2000, "alpha"_a = 0.05, "methods"_a = py::none(), "seed"_a = 0,
      "threads"_a = 0, "Monte Carlo coverage; one record per (n, method).");

  m.def(
      "population_study",
      [](const pb::Vector& y, const pb::Matrix& X, std::vector<pb::Index> sizes, long reps, double alpha,
         const std::optional<std::vector<std::string>>& methods, std::uint64_t seed, bool include_intercept,
         unsigned threads) {
        const pb::Dataset population(y, X);
        pb::PopulationConfig c;
        c.sizes = std::move(sizes);
        c.reps = reps;
        c.alpha = alpha;
        c.methods = methods_or_default(methods, {pb::Method::pivot, pb::Method::sandwich, pb::Method::hc3});
        c.seed = seed;
        c.include_intercept = include_intercept;
        c.threads = threads;
        py::gil_scoped_release release;
        auto records = pb::population_study(population, c);
        py::gil_scoped_acquire acquire;
        return records_list(records);
      },
      "y"_a, "X"_a, "sizes"_a, "reps"_a = 2000, "alpha"_a = 0.05, "methods"_a = py::none(), "seed"_a = 0,
      "include_intercept"_a = true, "threads"_a = 0);

  m.def(
      "quantile",
      [](const std::string& kind, double prob, double df) { return pb::quantile(parse_distribution(kind), prob, df); },
      "kind"_a, "prob"_a, "df"_a = std::numeric_limits<double>::quiet_NaN());
}
