// pivotband: command-line front end for intervals, regions and coverage studies.

#include <CLI11.hpp>

#include <pivotband/io.hpp>

#include <iostream>
#include <sstream>

namespace pb = pivotband;

namespace {

int exit_code(pb::ErrorCode code) {
  switch (code) {
    case pb::ErrorCode::invalid_argument:
    case pb::ErrorCode::config: return 2;
    case pb::ErrorCode::io: return 4;
    default: return 3;
  }
}

void report_error(std::string_view category, std::string_view message) {
  std::cerr << nlohmann::json{{"error", category}, {"message", message}}.dump() << '\n';
}

struct DataArgs {
  std::string path;
  std::string response = "y";
  std::string covariates;
  bool no_intercept = false;
  std::string values;

  void attach(CLI::App* cmd) {
    cmd->add_option("--data", path, "CSV file with a header row");
    cmd->add_option("--response", response, "Response column")->capture_default_str();
    cmd->add_option("--covariates", covariates, "Comma-separated covariate columns");
    cmd->add_flag("--no-intercept", no_intercept, "Do not prepend an intercept column (linear model)");
    cmd->add_option("--values", values, "Inline responses, e.g. 1,2,3 (no covariates)");
  }

  pb::Dataset load(pb::ModelKind kind, std::ostream& log) const {
    if (!values.empty()) {
      if (!path.empty()) throw pb::Error(pb::ErrorCode::invalid_argument, "use either --data or --values");
      std::vector<double> ys;
      for (const auto& v : pb::split_list(values)) {
        try {
          std::size_t used = 0;
          ys.push_back(std::stod(v, &used));
          if (used != v.size()) throw std::invalid_argument(v);
        } catch (const std::exception&) {
          throw pb::Error(pb::ErrorCode::parse, "non-numeric value '" + v + "' in --values");
        }
      }
      return pb::Dataset(Eigen::Map<const pb::Vector>(ys.data(), static_cast<pb::Index>(ys.size())));
    }
    if (path.empty()) throw pb::Error(pb::ErrorCode::invalid_argument, "--data or --values is required");
    const bool intercept = kind == pb::ModelKind::linear_regression && !no_intercept;
    auto loaded = pb::load_csv(path, response, pb::split_list(covariates), intercept);
    log << "# rows=" << loaded.total_rows << " complete=" << loaded.data.n() << " dropped=" << loaded.dropped
        << '\n';
    return std::move(loaded.data);
  }

  nlohmann::json echo() const {
    return {{"data", path}, {"response", response}, {"covariates", covariates},
            {"intercept", !no_intercept}, {"values", values}};
  }
};

int dispatch(const std::vector<std::string>& args);

std::vector<std::string> as_args(int argc, char** argv) { return {argv, argv + argc}; }

int run(const std::vector<std::string>& args) {
  CLI::App app{"Pivot-based and sandwich-based confidence intervals under model misspecification"};
  app.set_version_flag("--version", pb::library_version());
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage study on a synthetic scenario");
  std::string scenario_name = "poisson_nb";
  std::string grid = "10:100:10";
  long reps = 2000;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  std::string methods;
  std::string out;
  unsigned threads = 0;
  sim->add_option("--scenario", scenario_name, "poisson_nb | origin_hetero | slr_hetero | slr_homo")
      ->capture_default_str();
  sim->add_option("--n", grid, "Sample sizes, start:stop:step or a list")->capture_default_str();
  sim->add_option("--reps", reps, "Replicates per sample size")->capture_default_str();
  sim->add_option("--alpha", alpha, "One minus the confidence level")->capture_default_str();
  sim->add_option("--seed", seed, "Master seed")->capture_default_str();
  sim->add_option("--methods", methods, "Comma-separated methods (default: all valid)");
  sim->add_option("--out", out, "Coverage CSV path")->capture_default_str();
  sim->add_option("--threads", threads, "Worker threads (default PIVOTBAND_THREADS or all cores)");

  // ci
  auto* ci = app.add_subcommand("ci", "Confidence intervals for a scalar parameter");
  std::string model_name = "poisson";
  std::string ci_methods = "pivot,sandwich";
  std::string ci_out;
  DataArgs ci_data;
  ci->add_option("--model", model_name, "poisson | origin | linear")->capture_default_str();
  ci->add_option("--method", ci_methods, "Comma-separated methods")->capture_default_str();
  ci->add_option("--alpha", alpha, "One minus the confidence level")->capture_default_str();
  ci->add_option("--out", ci_out, "Also write the table to this CSV");
  ci_data.attach(ci);

  // region
  auto* region = app.add_subcommand("region", "Joint confidence region for a multi-parameter model");
  std::string region_model = "linear";
  std::string region_methods = "pivot,sandwich";
  int directions = 72;
  std::string query;
  std::string region_out;
  DataArgs region_data;
  region->add_option("--model", region_model, "linear")->capture_default_str();
  region->add_option("--method", region_methods, "Comma-separated methods")->capture_default_str();
  region->add_option("--alpha", alpha, "One minus the confidence level")->capture_default_str();
  region->add_option("--directions", directions, "Boundary directions for p = 2")->capture_default_str();
  region->add_option("--query", query, "Comma-separated parameter vector to test for membership");
  region->add_option("--out", region_out, "Output CSV (boundary polyline or verdicts)");
  region_data.attach(region);

  // population
  auto* pop = app.add_subcommand("population", "Coverage from repeated subsamples of a finite population");
  DataArgs pop_data;
  std::string sizes = "20:100:20";
  std::string pop_methods = "mle_info,sandwich,hc1,hc2,hc3,pivot";
  bool exclude_intercept = false;
  std::string pop_out;
  pop_data.attach(pop);
  pop->add_option("--sizes", sizes, "Sample sizes, start:stop:step or a list")->capture_default_str();
  pop->add_option("--reps", reps, "Replicates per size")->capture_default_str();
  pop->add_option("--alpha", alpha, "One minus the confidence level")->capture_default_str();
  pop->add_option("--seed", seed, "Master seed")->capture_default_str();
  pop->add_option("--methods", pop_methods, "Comma-separated methods")->capture_default_str();
  pop->add_flag("--exclude-intercept", exclude_intercept, "Leave the intercept out of the joint target");
  pop->add_option("--out", pop_out, "Coverage CSV path")->capture_default_str();
  pop->add_option("--threads", threads, "Worker threads");

  // rerun
  auto* rerun = app.add_subcommand("rerun", "Re-execute the command recorded in a manifest");
  std::string manifest_file;
  rerun->add_option("manifest", manifest_file, "Path to a .manifest.json file")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    report_error("usage", e.what());
    return 2;
  }

  const std::vector<std::string> recorded(args.begin() + 1, args.end());
  pb::RunManifest manifest;
  manifest.argv = recorded;
  manifest.seed = seed;
  manifest.started = pb::utc_timestamp();

  if (*sim) {
    if (out.empty()) out = "coverage.csv";
    pb::SimConfig cfg;
    cfg.scenario = pb::Scenario::make(pb::parse_scenario(scenario_name));
    cfg.n_grid = pb::parse_grid(grid);
    cfg.reps = reps;
    cfg.alpha = alpha;
    cfg.methods = methods.empty() ? cfg.scenario.default_methods() : pb::parse_methods(methods);
    cfg.seed = seed;
    cfg.threads = threads;
    const auto records = pb::run_coverage(cfg);
    pb::write_coverage_csv(records, out);
    manifest.command = "simulate";
    manifest.config = {{"scenario", scenario_name}, {"n", grid}, {"reps", reps}, {"alpha", alpha},
                       {"methods", methods}, {"out", out}};
    manifest.assumptions = pb::scenario_assumptions(cfg.scenario);
    manifest.outputs = {out};
    manifest.finished = pb::utc_timestamp();
    pb::write_manifest(manifest, out);
    std::cout << "wrote " << records.size() << " coverage rows to " << out << '\n';
    return 0;
  }

  if (*ci) {
    const pb::WorkingModel model(pb::parse_model_kind(model_name));
    const pb::Dataset data = ci_data.load(model.kind(), std::cerr);
    std::ostringstream table;
    table << "method,estimate,lower,upper,lower_bounded,upper_bounded,quantile,width\n";
    for (pb::Method m : pb::parse_methods(ci_methods)) {
      const auto r = pb::interval(model, data, m, alpha);
      table << pb::to_string(m) << ',' << pb::format_number(r.estimate) << ',' << pb::format_number(r.lower) << ','
            << pb::format_number(r.upper) << ',' << r.lower_bounded << ',' << r.upper_bounded << ','
            << pb::format_number(r.quantile_used) << ',' << pb::format_number(r.upper - r.lower) << '\n';
    }
    std::cout << table.str();
    if (!ci_out.empty()) {
      pb::atomic_write(ci_out, table.str());
      manifest.command = "ci";
      manifest.config = ci_data.echo();
      manifest.config["model"] = model_name;
      manifest.config["methods"] = ci_methods;
      manifest.config["alpha"] = alpha;
      manifest.outputs = {ci_out};
      manifest.finished = pb::utc_timestamp();
      pb::write_manifest(manifest, ci_out);
    }
    return 0;
  }

  if (*region) {
    const pb::WorkingModel model(pb::parse_model_kind(region_model));
    const pb::Dataset data = region_data.load(model.kind(), std::cerr);
    const pb::Index p = model.dimension(data);
    std::ostringstream table;
    if (!query.empty()) {
      std::vector<double> q;
      for (const auto& v : pb::split_list(query)) q.push_back(std::stod(v));
      if (static_cast<pb::Index>(q.size()) != p)
        throw pb::Error(pb::ErrorCode::invalid_argument, "--query length does not match the model dimension");
      const pb::Vector point = Eigen::Map<const pb::Vector>(q.data(), p);
      table << "method,threshold,contains\n";
      for (pb::Method m : pb::parse_methods(region_methods)) {
        const auto r = pb::region_membership(model, data, m, alpha, point);
        table << pb::to_string(m) << ',' << pb::format_number(r.chi2_threshold) << ','
              << (*r.contains_query ? 1 : 0) << '\n';
      }
    } else {
      if (p != 2)
        throw pb::Error(pb::ErrorCode::invalid_argument, "boundary polylines need p = 2; pass --query for p > 2");
      table << "method,index,direction_1,direction_2,radius,bounded,theta_1,theta_2\n";
      const auto dirs = pb::circle_directions(directions);
      for (pb::Method m : pb::parse_methods(region_methods)) {
        const auto r = pb::region_boundary(model, data, m, alpha, dirs);
        for (std::size_t k = 0; k < r.boundary.size(); ++k) {
          const auto& b = r.boundary[k];
          const pb::Vector pt = r.center.theta - b.radius * b.direction;
          table << pb::to_string(m) << ',' << k << ',' << pb::format_number(b.direction[0]) << ','
                << pb::format_number(b.direction[1]) << ',' << pb::format_number(b.radius) << ',' << b.bounded
                << ',' << pb::format_number(pt[0]) << ',' << pb::format_number(pt[1]) << '\n';
        }
      }
    }
    if (region_out.empty()) {
      std::cout << table.str();
    } else {
      pb::atomic_write(region_out, table.str());
      manifest.command = "region";
      manifest.config = region_data.echo();
      manifest.config["methods"] = region_methods;
      manifest.config["alpha"] = alpha;
      manifest.config["directions"] = directions;
      manifest.config["query"] = query;
      manifest.outputs = {region_out};
      manifest.finished = pb::utc_timestamp();
      pb::write_manifest(manifest, region_out);
      std::cout << "wrote " << region_out << '\n';
    }
    return 0;
  }

  if (*pop) {
    if (pop_out.empty()) pop_out = "population.csv";
    const pb::Dataset data = pop_data.load(pb::ModelKind::linear_regression, std::cerr);
    pb::PopulationConfig cfg;
    cfg.sizes = pb::parse_grid(sizes);
    cfg.reps = reps;
    cfg.alpha = alpha;
    cfg.methods = pb::parse_methods(pop_methods);
    cfg.seed = seed;
    cfg.include_intercept = !exclude_intercept;
    cfg.threads = threads;
    const auto records = pb::population_study(data, cfg);
    pb::write_coverage_csv(records, pop_out);
    manifest.command = "population";
    manifest.config = pop_data.echo();
    manifest.config["sizes"] = sizes;
    manifest.config["reps"] = reps;
    manifest.config["alpha"] = alpha;
    manifest.config["methods"] = pop_methods;
    manifest.config["exclude_intercept"] = exclude_intercept;
    manifest.assumptions = {{"subsample", "simple random sample without replacement"},
                            {"pseudo_truth", "OLS on all complete cases"},
                            {"intercept_in_target", !exclude_intercept}};
    manifest.outputs = {pop_out};
    manifest.finished = pb::utc_timestamp();
    pb::write_manifest(manifest, pop_out);
    std::cout << "wrote " << records.size() << " coverage rows to " << pop_out << '\n';
    return 0;
  }

  if (*rerun) {
    const auto recorded_run = pb::manifest_from_json(nlohmann::json::parse(pb::read_file(manifest_file), nullptr, false));
    std::vector<std::string> again{args.front()};
    again.insert(again.end(), recorded_run.argv.begin(), recorded_run.argv.end());
    if (again.size() > 1 && again[1] == "rerun")
      throw pb::Error(pb::ErrorCode::config, "manifest records a rerun; refusing to recurse");
    return dispatch(again);
  }
  return 0;
}

int dispatch(const std::vector<std::string>& args) {
  try {
    return run(args);
  } catch (const pb::Error& e) {
    report_error(pb::to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return dispatch(as_args(argc, argv)); }
