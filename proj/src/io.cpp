#include "pivotband/io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace pivotband {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV record; double quotes may wrap a field and "" escapes a quote.
std::vector<std::string> split_record(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

bool is_missing(std::string_view cell) {
  return cell.empty() || cell == "NA" || cell == "na" || cell == "NaN" || cell == "nan" || cell == "N/A";
}

std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

template <typename Int>
Int parse_integer(std::string_view s, std::string_view what) {
  Int v{};
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::parse, "expected an integer for " + std::string(what) + ", got '" + std::string(s) + "'");
  return v;
}

std::vector<std::string> read_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string line;
  std::istringstream in{std::string(text)};
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::string& path, std::string_view content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + tmp + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::io, "write to '" + tmp + "' failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::io, "cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
}

LoadResult load_csv(const std::string& path, std::string_view response, const std::vector<std::string>& covariates,
                    bool add_intercept) {
  const auto lines = read_lines(read_file(path));
  if (lines.empty()) throw Error(ErrorCode::empty_data, "'" + path + "' has no header");
  const auto header = split_record(lines.front());
  std::unordered_map<std::string, std::size_t> where;
  for (std::size_t j = 0; j < header.size(); ++j) where.emplace(header[j], j);

  std::vector<std::string> wanted{std::string(response)};
  wanted.insert(wanted.end(), covariates.begin(), covariates.end());
  std::vector<std::size_t> cols;
  for (const auto& name : wanted) {
    const auto it = where.find(name);
    if (it == where.end()) throw Error(ErrorCode::parse, "column '" + name + "' not found in '" + path + "'");
    cols.push_back(it->second);
  }

  std::vector<std::vector<double>> rows;
  Index dropped = 0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_record(lines[r]);
    std::vector<double> row;
    row.reserve(cols.size());
    bool missing = false;
    for (std::size_t k = 0; k < cols.size(); ++k) {
      const std::string_view cell = cols[k] < fields.size() ? std::string_view(fields[cols[k]]) : std::string_view();
      if (is_missing(cell)) {
        missing = true;
        continue;
      }
      const auto v = parse_double(cell);
      if (!v)
        throw Error(ErrorCode::parse, "non-numeric value '" + std::string(cell) + "' at row " + std::to_string(r) +
                                          ", column '" + wanted[k] + "'");
      row.push_back(*v);
    }
    if (missing) {
      ++dropped;
      continue;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(ErrorCode::empty_data, "no complete rows in '" + path + "'");

  const auto n = static_cast<Index>(rows.size());
  Vector y(n);
  for (Index i = 0; i < n; ++i) y[i] = rows[static_cast<std::size_t>(i)][0];
  std::optional<Matrix> X;
  std::vector<std::string> labels;
  const Index offset = add_intercept ? 1 : 0;
  const auto p = static_cast<Index>(covariates.size()) + offset;
  if (p > 0) {
    X = Matrix(n, p);
    if (add_intercept) {
      X->col(0).setOnes();
      labels.emplace_back(kInterceptLabel);
    }
    for (Index j = offset; j < p; ++j)
      for (Index i = 0; i < n; ++i) (*X)(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j - offset + 1)];
    labels.insert(labels.end(), covariates.begin(), covariates.end());
  }
  return LoadResult{Dataset(std::move(y), std::move(X), std::move(labels)), dropped,
                    static_cast<Index>(lines.size() - 1)};
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_dataset_csv(const Dataset& data, const std::string& path, std::string_view response) {
  std::ostringstream out;
  out << response;
  const Index p = data.columns();
  for (Index j = 0; j < p; ++j) {
    out << ',';
    if (static_cast<Index>(data.labels().size()) == p)
      out << data.labels()[static_cast<std::size_t>(j)];
    else
      out << 'x' << (j + 1);
  }
  out << '\n';
  for (Index i = 0; i < data.n(); ++i) {
    out << format_number(data.y()[i]);
    for (Index j = 0; j < p; ++j) out << ',' << format_number(data.X()(i, j));
    out << '\n';
  }
  atomic_write(path, out.str());
}

std::vector<std::string> split_list(std::string_view list) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t end = std::min(list.find(',', start), list.size());
    const auto item = trim(list.substr(start, end - start));
    if (!item.empty()) out.emplace_back(item);
    start = end + 1;
  }
  return out;
}

std::vector<Index> parse_grid(std::string_view spec) {
  std::vector<Index> out;
  if (spec.find(':') != std::string_view::npos) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t pos; (pos = spec.find(':', start)) != std::string_view::npos; start = pos + 1)
      parts.push_back(spec.substr(start, pos - start));
    parts.push_back(spec.substr(start));
    if (parts.size() != 3) throw Error(ErrorCode::config, "grid must be start:stop:step");
    const auto first = parse_integer<Index>(parts[0], "grid start");
    const auto last = parse_integer<Index>(parts[1], "grid stop");
    const auto step = parse_integer<Index>(parts[2], "grid step");
    if (step <= 0) throw Error(ErrorCode::config, "grid step must be positive");
    if (last < first) throw Error(ErrorCode::config, "grid stop is below start");
    for (Index v = first; v <= last; v += step) out.push_back(v);
  } else {
    for (const auto& item : split_list(spec)) out.push_back(parse_integer<Index>(item, "grid entry"));
  }
  if (out.empty()) throw Error(ErrorCode::config, "grid is empty");
  for (std::size_t i = 1; i < out.size(); ++i)
    if (out[i] <= out[i - 1]) throw Error(ErrorCode::config, "grid must be strictly increasing");
  return out;
}

std::string coverage_csv(const std::vector<CoverageRecord>& records) {
  std::ostringstream out;
  for (std::size_t j = 0; j < kCoverageColumns.size(); ++j) out << (j ? "," : "") << kCoverageColumns[j];
  out << '\n';
  for (const auto& r : records) {
    out << r.scenario << ',' << to_string(r.method) << ',' << r.n << ',' << r.reps << ',' << r.covered << ','
        << r.degenerate << ',' << format_number(r.coverage()) << ',' << format_number(r.mc_stderr()) << ','
        << r.seed << '\n';
  }
  return out.str();
}

std::vector<CoverageRecord> parse_coverage_csv(std::string_view text) {
  const auto lines = read_lines(text);
  if (lines.empty() || split_record(lines.front()) != kCoverageColumns)
    throw Error(ErrorCode::parse, "coverage table header does not match schema version " +
                                      std::to_string(kCoverageSchemaVersion));
  std::vector<CoverageRecord> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_record(lines[i]);
    if (f.size() != kCoverageColumns.size())
      throw Error(ErrorCode::parse, "coverage row " + std::to_string(i) + " has the wrong field count");
    CoverageRecord r;
    r.scenario = f[0];
    r.method = parse_method(f[1]);
    r.n = parse_integer<Index>(f[2], "n");
    r.reps = parse_integer<long>(f[3], "reps");
    r.covered = parse_integer<long>(f[4], "covered");
    r.degenerate = parse_integer<long>(f[5], "degenerate");
    r.seed = parse_integer<std::uint64_t>(f[8], "seed");
    out.push_back(std::move(r));
  }
  return out;
}

void write_coverage_csv(const std::vector<CoverageRecord>& records, const std::string& path) {
  atomic_write(path, coverage_csv(records));
}

std::vector<CoverageRecord> read_coverage_csv(const std::string& path) {
  return parse_coverage_csv(read_file(path));
}

nlohmann::json to_json(const RunManifest& m) {
  return nlohmann::json{{"command", m.command},
                        {"argv", m.argv},
                        {"config", m.config},
                        {"seed", m.seed},
                        {"library_version", library_version()},
                        {"coverage_schema_version", kCoverageSchemaVersion},
                        {"started", m.started},
                        {"finished", m.finished},
                        {"assumptions", m.assumptions},
                        {"outputs", m.outputs}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.argv = j.at("argv").get<std::vector<std::string>>();
    m.config = j.value("config", nlohmann::json::object());
    m.seed = j.value("seed", std::uint64_t{0});
    m.started = j.value("started", "");
    m.finished = j.value("finished", "");
    m.assumptions = j.value("assumptions", nlohmann::json::object());
    m.outputs = j.value("outputs", std::vector<std::string>{});
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("malformed manifest: ") + e.what());
  }
}

std::string manifest_path(const std::string& output) { return output + ".manifest.json"; }

void write_manifest(const RunManifest& manifest, const std::string& output) {
  atomic_write(manifest_path(output), to_json(manifest).dump(2) + "\n");
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string library_version() { return PIVOTBAND_VERSION; }

nlohmann::json scenario_assumptions(const Scenario& scenario) {
  nlohmann::json a;
  a["scenario"] = std::string(to_string(scenario.kind));
  a["truth"] = std::vector<double>(scenario.truth.data(), scenario.truth.data() + scenario.truth.size());
  if (scenario.kind == ScenarioKind::poisson_nb) {
    a["generator"] = "gamma-poisson mixture";
    a["nb_mean"] = scenario.nb_mean;
    a["nb_shape"] = scenario.nb_shape;
    a["nb_variance"] = scenario.nb_variance();
  } else {
    a["covariate_law"] = "standard normal, redrawn per replicate";
    a["noise_sd"] = scenario.kind == ScenarioKind::slr_homo ? "1" : "sqrt(1 + |x|)";
  }
  a["degenerate_replicates"] = "excluded from the coverage denominator and counted";
  return a;
}

}  // namespace pivotband
