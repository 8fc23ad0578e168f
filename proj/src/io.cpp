#include "swsim/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace swsim {

namespace {

const std::vector<std::string> kObservationColumns{
    "cluster", "period", "participant", "exposed", "age", "baseline_age",
    "widowed", "baseline_widowed", "outcome"};

const std::vector<std::string> kReplicateColumns{
    "scenario", "theta", "steps", "replicate", "model", "estimate", "se", "df", "p_value",
    "significant", "sigma2_cluster", "sigma2_participant", "sigma2_residual", "converged",
    "wall_time"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool next_line(std::istream& in, std::string& line, std::size_t& number) {
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) return true;
  }
  return false;
}

// Maps each required column to its position in the header.
std::vector<std::size_t> locate(const std::vector<std::string>& header,
                                const std::vector<std::string>& required) {
  std::map<std::string, std::size_t> position;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!position.emplace(header[c], c).second)
      throw DataError(1, "duplicate column '" + header[c] + "'");
  }
  std::vector<std::size_t> index;
  std::string missing;
  for (const auto& name : required) {
    auto it = position.find(name);
    if (it == position.end())
      missing += (missing.empty() ? "" : ", ") + name;
    else
      index.push_back(it->second);
  }
  if (!missing.empty()) throw DataError(1, "missing column(s): " + missing);
  return index;
}

double parse_double(const std::string& text, std::size_t line, const std::string& column) {
  if (text == "nan" || text == "-nan") return std::nan("");
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DataError(line, "column '" + column + "': expected a number, got '" + text + "'");
  return value;
}

long parse_int(const std::string& text, std::size_t line, const std::string& column) {
  long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw DataError(line, "column '" + column + "': expected an integer, got '" + text + "'");
  return value;
}

bool parse_flag(const std::string& text, std::size_t line, const std::string& column) {
  if (text == "0") return false;
  if (text == "1") return true;
  throw DataError(line, "column '" + column + "': expected 0 or 1, got '" + text + "'");
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

void write_observations_csv(std::ostream& out, const ObservationTable& table) {
  for (std::size_t c = 0; c < kObservationColumns.size(); ++c)
    out << (c ? "," : "") << kObservationColumns[c];
  out << '\n';
  for (const auto& o : table.rows) {
    out << o.cluster + 1 << ',' << o.period << ',' << o.participant + 1 << ','
        << (o.exposed ? 1 : 0) << ',' << format_double(o.age) << ','
        << format_double(o.baseline_age) << ',' << (o.widowed ? 1 : 0) << ','
        << (o.baseline_widowed ? 1 : 0) << ',' << format_double(o.outcome) << '\n';
  }
}

ObservationTable read_observations_csv(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) throw DataError(0, "empty file: header row expected");
  const auto header = split(line);
  const auto idx = locate(header, kObservationColumns);

  ObservationTable table;
  while (next_line(in, line, number)) {
    const auto f = split(line);
    if (f.size() != header.size())
      throw DataError(number, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
    auto field = [&](int c) -> const std::string& { return f[idx[c]]; };
    Observation o;
    const long cluster = parse_int(field(0), number, "cluster");
    const long period = parse_int(field(1), number, "period");
    const long participant = parse_int(field(2), number, "participant");
    if (cluster < 1 || participant < 1) throw DataError(number, "cluster and participant are 1-based");
    if (period < 0) throw DataError(number, "period must be non-negative");
    o.cluster = static_cast<int>(cluster - 1);
    o.period = static_cast<int>(period);
    o.participant = static_cast<int>(participant - 1);
    o.exposed = parse_flag(field(3), number, "exposed");
    o.age = parse_double(field(4), number, "age");
    o.baseline_age = parse_double(field(5), number, "baseline_age");
    o.widowed = parse_flag(field(6), number, "widowed");
    o.baseline_widowed = parse_flag(field(7), number, "baseline_widowed");
    o.outcome = parse_double(field(8), number, "outcome");
    if (!std::isfinite(o.outcome) || !std::isfinite(o.age) || !std::isfinite(o.baseline_age))
      throw DataError(number, "non-finite value");
    table.rows.push_back(o);
  }
  if (table.empty()) throw DataError(0, "no data rows");
  return table;
}

void write_replicates_header(std::ostream& out) {
  for (std::size_t c = 0; c < kReplicateColumns.size(); ++c)
    out << (c ? "," : "") << kReplicateColumns[c];
  out << '\n';
}

void write_replicate_row(std::ostream& out, const ReplicateResult& r) {
  out << r.scenario << ',' << format_double(r.theta) << ',' << r.steps << ',' << r.replicate
      << ',' << r.model << ',' << format_double(r.estimate) << ','
      << format_double(r.standard_error) << ',' << format_double(r.df) << ','
      << format_double(r.p_value) << ',' << (r.significant ? 1 : 0) << ','
      << format_double(r.components.cluster) << ',' << format_double(r.components.participant)
      << ',' << format_double(r.components.residual) << ',' << (r.converged ? 1 : 0) << ','
      << format_double(r.wall_time) << '\n';
}

std::vector<ReplicateResult> read_replicates_csv(std::istream& in) {
  std::string line;
  std::size_t number = 0;
  if (!next_line(in, line, number)) throw DataError(0, "empty file: header row expected");
  const auto header = split(line);
  const auto idx = locate(header, kReplicateColumns);
  std::vector<ReplicateResult> out;
  while (next_line(in, line, number)) {
    const auto f = split(line);
    if (f.size() != header.size())
      throw DataError(number, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
    auto field = [&](int c) -> const std::string& { return f[idx[c]]; };
    auto num = [&](int c) { return parse_double(field(c), number, kReplicateColumns[c]); };
    auto integer = [&](int c) {
      return static_cast<int>(parse_int(field(c), number, kReplicateColumns[c]));
    };
    ReplicateResult r;
    r.scenario = field(0);
    r.theta = num(1);
    r.steps = integer(2);
    r.replicate = integer(3);
    r.model = integer(4);
    r.estimate = num(5);
    r.standard_error = num(6);
    r.df = num(7);
    r.p_value = num(8);
    r.significant = parse_flag(field(9), number, "significant");
    r.components = {num(10), num(11), num(12)};
    r.converged = parse_flag(field(13), number, "converged");
    r.wall_time = num(14);
    out.push_back(std::move(r));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<ScenarioSummary>& summaries) {
  out << "scenario,theta,steps,model,n_reps,n_converged,mean_estimate,bias,mc_se,"
         "empirical_sd,mean_se,power\n";
  for (const auto& s : summaries) {
    out << s.scenario << ',' << format_double(s.theta) << ',' << s.steps << ',' << s.model << ','
        << s.n_reps << ',' << s.n_converged << ',' << format_double(s.mean_estimate) << ','
        << format_double(s.bias) << ',' << format_double(s.mc_se) << ','
        << format_double(s.empirical_sd) << ',' << format_double(s.mean_se) << ','
        << format_double(s.power) << '\n';
  }
}

nlohmann::json fit_to_json(const LmmFit& fit) {
  nlohmann::json j;
  j["labels"] = fit.labels;
  std::vector<double> estimates(fit.beta.data(), fit.beta.data() + fit.beta.size());
  std::vector<double> errors;
  for (Eigen::Index c = 0; c < fit.n_fixed; ++c) errors.push_back(fit.standard_error(c));
  j["estimates"] = estimates;
  j["standard_errors"] = errors;
  j["variance_components"] = {{"cluster", fit.components.cluster},
                              {"participant", fit.components.participant},
                              {"residual", fit.components.residual}};
  j["reml_criterion"] = fit.criterion;
  j["converged"] = fit.converged;
  j["evaluations"] = fit.evaluations;
  j["gradient_norm"] = fit.gradient_norm;
  j["n_obs"] = fit.n_obs;
  j["n_fixed"] = fit.n_fixed;
  j["n_clusters"] = fit.n_clusters;
  j["n_participants"] = fit.n_participants;
  return j;
}

nlohmann::json test_to_json(const CoefficientTest& t) {
  return {{"estimate", t.estimate}, {"standard_error", t.standard_error}, {"df", t.df},
          {"t", t.t},               {"p_value", t.p_value},               {"significant", t.significant},
          {"df_fallback", t.df_fallback}};
}

}  // namespace swsim
