#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "swsim/harness.hpp"
#include "swsim/inference.hpp"
#include "swsim/outcome.hpp"

namespace swsim {

/// Malformed input file; `line` is 1-based (0 when not tied to a line).
class DataError : public std::runtime_error {
 public:
  DataError(std::size_t line, const std::string& message)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest text that reads back to the same double.
std::string format_double(double value);

void write_observations_csv(std::ostream& out, const ObservationTable& table);
/// Columns may come in any order; all nine are required.
ObservationTable read_observations_csv(std::istream& in);

void write_replicates_header(std::ostream& out);
void write_replicate_row(std::ostream& out, const ReplicateResult& r);
std::vector<ReplicateResult> read_replicates_csv(std::istream& in);

void write_summary_csv(std::ostream& out, const std::vector<ScenarioSummary>& summaries);

nlohmann::json fit_to_json(const LmmFit& fit);
nlohmann::json test_to_json(const CoefficientTest& test);

}  // namespace swsim
