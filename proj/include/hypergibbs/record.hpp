#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace hypergibbs {

enum class Verdict { pass, fail, report_only };

std::string to_string(Verdict v);
Verdict parse_verdict(std::string_view text);

/// One experiment outcome. params are flat key-values (strings, integers or reals)
/// sufficient to re-run the experiment; results are named reals.
struct ExperimentRecord {
  std::string experiment;
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  std::vector<std::pair<std::string, double>> results;
  Verdict verdict = Verdict::report_only;
  std::string timestamp;

  void set(const std::string& key, double value);
  /// Throws std::out_of_range for a missing key.
  double get(const std::string& key) const;
  bool has(const std::string& key) const;

  /// Single-line JSON. Non-finite reals are written as the strings "inf", "-inf", "nan".
  std::string to_json_line() const;
  static ExperimentRecord from_json_line(std::string_view line);

  /// Results and verdict equal bit for bit (timestamp ignored).
  bool same_outcome(const ExperimentRecord& other) const;
};

/// UTC time in ISO 8601.
std::string utc_timestamp();

/// Appends one line per record.
void write_jsonl(std::ostream& out, const std::vector<ExperimentRecord>& records);
std::vector<ExperimentRecord> read_jsonl(std::istream& in);

/// Header row naming every params and results key (in first-seen order), then one
/// row per record. Missing cells are empty.
void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);

}  // namespace hypergibbs
