#include "hypergibbs/record.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <ctime>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace hypergibbs {

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::report_only:
      return "report_only";
  }
  return "report_only";
}

Verdict parse_verdict(std::string_view text) {
  if (text == "pass") return Verdict::pass;
  if (text == "fail") return Verdict::fail;
  if (text == "report_only") return Verdict::report_only;
  throw std::invalid_argument("unknown verdict: " + std::string(text));
}

void ExperimentRecord::set(const std::string& key, double value) {
  for (auto& [k, v] : results)
    if (k == key) {
      v = value;
      return;
    }
  results.emplace_back(key, value);
}

double ExperimentRecord::get(const std::string& key) const {
  for (const auto& [k, v] : results)
    if (k == key) return v;
  throw std::out_of_range("no result named " + key);
}

bool ExperimentRecord::has(const std::string& key) const {
  for (const auto& kv : results)
    if (kv.first == key) return true;
  return false;
}

namespace {

nlohmann::ordered_json real_to_json(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double real_from_json(const nlohmann::ordered_json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    throw std::invalid_argument("result value is not a real: " + s);
  }
  if (!j.is_number()) throw std::invalid_argument("result value is not a real");
  return j.get<double>();
}

std::string csv_cell(const nlohmann::ordered_json& j) {
  std::string s = j.is_string() ? j.get<std::string>() : j.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string ExperimentRecord::to_json_line() const {
  nlohmann::ordered_json j;
  j["experiment"] = experiment;
  j["params"] = params;
  nlohmann::ordered_json res = nlohmann::ordered_json::object();
  for (const auto& [k, v] : results) res[k] = real_to_json(v);
  j["results"] = std::move(res);
  j["verdict"] = to_string(verdict);
  j["timestamp"] = timestamp;
  return j.dump();
}

ExperimentRecord ExperimentRecord::from_json_line(std::string_view line) {
  auto j = nlohmann::ordered_json::parse(line);
  ExperimentRecord r;
  r.experiment = j.at("experiment").get<std::string>();
  r.params = j.at("params");
  if (!r.params.is_object()) throw std::invalid_argument("params must be an object");
  for (const auto& [k, v] : j.at("results").items()) r.results.emplace_back(k, real_from_json(v));
  r.verdict = parse_verdict(j.at("verdict").get<std::string>());
  if (j.contains("timestamp")) r.timestamp = j.at("timestamp").get<std::string>();
  return r;
}

bool ExperimentRecord::same_outcome(const ExperimentRecord& other) const {
  if (experiment != other.experiment || verdict != other.verdict || results.size() != other.results.size())
    return false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].first != other.results[i].first) return false;
    if (std::bit_cast<std::uint64_t>(results[i].second) != std::bit_cast<std::uint64_t>(other.results[i].second))
      return false;
  }
  return true;
}

std::string utc_timestamp() {
  std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_jsonl(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  for (const auto& r : records) out << r.to_json_line() << '\n';
}

std::vector<ExperimentRecord> read_jsonl(std::istream& in) {
  std::vector<ExperimentRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(ExperimentRecord::from_json_line(line));
  }
  return out;
}

void write_csv(std::ostream& out, const std::vector<ExperimentRecord>& records) {
  std::vector<std::string> param_keys, result_keys;
  auto note = [](std::vector<std::string>& keys, const std::string& k) {
    for (const auto& existing : keys)
      if (existing == k) return;
    keys.push_back(k);
  };
  for (const auto& r : records) {
    for (const auto& [k, v] : r.params.items()) note(param_keys, k);
    for (const auto& kv : r.results) note(result_keys, kv.first);
  }
  out << "experiment,verdict";
  for (const auto& k : param_keys) out << ',' << csv_cell(k);
  for (const auto& k : result_keys) out << ',' << csv_cell(k);
  out << '\n';
  for (const auto& r : records) {
    out << csv_cell(r.experiment) << ',' << to_string(r.verdict);
    for (const auto& k : param_keys) {
      out << ',';
      if (r.params.contains(k)) out << csv_cell(r.params.at(k));
    }
    for (const auto& k : result_keys) {
      out << ',';
      if (r.has(k)) out << csv_cell(real_to_json(r.get(k)));
    }
    out << '\n';
  }
}

}  // namespace hypergibbs
