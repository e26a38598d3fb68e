#pragma once

/// Tabular experiment output shared by all subcommands: CSV with a header
/// row (deterministic, no timing data) or a JSON document carrying the
/// parameters, seed, generator name and wall time alongside the rows.

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace bsmps::cli {

class Report {
 public:
  explicit Report(std::string experiment) : experiment_(std::move(experiment)) {}

  void set_columns(std::vector<std::string> cols) { columns_ = std::move(cols); }
  void param(const std::string& key, nlohmann::json value) { params_[key] = std::move(value); }
  void set_seed(std::uint64_t seed) { seed_ = seed; has_seed_ = true; }
  void set_wall_time(double seconds) { wall_ = seconds; }

  /// Appends a row; cells are numbers or strings.
  void row(std::vector<nlohmann::json> cells);

  std::string csv() const;
  std::string json() const;

  /// Writes CSV or JSON to `path` ("-" for standard output).
  void write(const std::string& path, bool as_json) const;

 private:
  std::string experiment_;
  std::vector<std::string> columns_;
  std::vector<std::vector<nlohmann::json>> rows_;
  nlohmann::json params_ = nlohmann::json::object();
  std::uint64_t seed_ = 0;
  bool has_seed_ = false;
  double wall_ = 0.0;
};

/// Shortest round-trip decimal representation of a double.
std::string format_double(double v);

}  // namespace bsmps::cli
