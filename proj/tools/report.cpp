#include "report.hpp"

#include "bsmps/types.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>

namespace bsmps::cli {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void Report::row(std::vector<nlohmann::json> cells) {
  if (cells.size() != columns_.size()) throw Error("report row has wrong number of cells");
  rows_.push_back(std::move(cells));
}

std::string Report::csv() const {
  std::ostringstream os;
  for (size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << '\n';
  for (const auto& r : rows_) {
    for (size_t i = 0; i < r.size(); ++i) {
      if (i) os << ',';
      const auto& c = r[i];
      if (c.is_number_float())
        os << format_double(c.get<double>());
      else if (c.is_string())
        os << c.get<std::string>();
      else
        os << c.dump();
    }
    os << '\n';
  }
  return os.str();
}

std::string Report::json() const {
  nlohmann::json j;
  j["experiment"] = experiment_;
  j["parameters"] = params_;
  if (has_seed_) {
    j["seed"] = seed_;
    j["rng"] = kRngAlgorithm;
  }
  j["wall_time_s"] = wall_;
  j["columns"] = columns_;
  j["rows"] = rows_;
  return j.dump(1) + "\n";
}

void Report::write(const std::string& path, bool as_json) const {
  const std::string text = as_json ? json() : csv();
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << text;
}

}  // namespace bsmps::cli
