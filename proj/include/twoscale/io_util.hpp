#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace twoscale {

// Shortest round-trip decimal form, locale-independent ('.').
std::string format_double(double x);

// RFC-4180 rows; all values numeric or plain identifiers, so no quoting.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void header(const std::vector<std::string>& names);
  void row(const std::vector<std::string>& cells);
  void row_values(const std::vector<double>& values);

 private:
  struct Impl;
  Impl* impl_;
};

void write_json_file(const nlohmann::json& j, const std::string& path);
nlohmann::json read_json_file(const std::string& path);

void ensure_dir(const std::string& path);

// FNV-1a over file bytes; used by determinism checks.
std::uint64_t hash_file(const std::string& path);

// Least-squares slope and intercept of y against x.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace twoscale
