#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "activekoop/common.hpp"

namespace activekoop {

/// In-memory CSV table. Numbers are printed with %.12g so reruns are
/// byte-identical.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row();
  CsvTable& add(double v);
  CsvTable& add(long long v);
  CsvTable& add(int v) { return add(static_cast<long long>(v)); }
  CsvTable& add(const std::string& s);
  CsvTable& add(const char* s) { return add(std::string(s)); }
  CsvTable& add(const Vec& v);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void append(const CsvTable& other);

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string format_number(double v);

struct NumericCsv {
  std::vector<std::string> header;
  Mat data;  // one row per line
};

/// Header line plus rows of numbers. Throws IoError when unreadable and
/// InvalidArgument on ragged or non-numeric rows.
NumericCsv read_numeric_csv(const std::string& path);

/// Creates `dir` (and parents) if needed.
void ensure_directory(const std::string& dir);
void write_text(const std::string& path, const std::string& text);
void write_csv(const std::string& path, const CsvTable& table);

/// {"experiment", "version", "config", plus extras}; pretty-printed with
/// sorted keys.
nlohmann::json make_manifest(const std::string& experiment, const nlohmann::json& config,
                             const nlohmann::json& extra = nlohmann::json::object());
void write_manifest(const std::string& path, const nlohmann::json& manifest);

const char* version_string();

}  // namespace activekoop
