#include "activekoop/experiments/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace activekoop {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

CsvTable& CsvTable::row() {
  if (!rows_.empty() && rows_.back().size() != header_.size()) {
    throw ContractViolation("csv: previous row has " + std::to_string(rows_.back().size()) +
                            " cells, header has " + std::to_string(header_.size()));
  }
  rows_.emplace_back();
  return *this;
}

CsvTable& CsvTable::add(double v) { return add(format_number(v)); }

CsvTable& CsvTable::add(long long v) { return add(std::to_string(v)); }

CsvTable& CsvTable::add(const std::string& s) {
  if (rows_.empty()) throw ContractViolation("csv: add before row");
  if (rows_.back().size() == header_.size()) throw ContractViolation("csv: row is full");
  rows_.back().push_back(s);
  return *this;
}

CsvTable& CsvTable::add(const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
  return *this;
}

std::string CsvTable::str() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os << ',';
      os << cells[i];
    }
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) {
    if (r.size() != header_.size()) throw ContractViolation("csv: incomplete row");
    line(r);
  }
  return os.str();
}

void CsvTable::append(const CsvTable& other) {
  if (other.header_ != header_) throw ContractViolation("csv: header mismatch on append");
  rows_.insert(rows_.end(), other.rows_.begin(), other.rows_.end());
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

void write_csv(const std::string& path, const CsvTable& table) { write_text(path, table.str()); }

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

NumericCsv read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  NumericCsv out;
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  out.header = split(line);
  std::vector<std::vector<double>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != out.header.size()) {
      throw InvalidArgument(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(out.header.size()) + " cells");
    }
    std::vector<double> r;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw InvalidArgument(path + ":" + std::to_string(lineno) + ": not a number '" + c + "'");
      }
      r.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  out.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(out.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return out;
}

const char* version_string() { return "activekoop 0.1.0"; }

nlohmann::json make_manifest(const std::string& experiment, const nlohmann::json& config,
                             const nlohmann::json& extra) {
  nlohmann::json m = extra;
  m["experiment"] = experiment;
  m["version"] = version_string();
  m["config"] = config;
  return m;
}

void write_manifest(const std::string& path, const nlohmann::json& manifest) {
  write_text(path, manifest.dump(2) + "\n");
}

}  // namespace activekoop
