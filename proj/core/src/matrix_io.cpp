#include "bilstab/matrix_io.hpp"

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <system_error>

#include <json.hpp>

#include "bilstab/errors.hpp"

namespace bilstab {

using nlohmann::json;

namespace {

json matrix_to_json_value(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json_value(const json& value, const std::string& field) {
  if (!value.is_array()) throw ValidationError("expected nested array for " + field, field);
  const std::size_t rows = value.size();
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  if (!value[0].is_array()) throw ValidationError("expected nested array for " + field, field);
  const std::size_t cols = value[0].size();
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!value[i].is_array() || value[i].size() != cols)
      throw ValidationError("ragged rows in " + field, field);
    for (std::size_t j = 0; j < cols; ++j) {
      if (!value[i][j].is_number()) throw ValidationError("non-numeric entry in " + field, field);
      m(i, j) = value[i][j].get<double>();
    }
  }
  return m;
}

}  // namespace

std::string format_double(double value) {
  // 17 significant digits are always enough to round-trip a double;
  // std::to_chars is locale-independent by definition.
  char buf[40];
  const auto result =
      std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 17);
  return std::string(buf, result.ptr);
}

std::string matrix_to_json(const Eigen::MatrixXd& m) { return matrix_to_json_value(m).dump(); }

Eigen::MatrixXd matrix_from_json(const std::string& text) {
  json parsed;
  try {
    parsed = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ValidationError(std::string("matrix JSON parse error: ") + err.what(), "matrix");
  }
  return matrix_from_json_value(parsed, "matrix");
}

std::string matrix_to_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd matrix_from_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t next = line.find(',', pos);
      std::string cell = line.substr(pos, next == std::string::npos ? next : next - pos);
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(0, 1);
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
      double v = 0.0;
      const auto parsed = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (parsed.ec != std::errc() || parsed.ptr != cell.data() + cell.size())
        throw ValidationError("bad CSV cell '" + cell + "'", "csv");
      row.push_back(v);
      if (next == std::string::npos) break;
      pos = next + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ValidationError("ragged CSV rows", "csv");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

}  // namespace bilstab
