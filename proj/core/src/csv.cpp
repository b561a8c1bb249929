#include "hwmor/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "hwmor/errors.hpp"

namespace hwmor::csv {

std::string format_double(double value) {
  std::array<char, 64> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc{}) fail(ErrorCode::InvalidArgument, "cannot format number");
  return std::string(buf.data(), end);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

bool parse_double(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::vector<std::string> split_line(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    auto field = trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    out.emplace_back(field);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& labels,
                  const Eigen::MatrixXd& values) {
  if (static_cast<Eigen::Index>(labels.size()) != values.cols())
    fail(ErrorCode::InvalidArgument, "label count does not match column count");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  for (std::size_t j = 0; j < labels.size(); ++j) out << (j ? "," : "") << labels[j];
  out << '\n';
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoError, "write failed for " + path.string());
}

LabeledMatrix read_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  LabeledMatrix result;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::MissingValue, path.string() + ":1: missing header");
  result.labels = split_line(line);
  const auto m = result.labels.size();
  std::vector<double> flat;
  std::size_t rows = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (fields.size() != m) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": expected " << m << " fields, got " << fields.size();
      fail(ErrorCode::MissingValue, msg.str());
    }
    for (std::size_t j = 0; j < m; ++j) {
      double v = 0.0;
      if (!parse_double(fields[j], v)) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": column " << j + 1 << " is not a number";
        fail(ErrorCode::MissingValue, msg.str());
      }
      flat.push_back(v);
    }
    ++rows;
  }
  result.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < m; ++j)
      result.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * m + j];
  return result;
}

}  // namespace hwmor::csv
