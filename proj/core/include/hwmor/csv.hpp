#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace hwmor::csv {

/// Shortest representation that parses back to the same double.
std::string format_double(double value);

/// Strict parse of a full field; returns false on empty or malformed input.
bool parse_double(std::string_view text, double& out);

std::vector<std::string> split_line(std::string_view line, char sep = ',');

struct LabeledMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd values;
};

void write_matrix(const std::filesystem::path& path, const std::vector<std::string>& labels,
                  const Eigen::MatrixXd& values);

/// Header row of labels followed by numeric rows. Errors carry file:line context.
LabeledMatrix read_matrix(const std::filesystem::path& path);

}  // namespace hwmor::csv
