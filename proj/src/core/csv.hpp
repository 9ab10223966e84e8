#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tscd {

struct CsvData {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
};

// Writes a header row X0..X{N-1} followed by one row per time step.
// integer_format prints whole numbers without a decimal point (discrete
// data); otherwise shortest exact float representation.
void write_csv(std::ostream& out, const Eigen::MatrixXd& data, bool integer_format);
void write_csv_file(const std::string& path, const Eigen::MatrixXd& data, bool integer_format);

// Parses a complete CSV with a mandatory header. Malformed cells, ragged
// rows, NaN/infinite values throw std::runtime_error naming the row and
// column (1-based, header is row 1).
CsvData read_csv(std::istream& in);
CsvData read_csv_file(const std::string& path);

// Index of the first column with zero variance, if any.
std::optional<int> first_constant_column(const Eigen::MatrixXd& data);

}  // namespace tscd
