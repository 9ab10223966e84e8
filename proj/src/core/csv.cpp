#include "core/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace tscd {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void write_csv(std::ostream& out, const Eigen::MatrixXd& data, bool integer_format) {
  for (long c = 0; c < data.cols(); ++c) {
    if (c) out << ',';
    out << 'X' << c;
  }
  out << '\n';
  char buf[64];
  for (long r = 0; r < data.rows(); ++r) {
    for (long c = 0; c < data.cols(); ++c) {
      if (c) out << ',';
      if (integer_format) {
        out << static_cast<long long>(std::llround(data(r, c)));
      } else {
        auto res = std::to_chars(buf, buf + sizeof(buf), data(r, c));
        out.write(buf, res.ptr - buf);
      }
    }
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Eigen::MatrixXd& data, bool integer_format) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  write_csv(f, data, integer_format);
  if (!f) throw std::runtime_error("write failed: " + path);
}

CsvData read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("CSV is empty, header row required");
  CsvData out;
  out.names = split_line(line);
  const size_t n_cols = out.names.size();
  for (size_t c = 0; c < n_cols; ++c)
    if (out.names[c].empty())
      throw std::runtime_error("empty header name in row 1, column " + std::to_string(c + 1));

  std::vector<std::vector<double>> rows;
  long row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() && in.eof()) break;
    std::vector<std::string> cells = split_line(line);
    if (cells.size() != n_cols)
      throw std::runtime_error("row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) + " cells, expected " +
                               std::to_string(n_cols));
    std::vector<double> vals(n_cols);
    for (size_t c = 0; c < n_cols; ++c) {
      const std::string& cell = cells[c];
      std::string where = "row " + std::to_string(row_no) + ", column " + std::to_string(c + 1);
      if (cell.empty()) throw std::runtime_error("missing value at " + where);
      double v = 0.0;
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
        throw std::runtime_error("malformed number '" + cell + "' at " + where);
      if (!std::isfinite(v)) throw std::runtime_error("non-finite value at " + where);
      vals[c] = v;
    }
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) throw std::runtime_error("CSV has a header but no data rows");
  out.values.resize(static_cast<long>(rows.size()), static_cast<long>(n_cols));
  for (size_t r = 0; r < rows.size(); ++r)
    for (size_t c = 0; c < n_cols; ++c)
      out.values(static_cast<long>(r), static_cast<long>(c)) = rows[r][c];
  return out;
}

CsvData read_csv_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return read_csv(f);
}

std::optional<int> first_constant_column(const Eigen::MatrixXd& data) {
  for (long c = 0; c < data.cols(); ++c) {
    double first = data(0, c);
    bool constant = true;
    for (long r = 1; r < data.rows() && constant; ++r) constant = data(r, c) == first;
    if (constant) return static_cast<int>(c);
  }
  return std::nullopt;
}

}  // namespace tscd
