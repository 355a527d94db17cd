#include "robust_ot/io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "robust_ot/errors.hpp"

namespace robust_ot {

namespace {

std::string location(const std::string& path, std::size_t line,
                     std::size_t col) {
  return path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": ";
}

double parse_number(const std::string& token, const std::string& path,
                    std::size_t line, std::size_t col) {
  std::size_t begin = token.find_first_not_of(" \t\r");
  std::size_t end = token.find_last_not_of(" \t\r");
  if (begin == std::string::npos) {
    throw ParseError(location(path, line, col) + "empty field");
  }
  double value = 0.0;
  const char* first = token.data() + begin;
  const char* last = token.data() + end + 1;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ParseError(location(path, line, col + begin) +
                     "expected a number, got '" + token.substr(begin, end - begin + 1) + "'");
  }
  return value;
}

std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ":1:1: cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (true) {
      std::size_t comma = line.find(',', pos);
      std::string token = line.substr(pos, comma - pos);
      row.push_back(parse_number(token, path, lineno, pos + 1));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(location(path, lineno, 1) + "row has " +
                       std::to_string(row.size()) + " fields, expected " +
                       std::to_string(rows.front().size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path + ":1:1: no data rows");
  return rows;
}

}  // namespace

Vector read_vector_csv(const std::string& path) {
  auto rows = read_rows(path);
  if (rows.front().size() != 1) {
    throw ParseError(path + ":1:1: expected a single-column vector file");
  }
  Vector v(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = rows[i][0];
  }
  return v;
}

Matrix read_matrix_csv(const std::string& path) {
  auto rows = read_rows(path);
  Matrix m(static_cast<Eigen::Index>(rows.size()),
           static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          rows[i][j];
    }
  }
  return m;
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_vector_csv(const std::string& path, const Vector& v) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out << format_double(v[i]) << '\n';
  }
}

void write_matrix_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ":1:1: cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a(buf.str());
}

}  // namespace robust_ot
