#include "mfl/matrix.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mfl/io.hpp"

namespace mfl {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(op) + ": shapes " + std::to_string(a.rows) + "x" +
                                std::to_string(a.cols) + " and " + std::to_string(b.rows) + "x" +
                                std::to_string(b.cols) + " differ");
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols) + " and " +
                                std::to_string(b.rows) + " differ");
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix add");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += b.data[i];
  return out;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix subtract");
  Matrix out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b.data[i];
  return out;
}

Matrix scaled(const Matrix& a, double factor) {
  Matrix out = a;
  for (double& v : out.data) v *= factor;
  return out;
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  if (a.cols != x.size())
    throw std::invalid_argument("matvec: matrix has " + std::to_string(a.cols) +
                                " columns, vector has " + std::to_string(x.size()) + " entries");
  std::vector<double> out(a.rows, 0.0);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) sum += a(i, j) * x[j];
    out[i] = sum;
  }
  return out;
}

double frobenius_norm(const Matrix& a) {
  double sum = 0.0;
  for (double v : a.data) sum += v * v;
  return std::sqrt(sum);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "matrix compare");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

void matrix_write_csv(const Matrix& a, const std::filesystem::path& path) {
  std::string out = "# " + std::to_string(a.rows) + " " + std::to_string(a.cols) + "\n";
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t j = 0; j < a.cols; ++j) {
      if (j) out += ',';
      out += fmt_double(a(i, j));
    }
    out += '\n';
  }
  write_text_file(path, out);
}

Matrix matrix_read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line) || line.size() < 2 || line[0] != '#')
    throw std::runtime_error(path.string() + ": missing '# rows cols' header");
  std::istringstream header(line.substr(1));
  std::size_t rows = 0, cols = 0;
  if (!(header >> rows >> cols) || rows == 0 || cols == 0)
    throw std::runtime_error(path.string() + ": bad '# rows cols' header: " + line);

  Matrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line))
      throw std::runtime_error(path.string() + ": expected " + std::to_string(rows) +
                               " rows, got " + std::to_string(i));
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != cols)
      throw std::runtime_error(path.string() + ": row " + std::to_string(i) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(cols));
    for (std::size_t j = 0; j < cols; ++j)
      out(i, j) = parse_double(fields[j], path.string() + " row " + std::to_string(i));
  }
  return out;
}

}  // namespace mfl
