#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace mfl {

// Dense row-major matrix. Sized for this project's needs (LoRA factors and
// checkpoints, a few thousand entries), not for BLAS-scale work.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  bool same_shape(const Matrix& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double factor);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

// CSV with a leading "# rows cols" comment line, one row per line, full
// round-trip precision.
void matrix_write_csv(const Matrix& a, const std::filesystem::path& path);
Matrix matrix_read_csv(const std::filesystem::path& path);

}  // namespace mfl
