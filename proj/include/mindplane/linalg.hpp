#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace mindplane {

// Small dense row-major matrix. Sizes in this project are tiny (at most 10x10),
// so everything is a plain loop over a std::vector.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> values() const { return data_; }

  Matrix transposed() const;
  double trace() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

// Row vector times matrix: returns v * m (length m.cols()).
std::vector<double> row_times(std::span<const double> v, const Matrix& m);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);

// Largest absolute entry of (a - b).
double max_abs_diff(const Matrix& a, const Matrix& b);

struct SymmetricEigen {
  std::vector<double> values;  // ascending
  Matrix vectors;              // column i is the unit eigenvector of values[i]
};

// Eigen-decomposition of a symmetric matrix. 2x2 is solved in closed form;
// larger matrices use cyclic Jacobi rotations until the off-diagonal
// Frobenius norm drops below 1e-12.
SymmetricEigen symmetric_eigen(const Matrix& m);

} // namespace mindplane
