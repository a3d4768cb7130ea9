#include "mindplane/linalg.hpp"

#include "mindplane/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mindplane {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ValidationError("ragged matrix initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double Matrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
  return s;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ValidationError("matrix product: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("matrix sum: shapes differ");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j) + b(i, j);
  return out;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix out = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (auto& x : out.row(i)) x *= s;
  return out;
}

std::vector<double> row_times(std::span<const double> v, const Matrix& m) {
  if (v.size() != m.rows()) throw ValidationError("row vector length does not match matrix rows");
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += v[r] * m(r, c);
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ValidationError("dot: length mismatch");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ValidationError("max_abs_diff: shapes differ");
  double d = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

namespace {

SymmetricEigen eigen_2x2(const Matrix& m) {
  const double a = m(0, 0);
  const double b = 0.5 * (m(0, 1) + m(1, 0));
  const double d = m(1, 1);

  SymmetricEigen out;
  out.vectors = Matrix(2, 2);
  if (b == 0.0) {
    // Already diagonal: keep the axis order stable for equal eigenvalues.
    if (a <= d) {
      out.values = {a, d};
      out.vectors = Matrix::identity(2);
    } else {
      out.values = {d, a};
      out.vectors(1, 0) = 1.0;
      out.vectors(0, 1) = 1.0;
    }
    return out;
  }

  const double mean = 0.5 * (a + d);
  const double radius = std::hypot(0.5 * (a - d), b);
  out.values = {mean - radius, mean + radius};
  for (std::size_t k = 0; k < 2; ++k) {
    const double lambda = out.values[k];
    // Two candidate null vectors of (m - lambda I); take the better conditioned one.
    double x1 = b, y1 = lambda - a;
    double x2 = lambda - d, y2 = b;
    double n1 = std::hypot(x1, y1), n2 = std::hypot(x2, y2);
    double x = n1 >= n2 ? x1 / n1 : x2 / n2;
    double y = n1 >= n2 ? y1 / n1 : y2 / n2;
    out.vectors(0, k) = x;
    out.vectors(1, k) = y;
  }
  return out;
}

SymmetricEigen eigen_jacobi(const Matrix& input) {
  const std::size_t n = input.rows();
  Matrix a = input;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (input(i, j) + input(j, i));
  Matrix v = Matrix::identity(n);

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  for (; sweep < kMaxSweeps && off_norm() >= 1e-12; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (off_norm() >= 1e-12)
    throw ConvergenceError("Jacobi eigensolver did not converge in " + std::to_string(kMaxSweeps) +
                           " sweeps");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  SymmetricEigen out;
  out.vectors = Matrix(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    out.values.push_back(a(order[k], order[k]));
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

} // namespace

SymmetricEigen symmetric_eigen(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw ValidationError("symmetric_eigen: matrix must be square and non-empty");
  if (m.rows() == 1) return {{m(0, 0)}, Matrix::identity(1)};
  if (m.rows() == 2) return eigen_2x2(m);
  return eigen_jacobi(m);
}

} // namespace mindplane
