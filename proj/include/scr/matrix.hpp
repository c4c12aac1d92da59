#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace scr {

using NodeId = std::size_t;

// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// a * b
Matrix matmul(const Matrix& a, const Matrix& b);
// transpose(a) * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
// a * transpose(b)
Matrix matmul_nt(const Matrix& a, const Matrix& b);

Matrix gather_rows(const Matrix& m, std::span<const NodeId> ids);
// Stacks a on top of b (column counts must agree unless one side is empty).
Matrix vstack(const Matrix& a, const Matrix& b);
Matrix hconcat(std::span<const Matrix> blocks);
// Rows [begin, end) as a new matrix.
Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end);

double max_abs_diff(const Matrix& a, const Matrix& b);

// argmax per row; ties resolve to the lowest index.
std::size_t argmax(std::span<const double> row);

}  // namespace scr
