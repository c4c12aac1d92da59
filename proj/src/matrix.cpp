#include "scr/matrix.hpp"

#include <cmath>
#include <string>

#include "scr/errors.hpp"
#include "scr/parallel.hpp"

namespace scr {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InputError("Matrix: data length " + std::to_string(data_.size()) +
                     " does not match " + std::to_string(rows_) + "x" +
                     std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw InputError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

bool Matrix::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw InputError("matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.rows()));
  }
  Matrix out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t cols = b.cols();
  parallel_for_rows(a.rows(), inner * cols, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto dst = out.row(i);
      const auto src = a.row(i);
      for (std::size_t k = 0; k < inner; ++k) {
        const double s = src[k];
        if (s == 0.0) continue;
        const auto brow = b.row(k);
        for (std::size_t j = 0; j < cols; ++j) dst[j] += s * brow[j];
      }
    }
  });
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw InputError("matmul_tn: row counts " + std::to_string(a.rows()) + " vs " +
                     std::to_string(b.rows()));
  }
  Matrix out(a.cols(), b.cols());
  const std::size_t n = a.rows();
  parallel_for_rows(a.cols(), n * b.cols(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = 0; r < n; ++r) {
      const auto arow = a.row(r);
      const auto brow = b.row(r);
      for (std::size_t i = begin; i < end; ++i) {
        const double s = arow[i];
        if (s == 0.0) continue;
        auto dst = out.row(i);
        for (std::size_t j = 0; j < brow.size(); ++j) dst[j] += s * brow[j];
      }
    }
  });
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw InputError("matmul_nt: column counts " + std::to_string(a.cols()) + " vs " +
                     std::to_string(b.cols()));
  }
  Matrix out(a.rows(), b.rows());
  parallel_for_rows(a.rows(), a.cols() * b.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto arow = a.row(i);
      for (std::size_t j = 0; j < b.rows(); ++j) {
        const auto brow = b.row(j);
        double acc = 0.0;
        for (std::size_t k = 0; k < arow.size(); ++k) acc += arow[k] * brow[k];
        out(i, j) = acc;
      }
    }
  });
  return out;
}

Matrix gather_rows(const Matrix& m, std::span<const NodeId> ids) {
  Matrix out(ids.size(), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= m.rows()) {
      throw InputError("gather_rows: id " + std::to_string(ids[i]) + " out of range " +
                       std::to_string(m.rows()));
    }
    const auto src = m.row(ids[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  if (a.cols() != b.cols()) throw InputError("vstack: column counts differ");
  std::vector<double> data(a.values().begin(), a.values().end());
  data.insert(data.end(), b.values().begin(), b.values().end());
  return Matrix(a.rows() + b.rows(), a.cols(), std::move(data));
}

Matrix hconcat(std::span<const Matrix> blocks) {
  if (blocks.empty()) return {};
  const std::size_t rows = blocks.front().rows();
  std::size_t cols = 0;
  for (const auto& b : blocks) {
    if (b.rows() != rows) throw InputError("hconcat: row counts differ");
    cols += b.cols();
  }
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    auto dst = out.row(r).begin();
    for (const auto& b : blocks) dst = std::copy(b.row(r).begin(), b.row(r).end(), dst);
  }
  return out;
}

Matrix slice_rows(const Matrix& m, std::size_t begin, std::size_t end) {
  if (begin > end || end > m.rows()) throw InputError("slice_rows: bad range");
  const auto first = m.values().begin() + static_cast<std::ptrdiff_t>(begin * m.cols());
  const auto last = m.values().begin() + static_cast<std::ptrdiff_t>(end * m.cols());
  return Matrix(end - begin, m.cols(), std::vector<double>(first, last));
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InputError("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

std::size_t argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

}  // namespace scr
