#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace mic {

/// Dense row-major 2D array of doubles. Index (i, j) = (row / y, column / x).
class Field2D {
 public:
  Field2D() = default;
  Field2D(std::size_t rows, std::size_t cols, double value = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, value) {}

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }
  [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i < rows_ && j < cols_);
    return data_[i * cols_ + j];
  }

  [[nodiscard]] std::span<double> flat() noexcept { return data_; }
  [[nodiscard]] std::span<const double> flat() const noexcept { return data_; }
  [[nodiscard]] double* data() noexcept { return data_.data(); }
  [[nodiscard]] const double* data() const noexcept { return data_.data(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  [[nodiscard]] bool same_shape(const Field2D& o) const noexcept {
    return rows_ == o.rows_ && cols_ == o.cols_;
  }

  friend bool operator==(const Field2D&, const Field2D&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Inclusive index rectangle [i0, i1] x [j0, j1].
struct IndexBox {
  long i0 = 0, i1 = -1, j0 = 0, j1 = -1;

  [[nodiscard]] bool contains(long i, long j) const noexcept {
    return i >= i0 && i <= i1 && j >= j0 && j <= j1;
  }
  [[nodiscard]] long rows() const noexcept { return i1 - i0 + 1; }
  [[nodiscard]] long cols() const noexcept { return j1 - j0 + 1; }
  [[nodiscard]] bool empty() const noexcept { return i1 < i0 || j1 < j0; }
  friend bool operator==(const IndexBox&, const IndexBox&) = default;
};

}  // namespace mic
