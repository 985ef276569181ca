#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dsnn {

/// Binary activity vector; each entry is 0 or 1.
using SpikeVector = std::vector<std::uint8_t>;

/// Thrown when shapes or parameters do not agree with each other.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double &operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

  bool operator==(const Matrix &) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Indices of the nonzero entries of a spike vector, ascending.
inline std::vector<std::size_t> active_indices(std::span<const std::uint8_t> bits) {
  std::vector<std::size_t> idx;
  for (std::size_t j = 0; j < bits.size(); ++j)
    if (bits[j]) idx.push_back(j);
  return idx;
}

inline std::size_t count_active(std::span<const std::uint8_t> bits) {
  std::size_t n = 0;
  for (auto b : bits) n += b ? 1 : 0;
  return n;
}

} // namespace dsnn
