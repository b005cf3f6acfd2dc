#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spiq/error.hpp"

namespace spiq {

using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array of rank 1, 2 or 4 (NCHW for activations and kernels).
template <typename T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;
  explicit BasicTensor(Shape shape);
  BasicTensor(Shape shape, std::vector<T> data);
  BasicTensor(Shape shape, T fill);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const T> values() const noexcept { return data_; }
  std::span<T> values() noexcept { return data_; }
  const T* data() const noexcept { return data_.data(); }
  T* data() noexcept { return data_.data(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  T& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const T& at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }
  const T& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return data_[((n * shape_[1] + c) * shape_[2] + h) * shape_[3] + w];
  }

  /// Same data, new shape of equal element count.
  BasicTensor reshaped(Shape shape) const;

  bool operator==(const BasicTensor&) const = default;

 private:
  void validate() const;

  Shape shape_;
  std::vector<T> data_;
};

using Tensor = BasicTensor<double>;
using IntTensor = BasicTensor<std::int32_t>;
/// 64-bit integer accumulators of the quantized kernels.
using AccTensor = BasicTensor<std::int64_t>;

extern template class BasicTensor<double>;
extern template class BasicTensor<std::int32_t>;
extern template class BasicTensor<std::int64_t>;

/// Number of samples (leading extent) and features per sample.
inline std::size_t batch_size(const Tensor& t) { return t.dim(0); }
std::size_t per_sample_size(const Shape& shape);

}  // namespace spiq
