#pragma once

#include <span>

#include "spiq/tensor.hpp"

namespace spiq {

struct Conv2dParams {
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool operator==(const Conv2dParams&) const = default;
};

/// Output spatial extent of a convolution, or DimensionError when the kernel
/// does not fit inside the padded input.
std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dParams& p);

// OpenMP kernels. Every output element is accumulated by a single thread in
// a fixed order, so results are bit-identical for any thread count and equal
// to the serial versions in spiq::reference.
namespace kernels {

/// [batch x n_in] * [n_in x n_out].
Tensor matmul(const Tensor& input, const Tensor& weights);

/// NCHW input, [Cout x Cin x k x k] kernel, zero padding, no kernel flip.
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dParams& p);

/// Integer products accumulated in 64 bits.
AccTensor matmul_int(const IntTensor& input, const IntTensor& weights);
AccTensor conv2d_int(const IntTensor& input, const IntTensor& kernel, const Conv2dParams& p);

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor relu(const Tensor& t);

/// Multiplies channel c (axis 1, or axis 0 for vectors) by factors[c].
Tensor scale_channels(const Tensor& t, std::span<const double> factors);

/// t * scale[c] + shift[c] along the channel axis.
Tensor affine_channels(const Tensor& t, std::span<const double> scale,
                       std::span<const double> shift);

}  // namespace kernels

// Plain serial loops kept as the baseline for tests and benchmarks.
namespace reference {

Tensor matmul(const Tensor& input, const Tensor& weights);
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dParams& p);
AccTensor matmul_int(const IntTensor& input, const IntTensor& weights);
AccTensor conv2d_int(const IntTensor& input, const IntTensor& kernel, const Conv2dParams& p);

}  // namespace reference

namespace detail {

void check_matmul_shapes(const Shape& input, const Shape& weights);
/// Returns the output shape.
Shape check_conv_shapes(const Shape& input, const Shape& kernel, const Conv2dParams& p);
/// Channel axis and inner (spatial) extent for channel-wise ops.
struct ChannelLayout {
  std::size_t outer = 1;
  std::size_t channels = 1;
  std::size_t inner = 1;
};
ChannelLayout channel_layout(const Shape& shape);

}  // namespace detail

}  // namespace spiq
