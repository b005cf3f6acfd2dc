#include "spiq/kernels.hpp"

#include <algorithm>
#include <cstdint>

namespace spiq {

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, const Conv2dParams& p) {
  if (p.stride == 0) throw DimensionError("convolution stride must be >= 1");
  const std::size_t padded = in + 2 * p.padding;
  if (kernel > padded)
    throw DimensionError("kernel extent " + std::to_string(kernel) +
                         " larger than padded input extent " + std::to_string(padded));
  return (padded - kernel) / p.stride + 1;
}

namespace detail {

void check_matmul_shapes(const Shape& input, const Shape& weights) {
  if (input.size() != 2 || weights.size() != 2 || input[1] != weights[0])
    throw DimensionError("matmul shape mismatch: " + shape_str(input) + " x " +
                         shape_str(weights));
}

Shape check_conv_shapes(const Shape& input, const Shape& kernel, const Conv2dParams& p) {
  if (input.size() != 4 || kernel.size() != 4)
    throw DimensionError("conv2d expects rank-4 input and kernel, got " + shape_str(input) +
                         " and " + shape_str(kernel));
  if (input[1] != kernel[1])
    throw DimensionError("conv2d channel mismatch: input " + shape_str(input) + " kernel " +
                         shape_str(kernel));
  if (kernel[2] != kernel[3])
    throw DimensionError("conv2d kernel must be square, got " + shape_str(kernel));
  return {input[0], kernel[0], conv_output_extent(input[2], kernel[2], p),
          conv_output_extent(input[3], kernel[3], p)};
}

ChannelLayout channel_layout(const Shape& shape) {
  switch (shape.size()) {
    case 1: return {1, shape[0], 1};
    case 2: return {shape[0], shape[1], 1};
    case 4: return {shape[0], shape[1], shape[2] * shape[3]};
    default: throw DimensionError("unsupported rank for channel op: " + shape_str(shape));
  }
}

}  // namespace detail

namespace kernels {
namespace {

template <typename Acc, typename In>
BasicTensor<Acc> matmul_impl(const BasicTensor<In>& input, const BasicTensor<In>& weights) {
  detail::check_matmul_shapes(input.shape(), weights.shape());
  const std::size_t rows = input.dim(0), inner = input.dim(1), cols = weights.dim(1);
  BasicTensor<Acc> out({rows, cols}, Acc{0});
  const In* a = input.data();
  const In* w = weights.data();
  Acc* c = out.data();
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(rows); ++i) {
    Acc* crow = c + i * cols;
    const In* arow = a + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const Acc av = static_cast<Acc>(arow[k]);
      const In* wrow = w + k * cols;
      for (std::size_t j = 0; j < cols; ++j) crow[j] += av * static_cast<Acc>(wrow[j]);
    }
  }
  return out;
}

template <typename Acc, typename In>
BasicTensor<Acc> conv2d_impl(const BasicTensor<In>& input, const BasicTensor<In>& kernel,
                             const Conv2dParams& p) {
  const Shape out_shape = detail::check_conv_shapes(input.shape(), kernel.shape(), p);
  const std::size_t n_batch = out_shape[0], cout = out_shape[1];
  const std::size_t oh = out_shape[2], ow = out_shape[3];
  const std::size_t cin = input.dim(1), ih = input.dim(2), iw = input.dim(3);
  const std::size_t k = kernel.dim(2);
  const auto pad = static_cast<std::int64_t>(p.padding);
  BasicTensor<Acc> out(out_shape, Acc{0});
  const std::int64_t planes = static_cast<std::int64_t>(n_batch * cout);
#pragma omp parallel for schedule(static)
  for (std::int64_t plane = 0; plane < planes; ++plane) {
    const std::size_t n = plane / cout, co = plane % cout;
    Acc* dst = out.data() + plane * oh * ow;
    for (std::size_t ci = 0; ci < cin; ++ci) {
      const In* src = input.data() + (n * cin + ci) * ih * iw;
      const In* ker = kernel.data() + (co * cin + ci) * k * k;
      for (std::size_t ky = 0; ky < k; ++ky) {
        for (std::size_t kx = 0; kx < k; ++kx) {
          const Acc kv = static_cast<Acc>(ker[ky * k + kx]);
          for (std::size_t oy = 0; oy < oh; ++oy) {
            const std::int64_t y = static_cast<std::int64_t>(oy * p.stride + ky) - pad;
            if (y < 0 || y >= static_cast<std::int64_t>(ih)) continue;
            const In* srow = src + y * iw;
            Acc* drow = dst + oy * ow;
            for (std::size_t ox = 0; ox < ow; ++ox) {
              const std::int64_t x = static_cast<std::int64_t>(ox * p.stride + kx) - pad;
              if (x < 0 || x >= static_cast<std::int64_t>(iw)) continue;
              drow[ox] += static_cast<Acc>(srow[x]) * kv;
            }
          }
        }
      }
    }
  }
  return out;
}

template <typename F>
Tensor zip(const Tensor& a, const Tensor& b, F f, const char* name) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(name) + " shape mismatch: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  Tensor out(a.shape());
  const auto n = static_cast<std::int64_t>(a.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = f(a[i], b[i]);
  return out;
}

}  // namespace

Tensor matmul(const Tensor& input, const Tensor& weights) {
  return matmul_impl<double>(input, weights);
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dParams& p) {
  return conv2d_impl<double>(input, kernel, p);
}

AccTensor matmul_int(const IntTensor& input, const IntTensor& weights) {
  return matmul_impl<std::int64_t>(input, weights);
}

AccTensor conv2d_int(const IntTensor& input, const IntTensor& kernel, const Conv2dParams& p) {
  return conv2d_impl<std::int64_t>(input, kernel, p);
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x + y; }, "add");
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return zip(a, b, [](double x, double y) { return x * y; }, "mul");
}

Tensor relu(const Tensor& t) {
  Tensor out(t.shape());
  const auto n = static_cast<std::int64_t>(t.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) out[i] = std::max(t[i], 0.0);
  return out;
}

Tensor affine_channels(const Tensor& t, std::span<const double> scale,
                       std::span<const double> shift) {
  const auto l = detail::channel_layout(t.shape());
  if (scale.size() != l.channels || shift.size() != l.channels)
    throw DimensionError("channel vector of length " + std::to_string(scale.size()) +
                         " does not match " + std::to_string(l.channels) + " channels of " +
                         shape_str(t.shape()));
  Tensor out(t.shape());
  const auto rows = static_cast<std::int64_t>(l.outer * l.channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t c = r % l.channels;
    const std::size_t base = r * l.inner;
    for (std::size_t i = 0; i < l.inner; ++i) out[base + i] = t[base + i] * scale[c] + shift[c];
  }
  return out;
}

Tensor scale_channels(const Tensor& t, std::span<const double> factors) {
  const auto l = detail::channel_layout(t.shape());
  if (factors.size() != l.channels)
    throw DimensionError("channel vector of length " + std::to_string(factors.size()) +
                         " does not match " + std::to_string(l.channels) + " channels of " +
                         shape_str(t.shape()));
  Tensor out(t.shape());
  const auto rows = static_cast<std::int64_t>(l.outer * l.channels);
#pragma omp parallel for schedule(static)
  for (std::int64_t r = 0; r < rows; ++r) {
    const std::size_t c = r % l.channels;
    const std::size_t base = r * l.inner;
    for (std::size_t i = 0; i < l.inner; ++i) out[base + i] = t[base + i] * factors[c];
  }
  return out;
}

}  // namespace kernels
}  // namespace spiq
