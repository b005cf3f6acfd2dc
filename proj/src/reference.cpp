#include <cstdint>

#include "spiq/kernels.hpp"

namespace spiq::reference {
namespace {

template <typename Acc, typename In>
BasicTensor<Acc> matmul_loop(const BasicTensor<In>& a, const BasicTensor<In>& w) {
  detail::check_matmul_shapes(a.shape(), w.shape());
  BasicTensor<Acc> out({a.dim(0), w.dim(1)}, Acc{0});
  for (std::size_t i = 0; i < a.dim(0); ++i)
    for (std::size_t j = 0; j < w.dim(1); ++j) {
      Acc acc = 0;
      for (std::size_t k = 0; k < a.dim(1); ++k)
        acc += static_cast<Acc>(a.at(i, k)) * static_cast<Acc>(w.at(k, j));
      out.at(i, j) = acc;
    }
  return out;
}

template <typename Acc, typename In>
BasicTensor<Acc> conv_loop(const BasicTensor<In>& in, const BasicTensor<In>& ker,
                           const Conv2dParams& p) {
  const Shape os = detail::check_conv_shapes(in.shape(), ker.shape(), p);
  BasicTensor<Acc> out(os, Acc{0});
  const auto pad = static_cast<std::int64_t>(p.padding);
  const auto ih = static_cast<std::int64_t>(in.dim(2)), iw = static_cast<std::int64_t>(in.dim(3));
  for (std::size_t n = 0; n < os[0]; ++n)
    for (std::size_t co = 0; co < os[1]; ++co)
      for (std::size_t oy = 0; oy < os[2]; ++oy)
        for (std::size_t ox = 0; ox < os[3]; ++ox) {
          Acc acc = 0;
          for (std::size_t ci = 0; ci < in.dim(1); ++ci)
            for (std::size_t ky = 0; ky < ker.dim(2); ++ky)
              for (std::size_t kx = 0; kx < ker.dim(3); ++kx) {
                const auto y = static_cast<std::int64_t>(oy * p.stride + ky) - pad;
                const auto x = static_cast<std::int64_t>(ox * p.stride + kx) - pad;
                if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                acc += static_cast<Acc>(in.at(n, ci, y, x)) *
                       static_cast<Acc>(ker.at(co, ci, ky, kx));
              }
          out.at(n, co, oy, ox) = acc;
        }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& input, const Tensor& weights) {
  return matmul_loop<double>(input, weights);
}
Tensor conv2d(const Tensor& input, const Tensor& kernel, const Conv2dParams& p) {
  return conv_loop<double>(input, kernel, p);
}
AccTensor matmul_int(const IntTensor& input, const IntTensor& weights) {
  return matmul_loop<std::int64_t>(input, weights);
}
AccTensor conv2d_int(const IntTensor& input, const IntTensor& kernel, const Conv2dParams& p) {
  return conv_loop<std::int64_t>(input, kernel, p);
}

}  // namespace spiq::reference
