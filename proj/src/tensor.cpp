#include "spiq/tensor.hpp"

#include <functional>
#include <numeric>
#include <sstream>

namespace spiq {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::kIo: return "io error";
    case FormatErrorKind::kBadMagic: return "bad magic";
    case FormatErrorKind::kUnsupportedVersion: return "unsupported version";
    case FormatErrorKind::kTruncated: return "truncated file";
    case FormatErrorKind::kLengthMismatch: return "manifest/blob length mismatch";
    case FormatErrorKind::kUnknownLayerKind: return "unknown layer kind";
    case FormatErrorKind::kMalformedManifest: return "malformed manifest";
    case FormatErrorKind::kInconsistent: return "inconsistent content";
  }
  return "format error";
}

std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::size_t per_sample_size(const Shape& shape) {
  if (shape.empty()) return 0;
  return element_count(shape) / shape[0];
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape) : shape_(std::move(shape)), data_(element_count(shape_)) {
  validate();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  validate();
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {
  validate();
}

template <typename T>
void BasicTensor<T>::validate() const {
  const auto r = shape_.size();
  if (r != 1 && r != 2 && r != 4)
    throw DimensionError("tensor rank must be 1, 2 or 4, got shape " + shape_str(shape_));
  for (auto e : shape_)
    if (e == 0) throw DimensionError("zero extent in shape " + shape_str(shape_));
  if (element_count(shape_) != data_.size())
    throw DimensionError("shape " + shape_str(shape_) + " does not match " +
                         std::to_string(data_.size()) + " elements");
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  return BasicTensor(std::move(shape), data_);
}

template class BasicTensor<double>;
template class BasicTensor<std::int32_t>;
template class BasicTensor<std::int64_t>;

}  // namespace spiq
