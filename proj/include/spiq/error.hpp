#pragma once

#include <stdexcept>
#include <string>

namespace spiq {

/// Base for every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not compose.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid quantization / model configuration (bad bit-width, missing BN, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// An internal invariant was violated (overflow bound, payload/mode mismatch).
class InvariantError : public Error {
 public:
  using Error::Error;
};

enum class FormatErrorKind {
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kTruncated,
  kLengthMismatch,
  kUnknownLayerKind,
  kMalformedManifest,
  kInconsistent,
};

const char* to_string(FormatErrorKind kind);

/// SPIQMDL1 container could not be read or written.
class FormatError : public Error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace spiq
