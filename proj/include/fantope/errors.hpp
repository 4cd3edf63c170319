#pragma once

#include <stdexcept>
#include <string>

namespace fantope {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input: non-finite entries, dimension mismatches, out-of-range k.
class InputError : public Error {
 public:
  using Error::Error;
};

// QR of a numerically rank-deficient matrix; a GOI step cannot continue.
class DegenerateFrameError : public Error {
 public:
  using Error::Error;
};

// A dual certificate could not be built (no eigen-gap, or misaligned point).
class CertificateError : public Error {
 public:
  using Error::Error;
};

// Invalid run configuration (harness level).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fantope
