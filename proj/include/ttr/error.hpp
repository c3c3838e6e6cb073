#pragma once

#include <stdexcept>
#include <string>

namespace ttr {

/// Raised for malformed or inconsistent input data (files, records, ids).
/// Precondition violations on arguments use std::invalid_argument instead.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FormatErrorKind {
  BadMagic,
  UnsupportedVersion,
  Truncated,
  NonFinite,
  Corrupt,
};

/// Binary container errors (EMB1 / BMI1).
class FormatError : public DataError {
 public:
  FormatError(FormatErrorKind kind, const std::string& what)
      : DataError(what), kind_(kind) {}

  FormatErrorKind kind() const noexcept { return kind_; }

 private:
  FormatErrorKind kind_;
};

}  // namespace ttr
