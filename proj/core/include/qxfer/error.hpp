#pragma once

#include <stdexcept>
#include <string>

namespace qxfer {

/// Malformed or inconsistent input data (files, volumes, schemes).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical operation could not produce a meaningful result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qxfer
