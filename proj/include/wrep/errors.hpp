#pragma once

#include <stdexcept>
#include <string>

namespace wrep {

// Missing or unreadable/unwritable files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: CSV rows, model files, config documents.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite loss or parameters during optimization.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wrep
