#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tam {

// Attribute and embedding matrices are dense, row-major (one row per node).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using NodeId = std::int64_t;
using Index = std::int64_t;

// Error hierarchy. The CLI maps each class to a distinct exit status, so
// every throw site below picks the class by failure kind, not by module.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input file content (bad token, ragged row, out-of-range id).
struct ParseError : Error {
  using Error::Error;
};

// A precondition or invariant on values/shapes does not hold.
struct ValidationError : Error {
  using Error::Error;
};

// Filesystem-level failure (cannot open, cannot write).
struct IoError : Error {
  using Error::Error;
};

// Training aborted; carries the epoch at which the loss left the finite range.
struct TrainingError : Error {
  explicit TrainingError(const std::string& what, Index epoch_at)
      : Error(what), epoch(epoch_at) {}
  Index epoch = -1;
};

}  // namespace tam
