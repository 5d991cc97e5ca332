#ifndef BTGP_ERROR_HPP
#define BTGP_ERROR_HPP

#include <stdexcept>
#include <string>

namespace btgp {

// Shape or index mismatch between arguments.
struct DimensionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// An argument violates a structural precondition (non-nested partitions,
// weights off the simplex, C not constant within a cell, ...).
struct PreconditionError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Bad input data: empty, non-finite, malformed.
struct DataError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A Sherman-Morrison step hit a non-positive pivot 1 + z.
struct NumericalError : public std::runtime_error {
  NumericalError(const std::string &what, long column_, long cell_)
      : std::runtime_error(what), column(column_), cell(cell_) {}
  long column;
  long cell;
};

} // namespace btgp

#endif // BTGP_ERROR_HPP
