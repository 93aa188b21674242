#ifndef GCMLAB_ERRORS_HPP
#define GCMLAB_ERRORS_HPP

#include <stdexcept>

namespace gcmlab {

struct InvalidDimension : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct InvalidPattern : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Covariance matrix is not (numerically) positive definite.
struct FactorizationFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Two rows share no jointly observed coordinate.
struct IncomparableRows : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UndefinedSummary : std::runtime_error {
  using std::runtime_error::runtime_error;
};

} // namespace gcmlab

#endif // GCMLAB_ERRORS_HPP
