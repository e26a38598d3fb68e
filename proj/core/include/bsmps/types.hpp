#pragma once

/// Common scalar/matrix aliases, error types and the seeded random generator.

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace bsmps {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Which side an orthogonalization or SVD form refers to.
enum class Side { Left, Right };

/// Base class of all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input text (coefficient files, containers, CLI values).
struct ParseError : Error {
  using Error::Error;
};

/// A structural or numerical invariant does not hold (e.g. a tensor that is
/// not a particle-number eigenvector, or an inconsistent operator program).
struct ValidationError : Error {
  using Error::Error;
};

/// Seeded 64-bit generator used everywhere randomness is needed.
using Rng = std::mt19937_64;
inline constexpr const char* kRngAlgorithm = "mt19937_64";

/// Matrix of independent standard-normal entries.
inline Mat random_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

}  // namespace bsmps
