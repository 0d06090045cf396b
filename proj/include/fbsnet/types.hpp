#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fbsnet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Argument outside the admissible domain (negative step, N = 0, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inconsistent vector/matrix shapes.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite input or intermediate value.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace fbsnet
