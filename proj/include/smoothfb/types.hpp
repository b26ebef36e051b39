#ifndef SMOOTHFB_TYPES_HPP_
#define SMOOTHFB_TYPES_HPP_

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace smoothfb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Query outside the region where a representation is valid.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed a parameter that violates a precondition.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace smoothfb

#endif  // SMOOTHFB_TYPES_HPP_
