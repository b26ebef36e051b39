#ifndef SMOOTHFB_PROBLEM_HPP_
#define SMOOTHFB_PROBLEM_HPP_

#include <functional>

#include "smoothfb/types.hpp"

namespace smoothfb {

// Infinite-horizon problem  min ∫ ℓ(y) + β/2 |u|²  s.t.  y' = f(y) + B(y) u.
struct ControlProblem {
  int dim_state = 0;
  int dim_control = 0;
  std::function<Vec(const Vec&)> drift;        // f
  std::function<Mat(const Vec&)> input;        // B, d×m
  std::function<double(const Vec&)> running;  // ℓ
  double beta = 1.0;

  // Checks f(0)=0, ℓ(0)=0, β>0 and shapes. Throws ParameterError.
  void validate(double tol = 1e-12) const;

  Vec velocity(const Vec& y, const Vec& u) const { return drift(y) + input(y) * u; }
  double integrand(const Vec& y, const Vec& u) const {
    return running(y) + 0.5 * beta * u.squaredNorm();
  }
};

// f(y) = A y, B constant, ℓ = ½ yᵀQy.
ControlProblem linear_quadratic(const Mat& a, const Mat& b, const Mat& q, double beta);

}  // namespace smoothfb

#endif  // SMOOTHFB_PROBLEM_HPP_
