#include "smoothfb/problem.hpp"

#include <cmath>
#include <string>

namespace smoothfb {

void ControlProblem::validate(double tol) const {
  if (dim_state <= 0 || dim_control <= 0)
    throw ParameterError("problem: dimensions must be positive");
  if (!drift || !input || !running) throw ParameterError("problem: f, B and ell must all be set");
  if (!(beta > 0.0) || !std::isfinite(beta)) throw ParameterError("problem.beta: must be positive");
  const Vec origin = Vec::Zero(dim_state);
  const Vec f0 = drift(origin);
  if (f0.size() != dim_state) throw ParameterError("problem.f: wrong output dimension");
  if (f0.norm() > tol) throw ParameterError("problem.f: f(0) must vanish");
  const Mat b0 = input(origin);
  if (b0.rows() != dim_state || b0.cols() != dim_control)
    throw ParameterError("problem.B: expected a " + std::to_string(dim_state) + "x" +
                         std::to_string(dim_control) + " matrix");
  if (std::abs(running(origin)) > tol) throw ParameterError("problem.ell: ell(0) must vanish");
}

ControlProblem linear_quadratic(const Mat& a, const Mat& b, const Mat& q, double beta) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || q.rows() != a.rows() || q.cols() != a.rows())
    throw ParameterError("linear_quadratic: inconsistent matrix shapes");
  if ((q - q.transpose()).norm() > 1e-12) throw ParameterError("linear_quadratic: Q must be symmetric");
  if (Eigen::SelfAdjointEigenSolver<Mat>(q).eigenvalues().minCoeff() < -1e-12)
    throw ParameterError("linear_quadratic: Q must be positive semidefinite");
  ControlProblem p;
  p.dim_state = static_cast<int>(a.rows());
  p.dim_control = static_cast<int>(b.cols());
  p.drift = [a](const Vec& y) -> Vec { return a * y; };
  p.input = [b](const Vec&) -> Mat { return b; };
  p.running = [q](const Vec& y) { return 0.5 * y.dot(q * y); };
  p.beta = beta;
  p.validate();
  return p;
}

}  // namespace smoothfb
