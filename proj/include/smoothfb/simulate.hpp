#ifndef SMOOTHFB_SIMULATE_HPP_
#define SMOOTHFB_SIMULATE_HPP_

#include <functional>
#include <limits>
#include <optional>

#include "smoothfb/feedback.hpp"
#include "smoothfb/problem.hpp"
#include "smoothfb/region.hpp"
#include "smoothfb/trajectory.hpp"

namespace smoothfb {

enum class Integrator { rk4, rk45 };

struct SimConfig {
  Integrator integrator = Integrator::rk45;
  double step = 1e-2;  // fixed step (rk4) or first trial step (rk45)
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_step = 0.25;
  double horizon = 1.0;
  std::optional<Region> escape_region;
  double escape_time_tol = 1e-10;
  double blowup_radius = std::numeric_limits<double>::infinity();
  // Optional extra integrand accumulated into Trajectory::aux.
  std::function<double(const Vec&)> aux_integrand;

  void validate() const;
};

// Closed loop y' = f(y) + B(y)u(y) with the running cost carried as an extra
// state component. Escape from cfg.escape_region is located by bisection.
Trajectory integrate_closed_loop(const ControlProblem& problem, const FeedbackLaw& law, const Vec& y0,
                                 const SimConfig& cfg);

// ∫₀ᵀ ℓ + β/2|u|² along the trajectory (Hermite interpolation between nodes).
double cost_value(const Trajectory& traj, double horizon);
// State at time t, linear between stored nodes.
Vec state_at(const Trajectory& traj, double t);

// H(y,p,u) = -p·(f+Bu) - ℓ - β/2|u|².
double hamiltonian(const ControlProblem& problem, const Vec& y, const Vec& p, const Vec& u);
// max_u H = -ℓ + |Bᵀp|²/(2β) - pᵀf.
double max_hamiltonian(const ControlProblem& problem, const Vec& y, const Vec& p);
Vec hamiltonian_argmax(const ControlProblem& problem, const Vec& y, const Vec& p);

// Nodal field of max_hamiltonian(y, ∇v(y)).
ScalarField hjb_residual(const ControlProblem& problem, const ScalarFunction& v, const BoxGrid& grid);

}  // namespace smoothfb

#endif  // SMOOTHFB_SIMULATE_HPP_
