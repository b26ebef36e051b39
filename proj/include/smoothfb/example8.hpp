#ifndef SMOOTHFB_EXAMPLE8_HPP_
#define SMOOTHFB_EXAMPLE8_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "smoothfb/certificate.hpp"
#include "smoothfb/feedback.hpp"
#include "smoothfb/grid.hpp"
#include "smoothfb/lyapunov.hpp"
#include "smoothfb/problem.hpp"
#include "smoothfb/trajectory.hpp"

namespace smoothfb::bump {

using Vec2 = Eigen::Vector2d;

// Planar benchmark: y' = u, running cost ½|y|²(1 + α ψ(|y-z|/σ)).
struct Example8Config {
  double alpha = 0.0;
  double beta = 1.0;
  Vec2 z{-2.0, 0.0};
  double sigma = 0.5;  // bump radius
  double horizon = 15.0;
  int nodes = 200;  // control intervals of the transcription

  void validate() const;
};

double ell_alpha(const Vec2& y, const Example8Config& cfg);
Vec2 grad_ell_alpha(const Vec2& y, const Example8Config& cfg);
ControlProblem make_problem(const Example8Config& cfg);

// α = 0 closed forms.
double v0(const Vec& y, double beta);
Vec u0_law(const Vec& y, double beta);
ScalarFunction v0_function(double beta);
FeedbackLaw v0_feedback(double beta);

// ψ-free optimality arc y'' = y/β from (y0, u0).
Vec2 linear_arc(const Vec2& y0, const Vec2& u0, double t, double beta);

struct TranscriptionOptions {
  int quad_points = 4;       // Gauss-Legendre points per interval
  int max_iterations = 4000;
  double gradient_tolerance = 1e-10;
  double function_tolerance = 1e-15;
  int lbfgs_rank = 20;
  int newton_steps = 4;       // chord-Newton polish after L-BFGS
  double grading = 5.0;       // t = T sinh(cξ)/sinh(c); 0 gives a uniform mesh
  int adapt_passes = 3;       // node redistributions per distinct solution
  double residual_target = 2e-3;  // stop adapting once both residuals are below
};

// Time nodes t_k = T sinh(c k/N)/sinh(c) (uniform for c = 0).
std::vector<double> graded_times(double horizon, int intervals, double grading);

// Direct transcription over [0, T_R]: controls piecewise linear on the time
// nodes, exact state update, Gauss quadrature of ℓ_α, exact control energy,
// terminal cost V₀(y(T_R)).
class Transcription {
 public:
  Transcription(const Example8Config& cfg, const TranscriptionOptions& opts = {});
  // Same problem on explicit time nodes (0 = t_0 < ... < t_N = T_R).
  Transcription(const Example8Config& cfg, const TranscriptionOptions& opts, std::vector<double> times);

  int intervals() const { return static_cast<int>(times_.size()) - 1; }
  const std::vector<double>& times() const { return times_; }
  const Example8Config& config() const { return cfg_; }
  const TranscriptionOptions& options() const { return opts_; }

  // Cost and (optionally) gradient w.r.t. the nodal controls.
  double cost(const Vec2& y0, const std::vector<Vec2>& u, std::vector<Vec2>* grad = nullptr) const;
  std::vector<Vec2> states(const Vec2& y0, const std::vector<Vec2>& u) const;
  // Running cost of each interval (no terminal term).
  std::vector<double> interval_costs(const Vec2& y0, const std::vector<Vec2>& u,
                                     const std::vector<Vec2>* states = nullptr) const;

 private:
  Example8Config cfg_;
  TranscriptionOptions opts_;
  std::vector<double> times_;
  std::vector<double> gauss_nodes_, gauss_weights_;
};

struct OpenLoopSolution {
  std::vector<Vec2> controls;  // nodal
  std::vector<Vec2> states;    // nodal
  Trajectory trajectory;       // same data as a Trajectory (running cost per node)
  double cost = 0.0;
  bool converged = false;
  int start_id = -1;
  int mirror_partner = -1;
  int iterations = 0;
  double gradient_norm = 0.0;
  double pmp_residual = 0.0;           // max |y'' - ∇ℓ_α(y)/β| over interior nodes
  double identity_residual = 0.0;      // max |ℓ_α(y) - β/2|u|²| over nodes
  Vec2 initial_control() const { return controls.front(); }
};

struct MultistartOptions {
  int random_pairs = 4;       // each pair is a random lateral detour and its mirror
  double detour_amplitude = 1.5;
  double dedup_tolerance = 1e-3;  // sup distance between state trajectories
  bool bump_free_shortcut = true;
  double refine_window = 1e-2;  // solutions this close to the best get mesh refinement
  std::uint64_t seed = 1;
};

// L-BFGS from one start, optionally followed by the Newton polish.
OpenLoopSolution solve_from(const Transcription& tr, const Vec2& y0, std::vector<Vec2> start, int start_id,
                            bool polish = true);

// Redistributes the nodes so that h² |d²/dt² ∇ℓ_α(y(t))| is roughly
// constant, warm-starts from the current controls and re-solves; repeats
// until both residuals meet the target or the passes run out.
OpenLoopSolution refine_mesh(const Transcription& tr, const Vec2& y0, OpenLoopSolution sol);

// Multistart solve; returns deduplicated solutions sorted by cost.
std::vector<OpenLoopSolution> solve_open_loop(const Transcription& tr, const Vec2& y0,
                                              const MultistartOptions& opts = {});

// Start controls for the multistart set.
std::vector<Vec2> v0_rollout_controls(const Transcription& tr, const Vec2& y0);
std::vector<Vec2> radial_rollout_controls(const Transcription& tr, const Vec2& y0);
std::vector<Vec2> detour_controls(const Transcription& tr, const Vec2& y0, double amplitude, double time_scale);

// True iff the segment [0, y0] stays outside the closed bump ball, in which
// case the V₀ rollout is optimal for every α.
bool bump_free(const Vec2& y0, const Example8Config& cfg);

struct NodeSummary {
  Vec2 y0 = Vec2::Zero();
  double cost = 0.0;
  Vec2 u0 = Vec2::Zero();
  bool converged = false;
  bool flagged = false;  // top two distinct solutions tie in cost
  int solutions = 0;
  double second_cost = std::numeric_limits<double>::quiet_NaN();
  double pmp_residual = 0.0;
  double identity_residual = 0.0;
};

struct ValueGrid {
  ScalarField field;  // holes at unconverged nodes
  std::vector<NodeSummary> nodes;
  std::size_t holes = 0;
  std::size_t flagged = 0;
};

ValueGrid value_alpha_grid(const BoxGrid& grid, const Example8Config& cfg, const MultistartOptions& opts = {},
                           int jobs = 1, double tie_tolerance = 1e-3);

// 2-D closed loop along the axis: u = (-y₁ √(1+αψ)/√β, 0).
FeedbackLaw onaxis_law(const Example8Config& cfg);
struct OnAxisResult {
  Trajectory trajectory;
  double cost = 0.0;  // running cost to T plus V₀ tail once past the bump
};
OnAxisResult onaxis_trajectory(double y01, const Example8Config& cfg, double horizon = 30.0);

struct Superdifferential {
  std::vector<Vec2> covectors;  // -β u*(0) of near-optimal distinct solutions
  double diameter = 0.0;
  bool nondifferentiable = false;
  std::vector<double> costs;
};
Superdifferential superdifferential_probe(const std::vector<OpenLoopSolution>& sols, const Example8Config& cfg,
                                          double theta_diam, double cost_tolerance = 1e-3);
// 10 × max |-βu*(0) - ∇V₀(y0)| over reference points where V_α = V₀.
double calibrate_theta_diam(const Transcription& tr, int points = 8);

BoundCertificate stability_check(const OpenLoopSolution& sol, const Vec2& y0, const Example8Config& cfg);

// w(y) = ((|y|² - R²)⁺)², R = |z| + σ.
ScalarFunction lyapunov_w(const Example8Config& cfg);
// Setup with ω = B(0, omega_radius) ⊇ B(0, R).
LyapunovSetup lyapunov_setup(const Example8Config& cfg, double omega_radius, double delta, int grid_per_axis = 61);

struct AlphaBar {
  double alpha_bar = std::numeric_limits<double>::quiet_NaN();  // upper end of the final bracket
  double lower = 0.0;
  bool found = false;
  int evaluations = 0;
};
// Smallest α in [lo, hi] (to tol) where the off-axis optimum beats the
// on-axis candidate by at least `margin` at y0 = (y01, 0).
struct AxisComparison {
  double onaxis_cost = 0.0;
  double offaxis_cost = std::numeric_limits<double>::infinity();
  std::vector<OpenLoopSolution> solutions;
  bool offaxis_found = false;
};
AxisComparison compare_axis(double y01, const Example8Config& cfg, const MultistartOptions& opts = {});
AlphaBar find_alpha_bar(double y01, Example8Config cfg, double lo, double hi, double tol, double margin,
                        const MultistartOptions& opts = {});

}  // namespace smoothfb::bump

#endif  // SMOOTHFB_EXAMPLE8_HPP_
