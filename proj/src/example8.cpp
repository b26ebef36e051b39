#include "smoothfb/example8.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>

#include "smoothfb/parallel.hpp"
#include "smoothfb/regularize.hpp"
#include "smoothfb/simulate.hpp"

namespace smoothfb::bump {

void Example8Config::validate() const {
  if (!(alpha >= 0) || !std::isfinite(alpha)) throw ParameterError("alpha must be a nonnegative number");
  if (!(beta > 0) || !std::isfinite(beta)) throw ParameterError("beta must be positive");
  if (!(sigma > 0)) throw ParameterError("sigma_bump must be positive");
  if (z[1] != 0.0) throw ParameterError("z must lie on the first axis (z2 = 0)");
  if (!(z[0] + sigma < 0)) throw ParameterError("z1 + sigma_bump must be negative");
  if (!(horizon > 0)) throw ParameterError("horizon must be positive");
  if (nodes < 2) throw ParameterError("nodes must be at least 2");
}

double ell_alpha(const Vec2& y, const Example8Config& cfg) {
  const double s = (y - cfg.z).norm() / cfg.sigma;
  return 0.5 * y.squaredNorm() * (1.0 + cfg.alpha * bump_profile(s));
}

Vec2 grad_ell_alpha(const Vec2& y, const Example8Config& cfg) {
  const Vec2 dz = y - cfg.z;
  const double r = dz.norm();
  const double s = r / cfg.sigma;
  Vec2 g = y * (1.0 + cfg.alpha * bump_profile(s));
  if (s < 1.0 && r > 0.0)
    g += 0.5 * y.squaredNorm() * cfg.alpha * bump_profile_derivative(s) / (cfg.sigma * r) * dz;
  return g;
}

ControlProblem make_problem(const Example8Config& cfg) {
  cfg.validate();
  ControlProblem p;
  p.dim_state = 2;
  p.dim_control = 2;
  p.beta = cfg.beta;
  p.drift = [](const Vec& y) -> Vec { return Vec::Zero(y.size()); };
  p.input = [](const Vec&) -> Mat { return Mat::Identity(2, 2); };
  p.running = [cfg](const Vec& y) { return ell_alpha(Vec2(y[0], y[1]), cfg); };
  return p;
}

double v0(const Vec& y, double beta) { return 0.5 * std::sqrt(beta) * y.squaredNorm(); }
Vec u0_law(const Vec& y, double beta) { return -y / std::sqrt(beta); }

ScalarFunction v0_function(double beta) {
  return {[beta](const Vec& y) { return v0(y, beta); }, [beta](const Vec& y) -> Vec { return std::sqrt(beta) * y; }};
}

FeedbackLaw v0_feedback(double beta) {
  return FeedbackLaw::analytic([beta](const Vec& y) { return u0_law(y, beta); }, "v0");
}

Vec2 linear_arc(const Vec2& y0, const Vec2& u0, double t, double beta) {
  const double sb = std::sqrt(beta);
  return y0 * std::cosh(t / sb) + u0 * sb * std::sinh(t / sb);
}

// ---------------------------------------------------------------------------
// transcription

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] by Newton on P_n.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  x.assign(n, 0.0);
  w.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    double r = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = r;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1) * r * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (r * p1 - p0) / (r * r - 1.0);
      const double dr = p1 / dp;
      r -= dr;
      if (std::abs(dr) < 1e-16) break;
    }
    x[i] = r;
    w[i] = 2.0 / ((1.0 - r * r) * dp * dp);
  }
}

}  // namespace

std::vector<double> graded_times(double horizon, int intervals, double grading) {
  if (!(horizon > 0) || intervals < 1 || !(grading >= 0)) throw ParameterError("graded_times: bad arguments");
  std::vector<double> t(intervals + 1);
  for (int k = 0; k <= intervals; ++k) {
    const double xi = static_cast<double>(k) / intervals;
    t[k] = grading > 0 ? horizon * std::sinh(grading * xi) / std::sinh(grading) : horizon * xi;
  }
  t.back() = horizon;
  return t;
}

Transcription::Transcription(const Example8Config& cfg, const TranscriptionOptions& opts)
    : Transcription(cfg, opts, graded_times(cfg.horizon, cfg.nodes, opts.grading)) {}

Transcription::Transcription(const Example8Config& cfg, const TranscriptionOptions& opts, std::vector<double> times)
    : cfg_(cfg), opts_(opts), times_(std::move(times)) {
  cfg_.validate();
  if (opts_.quad_points < 1 || opts_.quad_points > 12) throw ParameterError("quad_points must lie in [1, 12]");
  if (times_.size() < 3 || times_.front() != 0.0) throw ParameterError("transcription: times must start at 0");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw ParameterError("transcription: times must increase");
  gauss_legendre(opts_.quad_points, gauss_nodes_, gauss_weights_);
}

std::vector<Vec2> Transcription::states(const Vec2& y0, const std::vector<Vec2>& u) const {
  std::vector<Vec2> y(times_.size());
  y[0] = y0;
  for (int k = 0; k < intervals(); ++k) y[k + 1] = y[k] + 0.5 * (times_[k + 1] - times_[k]) * (u[k] + u[k + 1]);
  return y;
}

std::vector<double> Transcription::interval_costs(const Vec2& y0, const std::vector<Vec2>& u,
                                                  const std::vector<Vec2>* states_in) const {
  const int n = intervals();
  const std::vector<Vec2> y = states_in ? *states_in : states(y0, u);
  std::vector<double> c(n, 0.0);
  for (int k = 0; k < n; ++k) {
    const double h = times_[k + 1] - times_[k];
    const Vec2 du = u[k + 1] - u[k];
    for (std::size_t i = 0; i < gauss_nodes_.size(); ++i) {
      const double s = 0.5 * h * (1.0 + gauss_nodes_[i]);
      c[k] += 0.5 * h * gauss_weights_[i] * ell_alpha(y[k] + s * u[k] + (s * s / (2 * h)) * du, cfg_);
    }
    c[k] += 0.5 * cfg_.beta * h / 3.0 * (u[k].squaredNorm() + u[k].dot(u[k + 1]) + u[k + 1].squaredNorm());
  }
  return c;
}

double Transcription::cost(const Vec2& y0, const std::vector<Vec2>& u, std::vector<Vec2>* grad) const {
  const int n = intervals();
  if (static_cast<int>(u.size()) != n + 1) throw ParameterError("transcription: control count mismatch");
  const double beta = cfg_.beta;
  const std::vector<Vec2> y = states(y0, u);
  const int q = opts_.quad_points;
  double total = 0.5 * std::sqrt(beta) * y[n].squaredNorm();
  for (double c : interval_costs(y0, u, &y)) total += c;
  if (!grad) return total;

  grad->assign(n + 1, Vec2::Zero());
  auto& g = *grad;
  Vec2 lam = std::sqrt(beta) * y[n];  // ∂J/∂y_{k+1}
  for (int k = n - 1; k >= 0; --k) {
    const double h = times_[k + 1] - times_[k];
    const Vec2 du = u[k + 1] - u[k];
    Vec2 sum = Vec2::Zero();
    for (int i = 0; i < q; ++i) {
      const double s = 0.5 * h * (1.0 + gauss_nodes_[i]);
      const double c = s * s / (2 * h);
      const Vec2 gq = 0.5 * h * gauss_weights_[i] * grad_ell_alpha(y[k] + s * u[k] + c * du, cfg_);
      g[k] += (s - c) * gq;
      g[k + 1] += c * gq;
      sum += gq;
    }
    g[k] += 0.5 * h * lam + beta * h / 6.0 * (2.0 * u[k] + u[k + 1]);
    g[k + 1] += 0.5 * h * lam + beta * h / 6.0 * (u[k] + 2.0 * u[k + 1]);
    lam += sum;
  }
  return total;
}

// ---------------------------------------------------------------------------
// open-loop solves

namespace {

// Variables are u_k scaled by sqrt of the node's quadrature weight so the
// control energy is close to an identity quadratic form.
class ScaledObjective final : public ceres::FirstOrderFunction {
 public:
  ScaledObjective(const Transcription& tr, const Vec2& y0, const std::vector<double>& scale)
      : tr_(tr), y0_(y0), scale_(scale) {}

  bool Evaluate(const double* x, double* cost, double* gradient) const override {
    const std::size_t n = scale_.size();
    std::vector<Vec2> u(n);
    for (std::size_t k = 0; k < n; ++k) u[k] = Vec2(x[2 * k], x[2 * k + 1]) / scale_[k];
    std::vector<Vec2> g;
    *cost = tr_.cost(y0_, u, gradient ? &g : nullptr);
    if (!std::isfinite(*cost)) return false;
    if (gradient)
      for (std::size_t k = 0; k < n; ++k) {
        gradient[2 * k] = g[k][0] / scale_[k];
        gradient[2 * k + 1] = g[k][1] / scale_[k];
      }
    return true;
  }
  int NumParameters() const override { return static_cast<int>(2 * scale_.size()); }

 private:
  const Transcription& tr_;
  Vec2 y0_;
  std::vector<double> scale_;
};

std::vector<double> node_scale(const Transcription& tr) {
  const auto& t = tr.times();
  const int n = tr.intervals();
  std::vector<double> s(n + 1);
  for (int k = 0; k <= n; ++k) {
    const double left = k > 0 ? t[k] - t[k - 1] : 0.0;
    const double right = k < n ? t[k + 1] - t[k] : 0.0;
    s[k] = std::sqrt(0.5 * (left + right) * tr.config().beta);
  }
  return s;
}

double sup_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b, bool mirror_b = false) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const Vec2 bb = mirror_b ? Vec2(b[k][0], -b[k][1]) : b[k];
    d = std::max(d, (a[k] - bb).lpNorm<Eigen::Infinity>());
  }
  return d;
}

// State on the quadratic arc of the interval holding t.
Vec2 arc_state(const OpenLoopSolution& sol, double t) {
  const auto& ts = sol.trajectory.times;
  const std::size_t k = std::min<std::size_t>(
      ts.size() - 2, static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin()) - 1);
  const double h = ts[k + 1] - ts[k], s = t - ts[k];
  return sol.states[k] + s * sol.controls[k] + (s * s / (2 * h)) * (sol.controls[k + 1] - sol.controls[k]);
}

void fill_diagnostics(const Transcription& tr, const Vec2& y0, OpenLoopSolution& sol) {
  const auto& cfg = tr.config();
  const auto& t = tr.times();
  const int n = tr.intervals();
  sol.states = tr.states(y0, sol.controls);
  Trajectory& traj = sol.trajectory;
  traj = Trajectory{};
  traj.times = t;
  traj.states.resize(n + 1);
  traj.controls.resize(n + 1);
  traj.integrand.resize(n + 1);
  traj.running_cost.assign(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    traj.states[k] = sol.states[k];
    traj.controls[k] = sol.controls[k];
    const double l = ell_alpha(sol.states[k], cfg);
    const double e = 0.5 * cfg.beta * sol.controls[k].squaredNorm();
    traj.integrand[k] = l + e;
    sol.identity_residual = std::max(sol.identity_residual, std::abs(l - e));
  }
  const std::vector<double> seg = tr.interval_costs(y0, sol.controls);
  for (int k = 0; k < n; ++k) traj.running_cost[k + 1] = traj.running_cost[k] + seg[k];
  for (int k = 1; k < n; ++k) {
    const double h1 = t[k] - t[k - 1], h2 = t[k + 1] - t[k];
    const Vec2 ydd = 2.0 / (h1 + h2) * ((sol.states[k + 1] - sol.states[k]) / h2 - (sol.states[k] - sol.states[k - 1]) / h1);
    // on an uneven stencil the three-point second difference is centred at
    // t_k + (h2 - h1)/3, not at t_k
    const Vec2 yc = arc_state(sol, t[k] + (h2 - h1) / 3.0);
    sol.pmp_residual = std::max(sol.pmp_residual, (ydd - grad_ell_alpha(yc, cfg) / cfg.beta).norm());
  }
}

}  // namespace

namespace {

// Chord-Newton polish with a finite-difference Hessian of the adjoint
// gradient; L-BFGS stalls once cost changes reach roundoff, well before the
// gradient is small enough for clean second differences of the states.
int newton_polish(const ScaledObjective& obj, std::vector<double>& x, int max_steps) {
  const int n = obj.NumParameters();
  Eigen::Map<Eigen::VectorXd> xv(x.data(), n);
  Eigen::VectorXd g(n), gp(n), gm(n);
  double f;
  obj.Evaluate(x.data(), &f, g.data());
  Mat h(n, n);
  for (int i = 0; i < n; ++i) {
    const double eps = 1e-5 * std::max(1.0, std::abs(xv[i]));
    const double xi = xv[i];
    xv[i] = xi + eps;
    obj.Evaluate(x.data(), &f, gp.data());
    xv[i] = xi - eps;
    obj.Evaluate(x.data(), &f, gm.data());
    xv[i] = xi;
    h.col(i) = (gp - gm) / (2 * eps);
  }
  h = 0.5 * (h + h.transpose()).eval();
  Eigen::LLT<Mat> llt(h);
  if (llt.info() != Eigen::Success) return 0;
  int steps = 0;
  double gnorm = g.lpNorm<Eigen::Infinity>();
  for (; steps < max_steps; ++steps) {
    const Eigen::VectorXd keep = xv;
    xv -= llt.solve(g);
    Eigen::VectorXd gn(n);
    if (!obj.Evaluate(x.data(), &f, gn.data()) || !(gn.lpNorm<Eigen::Infinity>() < gnorm)) {
      xv = keep;
      break;
    }
    g = gn;
    gnorm = g.lpNorm<Eigen::Infinity>();
  }
  return steps;
}

}  // namespace

OpenLoopSolution solve_from(const Transcription& tr, const Vec2& y0, std::vector<Vec2> start, int start_id,
                            bool polish) {
  const auto& opts = tr.options();
  const std::vector<double> scale = node_scale(tr);
  if (start.size() != scale.size()) throw ParameterError("solve_from: start has the wrong number of nodes");
  std::vector<double> x(2 * scale.size());
  for (std::size_t k = 0; k < scale.size(); ++k) {
    x[2 * k] = start[k][0] * scale[k];
    x[2 * k + 1] = start[k][1] * scale[k];
  }
  auto* objective = new ScaledObjective(tr, y0, scale);
  ceres::GradientProblem problem(objective);  // owns objective
  ceres::GradientProblemSolver::Options so;
  so.line_search_direction_type = ceres::LBFGS;
  so.max_lbfgs_rank = opts.lbfgs_rank;
  so.use_approximate_eigenvalue_bfgs_scaling = true;
  so.max_num_iterations = opts.max_iterations;
  so.function_tolerance = opts.function_tolerance;
  so.gradient_tolerance = opts.gradient_tolerance;
  so.parameter_tolerance = 1e-14;
  so.logging_type = ceres::SILENT;
  so.minimizer_progress_to_stdout = false;
  ceres::GradientProblemSolver::Summary summary;
  ceres::Solve(so, problem, x.data(), &summary);
  if (polish && summary.termination_type == ceres::CONVERGENCE && opts.newton_steps > 0)
    newton_polish(*objective, x, opts.newton_steps);

  OpenLoopSolution sol;
  sol.start_id = start_id;
  sol.iterations = static_cast<int>(summary.iterations.size());
  sol.controls.resize(scale.size());
  for (std::size_t k = 0; k < scale.size(); ++k) sol.controls[k] = Vec2(x[2 * k], x[2 * k + 1]) / scale[k];
  std::vector<Vec2> g;
  sol.cost = tr.cost(y0, sol.controls, &g);
  for (std::size_t k = 0; k < scale.size(); ++k) sol.gradient_norm = std::max(sol.gradient_norm, g[k].norm() / scale[k]);
  fill_diagnostics(tr, y0, sol);
  const auto& cfg = tr.config();
  const bool reached = sol.states.back().norm() < cfg.z.norm() - cfg.sigma;
  sol.converged = summary.termination_type == ceres::CONVERGENCE && std::isfinite(sol.cost) &&
                  sol.gradient_norm <= 1e-5 * std::max(1.0, sol.cost) && reached;
  if (!reached) sol.trajectory.note = "final state outside the bump-free ball: horizon too short";
  else if (!sol.converged) sol.trajectory.note = summary.message;
  return sol;
}

namespace {

std::vector<Vec2> resample(const std::vector<double>& t, const std::vector<Vec2>& v, const std::vector<double>& at) {
  std::vector<Vec2> out(at.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < at.size(); ++i) {
    while (j + 2 < t.size() && t[j + 1] < at[i]) ++j;
    const double w = std::clamp((at[i] - t[j]) / (t[j + 1] - t[j]), 0.0, 1.0);
    out[i] = (1 - w) * v[j] + w * v[j + 1];
  }
  return out;
}

// New nodes for the same number of intervals. Desired spacing is the
// smallest of 0.004 + 0.2t (endpoint), 0.1/|y| (keeps the energy identity
// near 1e-3) and the spacing that puts h²|d²/dt² ∇ℓ_α(y(t))|/12 at the
// residual target. It is then made slowly varying (|dh/dt| ≤ 0.2) and the
// nodes equidistribute 1/h, so with too few nodes every spacing scales up.
std::vector<double> adapted_times(const Example8Config& cfg, const TranscriptionOptions& opts,
                                  const OpenLoopSolution& sol) {
  const auto& ts = sol.trajectory.times;
  const std::size_t n = ts.size() - 1;
  const double horizon = ts.back();
  const int fine = 4000;
  const double dt = horizon / fine;
  std::vector<Vec2> g(fine + 1);
  for (int i = 0; i <= fine; ++i) g[i] = grad_ell_alpha(arc_state(sol, i * dt), cfg) / cfg.beta;
  std::vector<double> h(fine + 1);
  for (int i = 0; i <= fine; ++i) {
    const int c = std::clamp(i, 1, fine - 1);
    const double curv = ((g[c + 1] - 2.0 * g[c] + g[c - 1]) / (dt * dt)).norm();
    const double rad = std::max(arc_state(sol, i * dt).norm(), 1e-3);
    const double base = std::min(0.002 + 0.2 * i * dt, 0.1 / rad);
    h[i] = curv > 0 ? std::min(base, std::sqrt(12.0 * opts.residual_target / curv)) : base;
    h[i] = std::max(h[i], 0.25 * dt);
  }
  // widen the fine spots by a few spacings before smoothing
  std::vector<double> w = h;
  for (int i = 0; i <= fine; ++i) {
    const int reach = std::min(200, static_cast<int>(std::ceil(3.0 * h[i] / dt)));
    for (int j = std::max(0, i - reach); j <= std::min(fine, i + reach); ++j) w[j] = std::min(w[j], h[i]);
  }
  h = std::move(w);
  for (int i = 1; i <= fine; ++i) h[i] = std::min(h[i], h[i - 1] + 0.2 * dt);
  for (int i = fine - 1; i >= 0; --i) h[i] = std::min(h[i], h[i + 1] + 0.2 * dt);
  std::vector<double> c(fine + 1, 0.0);
  for (int i = 0; i < fine; ++i) c[i + 1] = c[i] + 0.5 * (1.0 / h[i] + 1.0 / h[i + 1]) * dt;
  std::vector<double> out(n + 1);
  out[0] = 0.0;
  out[n] = horizon;
  int j = 0;
  for (std::size_t k = 1; k < n; ++k) {
    const double target = c[fine] * static_cast<double>(k) / static_cast<double>(n);
    while (c[j + 1] < target) ++j;
    out[k] = (j + (target - c[j]) / (c[j + 1] - c[j])) * dt;
  }
  return out;
}

}  // namespace

OpenLoopSolution refine_mesh(const Transcription& tr, const Vec2& y0, OpenLoopSolution sol) {
  const auto& opts = tr.options();
  auto worst = [](const OpenLoopSolution& s) { return std::max(s.pmp_residual, s.identity_residual); };
  // adapt from the latest mesh, keep the best one seen
  OpenLoopSolution best = sol;
  for (int pass = 0; pass < opts.adapt_passes && sol.converged && worst(best) > opts.residual_target; ++pass) {
    std::vector<double> times = adapted_times(tr.config(), opts, sol);
    const Transcription next(tr.config(), opts, times);
    OpenLoopSolution cand =
        solve_from(next, y0, resample(sol.trajectory.times, sol.controls, times), sol.start_id, true);
    if (!cand.converged) break;
    if (worst(cand) < worst(best)) best = cand;
    sol = std::move(cand);
  }
  return best;
}

std::vector<Vec2> v0_rollout_controls(const Transcription& tr, const Vec2& y0) {
  const double sb = std::sqrt(tr.config().beta);
  std::vector<Vec2> u;
  u.reserve(tr.times().size());
  for (double t : tr.times()) u.push_back(-y0 / sb * std::exp(-t / sb));
  return u;
}

FeedbackLaw onaxis_law(const Example8Config& cfg) {
  const double sb = std::sqrt(cfg.beta);
  // Off the axis this is the radial extension of the on-axis law.
  return FeedbackLaw::analytic(
      [cfg, sb](const Vec& y) -> Vec {
        const Vec2 yy(y[0], y[1]);
        const double s = (yy - cfg.z).norm() / cfg.sigma;
        return -y * std::sqrt(1.0 + cfg.alpha * bump_profile(s)) / sb;
      },
      "onaxis");
}

std::vector<Vec2> radial_rollout_controls(const Transcription& tr, const Vec2& y0) {
  const FeedbackLaw law = onaxis_law(tr.config());
  const auto& t = tr.times();
  auto f = [&](const Vec2& y) -> Vec2 {
    const Vec u = law(Vec(y));
    return Vec2(u[0], u[1]);
  };
  std::vector<Vec2> u(t.size());
  Vec2 y = y0;
  u[0] = f(y);
  for (std::size_t k = 0; k + 1 < t.size(); ++k) {
    const int sub = 8;
    const double h = (t[k + 1] - t[k]) / sub;
    for (int i = 0; i < sub; ++i) {
      const Vec2 k1 = f(y), k2 = f(y + 0.5 * h * k1), k3 = f(y + 0.5 * h * k2), k4 = f(y + h * k3);
      y += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    u[k + 1] = f(y);
  }
  return u;
}

std::vector<Vec2> detour_controls(const Transcription& tr, const Vec2& y0, double amplitude, double time_scale) {
  std::vector<Vec2> u = v0_rollout_controls(tr, y0);
  const double r = y0.norm();
  const Vec2 nrm = r > 0 ? Vec2(-y0[1] / r, y0[0] / r) : Vec2(0.0, 1.0);
  const auto& t = tr.times();
  // zero net lateral displacement, peak offset amplitude·τ/e at t = τ
  for (std::size_t k = 0; k < t.size(); ++k)
    u[k] += amplitude * (1.0 - t[k] / time_scale) * std::exp(-t[k] / time_scale) * nrm;
  return u;
}

bool bump_free(const Vec2& y0, const Example8Config& cfg) {
  const double len2 = y0.squaredNorm();
  double s = len2 > 0 ? std::clamp(cfg.z.dot(y0) / len2, 0.0, 1.0) : 0.0;
  return (s * y0 - cfg.z).norm() > cfg.sigma;
}

std::vector<OpenLoopSolution> solve_open_loop(const Transcription& tr, const Vec2& y0, const MultistartOptions& opts) {
  const auto& cfg = tr.config();
  std::vector<std::vector<Vec2>> starts;
  starts.push_back(v0_rollout_controls(tr, y0));
  const bool shortcut = opts.bump_free_shortcut && (cfg.alpha == 0.0 || bump_free(y0, cfg));
  if (!shortcut) {
    starts.push_back(detour_controls(tr, y0, opts.detour_amplitude, 1.0));
    starts.push_back(detour_controls(tr, y0, -opts.detour_amplitude, 1.0));
    starts.push_back(radial_rollout_controls(tr, y0));
    CounterRng rng(opts.seed, 0x5eed);
    for (int i = 0; i < opts.random_pairs; ++i) {
      const double a = rng.uniform(0.5, 3.0);
      const double tau = rng.uniform(0.5, 1.5);
      starts.push_back(detour_controls(tr, y0, a, tau));
      starts.push_back(detour_controls(tr, y0, -a, tau));
    }
  }
  std::vector<OpenLoopSolution> all;
  all.reserve(starts.size());
  for (std::size_t i = 0; i < starts.size(); ++i) all.push_back(solve_from(tr, y0, std::move(starts[i]), static_cast<int>(i), false));

  const auto& base = tr.times();
  auto dedup = [&](std::vector<OpenLoopSolution>& sols) {
    std::stable_sort(sols.begin(), sols.end(), [](const auto& a, const auto& b) {
      if (a.converged != b.converged) return a.converged;
      return a.cost < b.cost;
    });
    std::vector<OpenLoopSolution> kept;
    std::vector<std::vector<Vec2>> paths;
    for (auto& s : sols) {
      if (!s.converged && !kept.empty()) continue;
      std::vector<Vec2> p = resample(s.trajectory.times, s.states, base);
      bool dup = false;
      for (const auto& q : paths)
        if (sup_distance(q, p) < opts.dedup_tolerance) dup = true;
      if (dup) continue;
      paths.push_back(std::move(p));
      kept.push_back(std::move(s));
    }
    sols = std::move(kept);
    return paths;
  };
  dedup(all);
  // only near-optimal solutions get the mesh refinement
  const double best = all.front().cost;
  for (auto& s : all)
    if (s.converged && s.cost <= best + opts.refine_window) s = refine_mesh(tr, y0, std::move(s));
  const auto paths = dedup(all);

  const bool on_axis = y0[1] == 0.0 && cfg.z[1] == 0.0;
  if (on_axis)
    for (std::size_t i = 0; i < all.size(); ++i)
      for (std::size_t j = 0; j < all.size(); ++j)
        if (sup_distance(paths[i], paths[j], true) < opts.dedup_tolerance) {
          all[i].mirror_partner = static_cast<int>(j);
          break;
        }
  return all;
}

ValueGrid value_alpha_grid(const BoxGrid& grid, const Example8Config& cfg, const MultistartOptions& opts, int jobs,
                           double tie_tolerance) {
  if (grid.dim() != 2) throw ParameterError("value_alpha_grid: grid must be 2-D");
  const Transcription tr(cfg);
  ValueGrid out;
  out.nodes.resize(grid.size());
  std::vector<double> vals(grid.size(), std::numeric_limits<double>::quiet_NaN());
  parallel_for(grid.size(), jobs, [&](std::size_t n) {
    const Vec x = grid.node(n);
    const Vec2 y0(x[0], x[1]);
    MultistartOptions o = opts;
    o.seed = CounterRng(opts.seed, n).next();
    const auto sols = solve_open_loop(tr, y0, o);
    NodeSummary& s = out.nodes[n];
    s.y0 = y0;
    s.solutions = static_cast<int>(sols.size());
    if (sols.empty()) return;
    const auto& best = sols.front();
    s.cost = best.cost;
    s.u0 = best.initial_control();
    s.converged = best.converged;
    s.pmp_residual = best.pmp_residual;
    s.identity_residual = best.identity_residual;
    if (sols.size() > 1 && sols[1].converged) {
      s.second_cost = sols[1].cost;
      s.flagged = std::abs(sols[1].cost - best.cost) <= tie_tolerance;
    }
    if (best.converged) vals[n] = best.cost;
  });
  for (const auto& s : out.nodes) {
    if (!s.converged) ++out.holes;
    if (s.flagged) ++out.flagged;
  }
  out.field = ScalarField(grid, std::move(vals), Interp::multilinear, true);
  return out;
}

OnAxisResult onaxis_trajectory(double y01, const Example8Config& cfg, double horizon) {
  cfg.validate();
  if (!(y01 < cfg.z[0] - cfg.sigma)) throw ParameterError("onaxis_trajectory: y01 must lie left of the bump");
  SimConfig sc;
  sc.horizon = horizon;
  sc.rtol = 1e-11;
  sc.atol = 1e-13;
  sc.max_step = 0.05;
  OnAxisResult r;
  Vec y0(2);
  y0 << y01, 0.0;
  r.trajectory = integrate_closed_loop(make_problem(cfg), onaxis_law(cfg), y0, sc);
  // past the bump the law is the V₀ law, so the remaining cost is V₀
  r.cost = r.trajectory.running_cost.back() + v0(r.trajectory.final_state(), cfg.beta);
  return r;
}

Superdifferential superdifferential_probe(const std::vector<OpenLoopSolution>& sols, const Example8Config& cfg,
                                          double theta_diam, double cost_tolerance) {
  Superdifferential sd;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : sols)
    if (s.converged) best = std::min(best, s.cost);
  if (!std::isfinite(best)) throw DomainError("superdifferential_probe: no converged solution");
  for (const auto& s : sols)
    if (s.converged && s.cost <= best + cost_tolerance) {
      sd.covectors.push_back(-cfg.beta * s.initial_control());
      sd.costs.push_back(s.cost);
    }
  for (std::size_t i = 0; i < sd.covectors.size(); ++i)
    for (std::size_t j = i + 1; j < sd.covectors.size(); ++j)
      sd.diameter = std::max(sd.diameter, (sd.covectors[i] - sd.covectors[j]).norm());
  sd.nondifferentiable = sd.diameter > theta_diam;
  return sd;
}

double calibrate_theta_diam(const Transcription& tr, int points) {
  const auto& cfg = tr.config();
  const double rad = 0.9 * (cfg.z.norm() - cfg.sigma);
  const double sb = std::sqrt(cfg.beta);
  double noise = 0.0;
  for (int k = 0; k < points; ++k) {
    const double r = rad * (k + 1) / points;
    const double th = 2.0 * std::numbers::pi * k / points + 0.3;
    const Vec2 y0(r * std::cos(th), r * std::sin(th));
    const auto sol = refine_mesh(tr, y0, solve_from(tr, y0, v0_rollout_controls(tr, y0), 0, true));
    noise = std::max(noise, (-cfg.beta * sol.initial_control() - sb * y0).norm());
  }
  return 10.0 * std::max(noise, 1e-12);
}

BoundCertificate stability_check(const OpenLoopSolution& sol, const Vec2& y0, const Example8Config& cfg) {
  BoundCertificate c;
  c.name = "exponential_stability";
  c.kind = "optimal state decays inside the alpha-uniform exponential envelope; initial speed bound; inward start";
  const double a = cfg.alpha, sb = std::sqrt(cfg.beta);
  const double r0 = y0.norm();
  double ratio = 0.0;
  for (std::size_t k = 0; k < sol.states.size(); ++k) {
    const double env = std::sqrt(1 + a) * std::exp(-sol.trajectory.times[k] / ((1 + a) * sb)) * r0;
    if (env > 0) ratio = std::max(ratio, sol.states[k].norm() / env);
  }
  const Vec2 u0 = sol.initial_control();
  const double speed_bound = std::sqrt((1 + a) / cfg.beta) * r0;
  c.lhs = ratio;
  c.rhs = 1.0;
  c.tolerance = 1e-9;
  c.add("envelope_ratio", ratio, "sampled");
  c.add("initial_speed", u0.norm(), "sampled");
  c.add("initial_speed_bound", speed_bound, "derived");
  c.conditions.emplace_back("initial speed within bound", u0.norm() <= speed_bound * (1 + 1e-9) + 1e-12);
  if ((y0 - cfg.z).norm() > cfg.sigma && r0 > 0)
    c.conditions.emplace_back("initial control points inward", u0.dot(y0) < 0.0);
  c.conditions.emplace_back("solution converged", sol.converged);
  c.decide();
  return c;
}

ScalarFunction lyapunov_w(const Example8Config& cfg) {
  const double r2 = std::pow(cfg.z.norm() + cfg.sigma, 2);
  return {[r2](const Vec& y) {
            const double e = std::max(0.0, y.squaredNorm() - r2);
            return e * e;
          },
          [r2](const Vec& y) -> Vec { return 4.0 * std::max(0.0, y.squaredNorm() - r2) * y; }};
}

LyapunovSetup lyapunov_setup(const Example8Config& cfg, double omega_radius, double delta, int grid_per_axis) {
  cfg.validate();
  const double r = cfg.z.norm() + cfg.sigma;
  if (omega_radius < r) throw ParameterError("lyapunov setup: omega must contain B(0, |z| + sigma_bump)");
  const double e = omega_radius * omega_radius - r * r;
  const double outer = std::sqrt(r * r + std::sqrt(e * e + delta));
  const Vec box = Vec::Constant(2, 1.05 * outer + 0.1);
  return make_lyapunov_setup(lyapunov_w(cfg), {}, Region::ball(Vec::Zero(2), omega_radius), delta, -box, box,
                             grid_per_axis);
}

AxisComparison compare_axis(double y01, const Example8Config& cfg, const MultistartOptions& opts) {
  AxisComparison ac;
  ac.onaxis_cost = onaxis_trajectory(y01, cfg).cost;
  const Transcription tr(cfg);
  ac.solutions = solve_open_loop(tr, Vec2(y01, 0.0), opts);
  for (const auto& s : ac.solutions) {
    if (!s.converged) continue;
    double off = 0.0;
    for (const auto& y : s.states) off = std::max(off, std::abs(y[1]));
    if (off > opts.dedup_tolerance && s.cost < ac.offaxis_cost) {
      ac.offaxis_cost = s.cost;
      ac.offaxis_found = true;
    }
  }
  return ac;
}

AlphaBar find_alpha_bar(double y01, Example8Config cfg, double lo, double hi, double tol, double margin,
                        const MultistartOptions& opts) {
  if (!(lo >= 0 && hi > lo && tol > 0)) throw ParameterError("find_alpha_bar: need 0 <= lo < hi and tol > 0");
  AlphaBar ab;
  auto beats = [&](double a) {
    cfg.alpha = a;
    ++ab.evaluations;
    const auto ac = compare_axis(y01, cfg, opts);
    return ac.offaxis_found && ac.onaxis_cost - ac.offaxis_cost >= margin;
  };
  if (!beats(hi)) return ab;
  ab.found = true;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (beats(mid)) hi = mid;
    else lo = mid;
  }
  ab.alpha_bar = hi;
  ab.lower = lo;
  return ab;
}

}  // namespace smoothfb::bump
