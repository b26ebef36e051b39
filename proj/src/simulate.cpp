#include "smoothfb/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace smoothfb {

void SimConfig::validate() const {
  if (!(step > 0)) throw ParameterError("simulate.step: must be positive");
  if (!(horizon > 0)) throw ParameterError("simulate.horizon: must be positive");
  if (!(rtol > 0) || !(atol > 0)) throw ParameterError("simulate: tolerances must be positive");
  if (!(max_step > 0)) throw ParameterError("simulate.max_step: must be positive");
}

namespace {

struct Eval {
  Vec dz;  // augmented derivative
  Vec u;
  double integrand = 0.0;
};

class ClosedLoop {
 public:
  ClosedLoop(const ControlProblem& p, const FeedbackLaw& law, const SimConfig& cfg)
      : p_(p), law_(law), cfg_(cfg), d_(p.dim_state), aux_(static_cast<bool>(cfg.aux_integrand)) {}

  int size() const { return d_ + 1 + (aux_ ? 1 : 0); }
  bool has_aux() const { return aux_; }

  Eval operator()(const Vec& z) const {
    const Vec y = z.head(d_);
    Eval e;
    e.u = law_(y);
    e.dz.resize(size());
    e.dz.head(d_) = p_.velocity(y, e.u);
    e.integrand = p_.integrand(y, e.u);
    e.dz[d_] = e.integrand;
    if (aux_) e.dz[d_ + 1] = cfg_.aux_integrand(y);
    return e;
  }

 private:
  const ControlProblem& p_;
  const FeedbackLaw& law_;
  const SimConfig& cfg_;
  int d_;
  bool aux_;
};

struct StepResult {
  Vec z;
  double err = 0.0;  // scaled error norm, 0 for rk4
};

StepResult rk4_step(const ClosedLoop& sys, const Vec& z, double h, const Eval& e1) {
  const Vec& k1 = e1.dz;
  const Vec k2 = sys(z + 0.5 * h * k1).dz;
  const Vec k3 = sys(z + 0.5 * h * k2).dz;
  const Vec k4 = sys(z + h * k3).dz;
  return {z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0};
}

StepResult dopri_step(const ClosedLoop& sys, const Vec& z, double h, const Eval& e1, const SimConfig& cfg) {
  const Vec& k1 = e1.dz;
  const Vec k2 = sys(z + h * (1.0 / 5) * k1).dz;
  const Vec k3 = sys(z + h * (3.0 / 40 * k1 + 9.0 / 40 * k2)).dz;
  const Vec k4 = sys(z + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3)).dz;
  const Vec k5 =
      sys(z + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 + 64448.0 / 6561 * k3 - 212.0 / 729 * k4)).dz;
  const Vec k6 = sys(z + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 + 46732.0 / 5247 * k3 + 49.0 / 176 * k4 -
                              5103.0 / 18656 * k5))
                     .dz;
  const Vec z5 =
      z + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 - 2187.0 / 6784 * k5 + 11.0 / 84 * k6);
  const Vec k7 = sys(z5).dz;
  const Vec err = h * (71.0 / 57600 * k1 - 71.0 / 16695 * k3 + 71.0 / 1920 * k4 - 17253.0 / 339200 * k5 +
                       22.0 / 525 * k6 - 1.0 / 40 * k7);
  double en = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double sc = cfg.atol + cfg.rtol * std::max(std::abs(z[i]), std::abs(z5[i]));
    en = std::max(en, std::abs(err[i]) / sc);
  }
  return {z5, en};
}

}  // namespace

Trajectory integrate_closed_loop(const ControlProblem& problem, const FeedbackLaw& law, const Vec& y0,
                                 const SimConfig& cfg) {
  cfg.validate();
  if (y0.size() != problem.dim_state) throw ParameterError("integrate_closed_loop: y0 dimension mismatch");
  if (cfg.escape_region && !cfg.escape_region->contains(y0))
    throw ParameterError("integrate_closed_loop: y0 must lie inside the escape region");
  const ClosedLoop sys(problem, law, cfg);
  const int d = problem.dim_state;
  Trajectory tr;

  auto record = [&](double t, const Vec& z, const Eval& e) {
    tr.times.push_back(t);
    tr.states.push_back(z.head(d));
    tr.controls.push_back(e.u);
    tr.running_cost.push_back(z[d]);
    tr.integrand.push_back(e.integrand);
    if (sys.has_aux()) tr.aux.push_back(z[d + 1]);
  };
  auto single = [&](const Vec& z, double h, const Eval& e) {
    return cfg.integrator == Integrator::rk4 ? rk4_step(sys, z, h, e) : dopri_step(sys, z, h, e, cfg);
  };
  auto blew_up = [&](const Vec& z) {
    return !z.allFinite() || z.head(d).norm() > cfg.blowup_radius;
  };

  Vec z = Vec::Zero(sys.size());
  z.head(d) = y0;
  Eval cur;
  try {
    cur = sys(z);
  } catch (const DomainError& ex) {
    tr.status = TrajStatus::escaped;
    tr.escape_reason = EscapeReason::law_domain;
    tr.escape_time = 0.0;
    tr.note = ex.what();
    return tr;
  }
  record(0.0, z, cur);

  const double horizon = cfg.horizon;
  double t = 0.0;
  double h = std::min(cfg.step, cfg.max_step);
  while (horizon - t > 1e-14 * std::max(1.0, horizon)) {
    const double ht = std::min(cfg.integrator == Integrator::rk4 ? cfg.step : h, horizon - t);
    StepResult sr;
    try {
      sr = single(z, ht, cur);
    } catch (const DomainError& ex) {
      tr.status = TrajStatus::escaped;
      tr.escape_reason = EscapeReason::law_domain;
      tr.escape_time = t;
      tr.note = ex.what();
      return tr;
    }
    if (cfg.integrator == Integrator::rk45) {
      if (!(sr.err <= 1.0)) {
        h = ht * (std::isfinite(sr.err) ? std::max(0.2, 0.9 * std::pow(sr.err, -0.2)) : 0.2);
        if (h < 1e-14 * std::max(1.0, horizon)) {
          tr.status = TrajStatus::blew_up;
          tr.note = "step size underflow";
          return tr;
        }
        continue;
      }
    }
    if (blew_up(sr.z)) {
      tr.status = TrajStatus::blew_up;
      tr.note = "state non-finite or beyond blow-up radius";
      return tr;
    }
    if (cfg.escape_region && cfg.escape_region->level(sr.z.head(d)) >= 0.0) {
      // Bisection on the fraction of the step at which the level crosses 0.
      double lo = 0.0, hi = 1.0;
      Vec z_hi = sr.z;
      while ((hi - lo) * ht > cfg.escape_time_tol) {
        const double mid = 0.5 * (lo + hi);
        bool outside = true;
        Vec zm;
        try {
          zm = single(z, mid * ht, cur).z;
          outside = cfg.escape_region->level(zm.head(d)) >= 0.0;
        } catch (const DomainError&) {
          outside = true;
        }
        if (outside) {
          hi = mid;
          if (zm.size() > 0) z_hi = zm;
        } else {
          lo = mid;
        }
      }
      tr.status = TrajStatus::escaped;
      tr.escape_reason = EscapeReason::region_exit;
      tr.escape_time = t + hi * ht;
      Eval eh;
      try {
        eh = sys(z_hi);
      } catch (const DomainError&) {
        eh.u = cur.u;
        eh.integrand = cur.integrand;
      }
      if (tr.escape_time > tr.times.back()) record(tr.escape_time, z_hi, eh);
      return tr;
    }
    Eval next;
    try {
      next = sys(sr.z);
    } catch (const DomainError& ex) {
      tr.status = TrajStatus::escaped;
      tr.escape_reason = EscapeReason::law_domain;
      tr.escape_time = t + ht;
      tr.note = ex.what();
      return tr;
    }
    t += ht;
    if (horizon - t <= 1e-14 * std::max(1.0, horizon)) t = horizon;
    z = sr.z;
    cur = next;
    record(t, z, cur);
    if (cfg.integrator == Integrator::rk45) {
      const double grow = sr.err > 0 ? std::min(5.0, 0.9 * std::pow(sr.err, -0.2)) : 5.0;
      h = std::min(cfg.max_step, ht * std::max(1.0, grow));
    }
  }
  return tr;
}

double cost_value(const Trajectory& traj, double horizon) {
  if (traj.size() == 0) throw ParameterError("cost_value: empty trajectory");
  if (horizon < 0 || horizon > traj.final_time() * (1 + 1e-12) + 1e-15)
    throw ParameterError("cost_value: horizon beyond the trajectory");
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), horizon);
  if (it == traj.times.end()) return traj.running_cost.back();
  const std::size_t i = static_cast<std::size_t>(it - traj.times.begin());
  if (*it == horizon || i == 0) return traj.running_cost[i];
  // Cubic Hermite with the integrand as derivative.
  const double t0 = traj.times[i - 1], t1 = traj.times[i], hh = t1 - t0, s = (horizon - t0) / hh;
  const double c0 = traj.running_cost[i - 1], c1 = traj.running_cost[i];
  const double d0 = traj.integrand[i - 1] * hh, d1 = traj.integrand[i] * hh;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * c0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * c1 + (s3 - s2) * d1;
}

Vec state_at(const Trajectory& traj, double t) {
  if (traj.size() == 0) throw ParameterError("state_at: empty trajectory");
  if (t <= 0) return traj.states.front();
  if (t >= traj.final_time()) return traj.states.back();
  const auto it = std::lower_bound(traj.times.begin(), traj.times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - traj.times.begin());
  const double s = (t - traj.times[i - 1]) / (traj.times[i] - traj.times[i - 1]);
  return (1 - s) * traj.states[i - 1] + s * traj.states[i];
}

double hamiltonian(const ControlProblem& problem, const Vec& y, const Vec& p, const Vec& u) {
  return -p.dot(problem.velocity(y, u)) - problem.integrand(y, u);
}

double max_hamiltonian(const ControlProblem& problem, const Vec& y, const Vec& p) {
  const Vec btp = problem.input(y).transpose() * p;
  return -problem.running(y) + btp.squaredNorm() / (2.0 * problem.beta) - p.dot(problem.drift(y));
}

Vec hamiltonian_argmax(const ControlProblem& problem, const Vec& y, const Vec& p) {
  return -(problem.input(y).transpose() * p) / problem.beta;
}

ScalarField hjb_residual(const ControlProblem& problem, const ScalarFunction& v, const BoxGrid& grid) {
  if (grid.dim() != problem.dim_state) throw ParameterError("hjb_residual: grid dimension mismatch");
  std::vector<double> r(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec y = grid.node(n);
    r[n] = max_hamiltonian(problem, y, v.gradient(y));
  }
  return ScalarField(grid, std::move(r));
}

}  // namespace smoothfb
