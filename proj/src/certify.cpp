#include "smoothfb/certify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smoothfb/estimate.hpp"
#include "smoothfb/parallel.hpp"

namespace smoothfb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double guarded_ratio(double num, double den) { return den < kDenominatorGuard ? kInf : num / den; }

// (e^{KT} - 1)/K with the K → 0 limit.
double growth_factor(double k, double t) {
  if (std::abs(k * t) < 1e-12) return t;
  return std::expm1(k * t) / k;
}

Region padded_box(const Region& r, double pad) {
  return Region::box(r.bbox_lower().array() - pad, r.bbox_upper().array() + pad);
}

}  // namespace

Modulus::Modulus(const std::function<Vec(const Vec&)>& map, const RegionSample& region, double max_radius,
                 int directions, std::uint64_t seed) {
  if (!(max_radius > 0)) throw ParameterError("modulus: max_radius must be positive");
  const int d = region.region.dim();
  const auto dirs = unit_directions(d, directions, seed);
  const std::size_t stride = std::max<std::size_t>(1, region.size() / 400);
  constexpr int levels = 24;
  radii_.resize(levels);
  values_.assign(levels, 0.0);
  for (int k = 0; k < levels; ++k) radii_[k] = max_radius * std::ldexp(1.0, k - levels + 1);
  for (std::size_t i = 0; i < region.size(); i += stride) {
    const Vec& x = region.points[i];
    const Vec mx = map(x);
    for (int k = 0; k < levels; ++k) {
      for (const Vec& u : dirs) {
        const Vec y = x + radii_[k] * u;
        if (!region.region.contains(y)) continue;
        values_[k] = std::max(values_[k], (map(y) - mx).norm());
      }
    }
  }
  for (int k = 1; k < levels; ++k) values_[k] = std::max(values_[k], values_[k - 1]);
}

double Modulus::operator()(double r) const {
  if (radii_.empty() || r <= 0) return 0.0;
  const auto it = std::lower_bound(radii_.begin(), radii_.end(), r);
  double best = it != radii_.end() ? values_[static_cast<std::size_t>(it - radii_.begin())]
                                   : std::numeric_limits<double>::infinity();
  // subadditivity on a convex set: h(r) ≤ ⌈r/r_k⌉ h(r_k)
  for (std::size_t k = 0; k < radii_.size() && radii_[k] <= r; ++k)
    best = std::min(best, std::ceil(r / radii_[k] - 1e-12) * values_[k]);
  return best;
}

double GLambdaTerms::excess(double r, double lambda) const {
  return h_w(r) * (f_sup + r / (beta * lambda) * b_sup * b_sup) + f_lip * grad_w_sup * r +
         2.0 / beta * r * r / lambda * b_lip * b_lip * grad_w_sup;
}

GLambdaTerms glambda_terms(const LyapunovSetup& setup, const ControlProblem& problem, const RegionSample& domain,
                           double max_radius, const SigmaOptions& opts) {
  GLambdaTerms t;
  t.beta = problem.beta;
  t.f_sup = sup_norm(problem.drift, domain);
  t.f_lip = lipschitz_estimate(problem.drift, domain, opts.lipschitz_pairs, opts.seed).value;
  t.b_sup = sup_norm(problem.input, domain);
  t.b_lip = lipschitz_estimate(problem.input, domain, opts.lipschitz_pairs, opts.seed + 1).combined();
  t.grad_w_sup = sup_norm(setup.w.gradient, domain);
  const RegionSample od = sample_grid(setup.omega_delta, 41);
  t.h_w = Modulus(setup.w.gradient, od, std::max(max_radius, 1e-6), 16, opts.seed + 2);
  return t;
}

double local_displacement(const MoreauField& m, const Vec& x) {
  const BoxGrid& g = m.displacement.grid();
  if (!g.contains(x)) throw DomainError("moreau displacement: point outside the output grid");
  const int d = g.dim();
  Index base{};
  for (int a = 0; a < d; ++a)
    base[a] = std::clamp(static_cast<int>(std::floor((x[a] - g.lower()[a]) / g.spacing(a))), 0, g.points(a) - 2);
  Index hi = base;
  for (int a = 0; a < d; ++a) ++hi[a];
  double r = 0.0;
  for_each_index(base, hi, d, [&](const Index& idx) { r = std::max(r, m.displacement[g.flat(idx)]); });
  return r;
}

SigmaQuantities sigma_quantities(const LyapunovSetup& setup, const ControlProblem& problem, double epsilon,
                                 const MoreauField* moreau, const SigmaOptions& opts) {
  if (!(epsilon > 0)) throw ParameterError("sigma: epsilon must be positive");
  const int d = problem.dim_state;
  SigmaQuantities out;
  out.epsilon = epsilon;
  const RegionSample centers = sample_monte_carlo(setup.omega_delta, static_cast<std::size_t>(opts.centers), opts.seed);
  const auto dirs = unit_directions(d, opts.directions, opts.seed + 7);

  std::optional<GLambdaTerms> gl;
  if (moreau) {
    out.lambda = moreau->lambda;
    const BoxGrid& og = moreau->values.grid();
    const RegionSample dom = sample_grid(Region::box(og.lower(), og.upper()), 41);
    double rmax = 0.0;
    for (double r : moreau->displacement.values()) rmax = std::max(rmax, r);
    gl = glambda_terms(setup, problem, dom, rmax, opts);
    out.add("f_sup", gl->f_sup, "sampled");
    out.add("f_lip", gl->f_lip, "sampled");
    out.add("B_sup", gl->b_sup, "sampled");
    out.add("B_lip", gl->b_lip, "sampled");
    out.add("grad_w_sup", gl->grad_w_sup, "sampled");
    out.add("max_displacement", rmax, "sampled");
  }

  auto glambda_at = [&](const Vec& y) {
    if (!moreau->certified_at(y))
      throw ParameterError("sigma: epsilon " + std::to_string(epsilon) +
                           " leaves the certified Moreau domain (domain margin too small)");
    return setup.g_at(y) + gl->excess(local_displacement(*moreau, y), *out.lambda);
  };

  double s1 = 0.0, s2 = 0.0, s1l = 0.0;
  std::size_t pairs = 0;
  for (const Vec& x : centers.points) {
    const Vec gx = setup.w.gradient(x);
    const double ax = gx.dot(problem.drift(x));
    const Vec bx = problem.input(x).transpose() * gx;
    auto visit = [&](const Vec& y) {
      const Vec gy = setup.w.gradient(y);
      const double cross = -gy.dot(problem.drift(y)) + ax;
      s1 = std::max(s1, std::abs(setup.g_at(y) + cross));
      s2 = std::max(s2, (bx - problem.input(y).transpose() * gy).norm());
      if (gl) s1l = std::max(s1l, std::abs(glambda_at(y) + cross));
      ++pairs;
    };
    visit(x);
    for (int k = 1; k <= opts.radii; ++k) {
      const double r = epsilon * k / opts.radii;
      for (const Vec& u : dirs) visit(x + r * u);
    }
  }
  out.sigma1 = s1;
  out.sigma2 = s2;
  if (gl) out.sigma1_lambda = s1l;
  out.centers = centers.size();
  out.pairs = pairs;
  out.add("centers", static_cast<double>(out.centers), "sampled");
  out.add("pairs", static_cast<double>(pairs), "sampled");
  return out;
}

EscapeMeasurement measure_escape(const LyapunovSetup& setup, const ControlProblem& problem, const FeedbackLaw& law,
                                 const EscapeOptions& opts) {
  const auto& pts = setup.omega_sample.points;
  std::vector<std::size_t> pick;
  const std::size_t stride = std::max<std::size_t>(1, pts.size() / std::max(1, opts.starts));
  for (std::size_t i = 0; i < pts.size(); i += stride) pick.push_back(i);
  // plus the points farthest from the sample centroid
  Vec centroid = Vec::Zero(problem.dim_state);
  for (const Vec& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  std::vector<std::size_t> order(pts.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t extra = std::min<std::size_t>(16, pts.size());
  std::partial_sort(order.begin(), order.begin() + extra, order.end(), [&](std::size_t a, std::size_t b) {
    return (pts[a] - centroid).squaredNorm() > (pts[b] - centroid).squaredNorm();
  });
  pick.insert(pick.end(), order.begin(), order.begin() + extra);
  std::sort(pick.begin(), pick.end());
  pick.erase(std::unique(pick.begin(), pick.end()), pick.end());

  SimConfig sim = opts.sim;
  sim.horizon = opts.tau_max;
  sim.escape_region = setup.omega_delta;
  EscapeMeasurement m;
  m.starts = pick.size();
  for (std::size_t i : pick) {
    const Trajectory tr = integrate_closed_loop(problem, law, pts[i], sim);
    if (tr.status == TrajStatus::escaped || tr.status == TrajStatus::blew_up) {
      ++m.escaped;
      const double t = tr.status == TrajStatus::escaped ? tr.escape_time : tr.final_time();
      if (t < m.time) {
        m.time = t;
        m.worst_start = pts[i];
      }
    }
  }
  return m;
}

namespace {

BoundCertificate escape_certificate(std::string name, std::string kind, double delta, double denominator,
                                    const EscapeMeasurement& m, const EscapeOptions& opts) {
  BoundCertificate c;
  c.name = std::move(name);
  c.kind = std::move(kind);
  c.predicted_is_lhs = true;
  c.lhs = guarded_ratio(delta, denominator);
  c.vacuous = !std::isfinite(c.lhs);
  c.rhs = m.time;
  c.tolerance = opts.tolerance;
  c.add("delta", delta, "supplied");
  c.add("denominator", denominator, "derived");
  c.add("tau_max", opts.tau_max, "supplied");
  c.add("starts", static_cast<double>(m.starts), "sampled");
  c.add("escaped_starts", static_cast<double>(m.escaped), "sampled");
  if (!std::isfinite(m.time)) c.notes.push_back("no escape observed within tau_max");
  if (c.vacuous) c.notes.push_back("denominator below guard, prediction reported as +inf");
  c.decide();
  return c;
}

}  // namespace

BoundCertificate escape_bound_a(const LyapunovSetup& setup, const ControlProblem& problem, const FeedbackLaw& u,
                                const FeedbackLaw& u_phi, const EscapeOptions& opts) {
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  double dev = 0.0, gw = 0.0, gmax = 0.0;
  for (const Vec& x : od.points) {
    dev = std::max(dev, (problem.input(x) * (u(x) - u_phi(x))).norm());
    gw = std::max(gw, setup.w.gradient(x).norm());
    gmax = std::max(gmax, setup.g_at(x));
  }
  const EscapeMeasurement m = measure_escape(setup, problem, u, opts);
  BoundCertificate c = escape_certificate("escape_a", "escape time >= delta / (|B(u-u_phi)| |grad w| + max g)",
                                          setup.delta, dev * gw + gmax, m, opts);
  c.add("B_u_deviation_sup", dev, "sampled");
  c.add("grad_w_sup", gw, "sampled");
  c.add("g_max", gmax, "sampled");
  return c;
}

BoundCertificate escape_bound_b(const LyapunovSetup& setup, const ControlProblem& problem, const ScalarField& phi,
                                double epsilon, const EscapeOptions& opts) {
  const MollifiedField mf = mollify(phi, epsilon);
  const FeedbackLaw law = feedback_from(mf.values, problem, "mollified");
  const SigmaQuantities sq = sigma_quantities(setup, problem, epsilon, nullptr, opts.sigma);
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  double n = 0.0;
  for (const Vec& x : od.points) n = std::max(n, (problem.input(x).transpose() * phi.gradient(x)).norm());
  const EscapeMeasurement m = measure_escape(setup, problem, law, opts);
  BoundCertificate c =
      escape_certificate("escape_b", "escape time >= delta / (sigma1_eps + sigma2_eps |B^T grad phi| / beta)",
                         setup.delta, sq.sigma1 + sq.sigma2 * n / problem.beta, m, opts);
  c.add("epsilon", epsilon, "supplied");
  c.add("sigma1_eps", sq.sigma1, "sampled");
  c.add("sigma2_eps", sq.sigma2, "sampled");
  c.add("BT_grad_phi_sup", n, "sampled");
  c.add("sigma_pairs", static_cast<double>(sq.pairs), "sampled");
  return c;
}

BoundCertificate escape_bound_c(const LyapunovSetup& setup, const ControlProblem& problem, const ScalarField& phi,
                                double epsilon, double lambda, std::optional<HolderRates> rates,
                                const EscapeOptions& opts) {
  const Region ob = padded_box(setup.omega_delta, epsilon + 4 * phi.grid().max_spacing());
  MoreauOptions mo;
  mo.output_box = std::make_pair(ob.bbox_lower(), ob.bbox_upper());
  const MoreauField mw = moreau_envelope(phi, lambda, mo);
  const MollifiedField mf = mollify(mw.values, epsilon);
  const FeedbackLaw law = feedback_from(mf.values, problem, "mollified_moreau");
  const SigmaQuantities sq = sigma_quantities(setup, problem, epsilon, &mw, opts.sigma);
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  double n = 0.0;
  for (const Vec& x : od.points) n = std::max(n, (problem.input(x).transpose() * mw.values.gradient(x)).norm());
  const EscapeMeasurement m = measure_escape(setup, problem, law, opts);
  BoundCertificate c = escape_certificate(
      "escape_c", "escape time >= delta / (sigma1_eps_lambda + sigma2_eps |B^T grad M_lambda phi| / beta)",
      setup.delta, *sq.sigma1_lambda + sq.sigma2 * n / problem.beta, m, opts);
  c.add("epsilon", epsilon, "supplied");
  c.add("lambda", lambda, "supplied");
  c.add("sigma1_eps_lambda", *sq.sigma1_lambda, "sampled");
  c.add("sigma2_eps", sq.sigma2, "sampled");
  c.add("BT_grad_moreau_sup", n, "sampled");
  for (const auto& k : sq.constants) c.constants.push_back(k);
  if (rates) {
    const double a = rates->alpha, s = rates->sigma_w;
    if (!(a > 0 && a <= 1 && s > 0 && s <= 1)) throw ParameterError("escape_c: Hölder exponents must lie in (0, 1]");
    auto get = [&](const char* key) {
      for (const auto& k : sq.constants)
        if (k.name == key) return k.value;
      return 0.0;
    };
    const double r1 = std::pow(lambda, s / (2 - a)), r2 = std::pow(lambda, (s + a - 1) / (2 - a));
    const double r3 = std::pow(lambda, 2 / (2 - a)), r4 = std::pow(lambda, a / (2 - a));
    const double beta = problem.beta, gw = get("grad_w_sup"), bs = get("B_sup"), bl = get("B_lip");
    const double total = rates->constant * (get("f_sup") * r1 + r2 * bs * bs / beta) + get("f_lip") * gw * r3 +
                         2 / beta * r4 * bl * bl * gw;
    c.add("rate_lambda^(sigma/(2-a))", r1, "derived");
    c.add("rate_lambda^((sigma+a-1)/(2-a))", r2, "derived");
    c.add("rate_lambda^(2/(2-a))", r3, "derived");
    c.add("rate_lambda^(a/(2-a))", r4, "derived");
    c.add("g_lambda_gap_bound", total, "derived");
  }
  return c;
}

BoundCertificate certify_linfty(const ControlProblem& problem, const ScalarFunction& v,
                                const std::function<double(const Vec&)>& g, const FeedbackLaw& law, double horizon,
                                const RegionSample& omega, const RegionSample& domain, const ErrorCertOptions& opts) {
  if (!(horizon > 0)) throw ParameterError("certify_linfty: horizon must be positive");
  SimConfig sim = opts.sim;
  sim.horizon = horizon;
  if (!sim.escape_region) sim.escape_region = domain.region;
  const std::size_t n = omega.size();
  std::vector<double> lhs(n);
  std::vector<double> gap(n, 0.0), gpos(n, 0.0);
  std::vector<std::uint8_t> escaped(n, 0);
  auto u_v = [&](const Vec& y) -> Vec { return -(problem.input(y).transpose() * v.gradient(y)) / problem.beta; };
  parallel_for(n, opts.jobs, [&](std::size_t i) {
    const Vec& y0 = omega.points[i];
    const Trajectory tr = integrate_closed_loop(problem, law, y0, sim);
    if (tr.status != TrajStatus::completed) {
      escaped[i] = 1;
      lhs[i] = std::numeric_limits<double>::quiet_NaN();
      return;
    }
    lhs[i] = tr.running_cost.back() + v.value(tr.final_state()) - v.value(y0);
    for (const Vec& y : tr.states) {
      gap[i] = std::max(gap[i], (law(y) - u_v(y)).squaredNorm());
      if (g) gpos[i] = std::max(gpos[i], std::max(0.0, g(y)));
    }
  });
  double sup_lhs = -kInf, sup_gap = 0.0, sup_g = 0.0;
  std::size_t esc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (escaped[i]) {
      ++esc;
      continue;
    }
    sup_lhs = std::max(sup_lhs, lhs[i]);
    sup_gap = std::max(sup_gap, gap[i]);
    sup_g = std::max(sup_g, gpos[i]);
  }
  for (const Vec& y : domain.points) {
    sup_gap = std::max(sup_gap, (law(y) - u_v(y)).squaredNorm());
    if (g) sup_g = std::max(sup_g, std::max(0.0, g(y)));
  }
  BoundCertificate c;
  c.name = "linfty";
  c.kind = "sup (V_T + v(y(T)) - v) <= T (sup g+ + beta |u - u_v|^2_inf)";
  c.lhs = sup_lhs;
  c.rhs = horizon * (sup_g + problem.beta * sup_gap);
  c.tolerance = opts.tolerance;
  c.add("T", horizon, "supplied");
  c.add("g_pos_sup", sup_g, "sampled");
  c.add("control_gap_sq_sup", sup_gap, "sampled");
  c.add("starts", static_cast<double>(n), "sampled");
  c.conditions.emplace_back("trajectories stay in the domain up to T", esc == 0);
  if (esc) c.notes.push_back(std::to_string(esc) + " trajectories escaped before T; certificate invalid");
  c.decide();
  return c;
}

double divergence_bound(const ControlProblem& problem, const FeedbackLaw& law, const RegionSample& region,
                        double step) {
  const int d = problem.dim_state, m = problem.dim_control;
  double c = -kInf;
  for (const Vec& x : region.points) {
    Mat jac(m, d);
    for (int a = 0; a < d; ++a) {
      Vec xp = x, xm = x;
      xp[a] += step;
      xm[a] -= step;
      jac.col(a) = (law(xp) - law(xm)) / (2 * step);
    }
    c = std::max(c, -(problem.input(x) * jac).trace());
  }
  return c;
}

BoundCertificate certify_lp(const ControlProblem& problem, const ScalarFunction& v,
                            const std::function<double(const Vec&)>& g, const FeedbackLaw& law, double horizon,
                            const RegionSample& omega, const RegionSample& omega_delta, double p,
                            const std::function<bool(const Vec&)>& defined, const ErrorCertOptions& opts) {
  if (!(p >= 1) || !std::isfinite(p)) throw ParameterError("certify_lp: p must lie in [1, inf)");
  if (!(horizon > 0)) throw ParameterError("certify_lp: horizon must be positive");
  const int d = problem.dim_state, m = problem.dim_control;
  const double beta = problem.beta;

  const double cdiv = divergence_bound(problem, law, omega_delta, opts.jacobian_step);
  const double f_lip = lipschitz_estimate(problem.drift, omega_delta, opts.lipschitz_pairs, opts.seed).value;
  const double b_lip = lipschitz_estimate(problem.input, omega_delta, opts.lipschitz_pairs, opts.seed + 1).combined();
  double u_sup = 0.0, g_sup = 0.0, gap = 0.0;
  std::size_t excluded = 0;
  for (const Vec& x : omega_delta.points) {
    const Vec u = law(x);
    u_sup = std::max(u_sup, u.lpNorm<Eigen::Infinity>());
    if (g) g_sup = std::max(g_sup, std::abs(g(x)));
    if (defined && !defined(x)) {
      ++excluded;
      continue;
    }
    const Vec uv = -(problem.input(x).transpose() * v.gradient(x)) / beta;
    gap += omega_delta.weight * std::pow((uv - u).squaredNorm(), p);
  }
  const double gap_sq = std::pow(gap, 1.0 / p);  // ‖·‖²_{L^{2p}}
  const double k = cdiv + d * f_lip + d * m * b_lip * u_sup;

  SimConfig sim = opts.sim;
  sim.horizon = horizon;
  if (!sim.escape_region) sim.escape_region = omega_delta.region;
  const std::size_t n = omega.size();
  std::vector<double> vals(n, 0.0);
  std::vector<std::uint8_t> escaped(n, 0);
  parallel_for(n, opts.jobs, [&](std::size_t i) {
    const Vec& y0 = omega.points[i];
    const Trajectory tr = integrate_closed_loop(problem, law, y0, sim);
    if (tr.status != TrajStatus::completed) {
      escaped[i] = 1;
      return;
    }
    vals[i] = std::max(0.0, tr.running_cost.back() + v.value(tr.final_state()) - v.value(y0));
  });
  double acc = 0.0;
  std::size_t esc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    esc += escaped[i];
    acc += omega.weight * std::pow(vals[i], p);
  }

  BoundCertificate c;
  c.name = "lp";
  c.kind = "|(V_T + v(y(T)) - v)+|_Lp <= T|w|^(1/p)|g| + T^((p-1)/p) beta ((e^(KT)-1)/K)^(1/p) |u_v-u|^2_L2p";
  c.lhs = std::pow(acc, 1.0 / p);
  c.rhs = horizon * std::pow(omega.measure(), 1.0 / p) * g_sup +
          std::pow(horizon, (p - 1) / p) * beta * std::pow(growth_factor(k, horizon), 1.0 / p) * gap_sq;
  c.tolerance = opts.tolerance;
  c.add("p", p, "supplied");
  c.add("T", horizon, "supplied");
  c.add("C_divergence", cdiv, "sampled");
  c.add("f_lip", f_lip, "sampled");
  c.add("B_lip", b_lip, "sampled");
  c.add("u_sup", u_sup, "sampled");
  c.add("K", k, "derived");
  c.add("g_sup", g_sup, "sampled");
  c.add("control_gap_sq_L2p", gap_sq, "sampled");
  c.add("omega_measure", omega.measure(), "sampled");
  c.add("excluded_nodes", static_cast<double>(excluded), "sampled");
  c.add("excluded_measure", excluded * omega_delta.weight, "sampled");
  c.notes.push_back("C1 regularity of the region boundary is assumed, not verified");
  c.conditions.emplace_back("trajectories stay in the domain up to T", esc == 0);
  if (esc) c.notes.push_back(std::to_string(esc) + " trajectories escaped before T; certificate invalid");
  c.decide();
  return c;
}

BoundCertificate jacobian_volume_check(const ControlProblem& problem, const FeedbackLaw& law, const Region& omega,
                                       const RegionSample& omega_delta, double horizon,
                                       const std::function<double(const Vec&)>& phi, std::size_t samples,
                                       const ErrorCertOptions& opts) {
  if (samples < 2) throw ParameterError("jacobian_volume_check: need at least 2 samples");
  const int d = problem.dim_state, m = problem.dim_control;
  const RegionSample mc = sample_monte_carlo(omega, samples, opts.seed);
  SimConfig sim = opts.sim;
  sim.horizon = horizon;
  sim.escape_region = omega_delta.region;
  sim.aux_integrand = phi;
  std::vector<double> integral(samples, 0.0);
  std::vector<std::uint8_t> escaped(samples, 0);
  parallel_for(samples, opts.jobs, [&](std::size_t i) {
    const Trajectory tr = integrate_closed_loop(problem, law, mc.points[i], sim);
    if (tr.status != TrajStatus::completed) escaped[i] = 1;
    integral[i] = tr.aux.empty() ? 0.0 : tr.aux.back();
  });
  const double vol = mc.measure();
  double mean = 0.0;
  for (double x : integral) mean += x;
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (double x : integral) var += (x - mean) * (x - mean);
  var /= static_cast<double>(samples - 1);
  const double lhs = vol * mean;
  const double se = vol * std::sqrt(var / static_cast<double>(samples));

  const double cdiv = divergence_bound(problem, law, omega_delta, opts.jacobian_step);
  const double f_lip = lipschitz_estimate(problem.drift, omega_delta, opts.lipschitz_pairs, opts.seed).value;
  const double b_lip = lipschitz_estimate(problem.input, omega_delta, opts.lipschitz_pairs, opts.seed + 1).combined();
  double u_sup = 0.0, phi_int = 0.0;
  for (const Vec& x : omega_delta.points) {
    u_sup = std::max(u_sup, law(x).lpNorm<Eigen::Infinity>());
    phi_int += omega_delta.weight * phi(x);
  }
  const double k = cdiv + d * f_lip + d * m * b_lip * u_sup;
  std::size_t esc = 0;
  for (auto e : escaped) esc += e;

  BoundCertificate c;
  c.name = "jacobian_volume";
  c.kind = "int_w int_0^T phi(y) dt dy0 <= (e^(KT)-1)/K int_wdelta phi (upper 3-sigma band)";
  c.lhs = lhs + 3 * se;
  c.rhs = growth_factor(k, horizon) * phi_int;
  c.tolerance = 1e-12 * std::max(1.0, std::abs(c.rhs));
  c.seed = opts.seed;
  c.add("mc_estimate", lhs, "sampled");
  c.add("standard_error", se, "sampled");
  c.add("samples", static_cast<double>(samples), "supplied");
  c.add("omega_volume", vol, std::isnan(omega.volume()) ? "sampled" : "derived");
  c.add("C_divergence", cdiv, "sampled");
  c.add("K", k, "derived");
  c.add("phi_integral", phi_int, "sampled");
  c.conditions.emplace_back("trajectories stay in omega_delta up to T", esc == 0);
  if (lhs - 3 * se <= c.rhs && c.rhs < c.lhs) {
    c.verdict = Verdict::inconclusive;
    c.notes.push_back("bound inside the Monte Carlo band");
  }
  c.decide();
  return c;
}

bool nonincreasing(std::span<const double> x, double floor) {
  for (std::size_t k = 1; k < x.size(); ++k)
    if (!(x[k] <= x[k - 1] + floor)) return false;
  return true;
}

ConvergenceReport trajectory_convergence_check(const ControlProblem& problem, std::span<const ParameterLaw> laws,
                                               const Vec& y0, const ScalarFunction& value,
                                               const std::optional<Trajectory>& reference, bool unique,
                                               double t_check, const SimConfig& sim, double floor) {
  ConvergenceReport rep;
  rep.cost_only = !unique || !reference;
  if (!unique) rep.notes.push_back("reference optimum not unique at y0; comparing costs only");
  else if (!reference) rep.notes.push_back("no reference trajectory; comparing costs only");
  std::vector<double> dist, cost;
  for (const ParameterLaw& pl : laws) {
    SimConfig cfg = sim;
    cfg.horizon = pl.horizon;
    const Trajectory tr = integrate_closed_loop(problem, pl.law, y0, cfg);
    ConvergenceEntry e;
    e.parameter = pl.parameter;
    e.horizon = pl.horizon;
    e.status = tr.status;
    const double t_end = tr.final_time();
    e.cost_gap = std::abs(tr.running_cost.back() + value.value(tr.final_state()) - value.value(y0));
    if (tr.status != TrajStatus::completed)
      rep.notes.push_back("parameter " + std::to_string(pl.parameter) + ": trajectory stopped at t=" +
                          std::to_string(t_end));
    if (!rep.cost_only) {
      const double tc = std::min({t_check, t_end, reference->final_time()});
      double dmax = 0.0;
      for (std::size_t i = 0; i < tr.size() && tr.times[i] <= tc; ++i)
        dmax = std::max(dmax, (tr.states[i] - state_at(*reference, tr.times[i])).norm());
      for (std::size_t i = 0; i < reference->size() && reference->times[i] <= tc; ++i)
        dmax = std::max(dmax, (state_at(tr, reference->times[i]) - reference->states[i]).norm());
      e.distance = dmax;
      dist.push_back(dmax);
    }
    cost.push_back(e.cost_gap);
    rep.entries.push_back(e);
  }
  rep.costs_decrease = nonincreasing(cost, floor);
  rep.distances_decrease = rep.cost_only || nonincreasing(dist, floor);
  return rep;
}

}  // namespace smoothfb
