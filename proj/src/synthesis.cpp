#include "smoothfb/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "smoothfb/estimate.hpp"
#include "smoothfb/parallel.hpp"
#include "smoothfb/simulate.hpp"

namespace smoothfb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

// ln(e^x - 1) without overflow.
double log_expm1(double x) {
  if (x <= 0) return -kInf;
  if (x > 30) return x + std::log1p(-std::exp(-x));
  return std::log(std::expm1(x));
}

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double growth_factor(double k, double t) {
  if (std::abs(k * t) < 1e-12) return t;
  return std::expm1(k * t) / k;
}

Region padded_box(const Region& r, double pad) {
  return Region::box(r.bbox_lower().array() - pad, r.bbox_upper().array() + pad);
}

Vec control_of(const ControlProblem& problem, const Vec& y, const Vec& grad) {
  return -(problem.input(y).transpose() * grad) / problem.beta;
}

double grad_w_sup(const LyapunovSetup& setup, const RegionSample& od) {
  double gw = 0.0;
  for (const Vec& x : od.points) gw = std::max(gw, setup.w.gradient(x).norm());
  return gw;
}

// τ = min(escape, κ, cap) with the branch that binds.
void choose_tau(PlanEntry& e, double tau_max) {
  e.tau = tau_max;
  e.tau_branch = "cap";
  if (e.kappa < e.tau) {
    e.tau = e.kappa;
    e.tau_branch = "kappa";
  }
  if (e.escape_horizon < e.tau) {
    e.tau = e.escape_horizon;
    e.tau_branch = "escape";
  }
  if (!(e.tau > 0)) {
    e.accepted = false;
    e.diagnostic = fmt::format("non-positive horizon (kappa={:.6g}, escape={:.6g})", e.kappa, e.escape_horizon);
  }
}

double kappa_or_inf(const KappaSchedule& kappa, double s) { return s > 0 ? kappa(s) : kInf; }

// Points x + ε u for x in ω_δ and the given directions, all certified.
bool inclusion_holds(const MoreauField& m, const RegionSample& od, const std::vector<Vec>& dirs, double eps) {
  for (const Vec& x : od.points) {
    if (!m.certified_at(x)) return false;
    if (eps > 0)
      for (const Vec& u : dirs)
        if (!m.certified_at(x + eps * u)) return false;
  }
  return true;
}

// Decreasing geometric ε grid from top down to the mollifier limit 2h.
std::vector<double> epsilon_grid(double top, double h, const PlanOptions& opts) {
  std::vector<double> eps;
  double e = top;
  for (int j = 0; j < opts.epsilon_candidates && e >= 2 * h * (1 - 1e-12); ++j, e *= opts.epsilon_ratio)
    eps.push_back(e);
  return eps;
}

struct Candidate {
  MollifiedField mf;
  double gap = kInf;
};

// Largest feasible entry of a decreasing ε grid, assuming feasibility is
// monotone along it. Returns -1 when even the smallest fails.
template <class Feasible>
int largest_feasible(std::size_t n, Feasible&& feasible) {
  if (n == 0 || !feasible(static_cast<int>(n) - 1)) return -1;
  int lo = -1, hi = static_cast<int>(n) - 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

MoreauField moreau_over(const ScalarField& value, const LyapunovSetup& setup, double lambda, double pad, int jobs) {
  const Region ob = padded_box(setup.omega_delta, pad);
  MoreauOptions mo;
  mo.output_box = std::make_pair(ob.bbox_lower(), ob.bbox_upper());
  mo.jobs = jobs;
  return moreau_envelope(value, lambda, mo);
}

std::vector<double> descending(std::span<const double> x) {
  std::vector<double> out(x.begin(), x.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

void record_sigma(PlanEntry& e, const SigmaQuantities& sq) {
  e.sigma1 = sq.sigma1_lambda ? *sq.sigma1_lambda : sq.sigma1;
  e.sigma2 = sq.sigma2;
}

}  // namespace

KappaSchedule KappaSchedule::log(double a) {
  if (!(a > 0)) throw ParameterError("kappa: log form needs a > 0");
  return {Form::log, a};
}

KappaSchedule KappaSchedule::power(double q) {
  if (!(q > 0)) throw ParameterError("kappa: power form needs q > 0");
  return {Form::power, q};
}

double KappaSchedule::operator()(double s) const {
  if (!(s > 0)) return kInf;
  return form == Form::log ? -std::log(s) / parameter : std::pow(s, -parameter);
}

std::string KappaSchedule::describe() const {
  return form == Form::log ? fmt::format("log(a={})", parameter) : fmt::format("power(q={})", parameter);
}

EtaSchedule EtaSchedule::power(double c, double r) {
  if (!(c > 0)) throw ParameterError("eta: constant must be positive");
  const double lc = std::log(c);
  return {[lc, r](double s) { return lc + r * std::log(s); }, fmt::format("{}*s^{}", c, r)};
}

EtaSchedule EtaSchedule::exp_decay(std::function<double(double)> k_of_s, KappaSchedule kappa, double p) {
  if (!(p >= 1)) throw ParameterError("eta: p must be at least 1");
  return {[k_of_s = std::move(k_of_s), kappa, p](double s) { return -k_of_s(s) * kappa(s) / p - 1.0 / (s * s); },
          "exp(-K(s)kappa(s)/p - 1/s^2)"};
}

namespace {

TailCheck finish_tail(std::vector<double> s, std::vector<double> lp) {
  TailCheck t;
  t.s = std::move(s);
  t.log_product = std::move(lp);
  for (std::size_t k = 1; k < t.log_product.size(); ++k)
    if (t.log_product[k] > t.log_product[k - 1] + 1e-12) t.decreasing = false;
  if (t.log_product.size() >= 2 && t.log_product.back() != -kInf &&
      !(t.log_product.back() < t.log_product.front()))
    t.decreasing = false;
  return t;
}

void check_sweep(std::span<const double> s) {
  if (s.size() < 2) throw ParameterError("tail check: need at least two s values");
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!(s[k] > 0 && s[k] < 1)) throw ParameterError("tail check: s must lie in (0, 1)");
    if (k > 0 && !(s[k] < s[k - 1])) throw ParameterError("tail check: s must decrease");
  }
}

}  // namespace

TailCheck kappa_tail_semiconcave(const KappaSchedule& kappa, double k, double p, std::span<const double> s) {
  if (!(p >= 1)) throw ParameterError("tail check: p must be at least 1");
  check_sweep(s);
  std::vector<double> lp;
  for (double si : s) {
    const double kap = kappa(si);
    if (!(kap > 0)) {
      lp.push_back(kInf);
      continue;
    }
    const double growth = k == 0 ? -kInf : (k > 0 ? log_expm1(k * kap) : std::log(-std::expm1(k * kap)));
    lp.push_back((p - 1) / p * std::log(kap) + growth / p + 2 * std::log(si));
  }
  return finish_tail({s.begin(), s.end()}, std::move(lp));
}

TailCheck kappa_tail_hoelder(const KappaSchedule& kappa, const std::function<double(double)>& k_of_s,
                             const EtaSchedule& eta, double p, double alpha, std::span<const double> s) {
  if (!(p >= 1)) throw ParameterError("tail check: p must be at least 1");
  if (!(alpha > 0.5 && alpha <= 1)) throw ParameterError("tail check: alpha must lie in (1/2, 1]");
  check_sweep(s);
  std::vector<double> lp;
  for (double si : s) {
    const double kap = kappa(si);
    if (!(kap > 0)) {
      lp.push_back(kInf);
      continue;
    }
    const double k = k_of_s(si);
    const double growth = k > 0 ? log_expm1(k * kap) : -kInf;
    const double first = (p - 1) / p * std::log(kap) + growth / p + eta.log_value(si);
    const double second = std::log(kap) + (2 * alpha - 1) / (2 - alpha) * std::log(si);
    lp.push_back(log_add(first, second));
  }
  return finish_tail({s.begin(), s.end()}, std::move(lp));
}

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::c1: return "c1";
    case Pipeline::semiconvex: return "semiconvex";
    case Pipeline::semiconcave: return "semiconcave";
    case Pipeline::hoelder: return "hoelder";
  }
  return "?";
}

std::vector<const PlanEntry*> SynthesisPlan::accepted() const {
  std::vector<const PlanEntry*> out;
  for (const auto& e : entries)
    if (e.accepted) out.push_back(&e);
  return out;
}

bool SynthesisPlan::tau_monotone() const {
  auto acc = accepted();
  if (acc.empty()) return false;
  auto param = [](const PlanEntry* e) { return std::isfinite(e->lambda) ? e->lambda : e->epsilon; };
  std::sort(acc.begin(), acc.end(), [&](auto* a, auto* b) { return param(a) > param(b); });
  for (std::size_t k = 0; k < acc.size(); ++k) {
    if (!(std::isfinite(acc[k]->tau) && acc[k]->tau > 0)) return false;
    if (k > 0 && acc[k]->tau < acc[k - 1]->tau * (1 - 1e-12)) return false;
  }
  return true;
}

nlohmann::json SynthesisPlan::to_json() const {
  nlohmann::json j;
  j["pipeline"] = to_string(pipeline);
  j["kappa"] = kappa.describe();
  j["tau_max"] = number(tau_max);
  j["delta"] = number(delta);
  j["lambda0"] = lambda0 ? number(*lambda0) : nlohmann::json(nullptr);
  j["tau_monotone"] = tau_monotone();
  if (tail) {
    nlohmann::json t;
    t["decreasing"] = tail->decreasing;
    for (std::size_t k = 0; k < tail->s.size(); ++k)
      t["sweep"].push_back({{"s", number(tail->s[k])}, {"log_product", number(tail->log_product[k])}});
    j["tail"] = t;
  }
  j["diagnostics"] = nlohmann::json::array();
  for (const auto& c : diagnostics)
    j["diagnostics"].push_back({{"name", c.name}, {"value", number(c.value)}, {"source", c.source}});
  j["entries"] = nlohmann::json::array();
  for (const auto& e : entries) {
    j["entries"].push_back({{"epsilon", number(e.epsilon)},
                            {"lambda", number(e.lambda)},
                            {"s", number(e.s)},
                            {"kappa", number(e.kappa)},
                            {"escape_horizon", number(e.escape_horizon)},
                            {"tau", number(e.tau)},
                            {"tau_branch", e.tau_branch},
                            {"deviation", number(e.deviation)},
                            {"predicted_bound", number(e.predicted_bound)},
                            {"K", number(e.k)},
                            {"sigma1", number(e.sigma1)},
                            {"sigma2", number(e.sigma2)},
                            {"gradient_gap", number(e.gradient_gap)},
                            {"eta", number(e.eta)},
                            {"excluded_nodes", e.excluded_nodes},
                            {"excluded_measure", number(e.excluded_measure)},
                            {"accepted", e.accepted},
                            {"diagnostic", e.diagnostic}});
  }
  return j;
}

bool GridGradientMask::defined_at(const Vec& x) const {
  const BoxGrid& g = field.grid();
  if (!g.contains(x)) return false;
  return consistent[g.flat(g.nearest(x))] != 0;
}

GridGradientMask gradient_mask(const ScalarField& v, double factor) {
  if (!(factor > 0)) throw ParameterError("gradient_mask: factor must be positive");
  GridGradientMask m;
  m.field = v;
  m.tolerance = factor * v.grid().max_spacing();
  m.consistent.resize(v.grid().size());
  for (std::size_t n = 0; n < v.grid().size(); ++n) m.consistent[n] = v.fd_consistent(n, m.tolerance) ? 1 : 0;
  return m;
}

ScalarField sample_padded(const std::function<double(const Vec&)>& fn, const Region& region, double pad, double h,
                          Interp interp) {
  if (!(h > 0) || !(pad >= 0)) throw ParameterError("sample_padded: need h > 0 and pad >= 0");
  const Vec lo = region.bbox_lower().array() - pad;
  Vec hi = region.bbox_upper().array() + pad;
  std::vector<int> pts(lo.size());
  for (int a = 0; a < lo.size(); ++a) {
    pts[a] = static_cast<int>(std::ceil((hi[a] - lo[a]) / h - 1e-9)) + 1;
    hi[a] = lo[a] + (pts[a] - 1) * h;
  }
  return ScalarField::sample(BoxGrid(lo, hi, pts), fn, interp);
}

SynthesisPlan plan_c1(const ControlProblem& problem, const ScalarFunction& value, const LyapunovSetup& setup,
                      std::span<const LawFamilyMember> family, const KappaSchedule& kappa,
                      const PlanOptions& opts) {
  if (family.empty()) throw ParameterError("plan_c1: empty law family");
  SynthesisPlan plan;
  plan.pipeline = Pipeline::c1;
  plan.kappa = kappa;
  plan.tau_max = opts.tau_max;
  plan.delta = setup.delta;
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  const double gw = grad_w_sup(setup, od);
  const double side = gw > 0 ? setup.delta / gw : kInf;
  plan.diagnostics.push_back({"grad_w_sup", gw, "sampled"});
  plan.diagnostics.push_back({"side_condition_bound", side, "derived"});

  for (const auto& member : family) {
    PlanEntry e;
    e.epsilon = member.epsilon;
    e.law = member.law;
    e.surrogate = member.surrogate;
    double s = 0.0, dev = 0.0;
    for (const Vec& x : od.points) {
      const Vec gap = member.law(x) - control_of(problem, x, value.gradient(x));
      s = std::max(s, (problem.input(x) * gap).norm());
      dev = std::max(dev, gap.norm());
    }
    e.s = s;
    e.deviation = dev;
    e.kappa = kappa_or_inf(kappa, s);
    if (s > 0 && e.kappa * s > side * (1 + 1e-12))
      throw PlanError(fmt::format("plan_c1: side condition kappa(s)s <= delta/|grad w| fails at epsilon={} "
                                  "(kappa(s)s={:.6g}, bound={:.6g})",
                                  member.epsilon, e.kappa * s, side));
    choose_tau(e, opts.tau_max);
    if (e.accepted) e.predicted_bound = problem.beta * e.tau * dev * dev;
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

SynthesisPlan plan_semiconvex(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                              std::span<const double> lambdas, const KappaSchedule& kappa,
                              const PlanOptions& opts) {
  if (lambdas.empty()) throw ParameterError("plan_semiconvex: empty lambda sweep");
  SynthesisPlan plan;
  plan.pipeline = Pipeline::semiconvex;
  plan.kappa = kappa;
  plan.tau_max = opts.tau_max;
  plan.delta = setup.delta;
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  const auto dirs = unit_directions(setup.omega_delta.dim(), 16, opts.seed);
  const double h = value.grid().max_spacing();

  double eps_cap = kInf;  // keeps ε(λ) nonincreasing along the sweep
  for (double lambda : descending(lambdas)) {
    if (!(lambda > 0)) throw ParameterError("plan_semiconvex: lambda must be positive");
    PlanEntry e;
    e.lambda = lambda;
    const double top = std::min(std::sqrt(lambda), eps_cap);
    const auto eps = epsilon_grid(top, h, opts);
    if (eps.empty()) {
      e.accepted = false;
      e.diagnostic = "epsilon grid below the mollifier resolution 2h";
      plan.entries.push_back(std::move(e));
      continue;
    }
    const MoreauField m = moreau_over(value, setup, lambda, eps.front() + 4 * h, opts.jobs);
    if (!inclusion_holds(m, od, dirs, 0.0)) {
      e.accepted = false;
      e.diagnostic = "omega_delta not inside the inner domain of the Moreau envelope";
      plan.entries.push_back(std::move(e));
      continue;
    }
    if (!plan.lambda0 || lambda > *plan.lambda0) plan.lambda0 = lambda;

    std::vector<std::optional<Candidate>> cache(eps.size());
    auto feasible = [&](int j) {
      if (!inclusion_holds(m, od, dirs, eps[j])) return false;
      if (!cache[j]) {
        Candidate c{mollify(m.values, eps[j], Interp::cubic, opts.jobs), 0.0};
        for (const Vec& x : od.points)
          c.gap = std::max(c.gap, (c.mf.values.gradient(x) - m.values.gradient(x)).squaredNorm());
        cache[j] = std::move(c);
      }
      return cache[j]->gap <= lambda;
    };
    int j = -1;
    try {
      j = largest_feasible(eps.size(), feasible);
    } catch (const DomainError& err) {
      e.diagnostic = fmt::format("surrogate does not cover omega_delta: {}", err.what());
    }
    if (j < 0) {
      e.accepted = false;
      if (e.diagnostic.empty()) e.diagnostic = "no epsilon meets both the inclusion and the gradient-gap condition";
      plan.entries.push_back(std::move(e));
      continue;
    }
    const Candidate& c = *cache[j];
    e.epsilon = eps[j];
    eps_cap = e.epsilon;
    e.gradient_gap = c.gap;
    e.surrogate = c.mf.values;
    e.law = feedback_from(c.mf.values, problem, fmt::format("semiconvex_lambda_{}", lambda));
    try {
      const SigmaQuantities sq = sigma_quantities(setup, problem, e.epsilon, &m, opts.sigma);
      record_sigma(e, sq);
    } catch (const ParameterError& err) {
      e.accepted = false;
      e.diagnostic = err.what();
      plan.entries.push_back(std::move(e));
      continue;
    }
    double n = 0.0;
    for (const Vec& x : od.points) n = std::max(n, (problem.input(x).transpose() * m.values.gradient(x)).norm());
    const double den = e.sigma1 + e.sigma2 * n / problem.beta;
    e.escape_horizon = den < kDenominatorGuard ? kInf : setup.delta / den;
    e.kappa = kappa(lambda);
    e.s = lambda;
    choose_tau(e, opts.tau_max);
    const HessianRange hr = hessian_eigen_range(c.mf.values, setup.omega_delta);
    plan.diagnostics.push_back({fmt::format("min_hessian_eigenvalue[lambda={}]", lambda), hr.min_eigenvalue,
                                "sampled"});
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

SynthesisPlan plan_semiconcave(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                               std::span<const double> epsilons, const KappaSchedule& kappa, double p,
                               const PlanOptions& opts) {
  if (epsilons.empty()) throw ParameterError("plan_semiconcave: empty epsilon sweep");
  if (!(p >= 1)) throw ParameterError("plan_semiconcave: p must be at least 1");
  SynthesisPlan plan;
  plan.pipeline = Pipeline::semiconcave;
  plan.kappa = kappa;
  plan.tau_max = opts.tau_max;
  plan.delta = setup.delta;
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  const int d = problem.dim_state, mdim = problem.dim_control;

  const double c = std::max(0.0, semiconcavity_constant(value, setup.omega_delta));
  if (!std::isfinite(c)) throw PlanError("plan_semiconcave: semiconcavity constant is not finite");
  const double b_sup = sup_norm(problem.input, od);
  const double b_lip = lipschitz_estimate(problem.input, od, opts.lipschitz_pairs, opts.seed).combined();
  const double f_lip = lipschitz_estimate(problem.drift, od, opts.lipschitz_pairs, opts.seed).value;
  const double k = (mdim * d * c * b_sup * b_sup + mdim * d * d * b_lip * b_lip * c) / problem.beta + d * f_lip;
  plan.diagnostics.push_back({"semiconcavity_constant", c, "sampled"});
  plan.diagnostics.push_back({"B_sup", b_sup, "sampled"});
  plan.diagnostics.push_back({"B_lip", b_lip, "sampled"});
  plan.diagnostics.push_back({"f_lip", f_lip, "sampled"});
  plan.diagnostics.push_back({"K", k, "derived"});

  const double sweep[] = {1e-1, 1e-2, 1e-3, 1e-4};
  plan.tail = kappa_tail_semiconcave(kappa, k, p, sweep);
  if (!plan.tail->decreasing)
    throw PlanError(fmt::format("plan_semiconcave: kappa {} fails the tail condition with K={:.6g}, p={}",
                                kappa.describe(), k, p));

  // u_V on the nodes of V inside ω_δ, masked where the stencil disagrees.
  const GridGradientMask mask = gradient_mask(value, opts.fd_consistency);
  const RegionSample nodes = sample_grid(setup.omega_delta, value.grid());
  std::vector<std::size_t> flat;
  std::size_t excluded = 0;
  double grad_sup = 0.0;
  for (const Vec& x : nodes.points) {
    const std::size_t n = value.grid().flat(value.grid().nearest(x));
    grad_sup = std::max(grad_sup, value.gradient(x).norm());
    if (mask.consistent[n])
      flat.push_back(n);
    else
      ++excluded;
  }
  plan.diagnostics.push_back({"grad_V_sup", grad_sup, "sampled"});

  for (double eps : epsilons) {
    PlanEntry e;
    e.epsilon = eps;
    e.k = k;
    e.excluded_nodes = excluded;
    e.excluded_measure = excluded * nodes.weight;
    MollifiedField mf;
    try {
      mf = mollify(value, eps, Interp::cubic, opts.jobs);
    } catch (const ParameterError& err) {
      e.accepted = false;
      e.diagnostic = err.what();
      plan.entries.push_back(std::move(e));
      continue;
    }
    double sum_p = 0.0, sum_2p = 0.0;
    try {
      for (std::size_t n : flat) {
        const Vec x = value.grid().node(n);
        Vec gv(d);
        for (int a = 0; a < d; ++a) gv[a] = value.nodal_partial(n, a);
        const double gap = (control_of(problem, x, mf.values.gradient(x)) - control_of(problem, x, gv)).norm();
        sum_p += std::pow(gap, p);
        sum_2p += std::pow(gap, 2 * p);
      }
    } catch (const DomainError& err) {
      e.accepted = false;
      e.diagnostic = fmt::format("surrogate does not cover omega_delta: {}", err.what());
      plan.entries.push_back(std::move(e));
      continue;
    }
    e.s = std::pow(sum_p * nodes.weight, 1 / p);
    e.deviation = std::pow(sum_2p * nodes.weight, 1 / (2 * p));
    e.surrogate = mf.values;
    e.law = feedback_from(mf.values, problem, fmt::format("semiconcave_eps_{}", eps));
    const SigmaQuantities sq = sigma_quantities(setup, problem, eps, nullptr, opts.sigma);
    record_sigma(e, sq);
    const double den = e.sigma1 + e.sigma2 * grad_sup / problem.beta;
    e.escape_horizon = den < kDenominatorGuard ? kInf : setup.delta / den;
    e.kappa = kappa_or_inf(kappa, e.s);
    choose_tau(e, opts.tau_max);
    if (e.accepted)
      e.predicted_bound = std::pow(e.tau, (p - 1) / p) * problem.beta * std::pow(growth_factor(k, e.tau), 1 / p) *
                          e.deviation * e.deviation;
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

SynthesisPlan plan_hoelder(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                           std::span<const double> lambdas, const KappaSchedule& kappa, const EtaSchedule& eta,
                           double p, const HoelderData& holder, const PlanOptions& opts) {
  const double alpha = holder.alpha;
  if (!(alpha > 0.5 && alpha <= 1)) throw PlanError(fmt::format("plan_hoelder: alpha={} outside (1/2, 1]", alpha));
  if (!(holder.sigma_w > 1 - alpha && holder.sigma_w <= 1))
    throw PlanError(fmt::format("plan_hoelder: grad w exponent {} outside ({}, 1]", holder.sigma_w, 1 - alpha));
  if (!(p >= 1)) throw ParameterError("plan_hoelder: p must be at least 1");
  if (lambdas.empty()) throw ParameterError("plan_hoelder: empty lambda sweep");
  SynthesisPlan plan;
  plan.pipeline = Pipeline::hoelder;
  plan.kappa = kappa;
  plan.tau_max = opts.tau_max;
  plan.delta = setup.delta;
  const RegionSample od = sample_grid(setup.omega_delta, opts.region_points);
  const auto dirs = unit_directions(setup.omega_delta.dim(), 16, opts.seed);
  const double h = value.grid().max_spacing();
  const int d = problem.dim_state, mdim = problem.dim_control;
  const double b_lip = lipschitz_estimate(problem.input, od, opts.lipschitz_pairs, opts.seed).combined();
  const double f_lip = lipschitz_estimate(problem.drift, od, opts.lipschitz_pairs, opts.seed).value;
  auto k_of_s = [=, beta = problem.beta](double s) {
    return mdim * d * (d + 1) / (beta * s) * b_lip * b_lip + d * f_lip;
  };
  plan.diagnostics.push_back({"alpha", alpha, "supplied"});
  plan.diagnostics.push_back({"sigma_w", holder.sigma_w, "supplied"});
  plan.diagnostics.push_back({"B_lip", b_lip, "sampled"});
  plan.diagnostics.push_back({"f_lip", f_lip, "sampled"});
  const double sweep[] = {1e-1, 1e-2, 1e-3, 1e-4};
  plan.tail = kappa_tail_hoelder(kappa, k_of_s, eta, p, alpha, sweep);

  double eps_cap = kInf;
  for (double lambda : descending(lambdas)) {
    if (!(lambda > 0)) throw ParameterError("plan_hoelder: lambda must be positive");
    PlanEntry e;
    e.lambda = lambda;
    e.k = k_of_s(lambda);
    e.eta = eta(lambda);
    const double top = std::min(std::pow(lambda, 1 / (2 - alpha)), eps_cap);
    const auto eps = epsilon_grid(top, h, opts);
    if (eps.empty()) {
      e.accepted = false;
      e.diagnostic = fmt::format("epsilon cap {:.6g} below the mollifier resolution 2h={:.6g}", top, 2 * h);
      plan.entries.push_back(std::move(e));
      continue;
    }
    const MoreauField m = moreau_over(value, setup, lambda, eps.front() + 4 * h, opts.jobs);
    if (!inclusion_holds(m, od, dirs, 0.0)) {
      e.accepted = false;
      e.diagnostic = "omega_delta not inside the inner domain of the Moreau envelope";
      plan.entries.push_back(std::move(e));
      continue;
    }
    if (!plan.lambda0 || lambda > *plan.lambda0) plan.lambda0 = lambda;

    std::vector<std::optional<Candidate>> cache(eps.size());
    auto feasible = [&](int j) {
      if (!inclusion_holds(m, od, dirs, eps[j])) return false;
      if (!cache[j]) {
        Candidate c{mollify(m.values, eps[j], Interp::cubic, opts.jobs), 0.0};
        double sum = 0.0;
        for (const Vec& x : od.points)
          sum += std::pow((c.mf.values.gradient(x) - m.values.gradient(x)).norm(), 2 * p);
        c.gap = std::pow(sum * od.weight, 1 / p);  // squared L^{2p} norm
        cache[j] = std::move(c);
      }
      return cache[j]->gap <= e.eta;
    };
    int j = -1;
    try {
      j = largest_feasible(eps.size(), feasible);
    } catch (const DomainError& err) {
      e.diagnostic = fmt::format("surrogate does not cover omega_delta: {}", err.what());
    }
    if (j < 0) {
      e.accepted = false;
      if (e.diagnostic.empty())
        e.diagnostic = fmt::format("no epsilon <= {:.6g} meets the L^2p gap eta={:.6g}", top, e.eta);
      plan.entries.push_back(std::move(e));
      continue;
    }
    const Candidate& c = *cache[j];
    e.epsilon = eps[j];
    eps_cap = e.epsilon;
    e.gradient_gap = c.gap;
    e.surrogate = c.mf.values;
    e.law = feedback_from(c.mf.values, problem, fmt::format("hoelder_lambda_{}", lambda));
    try {
      record_sigma(e, sigma_quantities(setup, problem, e.epsilon, &m, opts.sigma));
    } catch (const ParameterError& err) {
      e.accepted = false;
      e.diagnostic = err.what();
      plan.entries.push_back(std::move(e));
      continue;
    }
    double n = 0.0;
    for (const Vec& x : od.points) n = std::max(n, m.values.gradient(x).norm());
    const double den = e.sigma1 + e.sigma2 * n / problem.beta;
    e.escape_horizon = den < kDenominatorGuard ? kInf : setup.delta / den;
    e.kappa = kappa(lambda);
    e.s = lambda;
    choose_tau(e, opts.tau_max);
    plan.entries.push_back(std::move(e));
  }
  return plan;
}

EntryResidual measure_plan_entry(const ControlProblem& problem, const ScalarFunction& value, const PlanEntry& entry,
                                 const RegionSample& starts, double p, const SimConfig& sim, int jobs) {
  if (!entry.accepted || !entry.law) throw ParameterError("measure_plan_entry: entry has no law");
  if (!(p >= 1)) throw ParameterError("measure_plan_entry: p must be at least 1");
  SimConfig cfg = sim;
  cfg.horizon = entry.tau;
  const std::size_t n = starts.size();
  std::vector<double> res(n, 0.0);
  std::vector<std::uint8_t> esc(n, 0);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Vec& y0 = starts.points[i];
    const Trajectory tr = integrate_closed_loop(problem, entry.law, y0, cfg);
    if (tr.status != TrajStatus::completed) {
      esc[i] = 1;
      return;
    }
    res[i] = tr.running_cost.back() + value.value(tr.final_state()) - value.value(y0);
  });
  EntryResidual r;
  r.starts = n;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (esc[i]) {
      ++r.escaped;
      continue;
    }
    r.sup = std::max(r.sup, std::abs(res[i]));
    sum += std::pow(std::abs(res[i]), p);
  }
  r.lp = std::pow(sum * starts.weight, 1 / p);
  return r;
}

}  // namespace smoothfb
