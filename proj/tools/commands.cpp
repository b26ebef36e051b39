#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "smoothfb/certify.hpp"
#include "smoothfb/example8.hpp"
#include "smoothfb/io.hpp"
#include "smoothfb/parallel.hpp"
#include "smoothfb/simulate.hpp"
#include "smoothfb/synthesis.hpp"

namespace smoothfb::cli {

namespace fs = std::filesystem;
using bump::Vec2;

namespace {

auto positive = [](double v) { return v > 0; };

std::ofstream open_file(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

// "# quantity: ..." then the column header.
std::ofstream open_csv(const fs::path& path, const std::string& quantity, const std::string& header) {
  auto out = open_file(path);
  out << "# quantity: " << quantity << "\n" << header << "\n";
  return out;
}

std::string num(double v) { return format_double(v); }

void write_json(const fs::path& path, const nlohmann::json& j) { open_file(path) << j.dump(2) << "\n"; }

int write_certificates(const fs::path& dir, const std::vector<BoundCertificate>& certs) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : certs) arr.push_back(c.to_json());
  write_json(dir / "certificates.json", arr);
  auto csv = open_csv(dir / "certificates.csv", "bound certificates, pass iff lhs <= rhs + tolerance",
                      BoundCertificate::csv_header());
  bool ok = true;
  for (const auto& c : certs) {
    csv << c.csv_row() << "\n";
    ok = ok && c.passed();
    spdlog::info("{:<40} {:<12} lhs={:.6g} rhs={:.6g}", c.name, to_string(c.verdict), c.lhs, c.rhs);
  }
  return ok ? kExitOk : kExitCertificate;
}

const bump::Example8Config& need_example8(const RunContext& ctx, const char* what) {
  if (!ctx.problem.is_example8())
    ctx.config.section("problem").fail("type", fmt::format("{} needs the example8 problem", what));
  return ctx.problem.example8;
}

LyapunovSetup read_setup(const RunContext& ctx) {
  const auto& cfg = need_example8(ctx, "the Lyapunov setup");
  const Section s = ctx.config.section("lyapunov");
  const double radius = s.number("omega_radius", 2.5, positive, "positive");
  const double delta = s.number("delta", 1.0, positive, "positive");
  const int grid = s.integer("grid", 61, 5);
  try {
    return bump::lyapunov_setup(cfg, radius, delta, grid);
  } catch (const ParameterError& e) {
    s.fail("omega_radius", e.what());
  }
}

bump::MultistartOptions read_multistart(const Section& s, std::uint64_t seed) {
  bump::MultistartOptions o;
  o.random_pairs = s.integer("random_pairs", o.random_pairs, 0);
  o.detour_amplitude = s.number("detour_amplitude", o.detour_amplitude, positive, "positive");
  o.dedup_tolerance = s.number("dedup_tolerance", o.dedup_tolerance, positive, "positive");
  o.seed = seed;
  return o;
}

// Value function used by synthesize/simulate/certify.
struct ValueSource {
  ScalarFunction fn;
  ScalarField field;
  bool analytic = false;
};

ValueSource read_value(const RunContext& ctx, const Section& s, const Region& cover) {
  const bool smooth_default = ctx.problem.is_example8() && ctx.problem.example8.alpha == 0.0;
  const std::string source = s.text("source", smooth_default ? "analytic" : "grid", {"analytic", "grid"});
  ValueSource v;
  if (source == "analytic") {
    if (!smooth_default) s.fail("source", "analytic value is only known for example8 with alpha = 0");
    const double beta = ctx.problem.example8.beta;
    const double h = s.number("spacing", 0.025, positive, "positive");
    const double pad = s.number("pad", 1.5, [](double x) { return x >= 0; }, "non-negative");
    v.analytic = true;
    v.fn = bump::v0_function(beta);
    v.field = sample_padded([beta](const Vec& y) { return bump::v0(y, beta); }, cover, pad, h);
    return v;
  }
  const std::string file = s.text("file");
  ScalarField coarse;
  try {
    coarse = read_grid_binary(file, Interp::cubic);
  } catch (const std::exception& e) {
    s.fail("file", e.what());
  }
  if (s.has("spacing")) {
    const double h = s.number("spacing", std::nullopt, positive, "positive");
    v.field = coarse.resample(h, Interp::cubic);
  } else {
    v.field = coarse;
  }
  v.fn = ScalarFunction::from_field(v.field);
  return v;
}

SimConfig read_sim(const Section& s) {
  SimConfig sim;
  sim.integrator = s.text("integrator", "rk45", {"rk45", "rk4"}) == "rk4" ? Integrator::rk4 : Integrator::rk45;
  sim.step = s.number("step", sim.step, positive, "positive");
  sim.rtol = s.number("rtol", sim.rtol, positive, "positive");
  sim.atol = s.number("atol", sim.atol, positive, "positive");
  sim.max_step = s.number("max_step", sim.max_step, positive, "positive");
  return sim;
}

KappaSchedule read_kappa(const Section& s, const char* form_default, double param_default) {
  const std::string form = s.text("form", form_default, {"log", "power"});
  const double param = s.number("parameter", param_default, positive, "positive");
  return form == "log" ? KappaSchedule::log(param) : KappaSchedule::power(param);
}

std::string residual_cells(const std::optional<EntryResidual>& r) {
  if (!r) return ",,,";
  return fmt::format(",{},{},{}", num(r->sup), num(r->lp), r->escaped);
}

}  // namespace

int run_value_grid(const RunContext& ctx) {
  const auto& cfg = need_example8(ctx, "value-grid");
  const Section s = ctx.config.section("value_grid");
  const auto lo = s.numbers("lower", std::vector<double>{-6.0, -6.0});
  const auto hi = s.numbers("upper", std::vector<double>{6.0, 6.0});
  const auto pts = s.numbers("points", std::vector<double>{121, 121});
  if (lo.size() != 2) s.fail("lower", "expected two coordinates");
  if (hi.size() != 2) s.fail("upper", "expected two coordinates");
  if (pts.size() != 2 || pts[0] < 2 || pts[1] < 2) s.fail("points", "expected two counts of at least 2");
  for (int a = 0; a < 2; ++a)
    if (!(hi[a] > lo[a])) s.fail("upper", "must exceed lower on every axis");
  const double tie = s.number("tie_tolerance", 1e-3, positive, "positive");
  const double tol = s.number("bound_tolerance", 1e-3, positive, "positive");
  const auto ms = read_multistart(s.child("multistart"), ctx.seed);
  const BoxGrid grid(Vec2(lo[0], lo[1]), Vec2(hi[0], hi[1]), {static_cast<int>(pts[0]), static_cast<int>(pts[1])});

  spdlog::info("value grid: {} nodes, alpha={}", grid.size(), cfg.alpha);
  const bump::ValueGrid vg = bump::value_alpha_grid(grid, cfg, ms, ctx.jobs, tie);
  write_grid_binary(ctx.out / "value_grid.bin", vg.field);
  {
    auto csv = open_csv(ctx.out / "value_grid.csv", "optimal cost V_alpha from each grid node (nan: unconverged)",
                        "y0,y1,value");
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Vec x = grid.node(n);
      csv << num(x[0]) << ',' << num(x[1]) << ',' << num(vg.field[n]) << "\n";
    }
  }
  BoundCertificate lower, upper, pmp, ident;
  lower.name = "value_lower_bound";
  lower.kind = "max over converged nodes of sqrt(beta)/2|y|^2 - V_alpha";
  upper.name = "value_upper_bound";
  upper.kind = "max over converged nodes of V_alpha - sqrt(beta)/2 (1+alpha/2)|y|^2";
  ident.name = "running_cost_identity";
  ident.kind = "max |l_alpha(y*) - beta/2|u*|^2| along optima";
  pmp.name = "optimality_residual";
  pmp.kind = "max |y*'' - grad l_alpha(y*)/beta| along optima";
  lower.lhs = upper.lhs = pmp.lhs = ident.lhs = -std::numeric_limits<double>::infinity();
  {
    auto csv = open_csv(ctx.out / "nodes.csv", "per-node optimal control summary, u0 is the optimal control at t=0",
                        "y0,y1,cost,u0_0,u0_1,converged,flagged,solutions,second_cost,pmp_residual,"
                        "identity_residual");
    const double c = std::sqrt(cfg.beta) / 2;
    for (const auto& nd : vg.nodes) {
      csv << num(nd.y0[0]) << ',' << num(nd.y0[1]) << ',' << num(nd.cost) << ',' << num(nd.u0[0]) << ','
          << num(nd.u0[1]) << ',' << nd.converged << ',' << nd.flagged << ',' << nd.solutions << ','
          << num(nd.second_cost) << ',' << num(nd.pmp_residual) << ',' << num(nd.identity_residual) << "\n";
      if (!nd.converged) continue;
      const double r2 = nd.y0.squaredNorm();
      lower.lhs = std::max(lower.lhs, c * r2 - nd.cost);
      upper.lhs = std::max(upper.lhs, nd.cost - c * (1 + cfg.alpha / 2) * r2);
      pmp.lhs = std::max(pmp.lhs, nd.pmp_residual);
      ident.lhs = std::max(ident.lhs, nd.identity_residual);
    }
  }
  lower.rhs = upper.rhs = tol;
  ident.rhs = 1e-3;
  pmp.rhs = 1e-2;
  std::vector<BoundCertificate> certs{lower, upper, ident, pmp};
  for (auto& c : certs) {
    c.seed = ctx.seed;
    c.add("holes", static_cast<double>(vg.holes), "sampled");
    c.add("flagged", static_cast<double>(vg.flagged), "sampled");
    c.decide();
  }
  return write_certificates(ctx.out, certs);
}

int run_synthesize(const RunContext& ctx) {
  const Section s = ctx.config.section("synthesize");
  const std::string pipeline = s.text("pipeline", "c1", {"c1", "semiconvex", "semiconcave", "hoelder"});
  const auto epsilons = s.numbers("epsilons", std::vector<double>{0.4, 0.2, 0.1, 0.05}, positive, "positive");
  const auto lambdas = s.numbers("lambdas", std::vector<double>{0.2, 0.1, 0.05}, positive, "positive");
  const double p = s.number("p", 2.0, [](double v) { return v >= 1; }, "at least 1");
  const bool lambda_pipeline = pipeline == "semiconvex" || pipeline == "hoelder";
  const KappaSchedule kappa = read_kappa(s.child("kappa"), lambda_pipeline ? "power" : "log", lambda_pipeline ? 0.5 : 1);
  PlanOptions po;
  po.tau_max = s.number("tau_max", po.tau_max, positive, "positive");
  po.region_points = s.integer("region_points", po.region_points, 5);
  po.jobs = ctx.jobs;
  po.seed = ctx.seed;
  po.sigma.seed = ctx.seed;
  const bool measure = s.boolean("measure", true);
  const int measure_points = s.integer("measure_points", 15, 2);
  const SimConfig sim = read_sim(s.child("sim"));
  const ControlProblem problem = ctx.problem.build();
  const LyapunovSetup setup = read_setup(ctx);
  const ValueSource value = read_value(ctx, s.child("value"), setup.omega_delta);

  SynthesisPlan plan;
  try {
    if (pipeline == "c1") {
      std::vector<LawFamilyMember> family;
      for (double e : epsilons) {
        const MollifiedField mf = mollify(value.field, e, Interp::cubic, ctx.jobs);
        family.push_back({e, feedback_from(mf.values, problem, fmt::format("mollified_{}", e)), mf.values});
      }
      plan = plan_c1(problem, value.fn, setup, family, kappa, po);
    } else if (pipeline == "semiconvex") {
      plan = plan_semiconvex(problem, value.field, setup, lambdas, kappa, po);
    } else if (pipeline == "semiconcave") {
      plan = plan_semiconcave(problem, value.field, setup, epsilons, kappa, p, po);
    } else {
      HoelderData hd;
      hd.alpha = s.number("alpha", 1.0);
      hd.sigma_w = s.number("sigma_w", 1.0);
      const Section es = s.child("eta");
      const std::string form = es.text("form", "power", {"power", "exp_decay"});
      EtaSchedule eta;
      if (form == "power") {
        eta = EtaSchedule::power(es.number("c", 1.0, positive, "positive"), es.number("r", 1.0, positive, "positive"));
      } else {
        // K(s) from the same sampled constants the plan uses
        const RegionSample od = sample_grid(setup.omega_delta, po.region_points);
        const double bl = lipschitz_estimate(problem.input, od, po.lipschitz_pairs, po.seed).combined();
        const double fl = lipschitz_estimate(problem.drift, od, po.lipschitz_pairs, po.seed).value;
        const int d = problem.dim_state, m = problem.dim_control;
        const double beta = problem.beta;
        eta = EtaSchedule::exp_decay(
            [=](double x) { return m * d * (d + 1) / (beta * x) * bl * bl + d * fl; }, kappa, p);
      }
      plan = plan_hoelder(problem, value.field, setup, lambdas, kappa, eta, p, hd, po);
    }
  } catch (const PlanError& e) {
    spdlog::error("{}", e.what());
    write_json(ctx.out / "plan.json", {{"pipeline", pipeline}, {"error", e.what()}});
    return kExitCertificate;
  }

  std::vector<std::optional<EntryResidual>> residuals(plan.entries.size());
  if (measure) {
    const RegionSample starts = sample_grid(setup.omega, measure_points);
    for (std::size_t k = 0; k < plan.entries.size(); ++k) {
      if (!plan.entries[k].accepted) continue;
      residuals[k] = measure_plan_entry(problem, value.fn, plan.entries[k], starts, p, sim, ctx.jobs);
    }
  }
  nlohmann::json j = plan.to_json();
  for (std::size_t k = 0; k < plan.entries.size(); ++k) {
    if (!residuals[k]) continue;
    j["entries"][k]["residual_sup"] = residuals[k]->sup;
    j["entries"][k]["residual_lp"] = residuals[k]->lp;
    j["entries"][k]["residual_escaped"] = residuals[k]->escaped;
  }
  write_json(ctx.out / "plan.json", j);
  auto csv = open_csv(ctx.out / "plan.csv",
                      fmt::format("{} synthesis plan: horizon tau per parameter and the measured residual "
                                  "|V(u,tau) + V(y(tau)) - V| over starts in omega",
                                  to_string(plan.pipeline)),
                      "epsilon,lambda,s,kappa,escape_horizon,tau,tau_branch,deviation,predicted_bound,K,sigma1,"
                      "sigma2,gradient_gap,eta,excluded_nodes,accepted,residual_sup,residual_lp,residual_escaped");
  for (std::size_t k = 0; k < plan.entries.size(); ++k) {
    const auto& e = plan.entries[k];
    csv << num(e.epsilon) << ',' << num(e.lambda) << ',' << num(e.s) << ',' << num(e.kappa) << ','
        << num(e.escape_horizon) << ',' << num(e.tau) << ',' << e.tau_branch << ',' << num(e.deviation) << ','
        << num(e.predicted_bound) << ',' << num(e.k) << ',' << num(e.sigma1) << ',' << num(e.sigma2) << ','
        << num(e.gradient_gap) << ',' << num(e.eta) << ',' << e.excluded_nodes << ',' << e.accepted
        << residual_cells(residuals[k]) << "\n";
    if (!e.accepted) spdlog::warn("parameter rejected: {}", e.diagnostic);
  }
  if (!plan.tau_monotone()) {
    spdlog::error("plan horizons are not finite, positive and nondecreasing");
    return kExitCertificate;
  }
  return kExitOk;
}

int run_simulate(const RunContext& ctx) {
  const Section s = ctx.config.section("simulate");
  const ControlProblem problem = ctx.problem.build();
  const int d = problem.dim_state;
  const auto starts = s.points("starts", d);
  if (starts.empty()) s.fail("starts", "need at least one start");
  SimConfig sim = read_sim(s);
  sim.horizon = s.number("horizon", 10.0, positive, "positive");
  const Section ls = s.child("law");
  const std::string type = ls.text("type", "value", {"value", "onaxis", "linear"});
  FeedbackLaw law;
  std::optional<ScalarFunction> value;
  if (type == "linear") {
    const Mat k = ls.matrix("K");
    if (k.rows() != problem.dim_control || k.cols() != d) ls.fail("K", "must be dim_control x dim_state");
    law = FeedbackLaw::analytic([k](const Vec& y) -> Vec { return -k * y; }, "linear");
  } else if (type == "onaxis") {
    law = bump::onaxis_law(need_example8(ctx, "the on-axis law"));
  } else {
    Vec lo(d), hi(d);
    for (int a = 0; a < d; ++a) {
      lo[a] = hi[a] = starts[0][a];
      for (const auto& p : starts) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
    const ValueSource v = read_value(ctx, ls.child("value"), Region::box(lo, hi));
    value = v.fn;
    law = v.analytic ? FeedbackLaw::from_value(v.fn, problem, "value", false) : feedback_from(v.field, problem);
  }
  auto csv = open_csv(ctx.out / "summary.csv",
                      "closed-loop rollouts; dpp_residual = running cost + V(y(T)) - V(y0) when a value is given",
                      "start,final_time,status,escape_time,cost,dpp_residual");
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Vec y0 = Eigen::Map<const Vec>(starts[k].data(), d);
    const Trajectory tr = integrate_closed_loop(problem, law, y0, sim);
    write_trajectory_csv(ctx.out / fmt::format("trajectory_{}.csv", k), tr);
    double dpp = std::numeric_limits<double>::quiet_NaN();
    if (value && tr.status == TrajStatus::completed)
      dpp = tr.running_cost.back() + value->value(tr.final_state()) - value->value(y0);
    csv << k << ',' << num(tr.final_time()) << ',' << to_string(tr.status) << ',' << num(tr.escape_time) << ','
        << num(tr.running_cost.back()) << ',' << num(dpp) << "\n";
  }
  return kExitOk;
}

int run_certify(const RunContext& ctx) {
  const Section s = ctx.config.section("certify");
  const ControlProblem problem = ctx.problem.build();
  const LyapunovSetup setup = read_setup(ctx);
  const auto epsilons = s.numbers("epsilons", std::vector<double>{0.2, 0.1, 0.05}, positive, "positive");
  const auto lambdas = s.numbers("lambdas", std::vector<double>{0.2, 0.1}, positive, "positive");
  const auto ps = s.numbers("p", std::vector<double>{1, 2}, [](double v) { return v >= 1; }, "at least 1");
  const double horizon = s.number("horizon", 2.0, positive, "positive");
  const int omega_points = s.integer("omega_points", 21, 2);
  const auto samples = static_cast<std::size_t>(s.integer("samples", 10000, 10));
  const bool corrupted = s.boolean("corrupted", true);
  std::vector<std::string> suites{"linfty", "lp", "jacobian", "escape"};
  if (s.has("suites")) {
    suites.clear();
    const auto& arr = ctx.config.json()["certify"]["suites"];
    if (!arr.is_array()) s.fail("suites", "expected an array of suite names");
    for (const auto& x : arr) {
      const std::string name = x.is_string() ? x.get<std::string>() : "";
      if (name != "linfty" && name != "lp" && name != "jacobian" && name != "escape")
        s.fail("suites", "entries must be linfty, lp, jacobian or escape");
      suites.push_back(name);
    }
  }
  auto wants = [&](const char* n) { return std::find(suites.begin(), suites.end(), n) != suites.end(); };
  const ValueSource value = read_value(ctx, s.child("value"), setup.omega_delta);
  ErrorCertOptions eo;
  eo.sim = read_sim(s.child("sim"));
  eo.seed = ctx.seed;
  eo.jobs = ctx.jobs;
  EscapeOptions xo;
  xo.sim = eo.sim;
  xo.sigma.seed = ctx.seed;

  auto g = [&](const Vec& y) { return -max_hamiltonian(problem, y, value.fn.gradient(y)); };
  const RegionSample omega = sample_grid(setup.omega, omega_points);
  const RegionSample od = sample_grid(setup.omega_delta, 41);
  const FeedbackLaw u_v =
      value.analytic ? FeedbackLaw::from_value(value.fn, problem, "value", false) : feedback_from(value.field, problem);
  std::function<bool(const Vec&)> defined;
  if (!value.analytic) {
    auto mask = std::make_shared<GridGradientMask>(gradient_mask(value.field));
    defined = [mask](const Vec& x) { return mask->defined_at(x); };
  }

  std::vector<BoundCertificate> certs;
  auto tag = [&](BoundCertificate c, const std::string& suffix) {
    c.name += suffix;
    c.seed = ctx.seed;
    certs.push_back(std::move(c));
  };
  for (double eps : epsilons) {
    const MollifiedField mf = mollify(value.field, eps, Interp::cubic, ctx.jobs);
    const FeedbackLaw u = feedback_from(mf.values, problem, fmt::format("mollified_{}", eps));
    const std::string sfx = fmt::format("[eps={}]", eps);
    spdlog::info("certify eps={}", eps);
    if (wants("linfty")) tag(certify_linfty(problem, value.fn, g, u, horizon, omega, od, eo), sfx);
    if (wants("lp"))
      for (double p : ps) tag(certify_lp(problem, value.fn, g, u, horizon, omega, od, p, defined, eo),
                              fmt::format("[eps={},p={}]", eps, p));
    if (wants("escape")) {
      tag(escape_bound_a(setup, problem, u, u_v, xo), sfx);
      tag(escape_bound_b(setup, problem, value.field, eps, xo), sfx);
      for (double lam : lambdas)
        tag(escape_bound_c(setup, problem, value.field, eps, lam, std::nullopt, xo),
            fmt::format("[eps={},lambda={}]", eps, lam));
    }
  }
  if (wants("jacobian")) {
    const MollifiedField mf = mollify(value.field, epsilons.back(), Interp::cubic, ctx.jobs);
    const FeedbackLaw u = feedback_from(mf.values, problem);
    tag(jacobian_volume_check(problem, u, setup.omega, od, horizon, problem.running, samples, eo),
        fmt::format("[eps={}]", epsilons.back()));
  }
  if (corrupted && wants("linfty")) {
    // sensitivity: the sign-flipped law must be caught
    const FeedbackLaw bad = FeedbackLaw::analytic([&](const Vec& y) -> Vec { return -u_v(y); }, "corrupted");
    SimConfig sim = eo.sim;
    sim.horizon = horizon;
    ErrorCertOptions bo = eo;
    bo.sim = sim;
    const BoundCertificate c = certify_linfty(problem, value.fn, g, bad, horizon, omega, od, bo);
    BoundCertificate sens;
    sens.name = "corrupted_law_detected";
    sens.kind = "certificate of the sign-flipped law must fail";
    sens.lhs = c.passed() ? 1.0 : 0.0;
    sens.rhs = 0.0;
    sens.seed = ctx.seed;
    sens.notes.push_back(fmt::format("corrupted verdict {}", to_string(c.verdict)));
    sens.decide();
    certs.push_back(sens);
  }
  return write_certificates(ctx.out, certs);
}

int run_nondiff_map(const RunContext& ctx) {
  const auto& cfg = need_example8(ctx, "nondiff-map");
  const Section s = ctx.config.section("nondiff_map");
  const double from = s.number("from", -6.0);
  const double to = s.number("to", cfg.z[0] - cfg.sigma - 0.1);
  const int count = s.integer("count", 18, 1);
  if (!(to < cfg.z[0] - cfg.sigma)) s.fail("to", "must lie left of the bump");
  if (!(from <= to)) s.fail("from", "must not exceed to");
  const double cost_tol = s.number("cost_tolerance", 1e-3, positive, "positive");
  const auto ms = read_multistart(s.child("multistart"), ctx.seed);
  const bump::Transcription tr(cfg);
  const double theta = s.has("theta_diam") ? s.number("theta_diam", std::nullopt, positive, "positive")
                                           : bump::calibrate_theta_diam(tr);
  spdlog::info("theta_diam = {:.3e}", theta);
  std::vector<double> ys(count);
  for (int k = 0; k < count; ++k) ys[k] = count == 1 ? from : from + (to - from) * k / (count - 1);
  struct Row {
    bump::Superdifferential sd;
    double best = 0, onaxis = 0;
    std::size_t sols = 0;
  };
  std::vector<Row> rows(ys.size());
  parallel_for(ys.size(), ctx.jobs, [&](std::size_t k) {
    const auto sols = bump::solve_open_loop(tr, Vec2(ys[k], 0.0), ms);
    rows[k].sols = sols.size();
    rows[k].best = sols.empty() ? std::numeric_limits<double>::quiet_NaN() : sols.front().cost;
    if (!sols.empty()) rows[k].sd = bump::superdifferential_probe(sols, cfg, theta, cost_tol);
    rows[k].onaxis = bump::onaxis_trajectory(ys[k], cfg).cost;
  });
  auto csv = open_csv(ctx.out / "nondiff_map.csv",
                      "superdifferential probe along the axis left of the bump; flagged iff the optimal initial "
                      "covectors -beta u*(0) spread wider than theta_diam",
                      "y01,best_cost,solutions,covectors,diameter,flagged,onaxis_cost,onaxis_excess");
  for (std::size_t k = 0; k < ys.size(); ++k) {
    const auto& r = rows[k];
    csv << num(ys[k]) << ',' << num(r.best) << ',' << r.sols << ',' << r.sd.covectors.size() << ','
        << num(r.sd.diameter) << ',' << r.sd.nondifferentiable << ',' << num(r.onaxis) << ','
        << num(r.onaxis - r.best) << "\n";
  }
  write_json(ctx.out / "nondiff_map.json", {{"alpha", cfg.alpha}, {"theta_diam", theta}});
  return kExitOk;
}

int run_report(const RunContext& ctx) {
  const Section s = ctx.config.section("report");
  std::vector<fs::path> inputs;
  if (s.has("inputs")) {
    const auto& arr = ctx.config.json()["report"]["inputs"];
    if (!arr.is_array()) s.fail("inputs", "expected an array of directories");
    for (const auto& x : arr) {
      if (!x.is_string()) s.fail("inputs", "entries must be strings");
      inputs.emplace_back(x.get<std::string>());
    }
  } else {
    inputs.push_back(ctx.out);
  }
  struct Line {
    std::string source, name, verdict;
    double lhs, rhs, slack;
  };
  std::vector<Line> lines;
  for (const auto& dir : inputs) {
    std::vector<fs::path> files;
    if (fs::is_directory(dir))
      for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.path().filename() == "certificates.json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) spdlog::warn("no certificates under {}", dir.string());
    for (const auto& f : files) {
      std::ifstream in(f);
      const nlohmann::json arr = nlohmann::json::parse(in);
      auto val = [](const nlohmann::json& x) {
        if (x.is_number()) return x.get<double>();
        const std::string t = x.get<std::string>();
        return t == "inf" ? std::numeric_limits<double>::infinity()
               : t == "-inf" ? -std::numeric_limits<double>::infinity()
                             : std::numeric_limits<double>::quiet_NaN();
      };
      for (const auto& c : arr)
        lines.push_back({fs::relative(f.parent_path(), dir).string(), c["name"], c["verdict"], val(c["lhs"]),
                         val(c["rhs"]), val(c["slack"])});
    }
  }
  auto csv = open_csv(ctx.out / "summary.csv", "all bound certificates found under the report inputs",
                      "source,name,verdict,lhs,rhs,slack");
  std::map<std::string, int> counts;
  for (const auto& l : lines) {
    csv << l.source << ',' << l.name << ',' << l.verdict << ',' << num(l.lhs) << ',' << num(l.rhs) << ','
        << num(l.slack) << "\n";
    ++counts[l.verdict];
    fmt::print("{:<24} {:<48} {:<12} {:>12.4g} {:>12.4g}\n", l.source, l.name, l.verdict, l.lhs, l.rhs);
  }
  fmt::print("{} certificates: {} pass, {} fail, {} inconclusive\n", lines.size(), counts["pass"], counts["fail"],
             counts["inconclusive"]);
  return counts["fail"] + counts["inconclusive"] == 0 ? kExitOk : kExitCertificate;
}

}  // namespace smoothfb::cli
