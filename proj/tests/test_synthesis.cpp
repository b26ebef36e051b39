#include <doctest.h>

#include <cmath>
#include <vector>

#include "smoothfb/example8.hpp"
#include "smoothfb/simulate.hpp"
#include "smoothfb/synthesis.hpp"

using namespace smoothfb;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ControlProblem planar() { return bump::make_problem({}); }

// w = |y|²/2, ω = B(0,1), δ = 0.5, so ω_δ = B(0, √2).
LyapunovSetup small_setup() {
  ScalarFunction w{[](const Vec& y) { return 0.5 * y.squaredNorm(); }, [](const Vec& y) -> Vec { return y; }};
  return make_lyapunov_setup(w, {}, Region::ball(v2(0, 0), 1.0), 0.5, v2(-2, -2), v2(2, 2), 41);
}

// A flat quadratic keeps ‖∇V‖ small, so the σ terms cannot bind.
ScalarField flat_value(double h = 0.025) {
  return sample_padded([](const Vec& y) { return 0.005 * y.squaredNorm(); }, small_setup().omega_delta, 1.0, h);
}

PlanOptions quick() {
  PlanOptions o;
  o.region_points = 21;
  o.sigma.centers = 150;
  o.sigma.directions = 16;
  o.sigma.radii = 4;
  o.lipschitz_pairs = 500;
  return o;
}

}  // namespace

TEST_SUITE("synthesis") {

TEST_CASE("feedback laws") {
  const auto p = planar();
  const auto u = bump::v0_feedback(1.0);
  CHECK((u(v2(1, -2)) - v2(-1, 2)).norm() < 1e-15);

  ScalarFunction constant{[](const Vec&) { return 3.0; }, [](const Vec& y) -> Vec { return Vec::Zero(y.size()); }};
  CHECK(feedback_from(constant, p)(v2(0.3, 0.1)).norm() == 0.0);

  ControlProblem dead = p;
  dead.input = [](const Vec&) -> Mat { return Mat::Zero(2, 2); };
  CHECK(feedback_from(bump::v0_function(1.0), dead)(v2(2, 1)).norm() == 0.0);

  const auto field = ScalarField::sample(BoxGrid(Vec::Constant(2, -2), Vec::Constant(2, 2), {81, 81}),
                                         [](const Vec& y) { return std::sin(y[0]) * y[1] + y[1] * y[1]; });
  ControlProblem scaled = p;
  scaled.beta = 2.0;
  const auto law = feedback_from(field, scaled);
  CHECK(law.field_based());
  const auto cubic = field.with_interp(Interp::cubic);
  for (const Vec& y : {v2(0.1, 0.2), v2(-1.3, 0.77), v2(1.01, -1.5)})
    CHECK((law(y) + cubic.gradient(y) / 2.0).norm() < 1e-12);
}

TEST_CASE("field law maximizes the Hamiltonian") {
  bump::Example8Config cfg;
  cfg.alpha = 3.0;
  const auto p = bump::make_problem(cfg);
  const auto v = ScalarField::sample(BoxGrid(Vec::Constant(2, -3), Vec::Constant(2, 3), {61, 61}),
                                     [](const Vec& y) { return std::abs(y[0]) + std::cos(y[1]) * y[0] * y[0]; });
  const auto fn = ScalarFunction::from_field(v.with_interp(Interp::cubic));
  const auto law = feedback_from(v, p);
  CounterRng rng(8);
  for (int k = 0; k < 25; ++k) {
    const Vec y = v2(rng.uniform(-2.5, 2.5), rng.uniform(-2.5, 2.5));
    const Vec grad = fn.gradient(y);
    const double top = hamiltonian(p, y, grad, law(y));
    for (int j = 0; j < 200; ++j) {
      const Vec u = v2(rng.uniform(-10, 10), rng.uniform(-10, 10));
      CHECK(top >= hamiltonian(p, y, grad, u) - 1e-12);
    }
  }
}

TEST_CASE("kappa schedules") {
  CHECK(KappaSchedule::log(1.0)(0.1) == doctest::Approx(std::log(10.0)));
  CHECK(KappaSchedule::power(0.5)(0.01) == doctest::Approx(10.0));
  double prev = 0;
  for (double s : {1e-1, 1e-3, 1e-6, 1e-12}) {
    const double k = KappaSchedule::log(2.0)(s);
    CHECK(k > prev);
    prev = k;
  }
  CHECK(KappaSchedule::power(0.3)(1e-300) > 1e80);
}

TEST_CASE("semi-concave tail condition") {
  const std::vector<double> s{1e-1, 1e-2, 1e-3, 1e-4};
  const double k = 4.0, p = 2.0;
  // admissible: a > K/(p+1)
  CHECK(kappa_tail_semiconcave(KappaSchedule::log(1.01 * k / (p + 1)), k, p, s).decreasing);
  CHECK(kappa_tail_semiconcave(KappaSchedule::log(4.0), k, p, s).decreasing);
  // s^{2 - K/(ap)} grows once a < K/(2p)
  CHECK_FALSE(kappa_tail_semiconcave(KappaSchedule::log(k / (4 * p)), k, p, s).decreasing);
  // p = 1 drops the κ factor
  const auto t = kappa_tail_semiconcave(KappaSchedule::log(4.0), k, 1.0, s);
  for (std::size_t j = 0; j < s.size(); ++j) {
    const double kap = -std::log(s[j]) / 4.0;
    CHECK(t.log_product[j] == doctest::Approx(std::log(std::expm1(k * kap) * s[j] * s[j])));
  }
}

TEST_CASE("Hölder tail condition") {
  const std::vector<double> s{1e-1, 1e-2, 1e-3, 1e-4};
  auto k_of_s = [](double x) { return 2 * 3 / x + 2.0; };
  const auto kappa = KappaSchedule::power(0.5);
  // admissible q for α = 1 lies in (0, 1)
  const auto eta = EtaSchedule::exp_decay(k_of_s, kappa, 2.0);
  const auto t = kappa_tail_hoelder(kappa, k_of_s, eta, 2.0, 1.0, s);
  CHECK(t.decreasing);
  CHECK(t.log_product.back() < std::log(1e-1));
  CHECK_FALSE(kappa_tail_hoelder(KappaSchedule::power(1.5), k_of_s, eta, 2.0, 1.0, s).decreasing);
  CHECK(EtaSchedule::power(2.0, 1.5)(0.04) == doctest::Approx(2.0 * 0.008));
}

TEST_CASE("c1 plan with the exact law is capped") {
  const auto setup = small_setup();
  const auto p = planar();
  const auto v = ScalarFunction{[](const Vec& y) { return 0.5 * y.squaredNorm(); },
                                [](const Vec& y) -> Vec { return y; }};
  std::vector<LawFamilyMember> fam{{0.1, feedback_from(v, p), std::nullopt}};
  const auto plan = plan_c1(p, v, setup, fam, KappaSchedule::log(1.0), quick());
  REQUIRE(plan.entries.size() == 1);
  CHECK(plan.entries[0].s == 0.0);
  CHECK(plan.entries[0].tau == plan.tau_max);
  CHECK(plan.entries[0].tau_branch == "cap");
  CHECK(plan.entries[0].predicted_bound == 0.0);
  CHECK(plan.tau_monotone());
}

TEST_CASE("c1 plan follows kappa and reports the side condition") {
  const auto setup = small_setup();
  const auto p = planar();
  const auto v = ScalarFunction{[](const Vec& y) { return 0.5 * y.squaredNorm(); },
                                [](const Vec& y) -> Vec { return y; }};
  auto offset = [&](double c) {
    return FeedbackLaw::analytic([c](const Vec& y) -> Vec { return -y + Vec::Constant(2, c / std::sqrt(2.0)); });
  };
  std::vector<LawFamilyMember> fam{{0.2, offset(0.02), std::nullopt}, {0.1, offset(0.01), std::nullopt}};
  const auto plan = plan_c1(p, v, setup, fam, KappaSchedule::log(20.0), quick());
  for (const auto& e : plan.entries) {
    CHECK(e.tau_branch == "kappa");
    CHECK(e.tau == doctest::Approx(-std::log(e.s) / 20.0));
    CHECK(e.predicted_bound == doctest::Approx(p.beta * e.tau * e.s * e.s));
  }
  CHECK(plan.entries[0].s == doctest::Approx(0.02));
  CHECK(plan.tau_monotone());

  // κ(s)s = 0.5 ln 2 / 0.01 far exceeds δ/‖∇w‖
  std::vector<LawFamilyMember> bad{{0.3, offset(0.5), std::nullopt}};
  try {
    plan_c1(p, v, setup, bad, KappaSchedule::log(0.01), quick());
    FAIL("expected a plan error");
  } catch (const PlanError& e) {
    CHECK(std::string(e.what()).find("epsilon=0.3") != std::string::npos);
  }
}

TEST_CASE("c1 predicted bounds shrink with epsilon on a C^{1,1/2} value") {
  bump::Example8Config cfg;
  const auto p = bump::make_problem(cfg);
  const auto setup = bump::lyapunov_setup(cfg, 2.5, 1.0, 41);
  auto fn = [](const Vec& y) { return 0.5 * y.squaredNorm() + 0.05 * std::pow(std::abs(y[0]), 1.5); };
  const ScalarFunction v{fn, [](const Vec& y) -> Vec {
                           Vec g = y;
                           g[0] += 0.075 * std::sqrt(std::abs(y[0])) * (y[0] < 0 ? -1 : 1);
                           return g;
                         }};
  const auto grid = sample_padded(fn, setup.omega_delta, 0.6, 0.025);
  std::vector<LawFamilyMember> fam;
  for (double eps : {0.2, 0.1, 0.05}) {
    const auto mf = mollify(grid, eps);
    fam.push_back({eps, feedback_from(mf.values, p), mf.values});
  }
  const auto plan = plan_c1(p, v, setup, fam, KappaSchedule::log(1.0), quick());
  REQUIRE(plan.entries.size() == 3);
  for (std::size_t k = 1; k < 3; ++k) {
    CHECK(plan.entries[k].s < plan.entries[k - 1].s);
    CHECK(plan.entries[k].predicted_bound < plan.entries[k - 1].predicted_bound);
  }
}

TEST_CASE("semi-convex plan on flat data sits on the kappa branch") {
  const auto setup = small_setup();
  const auto plan = plan_semiconvex(planar(), flat_value(), setup, std::vector<double>{0.04, 0.01},
                                    KappaSchedule::power(0.5), quick());
  REQUIRE(plan.entries.size() == 2);
  for (const auto& e : plan.entries) {
    REQUIRE(e.accepted);
    CHECK(e.tau_branch == "kappa");
    CHECK(e.epsilon <= std::sqrt(e.lambda) + 1e-12);
    CHECK(e.gradient_gap <= e.lambda);
    CHECK(e.surrogate.has_value());
  }
  CHECK(plan.entries[1].tau == doctest::Approx(10.0));
  CHECK(plan.tau_monotone());
}

TEST_CASE("semi-convex plan rejects lambda above lambda0") {
  bump::Example8Config cfg;
  const auto setup = bump::lyapunov_setup(cfg, 2.5, 1.0, 41);
  const auto v = sample_padded([](const Vec& y) { return bump::v0(y, 1.0); }, setup.omega_delta, 0.8, 0.05);
  const auto plan = plan_semiconvex(bump::make_problem(cfg), v, setup, std::vector<double>{0.2, 0.1},
                                    KappaSchedule::power(0.5), quick());
  CHECK_FALSE(plan.entries[0].accepted);
  CHECK(plan.entries[0].diagnostic.find("inner domain") != std::string::npos);
  CHECK(plan.entries[1].accepted);
  REQUIRE(plan.lambda0.has_value());
  CHECK(*plan.lambda0 == 0.1);
}

TEST_CASE("semi-concave plan") {
  const auto setup = small_setup();
  const auto v = flat_value();
  const std::vector<double> eps{0.2, 0.1, 0.05};
  const auto plan = plan_semiconcave(planar(), v, setup, eps, KappaSchedule::log(1.0), 2.0, quick());
  REQUIRE(plan.tail.has_value());
  CHECK(plan.tail->decreasing);
  for (const auto& e : plan.entries) {
    CHECK(e.accepted);
    CHECK(e.tau_branch != "escape");
    // K = m d C ‖B‖² / β with C = 0.01, m = d = 2, no B or f variation
    CHECK(e.k == doctest::Approx(0.04).epsilon(1e-6));
  }
  CHECK(plan.tau_monotone());

  const auto p1 = plan_semiconcave(planar(), v, setup, eps, KappaSchedule::log(1.0), 1.0, quick());
  for (const auto& e : p1.entries) {
    // exponent (p-1)/p vanishes
    const double expected = e.tau >= 0 ? std::expm1(e.k * e.tau) / e.k * e.deviation * e.deviation * planar().beta : 0;
    CHECK(e.predicted_bound == doctest::Approx(expected).epsilon(1e-9));
  }

  // steep curvature with a slow κ breaks the tail condition
  const auto steep = sample_padded([](const Vec& y) { return 50 * y.squaredNorm(); }, setup.omega_delta, 1.0, 0.05);
  CHECK_THROWS_AS(plan_semiconcave(planar(), steep, setup, eps, KappaSchedule::log(1.0), 2.0, quick()), PlanError);
}

TEST_CASE("Hölder plan hypotheses and epsilon cap") {
  const auto setup = small_setup();
  const auto eta = EtaSchedule::power(1.0, 1.0);
  const std::vector<double> lams{0.01};
  CHECK_THROWS_AS(plan_hoelder(planar(), flat_value(), setup, lams, KappaSchedule::power(0.5), eta, 2.0, {0.5, 1.0},
                               quick()),
                  PlanError);
  CHECK_THROWS_AS(plan_hoelder(planar(), flat_value(), setup, lams, KappaSchedule::power(0.5), eta, 2.0, {0.8, 0.1},
                               quick()),
                  PlanError);
  const auto plan = plan_hoelder(planar(), flat_value(0.004), setup, lams, KappaSchedule::power(0.5), eta, 2.0,
                                 {1.0, 1.0}, quick());
  REQUIRE(plan.entries.size() == 1);
  REQUIRE(plan.entries[0].accepted);
  CHECK(plan.entries[0].epsilon <= 0.01 + 1e-12);
  CHECK(plan.entries[0].gradient_gap <= plan.entries[0].eta);
}

TEST_CASE("gradient mask excludes kinks") {
  const auto v = ScalarField::sample(BoxGrid(Vec::Constant(2, -1), Vec::Constant(2, 1), {41, 41}),
                                     [](const Vec& y) { return std::abs(y[0]) + 0.5 * y[1] * y[1]; });
  const auto mask = gradient_mask(v);
  CHECK_FALSE(mask.defined_at(v2(0, 0.3)));
  CHECK(mask.defined_at(v2(0.5, 0.3)));
}

TEST_CASE("plan entry residual is zero for the exact law") {
  const auto p = planar();
  PlanEntry e;
  e.tau = 2.0;
  e.law = bump::v0_feedback(1.0);
  const auto starts = sample_grid(Region::ball(v2(0, 0), 1.0), 9);
  SimConfig sim;
  sim.rtol = 1e-11;
  sim.atol = 1e-13;
  const auto r = measure_plan_entry(p, bump::v0_function(1.0), e, starts, 2.0, sim);
  CHECK(r.sup < 1e-9);
  CHECK(r.escaped == 0);
  CHECK(r.starts == starts.size());
}

}  // TEST_SUITE
