#include <doctest.h>

#include <cmath>

#include "smoothfb/example8.hpp"
#include "smoothfb/regularize.hpp"
#include "smoothfb/simulate.hpp"

using namespace smoothfb;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

ControlProblem planar(double alpha = 0.0) {
  bump::Example8Config cfg;
  cfg.alpha = alpha;
  return bump::make_problem(cfg);
}

SimConfig tight(double horizon) {
  SimConfig s;
  s.horizon = horizon;
  s.rtol = 1e-10;
  s.atol = 1e-12;
  return s;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("linear law follows the exponential") {
  const auto law = FeedbackLaw::analytic([](const Vec& y) -> Vec { return -y; });
  const auto tr = integrate_closed_loop(planar(), law, v2(1, 0), tight(5));
  CHECK(tr.status == TrajStatus::completed);
  for (std::size_t k = 0; k < tr.size(); ++k) CHECK((tr.states[k] - std::exp(-tr.times[k]) * v2(1, 0)).norm() < 1e-8);
  CHECK(cost_value(tr, 5) == doctest::Approx(0.5 * (1 - std::exp(-10))).epsilon(1e-9));
  CHECK(std::abs(cost_value(tr, 5) - 0.499977) < 1e-6);
  CHECK_NOTHROW(tr.check_invariants());
}

TEST_CASE("zero law and zero drift keep the state") {
  const auto law = FeedbackLaw::analytic([](const Vec& y) -> Vec { return Vec::Zero(y.size()); });
  const auto tr = integrate_closed_loop(planar(), law, v2(0.3, -0.4), tight(3));
  CHECK((tr.final_state() - v2(0.3, -0.4)).norm() == 0.0);
  CHECK(cost_value(tr, 3) == doctest::Approx(3 * 0.5 * 0.25));

  ControlProblem free = planar();
  free.running = [](const Vec&) { return 0.0; };
  CHECK(cost_value(integrate_closed_loop(free, law, v2(1, 1), tight(2)), 2) == 0.0);
}

TEST_CASE("long horizon cost approaches the value and the DPP identity holds") {
  const auto law = bump::v0_feedback(1.0);
  const auto tr = integrate_closed_loop(planar(), law, v2(1, 0), tight(30));
  CHECK(cost_value(tr, 30) == doctest::Approx(0.5).epsilon(1e-9));
  CounterRng rng(17);
  for (int k = 0; k < 20; ++k) {
    const Vec y0 = v2(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const double t = rng.uniform(0.1, 4);
    const auto traj = integrate_closed_loop(planar(), law, y0, tight(t));
    const double dpp = cost_value(traj, t) + bump::v0(traj.final_state(), 1.0) - bump::v0(y0, 1.0);
    CHECK(std::abs(dpp) < 1e-8);
  }
}

TEST_CASE("on-axis law against the separable quadrature") {
  bump::Example8Config cfg;
  cfg.alpha = 10.0;
  // y' = -y sqrt(1 + αψ): time to reach y is ∫ ds / (-s sqrt(1 + αψ))
  auto rate = [&](double s) {
    return 1.0 / (-s * std::sqrt(1 + cfg.alpha * bump_profile(std::abs(s - cfg.z[0]) / cfg.sigma)));
  };
  for (double target : {-3.0, -2.0, -1.2}) {
    const int n = 200000;
    const double a = -5.0, h = (target - a) / n;
    double t = rate(a) + rate(target);
    for (int k = 1; k < n; ++k) t += (k % 2 ? 4 : 2) * rate(a + k * h);
    t *= h / 3;
    const Vec y = bump::onaxis_trajectory(-5.0, cfg, t).trajectory.final_state();
    CHECK(std::abs(y[0] - target) < 1e-8);
    CHECK(y[1] == 0.0);
  }
  // α = 0 collapses to the exponential
  bump::Example8Config flat;
  const auto ex = bump::onaxis_trajectory(-5.0, flat, 3.0);
  CHECK(std::abs(ex.trajectory.final_state()[0] + 5 * std::exp(-3.0)) < 1e-8);
}

TEST_CASE("escape is located at the region boundary") {
  const auto law = FeedbackLaw::analytic([](const Vec& y) -> Vec { return y; });
  SimConfig s = tight(5);
  s.escape_region = Region::ball(v2(0, 0), 2.0);
  const auto tr = integrate_closed_loop(planar(), law, v2(1, 0), s);
  CHECK(tr.status == TrajStatus::escaped);
  CHECK(tr.escape_reason == EscapeReason::region_exit);
  CHECK(tr.escape_time == doctest::Approx(std::log(2.0)).epsilon(1e-8));
  CHECK_FALSE(s.escape_region->contains(tr.final_state()));
  for (std::size_t k = 0; k + 1 < tr.size(); ++k) CHECK(s.escape_region->contains(tr.states[k]));
}

TEST_CASE("field laws stop at the edge of their grid") {
  const auto v = ScalarField::sample(BoxGrid(Vec::Constant(2, -1), Vec::Constant(2, 1), {41, 41}),
                                     [](const Vec& y) { return -0.5 * y.squaredNorm(); });
  const auto law = feedback_from(v, planar());
  const auto tr = integrate_closed_loop(planar(), law, v2(0.5, 0), tight(5));
  CHECK(tr.status == TrajStatus::escaped);
  CHECK(tr.escape_reason == EscapeReason::law_domain);
}

TEST_CASE("rk4 and rk45 agree") {
  const auto law = bump::v0_feedback(1.0);
  SimConfig fixed = tight(2);
  fixed.integrator = Integrator::rk4;
  fixed.step = 1e-3;
  const auto a = integrate_closed_loop(planar(), law, v2(1, 2), fixed);
  const auto b = integrate_closed_loop(planar(), law, v2(1, 2), tight(2));
  CHECK((a.final_state() - b.final_state()).norm() < 1e-10);
  CHECK(cost_value(a, 2) == doctest::Approx(cost_value(b, 2)).epsilon(1e-10));
}

TEST_CASE("simulation parameters are validated") {
  SimConfig s;
  s.step = 0;
  CHECK_THROWS_AS(s.validate(), ParameterError);
  SimConfig t;
  t.horizon = -1;
  CHECK_THROWS_AS(t.validate(), ParameterError);
}

TEST_CASE("maximized Hamiltonian") {
  const auto p = planar();
  const Vec y = v2(0.7, -1.1);
  CHECK(std::abs(max_hamiltonian(p, y, y)) < 1e-15);
  CHECK(max_hamiltonian(p, y, Vec::Zero(2)) == doctest::Approx(-p.running(y)));

  const auto q = planar(5.0);
  CounterRng rng(23);
  for (int k = 0; k < 20; ++k) {
    const Vec yy = v2(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Vec pp = v2(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const double top = max_hamiltonian(q, yy, pp);
    const Vec star = hamiltonian_argmax(q, yy, pp);
    CHECK((star + pp / q.beta).norm() < 1e-15);
    CHECK(std::abs(hamiltonian(q, yy, pp, star) - top) < 1e-12);
    double sampled = -1e300;
    CounterRng ur(k);
    for (int j = 0; j < 10000; ++j) {
      const Vec u = star + v2(ur.uniform(-1, 1), ur.uniform(-1, 1));
      sampled = std::max(sampled, hamiltonian(q, yy, pp, u));
    }
    CHECK(sampled <= top + 1e-9);
    CHECK(sampled >= top - 1e-2);
  }
}

TEST_CASE("HJB residual of the quadratic value") {
  const BoxGrid g(Vec::Constant(2, -2), Vec::Constant(2, 2), {81, 81});
  const auto p = planar();
  const auto r0 = hjb_residual(p, bump::v0_function(1.0), g);
  for (double v : r0.values()) CHECK(std::abs(v) < 1e-12);

  ScalarFunction twice{[](const Vec& y) { return y.squaredNorm(); }, [](const Vec& y) -> Vec { return 2 * y; }};
  const auto r2 = hjb_residual(p, twice, g);
  for (std::size_t n = 0; n < g.size(); ++n)
    CHECK(r2[n] == doctest::Approx(1.5 * g.node(n).squaredNorm()).epsilon(1e-12));

  // grid-backed V₀ is exact up to the central-difference error (zero on quadratics)
  const auto field = ScalarField::sample(g, [](const Vec& y) { return 0.5 * y.squaredNorm(); }, Interp::cubic);
  const auto rf = hjb_residual(p, ScalarFunction::from_field(field), g);
  const BoxGrid inner(Vec::Constant(2, -1.5), Vec::Constant(2, 1.5), {31, 31});
  for (std::size_t n = 0; n < inner.size(); ++n) CHECK(std::abs(rf.eval(inner.node(n))) < 1e-9);
}

}  // TEST_SUITE
