#include <doctest.h>

#include <cmath>
#include <vector>

#include "smoothfb/example8.hpp"

using namespace smoothfb;
using bump::Vec2;

namespace {

bump::Example8Config with_alpha(double a) {
  bump::Example8Config c;
  c.alpha = a;
  return c;
}

}  // namespace

TEST_SUITE("example8") {

TEST_CASE("running cost closed forms") {
  const auto c0 = with_alpha(0.0), c10 = with_alpha(10.0);
  const Vec2 y(0.7, -1.1);
  CHECK(bump::ell_alpha(y, c0) == doctest::Approx(0.5 * y.squaredNorm()));
  CHECK(bump::ell_alpha(y, c10) == doctest::Approx(0.5 * y.squaredNorm()));
  // at the centre ψ(0) = e^{-1}
  CHECK(bump::ell_alpha(c10.z, c10) == doctest::Approx(2.0 * (1 + 10 * std::exp(-1.0))));
  const Vec2 half(-2.25, 0.0);  // |y - z|/σ = 1/2
  CHECK(bump::ell_alpha(half, c10) == doctest::Approx(0.5 * 2.25 * 2.25 * (1 + 10 * std::exp(-4.0 / 3.0))));
  CHECK(bump::ell_alpha(Vec2(-2.5, 0), c10) == doctest::Approx(3.125));
}

TEST_CASE("running cost gradient against central differences") {
  for (double a : {0.0, 2.0, 10.0}) {
    const auto cfg = with_alpha(a);
    CounterRng rng(77);
    const double h = 1e-6;
    for (int k = 0; k < 1000; ++k) {
      // half the points inside the bump ball
      const Vec2 y = k % 2 ? Vec2(rng.uniform(-3, 3), rng.uniform(-3, 3))
                           : Vec2(cfg.z + Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
      const Vec2 g = bump::grad_ell_alpha(y, cfg);
      for (int i = 0; i < 2; ++i) {
        Vec2 e = Vec2::Zero();
        e[i] = h;
        const double fd = (bump::ell_alpha(y + e, cfg) - bump::ell_alpha(y - e, cfg)) / (2 * h);
        CHECK(std::abs(fd - g[i]) < 1e-6 * std::max(1.0, std::abs(g[i])));
      }
    }
  }
}

TEST_CASE("alpha = 0 value and law") {
  const Vec y = (Vec(2) << 1.0, -2.0).finished();
  CHECK(bump::v0(y, 1.0) == doctest::Approx(2.5));
  CHECK(bump::v0(y, 4.0) == doctest::Approx(5.0));
  CHECK((bump::u0_law(y, 4.0) + y / 2.0).norm() < 1e-15);
  const auto f = bump::v0_function(4.0);
  CHECK((f.gradient(y) - 2.0 * y).norm() < 1e-15);
  // Hamiltonian-Jacobi: ½|y|² = |∇V₀|²/(2β)
  CHECK(0.5 * y.squaredNorm() == doctest::Approx(f.gradient(y).squaredNorm() / 8.0));
}

TEST_CASE("optimality arc solves y'' = y/beta") {
  const Vec2 y0(-1.0, 0.5), u0(0.3, -0.2);
  for (double beta : {1.0, 2.5}) {
    CHECK((bump::linear_arc(y0, u0, 0.0, beta) - y0).norm() < 1e-15);
    const double h = 1e-4;
    const Vec2 v0 = (bump::linear_arc(y0, u0, h, beta) - bump::linear_arc(y0, u0, -h, beta)) / (2 * h);
    CHECK((v0 - u0).norm() < 1e-7);
    for (double t : {0.3, 1.0, 2.0}) {
      const Vec2 acc = (bump::linear_arc(y0, u0, t + h, beta) - 2 * bump::linear_arc(y0, u0, t, beta) +
                        bump::linear_arc(y0, u0, t - h, beta)) / (h * h);
      CHECK((acc - bump::linear_arc(y0, u0, t, beta) / beta).norm() < 1e-5);
    }
  }
}

TEST_CASE("Lyapunov function") {
  const auto cfg = with_alpha(10.0);
  const auto w = bump::lyapunov_w(cfg);
  const Vec in = (Vec(2) << 1.0, 2.0).finished();
  const Vec out = (Vec(2) << 3.0, 0.0).finished();
  CHECK(w.value(in) == 0.0);
  CHECK(w.gradient(in).norm() == 0.0);
  CHECK(w.value(out) == doctest::Approx(2.75 * 2.75));
  const double h = 1e-6;
  const Vec e = (Vec(2) << h, 0.0).finished();
  CHECK(w.gradient(out)[0] == doctest::Approx((w.value(out + e) - w.value(out - e)) / (2 * h)).epsilon(1e-8));
  const auto setup = bump::lyapunov_setup(cfg, 2.5, 1.0, 41);
  CHECK(setup.sup_w_omega == 0.0);
  CHECK(setup.omega_delta.contains(Vec2(2.6, 0.0)));
  CHECK_FALSE(setup.omega_delta.contains(Vec2(2.8, 0.0)));
}

TEST_CASE("bump-free segments") {
  const auto cfg = with_alpha(10.0);
  CHECK(bump::bump_free(Vec2(1.0, 1.0), cfg));
  CHECK(bump::bump_free(Vec2(-1.4, 0.0), cfg));
  CHECK_FALSE(bump::bump_free(Vec2(-2.0, 0.0), cfg));
  CHECK_FALSE(bump::bump_free(Vec2(-3.0, 0.1), cfg));
  CHECK(bump::bump_free(Vec2(-3.0, 2.0), cfg));
}

TEST_CASE("graded mesh") {
  const auto t = bump::graded_times(15.0, 200, 5.0);
  REQUIRE(t.size() == 201);
  CHECK(t.front() == 0.0);
  CHECK(t.back() == doctest::Approx(15.0));
  for (std::size_t k = 1; k < t.size(); ++k) CHECK(t[k] > t[k - 1]);
  CHECK(t[1] - t[0] < t[200] - t[199]);
  const auto u = bump::graded_times(2.0, 4, 0.0);
  CHECK(u[1] == doctest::Approx(0.5));
}

TEST_CASE("transcription reproduces V0 without the bump") {
  const auto cfg = with_alpha(0.0);
  const bump::Transcription tr(cfg);
  for (const Vec2& y0 : {Vec2(1.0, 0.0), Vec2(-0.6, 1.3)}) {
    const auto sols = bump::solve_open_loop(tr, y0);
    REQUIRE_FALSE(sols.empty());
    CHECK(sols.front().converged);
    CHECK(sols.front().cost == doctest::Approx(0.5 * y0.squaredNorm()).epsilon(1e-5));
    CHECK((-sols.front().initial_control() - y0).norm() < 1e-3);
  }
}

TEST_CASE("value equals V0 inside B(0, |z| - sigma)") {
  const auto cfg = with_alpha(10.0);
  const bump::Transcription tr(cfg);
  bump::MultistartOptions o;
  o.bump_free_shortcut = false;
  o.random_pairs = 1;
  for (const Vec2& y0 : {Vec2(-1.2, 0.3), Vec2(0.4, -1.0)}) {
    const auto sols = bump::solve_open_loop(tr, y0, o);
    REQUIRE_FALSE(sols.empty());
    CHECK(sols.front().cost == doctest::Approx(0.5 * y0.squaredNorm()).epsilon(1e-5));
    const auto sd = bump::superdifferential_probe(sols, cfg, 0.05);
    CHECK_FALSE(sd.nondifferentiable);
  }
}

TEST_CASE("on-axis start behind the bump has mirrored optima") {
  const auto cfg = with_alpha(10.0);
  const bump::Transcription tr(cfg);
  const Vec2 y0(-3.0, 0.0);
  const auto sols = bump::solve_open_loop(tr, y0);
  REQUIRE(sols.size() >= 2);
  const auto& a = sols[0];
  const auto& b = sols[1];
  CHECK(a.cost == doctest::Approx(b.cost).epsilon(1e-6));
  // states mirrored in the axis
  CHECK(std::abs(a.states[20][1] + b.states[20][1]) < 1e-4);
  CHECK(std::abs(a.states[20][1]) > 0.1);
  const auto sd = bump::superdifferential_probe(sols, cfg, 0.05);
  CHECK(sd.nondifferentiable);
  // both beat the straight path through the bump
  CHECK(a.cost < bump::onaxis_trajectory(-3.0, cfg).cost);
}

TEST_CASE("on-axis closed loop without the bump") {
  const auto r = bump::onaxis_trajectory(-3.0, with_alpha(0.0));
  CHECK(r.cost == doctest::Approx(4.5).epsilon(1e-7));
}

TEST_CASE("configuration validation") {
  auto bad = with_alpha(-1.0);
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  auto sig = with_alpha(1.0);
  sig.sigma = 0.0;
  CHECK_THROWS_AS(sig.validate(), ParameterError);
  auto nodes = with_alpha(1.0);
  nodes.nodes = 0;
  CHECK_THROWS_AS(nodes.validate(), ParameterError);
}

}  // TEST_SUITE
