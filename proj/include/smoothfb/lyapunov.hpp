#ifndef SMOOTHFB_LYAPUNOV_HPP_
#define SMOOTHFB_LYAPUNOV_HPP_

#include <functional>
#include <optional>

#include "smoothfb/grid.hpp"
#include "smoothfb/region.hpp"

namespace smoothfb {

// w, g, ω, δ and ω_δ = {w < sup_ω w + δ}.
struct LyapunovSetup {
  ScalarFunction w;
  std::function<double(const Vec&)> g;  // empty means g ≡ 0
  Region omega;
  double delta = 0.0;
  double sup_w_omega = 0.0;  // sampled
  Region omega_delta;
  RegionSample omega_sample;  // grid sample of ω used for sup w and containment

  double g_at(const Vec& x) const { return g ? g(x) : 0.0; }
  bool zero_g() const { return !g; }
};

// Samples ω on a grid with per_axis nodes per axis, sets sup_ω w and builds
// ω_δ with the given bounding box. Throws ParameterError when δ ≤ 0, when a
// sampled point of ω falls outside ω_δ, or when g < 0 at a sample.
LyapunovSetup make_lyapunov_setup(ScalarFunction w, std::function<double(const Vec&)> g, Region omega, double delta,
                                  Vec bbox_lower, Vec bbox_upper, int per_axis = 61);

}  // namespace smoothfb

#endif  // SMOOTHFB_LYAPUNOV_HPP_
