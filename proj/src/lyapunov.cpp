#include "smoothfb/lyapunov.hpp"

#include <algorithm>

namespace smoothfb {

LyapunovSetup make_lyapunov_setup(ScalarFunction w, std::function<double(const Vec&)> g, Region omega, double delta,
                                  Vec bbox_lower, Vec bbox_upper, int per_axis) {
  if (!(delta > 0)) throw ParameterError("lyapunov setup: delta must be positive");
  if (!w.value || !w.gradient) throw ParameterError("lyapunov setup: w needs value and gradient");
  LyapunovSetup s;
  s.omega_sample = sample_grid(omega, per_axis);
  if (s.omega_sample.points.empty()) throw ParameterError("lyapunov setup: omega sample is empty");
  double sup = 0.0;
  for (const Vec& x : s.omega_sample.points) {
    sup = std::max(sup, w.value(x));
    if (g && g(x) < 0) throw ParameterError("lyapunov setup: g is negative inside omega");
  }
  s.sup_w_omega = sup;
  auto wv = w.value;
  s.omega_delta = Region::sublevel([wv](const Vec& x) { return wv(x); }, sup + delta, std::move(bbox_lower),
                                   std::move(bbox_upper), "omega_delta");
  for (const Vec& x : s.omega_sample.points)
    if (!s.omega_delta.contains(x)) throw ParameterError("lyapunov setup: omega not inside omega_delta");
  s.w = std::move(w);
  s.g = std::move(g);
  s.omega = std::move(omega);
  s.delta = delta;
  return s;
}

}  // namespace smoothfb
