#include "smoothfb/region.hpp"

#include <cmath>
#include <numbers>

namespace smoothfb {

namespace {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double box_volume(const Vec& lo, const Vec& hi) { return (hi - lo).prod(); }

}  // namespace

std::uint64_t CounterRng::next() {
  return mix64(mix64(seed_ ^ mix64(stream_)) + counter_++ * 0xd1b54a32d192ed03ULL);
}

double CounterRng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double CounterRng::normal() {
  // Box-Muller, one value per call.
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

CounterRng CounterRng::split(std::uint64_t child) const {
  return CounterRng(seed_, mix64(stream_ * 0x2545f4914f6cdd1dULL + child + 1));
}

Region Region::box(Vec lower, Vec upper) {
  Region r;
  r.label_ = "box";
  r.volume_ = box_volume(lower, upper);
  r.level_ = [lower, upper](const Vec& x) {
    return std::max((lower - x).maxCoeff(), (x - upper).maxCoeff());
  };
  r.lo_ = std::move(lower);
  r.hi_ = std::move(upper);
  return r;
}

Region Region::ball(Vec center, double radius) {
  if (!(radius > 0)) throw ParameterError("ball: radius must be positive");
  Region r;
  r.label_ = "ball";
  const int d = static_cast<int>(center.size());
  r.volume_ = std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(radius, d);
  r.lo_ = center.array() - radius;
  r.hi_ = center.array() + radius;
  r.level_ = [center, radius](const Vec& x) { return (x - center).norm() - radius; };
  return r;
}

Region Region::sublevel(std::function<double(const Vec&)> fn, double threshold, Vec bbox_lower,
                        Vec bbox_upper, std::string label) {
  Region r;
  r.label_ = std::move(label);
  r.lo_ = std::move(bbox_lower);
  r.hi_ = std::move(bbox_upper);
  r.level_ = [fn = std::move(fn), threshold](const Vec& x) { return fn(x) - threshold; };
  return r;
}

RegionSample sample_grid(const Region& region, const BoxGrid& grid) {
  RegionSample s{region, {}, SamplingMode::grid, 0, grid.cell_volume()};
  for (std::size_t n = 0; n < grid.size(); ++n) {
    Vec x = grid.node(n);
    if (region.contains(x)) s.points.push_back(std::move(x));
  }
  return s;
}

RegionSample sample_grid(const Region& region, int per_axis) {
  const int d = region.dim();
  return sample_grid(region, BoxGrid(region.bbox_lower(), region.bbox_upper(), std::vector<int>(d, per_axis)));
}

RegionSample sample_monte_carlo(const Region& region, std::size_t count, std::uint64_t seed) {
  RegionSample s{region, {}, SamplingMode::monte_carlo, seed, 0.0};
  CounterRng rng(seed);
  const Vec& lo = region.bbox_lower();
  const Vec& hi = region.bbox_upper();
  std::size_t tries = 0;
  const std::size_t max_tries = 1000 * count + 1000;
  s.points.reserve(count);
  while (s.points.size() < count && tries < max_tries) {
    Vec x(lo.size());
    for (int a = 0; a < lo.size(); ++a) x[a] = rng.uniform(lo[a], hi[a]);
    ++tries;
    if (region.contains(x)) s.points.push_back(std::move(x));
  }
  if (s.points.size() < count) throw ParameterError("monte carlo sampling: region has negligible volume");
  const double vol = std::isnan(region.volume())
                         ? box_volume(lo, hi) * static_cast<double>(count) / static_cast<double>(tries)
                         : region.volume();
  s.weight = vol / static_cast<double>(count);
  return s;
}

std::vector<Vec> unit_directions(int dim, int count, std::uint64_t seed) {
  std::vector<Vec> dirs;
  dirs.reserve(count);
  if (dim == 1) {
    for (int k = 0; k < count; ++k) dirs.push_back(Vec::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
    return dirs;
  }
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * k / count;
      Vec v(2);
      v << std::cos(th), std::sin(th);
      dirs.push_back(v);
    }
    return dirs;
  }
  CounterRng rng(seed, 0x5eed);
  while (static_cast<int>(dirs.size()) < count) {
    Vec v(dim);
    for (int a = 0; a < dim; ++a) v[a] = rng.normal();
    if (v.norm() > 1e-12) dirs.push_back(v / v.norm());
  }
  return dirs;
}

}  // namespace smoothfb
