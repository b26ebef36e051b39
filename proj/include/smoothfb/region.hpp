#ifndef SMOOTHFB_REGION_HPP_
#define SMOOTHFB_REGION_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "smoothfb/grid.hpp"
#include "smoothfb/types.hpp"

namespace smoothfb {

// Counter-based stream: draw k of stream s under seed is a pure function of
// (seed, s, k), so split streams are reproducible under any scheduling.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}
  std::uint64_t next();
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  CounterRng split(std::uint64_t child) const;
  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_, stream_, counter_ = 0;
};

// Open region given by a level function: inside iff level(x) < 0. Carries a
// bounding box used for sampling.
class Region {
 public:
  static Region box(Vec lower, Vec upper);
  static Region ball(Vec center, double radius);
  static Region sublevel(std::function<double(const Vec&)> fn, double threshold, Vec bbox_lower,
                         Vec bbox_upper, std::string label = "sublevel");

  bool contains(const Vec& x) const { return level_(x) < 0.0; }
  double level(const Vec& x) const { return level_(x); }
  const Vec& bbox_lower() const { return lo_; }
  const Vec& bbox_upper() const { return hi_; }
  int dim() const { return static_cast<int>(lo_.size()); }
  const std::string& label() const { return label_; }
  // Analytic volume for boxes and balls, NaN otherwise.
  double volume() const { return volume_; }

 private:
  std::function<double(const Vec&)> level_;
  Vec lo_, hi_;
  std::string label_;
  double volume_ = std::numeric_limits<double>::quiet_NaN();
};

enum class SamplingMode { grid, monte_carlo };

struct RegionSample {
  Region region;
  std::vector<Vec> points;
  SamplingMode mode = SamplingMode::grid;
  std::uint64_t seed = 0;
  double weight = 0.0;  // quadrature weight per point (cell volume, or volume / count)

  std::size_t size() const { return points.size(); }
  double measure() const { return weight * static_cast<double>(points.size()); }
};

// Nodes of `grid` that lie inside the region.
RegionSample sample_grid(const Region& region, const BoxGrid& grid);
// Tensor grid with `per_axis` nodes over the bounding box, filtered.
RegionSample sample_grid(const Region& region, int per_axis);
// Rejection sampling in the bounding box.
RegionSample sample_monte_carlo(const Region& region, std::size_t count, std::uint64_t seed);

// Evenly spread unit directions (exact circle in 2-D, Gaussian draws otherwise).
std::vector<Vec> unit_directions(int dim, int count, std::uint64_t seed);

}  // namespace smoothfb

#endif  // SMOOTHFB_REGION_HPP_
