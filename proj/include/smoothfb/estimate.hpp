#ifndef SMOOTHFB_ESTIMATE_HPP_
#define SMOOTHFB_ESTIMATE_HPP_

#include <cstdint>
#include <functional>
#include <span>

#include "smoothfb/region.hpp"

namespace smoothfb {

// Sampled constants are lower estimates of the true ones; the pair count is
// kept so reports can state the sampling effort.
struct Estimate {
  double value = 0.0;
  std::size_t pairs = 0;
};

// Half the pairs are local (random point + short random offset kept inside
// the region), half are random pairs of sample points.
Estimate lipschitz_estimate(const std::function<double(const Vec&)>& fn, const RegionSample& region,
                            std::size_t pairs, std::uint64_t seed = 1);
Estimate lipschitz_estimate(const std::function<Vec(const Vec&)>& map, const RegionSample& region,
                            std::size_t pairs, std::uint64_t seed = 1);

// ‖B‖_Lip as (seminorm) + (sup of differences); spectral norms throughout.
struct MatrixLipschitz {
  double seminorm = 0.0;
  double sup_difference = 0.0;
  std::size_t pairs = 0;
  double combined() const { return seminorm + sup_difference; }
};
MatrixLipschitz lipschitz_estimate(const std::function<Mat(const Vec&)>& map, const RegionSample& region,
                                   std::size_t pairs, std::uint64_t seed = 1);

double sup_norm(const std::function<double(const Vec&)>& fn, const RegionSample& region);
double sup_norm(const std::function<Vec(const Vec&)>& map, const RegionSample& region);
double sup_norm(const std::function<Mat(const Vec&)>& map, const RegionSample& region);
double sup_norm(const ScalarField& field, const RegionSample& region);

// |φ(x)-φ(y)| ≤ C|x-y|^α fitted on the upper envelope of sampled quotients
// in logarithmic distance bins.
struct HolderFit {
  double constant = 0.0;
  double exponent = 0.0;
  std::size_t pairs = 0;
};
HolderFit holder_fit(const std::function<double(const Vec&)>& fn, const RegionSample& region,
                     std::size_t pairs, std::uint64_t seed = 1);

// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace smoothfb

#endif  // SMOOTHFB_ESTIMATE_HPP_
