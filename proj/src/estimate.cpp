#include "smoothfb/estimate.hpp"

#include <algorithm>
#include <cmath>

namespace smoothfb {

namespace {

template <class Visit>
void for_each_pair(const RegionSample& s, std::size_t pairs, std::uint64_t seed, Visit&& visit) {
  const std::size_t n = s.size();
  if (n < 2) throw ParameterError("lipschitz_estimate: region needs at least 2 sample points");
  CounterRng rng(seed);
  const double scale = (s.region.bbox_upper() - s.region.bbox_lower()).norm();
  const int d = s.region.dim();
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vec& x = s.points[rng.next() % n];
    Vec y;
    bool have = false;
    if (k % 2 == 0) {
      Vec dir(d);
      for (int a = 0; a < d; ++a) dir[a] = rng.normal();
      if (dir.norm() > 0) {
        dir.normalize();
        double r = 0.02 * scale * std::pow(10.0, -3.0 * rng.uniform());
        for (int attempt = 0; attempt < 5 && !have; ++attempt, r *= 0.5) {
          y = x + r * dir;
          have = s.region.contains(y);
        }
      }
    }
    if (!have) {
      y = s.points[rng.next() % n];
      if ((y - x).norm() == 0.0) continue;
    }
    visit(x, y);
  }
}

}  // namespace

Estimate lipschitz_estimate(const std::function<double(const Vec&)>& fn, const RegionSample& region,
                            std::size_t pairs, std::uint64_t seed) {
  double best = 0.0;
  std::size_t used = 0;
  for_each_pair(region, pairs, seed, [&](const Vec& x, const Vec& y) {
    best = std::max(best, std::abs(fn(x) - fn(y)) / (x - y).norm());
    ++used;
  });
  return {best, used};
}

Estimate lipschitz_estimate(const std::function<Vec(const Vec&)>& map, const RegionSample& region,
                            std::size_t pairs, std::uint64_t seed) {
  double best = 0.0;
  std::size_t used = 0;
  for_each_pair(region, pairs, seed, [&](const Vec& x, const Vec& y) {
    best = std::max(best, (map(x) - map(y)).norm() / (x - y).norm());
    ++used;
  });
  return {best, used};
}

MatrixLipschitz lipschitz_estimate(const std::function<Mat(const Vec&)>& map, const RegionSample& region,
                                   std::size_t pairs, std::uint64_t seed) {
  MatrixLipschitz out;
  for_each_pair(region, pairs, seed, [&](const Vec& x, const Vec& y) {
    const Mat diff = map(x) - map(y);
    const double nrm = diff.size() == 0 ? 0.0 : Eigen::JacobiSVD<Mat>(diff).singularValues()(0);
    out.seminorm = std::max(out.seminorm, nrm / (x - y).norm());
    out.sup_difference = std::max(out.sup_difference, nrm);
    ++out.pairs;
  });
  return out;
}

double sup_norm(const std::function<double(const Vec&)>& fn, const RegionSample& region) {
  if (region.size() == 0) throw ParameterError("sup_norm: empty region");
  double m = 0.0;
  for (const Vec& x : region.points) m = std::max(m, std::abs(fn(x)));
  return m;
}

double sup_norm(const std::function<Vec(const Vec&)>& map, const RegionSample& region) {
  if (region.size() == 0) throw ParameterError("sup_norm: empty region");
  double m = 0.0;
  for (const Vec& x : region.points) m = std::max(m, map(x).norm());
  return m;
}

double sup_norm(const std::function<Mat(const Vec&)>& map, const RegionSample& region) {
  if (region.size() == 0) throw ParameterError("sup_norm: empty region");
  double m = 0.0;
  for (const Vec& x : region.points) {
    const Mat b = map(x);
    if (b.size() > 0) m = std::max(m, Eigen::JacobiSVD<Mat>(b).singularValues()(0));
  }
  return m;
}

double sup_norm(const ScalarField& field, const RegionSample& region) {
  return sup_norm([&field](const Vec& x) { return field.eval(x); }, region);
}

HolderFit holder_fit(const std::function<double(const Vec&)>& fn, const RegionSample& region,
                     std::size_t pairs, std::uint64_t seed) {
  std::vector<std::pair<double, double>> samples;  // (distance, |difference|)
  samples.reserve(pairs);
  for_each_pair(region, pairs, seed, [&](const Vec& x, const Vec& y) {
    samples.emplace_back((x - y).norm(), std::abs(fn(x) - fn(y)));
  });
  HolderFit fit;
  fit.pairs = samples.size();
  if (samples.empty()) return fit;
  double rmin = samples[0].first, rmax = rmin;
  for (auto [r, _] : samples) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  constexpr int kBins = 16;
  std::vector<double> env(kBins, 0.0);
  const double lmin = std::log(rmin), lspan = std::max(std::log(rmax) - lmin, 1e-12);
  for (auto [r, dv] : samples) {
    const int b = std::min(kBins - 1, static_cast<int>((std::log(r) - lmin) / lspan * kBins));
    env[b] = std::max(env[b], dv);
  }
  std::vector<double> xs, ys;
  for (int b = 0; b < kBins; ++b) {
    if (env[b] > 0) {
      xs.push_back(std::exp(lmin + (b + 0.5) * lspan / kBins));
      ys.push_back(env[b]);
    }
  }
  fit.exponent = xs.size() >= 2 ? std::clamp(loglog_slope(xs, ys), 1e-3, 1.0) : 1.0;
  for (auto [r, dv] : samples) fit.constant = std::max(fit.constant, dv / std::pow(r, fit.exponent));
  return fit;
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("loglog_slope: need >= 2 matched points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace smoothfb
