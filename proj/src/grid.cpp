#include "smoothfb/grid.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace smoothfb {

BoxGrid::BoxGrid(Vec lower, Vec upper, std::vector<int> points)
    : lower_(std::move(lower)), upper_(std::move(upper)), points_(std::move(points)) {
  const int d = static_cast<int>(points_.size());
  if (d == 0 || d > kMaxDim) throw ParameterError("grid: dimension must be in [1, 6]");
  if (lower_.size() != d || upper_.size() != d) throw ParameterError("grid: bounds/points size mismatch");
  spacing_.resize(d);
  strides_.assign(d, 1);
  size_ = 1;
  for (int a = 0; a < d; ++a) {
    if (!(lower_[a] < upper_[a])) throw ParameterError("grid: lower must be < upper componentwise");
    if (points_[a] < 2) throw ParameterError("grid: need at least 2 points per axis");
    spacing_[a] = (upper_[a] - lower_[a]) / (points_[a] - 1);
    size_ *= static_cast<std::size_t>(points_[a]);
  }
  for (int a = d - 2; a >= 0; --a) strides_[a] = strides_[a + 1] * points_[a + 1];
}

double BoxGrid::max_spacing() const { return *std::max_element(spacing_.begin(), spacing_.end()); }

std::size_t BoxGrid::flat(const Index& idx) const {
  std::size_t n = 0;
  for (int a = 0; a < dim(); ++a) n += static_cast<std::size_t>(idx[a]) * strides_[a];
  return n;
}

Index BoxGrid::unflat(std::size_t n) const {
  Index idx{};
  for (int a = 0; a < dim(); ++a) {
    idx[a] = static_cast<int>(n / strides_[a]);
    n %= strides_[a];
  }
  return idx;
}

Vec BoxGrid::node(std::size_t n) const {
  const Index idx = unflat(n);
  Vec x(dim());
  for (int a = 0; a < dim(); ++a) x[a] = coordinate(a, idx[a]);
  return x;
}

bool BoxGrid::contains(const Vec& x, double rel_tol) const {
  for (int a = 0; a < dim(); ++a) {
    const double slack = rel_tol * (upper_[a] - lower_[a]);
    if (!(x[a] >= lower_[a] - slack && x[a] <= upper_[a] + slack)) return false;
  }
  return true;
}

double BoxGrid::distance_to_boundary(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int a = 0; a < dim(); ++a) d = std::min({d, x[a] - lower_[a], upper_[a] - x[a]});
  return d;
}

double BoxGrid::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

BoxGrid BoxGrid::subgrid(const Index& lo, const Index& hi) const {
  Vec l(dim()), u(dim());
  std::vector<int> pts(dim());
  for (int a = 0; a < dim(); ++a) {
    if (lo[a] < 0 || hi[a] >= points_[a] || hi[a] - lo[a] < 1)
      throw ParameterError("grid: subgrid index range invalid");
    l[a] = coordinate(a, lo[a]);
    u[a] = coordinate(a, hi[a]);
    pts[a] = hi[a] - lo[a] + 1;
  }
  return BoxGrid(l, u, pts);
}

Index BoxGrid::nearest(const Vec& x) const {
  Index idx{};
  for (int a = 0; a < dim(); ++a) {
    const long i = std::lround((x[a] - lower_[a]) / spacing_[a]);
    idx[a] = static_cast<int>(std::clamp<long>(i, 0, points_[a] - 1));
  }
  return idx;
}

namespace {

// Catmull-Rom (Keys a = -1/2) weights for offsets -1, 0, 1, 2.
std::array<double, 4> keys_weights(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t),
          0.5 * (t3 - t2)};
}

// Node value with quadratic extrapolation for one-node ghosts.
double ghost_value(const BoxGrid& g, const std::vector<double>& arr, Index idx) {
  for (int a = 0; a < g.dim(); ++a) {
    const int n = g.points(a);
    if (idx[a] < 0 || idx[a] >= n) {
      const bool low = idx[a] < 0;
      Index i0 = idx, i1 = idx, i2 = idx;
      i0[a] = low ? 0 : n - 1;
      i1[a] = low ? 1 : n - 2;
      i2[a] = low ? 2 : n - 3;
      return 3.0 * ghost_value(g, arr, i0) - 3.0 * ghost_value(g, arr, i1) + ghost_value(g, arr, i2);
    }
  }
  return arr[g.flat(idx)];
}

}  // namespace

ScalarField::ScalarField(BoxGrid grid, std::vector<double> values, Interp interp, bool allow_holes) {
  if (values.size() != grid.size()) throw ParameterError("field: value count does not match grid");
  bool holes = false;
  for (double v : values) {
    if (!std::isfinite(v)) {
      if (!allow_holes) throw ParameterError("field: non-finite nodal value");
      holes = true;
    }
  }
  if (interp == Interp::cubic) {
    for (int a = 0; a < grid.dim(); ++a)
      if (grid.points(a) < 3) throw ParameterError("field: cubic interpolation needs >= 3 points per axis");
  }
  auto data = std::make_shared<Data>();
  data->grid = std::move(grid);
  data->values = std::move(values);
  data->interp = interp;
  data->holes = holes;
  const BoxGrid& g = data->grid;
  const auto& f = data->values;
  data->partials.assign(g.dim(), std::vector<double>(g.size()));
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Index idx = g.unflat(n);
    for (int a = 0; a < g.dim(); ++a) {
      const int i = idx[a], np = g.points(a);
      const std::size_t s = g.stride(a);
      const double h = g.spacing(a);
      double d;
      if (i > 0 && i < np - 1) {
        d = (f[n + s] - f[n - s]) / (2 * h);
      } else if (np < 3) {
        d = (i == 0) ? (f[n + s] - f[n]) / h : (f[n] - f[n - s]) / h;
      } else if (i == 0) {
        d = (-3 * f[n] + 4 * f[n + s] - f[n + 2 * s]) / (2 * h);
      } else {
        d = (3 * f[n] - 4 * f[n - s] + f[n - 2 * s]) / (2 * h);
      }
      data->partials[a][n] = d;
    }
  }
  data_ = std::move(data);
}

ScalarField ScalarField::sample(const BoxGrid& grid, const std::function<double(const Vec&)>& fn,
                                Interp interp) {
  std::vector<double> v(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) v[n] = fn(grid.node(n));
  return ScalarField(grid, std::move(v), interp);
}

ScalarField ScalarField::with_interp(Interp interp) const {
  return ScalarField(data_->grid, data_->values, interp, data_->holes);
}

double ScalarField::interpolate(const std::vector<double>& arr, const Vec& x) const {
  const BoxGrid& g = data_->grid;
  const int d = g.dim();
  if (x.size() != d) throw DomainError("field: query dimension mismatch");
  if (!g.contains(x)) throw DomainError("field: query point outside the grid box");
  Index base{};
  std::array<double, kMaxDim> t{};
  for (int a = 0; a < d; ++a) {
    double s = (x[a] - g.lower()[a]) / g.spacing(a);
    // snap round-off so node queries hit the stored value exactly
    if (const double r = std::round(s); std::abs(s - r) < 1e-9) s = r;
    const int i = std::clamp(static_cast<int>(std::floor(s)), 0, g.points(a) - 2);
    base[a] = i;
    t[a] = std::clamp(s - i, 0.0, 1.0);
  }
  double sum = 0.0;
  if (data_->interp == Interp::multilinear) {
    for (int c = 0; c < (1 << d); ++c) {
      double w = 1.0;
      Index idx = base;
      for (int a = 0; a < d; ++a) {
        const bool up = (c >> (d - 1 - a)) & 1;
        w *= up ? t[a] : 1.0 - t[a];
        idx[a] += up;
      }
      sum += w * arr[g.flat(idx)];
    }
  } else {
    std::array<std::array<double, 4>, kMaxDim> w{};
    bool interior = true;
    for (int a = 0; a < d; ++a) {
      w[a] = keys_weights(t[a]);
      if (base[a] < 1 || base[a] + 2 > g.points(a) - 1) interior = false;
    }
    int total = 1;
    for (int a = 0; a < d; ++a) total *= 4;
    for (int c = 0; c < total; ++c) {
      double wt = 1.0;
      Index idx = base;
      int rem = c;
      for (int a = d - 1; a >= 0; --a) {
        const int o = rem % 4;
        rem /= 4;
        wt *= w[a][o];
        idx[a] += o - 1;
      }
      sum += wt * (interior ? arr[g.flat(idx)] : ghost_value(g, arr, idx));
    }
  }
  if (!std::isfinite(sum)) throw DomainError("field: interpolation stencil touches a hole");
  return sum;
}

double ScalarField::eval(const Vec& x) const { return interpolate(data_->values, x); }

Vec ScalarField::gradient(const Vec& x) const {
  const BoxGrid& g = data_->grid;
  if (g.contains(x) && g.distance_to_boundary(x) < g.max_spacing())
    spdlog::debug("gradient: query within one spacing of the boundary, one-sided stencil in use");
  Vec grad(g.dim());
  for (int a = 0; a < g.dim(); ++a) grad[a] = interpolate(data_->partials[a], x);
  return grad;
}

bool ScalarField::fd_consistent(std::size_t node, double tol) const {
  const BoxGrid& g = data_->grid;
  const Index idx = g.unflat(node);
  const auto& f = data_->values;
  for (int a = 0; a < g.dim(); ++a) {
    if (idx[a] == 0 || idx[a] == g.points(a) - 1) return false;
    const std::size_t s = g.stride(a);
    const double right = (f[node + s] - f[node]) / g.spacing(a);
    const double left = (f[node] - f[node - s]) / g.spacing(a);
    if (!(std::abs(right - left) <= tol)) return false;
  }
  return true;
}

ScalarField ScalarField::restrict(const Index& lo, const Index& hi) const {
  const BoxGrid& g = data_->grid;
  BoxGrid sub = g.subgrid(lo, hi);
  std::vector<double> v(sub.size());
  for (std::size_t n = 0; n < sub.size(); ++n) {
    Index idx = sub.unflat(n);
    for (int a = 0; a < g.dim(); ++a) idx[a] += lo[a];
    v[n] = data_->values[g.flat(idx)];
  }
  return ScalarField(std::move(sub), std::move(v), data_->interp, data_->holes);
}

ScalarField ScalarField::resample(double spacing, Interp interp) const {
  if (!(spacing > 0)) throw ParameterError("resample: spacing must be positive");
  const BoxGrid& g = data_->grid;
  std::vector<int> pts(g.dim());
  Vec hi = g.upper();
  for (int a = 0; a < g.dim(); ++a) {
    pts[a] = static_cast<int>(std::floor((g.upper()[a] - g.lower()[a]) / spacing + 1e-9)) + 1;
    hi[a] = g.lower()[a] + (pts[a] - 1) * spacing;
  }
  BoxGrid fine(g.lower(), hi, pts);
  std::vector<double> v(fine.size());
  for (std::size_t n = 0; n < fine.size(); ++n) {
    try {
      v[n] = eval(fine.node(n));
    } catch (const DomainError&) {
      v[n] = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return ScalarField(std::move(fine), std::move(v), interp, true);
}

ScalarFunction ScalarFunction::from_field(const ScalarField& field) {
  return {[field](const Vec& x) { return field.eval(x); },
          [field](const Vec& x) { return field.gradient(x); }};
}

}  // namespace smoothfb
