#ifndef SMOOTHFB_GRID_HPP_
#define SMOOTHFB_GRID_HPP_

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "smoothfb/types.hpp"

namespace smoothfb {

inline constexpr int kMaxDim = 6;
using Index = std::array<int, kMaxDim>;

// Uniform tensor grid on [lower, upper]. Nodes are stored row-major
// (last axis fastest).
class BoxGrid {
 public:
  BoxGrid() = default;
  BoxGrid(Vec lower, Vec upper, std::vector<int> points);

  int dim() const { return static_cast<int>(points_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  int points(int axis) const { return points_[axis]; }
  const std::vector<int>& points() const { return points_; }
  double spacing(int axis) const { return spacing_[axis]; }
  double max_spacing() const;
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return strides_[axis]; }

  std::size_t flat(const Index& idx) const;
  Index unflat(std::size_t n) const;
  Vec node(std::size_t n) const;
  double coordinate(int axis, int i) const { return lower_[axis] + i * spacing_[axis]; }

  bool contains(const Vec& x, double rel_tol = 1e-10) const;
  double distance_to_boundary(const Vec& x) const;
  double diameter() const { return (upper_ - lower_).norm(); }
  double cell_volume() const;

  // Nodes with index in [lo, hi] per axis, as a grid of its own.
  BoxGrid subgrid(const Index& lo, const Index& hi) const;
  // Index of the node of this grid nearest to x (clamped).
  Index nearest(const Vec& x) const;

 private:
  Vec lower_, upper_;
  std::vector<int> points_;
  std::vector<double> spacing_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// Visits every index in the box [lo, hi] (inclusive), last axis fastest.
template <class F>
void for_each_index(const Index& lo, const Index& hi, int dim, F&& fn) {
  for (int a = 0; a < dim; ++a)
    if (hi[a] < lo[a]) return;
  Index idx = lo;
  while (true) {
    fn(idx);
    int a = dim - 1;
    while (a >= 0 && idx[a] == hi[a]) {
      idx[a] = lo[a];
      --a;
    }
    if (a < 0) return;
    ++idx[a];
  }
}

enum class Interp { multilinear, cubic };

// Grid samples of a real function. Copies share the immutable payload.
// Nodes may hold NaN ("holes") when built with allow_holes; any evaluation
// whose stencil touches a hole throws DomainError.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(BoxGrid grid, std::vector<double> values, Interp interp = Interp::multilinear,
              bool allow_holes = false);

  static ScalarField sample(const BoxGrid& grid, const std::function<double(const Vec&)>& fn,
                            Interp interp = Interp::multilinear);

  const BoxGrid& grid() const { return data_->grid; }
  const std::vector<double>& values() const { return data_->values; }
  double operator[](std::size_t n) const { return data_->values[n]; }
  Interp interp() const { return data_->interp; }
  int dim() const { return data_->grid.dim(); }
  bool has_holes() const { return data_->holes; }
  ScalarField with_interp(Interp interp) const;

  double eval(const Vec& x) const;
  // Central differences at nodes, interpolated off-node with the field's
  // interpolation order.
  Vec gradient(const Vec& x) const;
  double nodal_partial(std::size_t node, int axis) const { return data_->partials[axis][node]; }
  // Left/right one-sided differences agree within tol on every axis.
  bool fd_consistent(std::size_t node, double tol) const;

  // Restriction to the nodes of a subgrid given by index bounds.
  ScalarField restrict(const Index& lo, const Index& hi) const;
  // Same lower corner, nodes every `spacing` up to the old upper corner;
  // values interpolated from this field, NaN where that throws.
  ScalarField resample(double spacing, Interp interp) const;

 private:
  struct Data {
    BoxGrid grid;
    std::vector<double> values;
    std::vector<std::vector<double>> partials;
    Interp interp = Interp::multilinear;
    bool holes = false;
  };
  double interpolate(const std::vector<double>& arr, const Vec& x) const;
  std::shared_ptr<const Data> data_;
};

// Value + gradient pair, analytic or backed by a field.
struct ScalarFunction {
  std::function<double(const Vec&)> value;
  std::function<Vec(const Vec&)> gradient;

  static ScalarFunction from_field(const ScalarField& field);
};

}  // namespace smoothfb

#endif  // SMOOTHFB_GRID_HPP_
