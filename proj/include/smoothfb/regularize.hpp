#ifndef SMOOTHFB_REGULARIZE_HPP_
#define SMOOTHFB_REGULARIZE_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "smoothfb/estimate.hpp"
#include "smoothfb/grid.hpp"
#include "smoothfb/problem.hpp"
#include "smoothfb/region.hpp"

namespace smoothfb {

struct MoreauOptions {
  // Restrict output nodes to this box (minimization still runs over the
  // whole input grid).
  std::optional<std::pair<Vec, Vec>> output_box;
  bool refine = true;
  int jobs = 1;
};

// M_λφ(x) = min_y φ(y) + |x-y|²/(2λ) on grid nodes.
struct MoreauField {
  ScalarField base;
  double lambda = 0.0;
  ScalarField values;          // on the output grid
  std::vector<Vec> argmin;     // per output node
  ScalarField displacement;    // |x - argmin|
  double search_radius = 0.0;  // 2 sqrt(λ ‖φ‖∞)
  double base_min = 0.0;
  std::optional<Region> inner;         // shrunk box, empty if the margin eats the box
  std::vector<std::uint8_t> certified;  // node minimizers provably away from ∂Ω

  // Every minimizer y of the continuous problem at x obeys
  // |x-y|² ≤ 2λ(φ(x) - min φ); this is that radius.
  double pointwise_radius(const Vec& x) const;
  // x lies in Ω and its pointwise radius stays clear of ∂Ω.
  bool certified_at(const Vec& x) const;
};

MoreauField moreau_envelope(const ScalarField& phi, double lambda, const MoreauOptions& opts = {});

// Box shrunk by 2 sqrt(λ‖φ‖∞). Throws ParameterError when empty.
Region inner_domain(const ScalarField& phi, double lambda);
Region inner_domain(const Vec& lower, const Vec& upper, double sup_norm, double lambda);

double moreau_displacement_bound(double holder_constant, double holder_exponent, double lambda);
double moreau_value_gap_bound(double holder_constant, double holder_exponent, double lambda);

struct BoundCheck {
  double bound = 0.0;
  double measured = 0.0;
  std::size_t nodes = 0;
  bool holds() const { return measured <= bound * (1 + 1e-12) + 1e-14; }
};
// Max stored displacement against the bound (all output nodes).
BoundCheck verify_displacement(const MoreauField& m, double holder_constant, double holder_exponent);
// Max |M_λφ - φ| on inner-domain nodes against the bound.
BoundCheck verify_value_gap(const MoreauField& m, double holder_constant, double holder_exponent);

// exp(-1/(1-s²)) on |s| < 1, zero elsewhere.
double bump_profile(double s);
double bump_profile_derivative(double s);

struct MollifiedField {
  double epsilon = 0.0;
  ScalarField values;  // valid grid: input grid shrunk by the kernel reach
  std::vector<int> reach;  // kernel half-width in nodes per axis
  std::size_t kernel_size = 0;
  double raw_mass = 0.0;   // kernel sum before normalization (× cell volume)
};

// Discrete convolution with the normalized radial bump of radius ε.
MollifiedField mollify(const ScalarField& phi, double epsilon, Interp out_interp = Interp::cubic, int jobs = 1);

struct HessianRange {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  std::size_t nodes = 0;
};
// FD Hessian eigenvalue range over grid nodes inside `region` with at least
// two nodes of margin to the grid boundary.
HessianRange hessian_eigen_range(const ScalarField& field, const Region& region);
// Largest second difference along lattice directions (axes, diagonals and
// knight moves) at nodes inside `region` with two nodes of margin.
double semiconcavity_constant(const ScalarField& field, const Region& region);

struct HolderSpec {
  double constant = 1.0;
  double exponent = 1.0;
};

// Per-node defect h_λ of the perturbed HJB inequality satisfied by M_λV.
struct HjbDefect {
  ScalarField field;            // zero outside the region
  double max_over_region = 0.0;
  Estimate ell_lip, f_lip;
  MatrixLipschitz b_lip;
  std::optional<double> holder_bound;
  std::size_t nodes = 0;
};
HjbDefect hjb_defect(const ControlProblem& problem, const MoreauField& moreau, const RegionSample& region,
                     std::optional<HolderSpec> holder = std::nullopt, std::size_t pairs = 4000,
                     std::uint64_t seed = 1);

}  // namespace smoothfb

#endif  // SMOOTHFB_REGULARIZE_HPP_
