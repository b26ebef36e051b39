#include "smoothfb/regularize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smoothfb/parallel.hpp"

namespace smoothfb {

namespace {

Vec clamp_to_box(const BoxGrid& g, Vec q) {
  for (int a = 0; a < g.dim(); ++a) q[a] = std::clamp(q[a], g.lower()[a], g.upper()[a]);
  return q;
}

// One damped Newton step on y ↦ φ̃(y) + |x-y|²/(2λ), accepted only if it
// lowers the objective.
Vec refine_argmin(const ScalarField& phi, const Vec& x, const Vec& y, double lambda) {
  const BoxGrid& g = phi.grid();
  const int d = g.dim();
  auto objective = [&](const Vec& q) { return phi.eval(q) + (x - q).squaredNorm() / (2 * lambda); };
  try {
    const double f0 = objective(y);
    const Vec grad = phi.gradient(y) + (y - x) / lambda;
    Mat hess = Mat::Identity(d, d) / lambda;
    bool have_hessian = true;
    for (int j = 0; j < d && have_hessian; ++j) {
      const double h = g.spacing(j);
      if (y[j] - h < g.lower()[j] || y[j] + h > g.upper()[j]) {
        have_hessian = false;
        break;
      }
      Vec yp = y, ym = y;
      yp[j] += h;
      ym[j] -= h;
      hess.col(j) += (phi.gradient(yp) - phi.gradient(ym)) / (2 * h);
    }
    Vec step;
    if (have_hessian) {
      hess = 0.5 * (hess + hess.transpose()).eval();
      Eigen::LLT<Mat> llt(hess);
      if (llt.info() == Eigen::Success) step = -llt.solve(grad);
    }
    if (step.size() == 0) step = -lambda * grad;
    double scale = 1.0;
    for (int a = 0; a < d; ++a)
      if (std::abs(step[a]) > g.spacing(a)) scale = std::min(scale, g.spacing(a) / std::abs(step[a]));
    step *= scale;
    for (double t = 1.0; t >= 0.125; t *= 0.5) {
      const Vec q = clamp_to_box(g, y + t * step);
      if (objective(q) < f0) return q;
    }
  } catch (const DomainError&) {
  }
  return y;
}

// Lower envelope of the parabolas v[q] + c (i - q)² over integer i
// (Felzenszwalb-Huttenlocher); hull/z describe the envelope, out its values.
void lower_envelope(const std::vector<double>& v, double c, std::vector<int>& hull, std::vector<double>& z,
                    std::vector<double>& out) {
  const int n = static_cast<int>(v.size());
  const double inf = std::numeric_limits<double>::infinity();
  auto cross = [&](int q, int p) { return ((v[q] + c * q * q) - (v[p] + c * p * p)) / (2 * c * (q - p)); };
  int k = 0;
  hull[0] = 0;
  z[0] = -inf;
  z[1] = inf;
  for (int q = 1; q < n; ++q) {
    double s = cross(q, hull[k]);
    while (s <= z[k]) {
      --k;
      s = cross(q, hull[k]);
    }
    ++k;
    hull[k] = q;
    z[k] = s;
    z[k + 1] = inf;
  }
  for (int i = 0, j = 0; i < n; ++i) {
    while (z[j + 1] < i) ++j;
    const double o = i - hull[j];
    out[i] = v[hull[j]] + c * o * o;
  }
}

}  // namespace

double MoreauField::pointwise_radius(const Vec& x) const {
  return std::sqrt(2.0 * lambda * std::max(0.0, base.eval(x) - base_min));
}

bool MoreauField::certified_at(const Vec& x) const {
  const BoxGrid& g = base.grid();
  if (!g.contains(x, 0.0)) return false;
  return pointwise_radius(x) < g.distance_to_boundary(x);
}

MoreauField moreau_envelope(const ScalarField& phi, double lambda, const MoreauOptions& opts) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ParameterError("moreau_envelope: lambda must be positive");
  if (phi.has_holes()) throw ParameterError("moreau_envelope: input field has holes");
  const BoxGrid& g = phi.grid();
  const int d = g.dim();
  const auto& f = phi.values();
  double fmin = f[0], supn = 0.0;
  for (double v : f) {
    fmin = std::min(fmin, v);
    supn = std::max(supn, std::abs(v));
  }

  Index lo{}, hi{};
  for (int a = 0; a < d; ++a) {
    lo[a] = 0;
    hi[a] = g.points(a) - 1;
  }
  if (opts.output_box) {
    for (int a = 0; a < d; ++a) {
      const double h = g.spacing(a);
      lo[a] = std::max(0, static_cast<int>(std::ceil((opts.output_box->first[a] - g.lower()[a]) / h - 1e-9)));
      hi[a] = std::min(g.points(a) - 1,
                       static_cast<int>(std::floor((opts.output_box->second[a] - g.lower()[a]) / h + 1e-9)));
      if (hi[a] - lo[a] < 1) throw ParameterError("moreau_envelope: output box holds fewer than 2 nodes per axis");
    }
  }
  const BoxGrid out = g.subgrid(lo, hi);

  MoreauField m;
  m.base = phi;
  m.lambda = lambda;
  m.base_min = fmin;
  m.search_radius = 2.0 * std::sqrt(lambda * supn);
  std::vector<double> vals(out.size()), disp(out.size());
  m.argmin.assign(out.size(), Vec());
  m.certified.assign(out.size(), 0);

  // Grid minimum by separable passes (the quadratic splits over axes).
  std::vector<double> env(f);
  std::vector<std::size_t> arg(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) arg[n] = n;
  for (int a = 0; a < d; ++a) {
    const int np = g.points(a);
    const std::size_t s = g.stride(a);
    const double c = g.spacing(a) * g.spacing(a) / (2 * lambda);
    std::vector<double> line(np), out_v(np), z(np + 1);
    std::vector<std::size_t> line_arg(np), out_a(np);
    std::vector<int> hull(np);
    for (std::size_t n0 = 0; n0 < g.size(); ++n0) {
      if (g.unflat(n0)[a] != 0) continue;
      for (int i = 0; i < np; ++i) {
        line[i] = env[n0 + i * s];
        line_arg[i] = arg[n0 + i * s];
      }
      lower_envelope(line, c, hull, z, out_v);
      for (int i = 0, k = 0; i < np; ++i) {
        while (z[k + 1] < i) ++k;
        out_a[i] = line_arg[hull[k]];
      }
      for (int i = 0; i < np; ++i) {
        env[n0 + i * s] = out_v[i];
        arg[n0 + i * s] = out_a[i];
      }
    }
  }

  parallel_for(out.size(), opts.jobs, [&](std::size_t n) {
    Index ix = out.unflat(n);
    for (int a = 0; a < d; ++a) ix[a] += lo[a];
    const std::size_t xn = g.flat(ix);
    const double r2 = 2.0 * lambda * std::max(0.0, f[xn] - fmin);
    double value = env[xn];
    const Vec x = g.node(xn);
    Vec y = g.node(arg[xn]);
    if (opts.refine) {
      const Vec yr = refine_argmin(phi, x, y, lambda);
      if (yr != y) {
        const double vr = phi.eval(yr) + (x - yr).squaredNorm() / (2 * lambda);
        if (vr < value) {
          value = vr;
          y = yr;
        }
      }
    }
    vals[n] = value;
    disp[n] = (x - y).norm();
    m.argmin[n] = std::move(y);
    m.certified[n] = std::sqrt(r2) < g.distance_to_boundary(x) ? 1 : 0;
  });

  m.values = ScalarField(out, std::move(vals), phi.interp());
  m.displacement = ScalarField(out, std::move(disp));
  bool empty = false;
  for (int a = 0; a < d; ++a)
    if (m.search_radius >= 0.5 * (g.upper()[a] - g.lower()[a])) empty = true;
  if (!empty) m.inner = inner_domain(g.lower(), g.upper(), supn, lambda);
  return m;
}

Region inner_domain(const Vec& lower, const Vec& upper, double sup_norm, double lambda) {
  if (!(lambda > 0)) throw ParameterError("inner_domain: lambda must be positive");
  const double margin = 2.0 * std::sqrt(lambda * sup_norm);
  for (Eigen::Index a = 0; a < lower.size(); ++a)
    if (margin >= 0.5 * (upper[a] - lower[a]))
      throw ParameterError("inner_domain: margin " + std::to_string(margin) + " empties the box");
  return Region::box(lower.array() + margin, upper.array() - margin);
}

Region inner_domain(const ScalarField& phi, double lambda) {
  double supn = 0.0;
  for (double v : phi.values()) supn = std::max(supn, std::abs(v));
  return inner_domain(phi.grid().lower(), phi.grid().upper(), supn, lambda);
}

namespace {
void check_holder(double c, double alpha) {
  if (!(alpha > 0 && alpha <= 1)) throw ParameterError("holder exponent must lie in (0, 1]");
  if (!(c > 0)) throw ParameterError("holder constant must be positive");
}
}  // namespace

double moreau_displacement_bound(double c, double alpha, double lambda) {
  check_holder(c, alpha);
  return std::pow(2 * c * lambda, 1.0 / (2 - alpha));
}

double moreau_value_gap_bound(double c, double alpha, double lambda) {
  check_holder(c, alpha);
  return std::pow(c, 2.0 / (2 - alpha)) * std::pow(2.0, alpha / (2 - alpha)) * std::pow(lambda, alpha / (2 - alpha));
}

BoundCheck verify_displacement(const MoreauField& m, double c, double alpha) {
  BoundCheck bc;
  bc.bound = moreau_displacement_bound(c, alpha, m.lambda);
  for (double v : m.displacement.values()) bc.measured = std::max(bc.measured, v);
  bc.nodes = m.displacement.values().size();
  return bc;
}

BoundCheck verify_value_gap(const MoreauField& m, double c, double alpha) {
  BoundCheck bc;
  bc.bound = moreau_value_gap_bound(c, alpha, m.lambda);
  if (!m.inner) return bc;
  const BoxGrid& og = m.values.grid();
  for (std::size_t n = 0; n < og.size(); ++n) {
    const Vec x = og.node(n);
    if (!m.inner->contains(x)) continue;
    bc.measured = std::max(bc.measured, std::abs(m.values[n] - m.base.eval(x)));
    ++bc.nodes;
  }
  return bc;
}

double bump_profile(double s) {
  const double a = std::abs(s);
  return a < 1.0 ? std::exp(-1.0 / (1.0 - a * a)) : 0.0;
}

double bump_profile_derivative(double s) {
  if (std::abs(s) >= 1.0) return 0.0;
  const double q = 1.0 - s * s;
  return -2.0 * s / (q * q) * std::exp(-1.0 / q);
}

MollifiedField mollify(const ScalarField& phi, double epsilon, Interp out_interp, int jobs) {
  const BoxGrid& g = phi.grid();
  const int d = g.dim();
  if (!(epsilon > 0)) throw ParameterError("mollify: epsilon must be positive");
  if (epsilon < 2.0 * g.max_spacing() * (1 - 1e-12))
    throw ParameterError("mollify: epsilon under-resolved, need epsilon >= " + std::to_string(2.0 * g.max_spacing()));
  MollifiedField out;
  out.epsilon = epsilon;
  out.reach.resize(d);
  Index klo{}, khi{}, lo{}, hi{};
  for (int a = 0; a < d; ++a) {
    const int m = static_cast<int>(std::ceil(epsilon / g.spacing(a) - 1e-12)) - 1;
    out.reach[a] = m;
    klo[a] = -m;
    khi[a] = m;
    lo[a] = m;
    hi[a] = g.points(a) - 1 - m;
    if (hi[a] - lo[a] < 2) throw ParameterError("mollify: grid too small for the kernel");
  }
  std::vector<std::ptrdiff_t> offsets;
  std::vector<double> weights;
  double total = 0.0;
  for_each_index(klo, khi, d, [&](const Index& o) {
    double r2 = 0.0;
    std::ptrdiff_t off = 0;
    for (int a = 0; a < d; ++a) {
      const double s = o[a] * g.spacing(a) / epsilon;
      r2 += s * s;
      off += static_cast<std::ptrdiff_t>(o[a]) * static_cast<std::ptrdiff_t>(g.stride(a));
    }
    const double w = bump_profile(std::sqrt(r2));
    if (w > 0) {
      offsets.push_back(off);
      weights.push_back(w);
      total += w;
    }
  });
  for (double& w : weights) w /= total;
  out.kernel_size = weights.size();
  out.raw_mass = total * g.cell_volume() / std::pow(epsilon, d);

  const BoxGrid sub = g.subgrid(lo, hi);
  const auto& f = phi.values();
  std::vector<double> v(sub.size());
  parallel_for(sub.size(), jobs, [&](std::size_t n) {
    Index idx = sub.unflat(n);
    for (int a = 0; a < d; ++a) idx[a] += lo[a];
    const auto c = static_cast<std::ptrdiff_t>(g.flat(idx));
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) acc += weights[k] * f[static_cast<std::size_t>(c + offsets[k])];
    v[n] = acc;
  });
  out.values = ScalarField(sub, std::move(v), out_interp, phi.has_holes());
  return out;
}

HessianRange hessian_eigen_range(const ScalarField& field, const Region& region) {
  const BoxGrid& g = field.grid();
  const int d = g.dim();
  const auto& f = field.values();
  HessianRange hr{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0};
  Mat h(d, d);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Index idx = g.unflat(n);
    bool inner = true;
    for (int a = 0; a < d; ++a)
      if (idx[a] < 2 || idx[a] > g.points(a) - 3) inner = false;
    if (!inner || !region.contains(g.node(n))) continue;
    for (int a = 0; a < d; ++a) {
      const std::size_t sa = g.stride(a);
      const double ha = g.spacing(a);
      h(a, a) = (f[n + sa] - 2 * f[n] + f[n - sa]) / (ha * ha);
      for (int b = a + 1; b < d; ++b) {
        const std::size_t sb = g.stride(b);
        const double hb = g.spacing(b);
        h(a, b) = h(b, a) = (f[n + sa + sb] - f[n + sa - sb] - f[n - sa + sb] + f[n - sa - sb]) / (4 * ha * hb);
      }
    }
    double lo, hi;
    if (d == 1) {
      lo = hi = h(0, 0);
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> es(h, Eigen::EigenvaluesOnly);
      lo = es.eigenvalues()(0);
      hi = es.eigenvalues()(d - 1);
    }
    hr.min_eigenvalue = std::min(hr.min_eigenvalue, lo);
    hr.max_eigenvalue = std::max(hr.max_eigenvalue, hi);
    ++hr.nodes;
  }
  if (hr.nodes == 0) throw ParameterError("hessian: region too thin for the finite-difference stencil");
  return hr;
}

double semiconcavity_constant(const ScalarField& field, const Region& region) {
  // Second differences along lattice directions e_a, e_a ± e_b, 2e_a ± e_b.
  // Each is a true second difference along a line, so a C-semi-concave
  // function never exceeds C here; the mixed-stencil Hessian can overshoot
  // next to kinks.
  const BoxGrid& g = field.grid();
  const int d = g.dim();
  const auto& f = field.values();
  std::vector<std::vector<int>> dirs;
  for (int a = 0; a < d; ++a) {
    std::vector<int> e(d, 0);
    e[a] = 1;
    dirs.push_back(e);
    for (int b = a + 1; b < d; ++b)
      for (int sb : {1, -1})
        for (auto [ca, cb] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{1, 2}}) {
          std::vector<int> v(d, 0);
          v[a] = ca;
          v[b] = sb * cb;
          dirs.push_back(v);
        }
  }
  double best = -std::numeric_limits<double>::infinity();
  std::size_t nodes = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Index idx = g.unflat(n);
    bool inner = true;
    for (int a = 0; a < d; ++a)
      if (idx[a] < 2 || idx[a] > g.points(a) - 3) inner = false;
    if (!inner || !region.contains(g.node(n))) continue;
    for (const auto& v : dirs) {
      std::ptrdiff_t off = 0;
      double len2 = 0.0;
      for (int a = 0; a < d; ++a) {
        off += v[a] * static_cast<std::ptrdiff_t>(g.stride(a));
        len2 += v[a] * v[a] * g.spacing(a) * g.spacing(a);
      }
      const double dd = (f[n + off] - 2 * f[n] + f[n - off]) / len2;
      best = std::max(best, dd);
    }
    ++nodes;
  }
  if (nodes == 0) throw ParameterError("semiconcavity: region too thin for the finite-difference stencil");
  return best;
}

HjbDefect hjb_defect(const ControlProblem& problem, const MoreauField& moreau, const RegionSample& region,
                     std::optional<HolderSpec> holder, std::size_t pairs, std::uint64_t seed) {
  const BoxGrid& og = moreau.values.grid();
  HjbDefect out;
  out.ell_lip = lipschitz_estimate(problem.running, region, pairs, seed);
  out.f_lip = lipschitz_estimate(problem.drift, region, pairs, seed + 1);
  out.b_lip = lipschitz_estimate(problem.input, region, pairs, seed + 2);
  const double lam = moreau.lambda, beta = problem.beta;
  const double bl = out.b_lip.combined();
  std::vector<double> h(og.size(), 0.0);
  for (std::size_t n = 0; n < og.size(); ++n) {
    const Vec x = og.node(n);
    if (!region.region.contains(x)) continue;
    if (!moreau.certified[n]) throw DomainError("hjb_defect: region escapes the Moreau inner domain");
    const double r = moreau.displacement[n];
    h[n] = (out.ell_lip.value + bl * bl * r * r / (beta * lam * lam) + out.f_lip.value * r / lam) * r;
    out.max_over_region = std::max(out.max_over_region, h[n]);
    ++out.nodes;
  }
  out.field = ScalarField(og, std::move(h));
  if (holder) {
    check_holder(holder->constant, holder->exponent);
    const double a = holder->exponent;
    out.holder_bound = holder->constant * (out.ell_lip.value * std::pow(lam, 1 / (2 - a)) +
                                           bl * bl / beta * std::pow(lam, (2 * a - 1) / (2 - a)) +
                                           out.f_lip.value * std::pow(lam, a / (2 - a)));
  }
  return out;
}

}  // namespace smoothfb
