#ifndef SMOOTHFB_CERTIFY_HPP_
#define SMOOTHFB_CERTIFY_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smoothfb/certificate.hpp"
#include "smoothfb/feedback.hpp"
#include "smoothfb/lyapunov.hpp"
#include "smoothfb/problem.hpp"
#include "smoothfb/regularize.hpp"
#include "smoothfb/simulate.hpp"

namespace smoothfb {

// Below this a predicted escape bound's denominator counts as zero.
inline constexpr double kDenominatorGuard = 1e-14;

// Sampling of sup over x ∈ ω_δ, y ∈ B(x, ε).
struct SigmaOptions {
  int centers = 1000;
  int directions = 64;
  int radii = 8;
  std::size_t lipschitz_pairs = 4000;
  std::uint64_t seed = 1;
};

// Sampled modulus of continuity of a vector map on a region, tabulated on
// dyadic radii; read as the upper step, tightened by subadditivity (the
// region is taken to be convex).
class Modulus {
 public:
  Modulus() = default;
  Modulus(const std::function<Vec(const Vec&)>& map, const RegionSample& region, double max_radius, int directions,
          std::uint64_t seed);
  double operator()(double r) const;
  double max_radius() const { return radii_.empty() ? 0.0 : radii_.back(); }

 private:
  std::vector<double> radii_, values_;  // increasing radii, nondecreasing values
};

// Constants that enter g_λ. Norms over Ω are sampled on `domain`.
struct GLambdaTerms {
  double f_sup = 0.0, f_lip = 0.0, b_sup = 0.0, b_lip = 0.0, grad_w_sup = 0.0;
  Modulus h_w;
  double beta = 1.0;
  // g_λ(x) - g(x) for a displacement r = |x - y|, y a Moreau minimizer.
  double excess(double r, double lambda) const;
};
GLambdaTerms glambda_terms(const LyapunovSetup& setup, const ControlProblem& problem, const RegionSample& domain,
                           double max_radius, const SigmaOptions& opts);

// Largest Moreau displacement among the output-grid nodes around x.
double local_displacement(const MoreauField& m, const Vec& x);

struct SigmaQuantities {
  double epsilon = 0.0;
  std::optional<double> lambda;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  std::optional<double> sigma1_lambda;
  std::size_t centers = 0;
  std::size_t pairs = 0;
  std::vector<CertConstant> constants;

  void add(std::string name, double value, std::string source) {
    constants.push_back({std::move(name), value, std::move(source)});
  }
};

// σ¹_ε and σ²_ε; with a Moreau field also σ¹_{ε,λ} (g replaced by g_λ).
// Throws ParameterError when a sampled y leaves the Moreau output grid or
// its certified part.
SigmaQuantities sigma_quantities(const LyapunovSetup& setup, const ControlProblem& problem, double epsilon,
                                 const MoreauField* moreau = nullptr, const SigmaOptions& opts = {});

struct EscapeOptions {
  double tau_max = 50.0;
  int starts = 200;  // initial states taken from the grid sample of ω
  int region_points = 41;  // per-axis grid for sampled sups over ω_δ
  SimConfig sim{};
  SigmaOptions sigma{};
  double tolerance = 1e-9;
};

// Minimum escape time from ω_δ over sampled starts in ω (inf if none
// escapes by tau_max).
struct EscapeMeasurement {
  double time = std::numeric_limits<double>::infinity();
  std::size_t starts = 0;
  std::size_t escaped = 0;
  Vec worst_start;
};
EscapeMeasurement measure_escape(const LyapunovSetup& setup, const ControlProblem& problem, const FeedbackLaw& law,
                                 const EscapeOptions& opts);

// T̂ (‖B(u-u_φ)‖ ‖∇w‖ + max g) ≥ δ.
BoundCertificate escape_bound_a(const LyapunovSetup& setup, const ControlProblem& problem, const FeedbackLaw& u,
                                const FeedbackLaw& u_phi, const EscapeOptions& opts = {});
// T_ε (σ¹_ε + σ²_ε ‖Bᵀ∇φ‖/β) ≥ δ with u_ε from ρ_ε * φ.
BoundCertificate escape_bound_b(const LyapunovSetup& setup, const ControlProblem& problem, const ScalarField& phi,
                                double epsilon, const EscapeOptions& opts = {});

// Hölder data for the g_λ - g rate columns.
struct HolderRates {
  double constant = 1.0;
  double alpha = 1.0;       // exponent of φ
  double sigma_w = 1.0;     // exponent of ∇w
};
// T_{ε,λ} (σ¹_{ε,λ} + σ²_ε ‖Bᵀ∇M_λφ‖/β) ≥ δ with u from ρ_ε * M_λφ.
BoundCertificate escape_bound_c(const LyapunovSetup& setup, const ControlProblem& problem, const ScalarField& phi,
                                double epsilon, double lambda, std::optional<HolderRates> rates = std::nullopt,
                                const EscapeOptions& opts = {});

struct ErrorCertOptions {
  SimConfig sim{};
  double tolerance = 1e-6;
  std::size_t lipschitz_pairs = 4000;
  double jacobian_step = 1e-5;
  std::uint64_t seed = 1;
  int jobs = 1;
};

// sup_ω [𝒱_{u,T} + v(y(T)) - v] ≤ T (sup g⁺ + β‖u - u_v‖²_∞). The sup of the
// control gap runs over `domain` and every visited trajectory node. Leaving
// the domain before T (the default escape region) fails the certificate.
BoundCertificate certify_linfty(const ControlProblem& problem, const ScalarFunction& v,
                                const std::function<double(const Vec&)>& g, const FeedbackLaw& law, double horizon,
                                const RegionSample& omega, const RegionSample& domain,
                                const ErrorCertOptions& opts = {});

// -tr(B Du) sampled sup over a region, with a central-difference Jacobian.
double divergence_bound(const ControlProblem& problem, const FeedbackLaw& law, const RegionSample& region,
                        double step = 1e-5);

// ‖(𝒱 + v∘y(T) - v)⁺‖_{L^p(ω)} against the bound with K = C + d‖f‖_Lip +
// dm‖B‖_Lip‖u‖_∞. `defined` masks points where ∇v is trusted (empty: all).
BoundCertificate certify_lp(const ControlProblem& problem, const ScalarFunction& v,
                            const std::function<double(const Vec&)>& g, const FeedbackLaw& law, double horizon,
                            const RegionSample& omega, const RegionSample& omega_delta, double p,
                            const std::function<bool(const Vec&)>& defined = {}, const ErrorCertOptions& opts = {});

// ∫_ω∫₀ᵀ φ(y(t)) dt dy0 ≤ (e^{KT}-1)/K ∫_{ω_δ} φ by Monte Carlo over ω.
// Pass needs a three standard error margin.
BoundCertificate jacobian_volume_check(const ControlProblem& problem, const FeedbackLaw& law, const Region& omega,
                                       const RegionSample& omega_delta, double horizon,
                                       const std::function<double(const Vec&)>& phi, std::size_t samples,
                                       const ErrorCertOptions& opts = {});

struct ConvergenceEntry {
  double parameter = 0.0;
  double horizon = 0.0;
  double distance = std::numeric_limits<double>::quiet_NaN();  // sup |y - y_ref| on [0, T_check]
  double cost_gap = 0.0;  // |𝒱_{u,T} + V(y(T)) - V(y0)|
  TrajStatus status = TrajStatus::completed;
};
struct ConvergenceReport {
  std::vector<ConvergenceEntry> entries;
  bool cost_only = false;
  bool distances_decrease = true;
  bool costs_decrease = true;
  std::vector<std::string> notes;
  bool passed() const { return costs_decrease && (cost_only || distances_decrease); }
};
struct ParameterLaw {
  double parameter = 0.0;  // ε or λ, swept from large to small
  FeedbackLaw law;
  double horizon = 0.0;
};
// Reference: open-loop optimum sampled in time; unique=false downgrades to
// the cost-only comparison.
ConvergenceReport trajectory_convergence_check(const ControlProblem& problem, std::span<const ParameterLaw> laws,
                                               const Vec& y0, const ScalarFunction& value,
                                               const std::optional<Trajectory>& reference, bool unique,
                                               double t_check, const SimConfig& sim = {}, double floor = 1e-9);

// x[k+1] ≤ x[k] + floor for all k.
bool nonincreasing(std::span<const double> x, double floor);

}  // namespace smoothfb

#endif  // SMOOTHFB_CERTIFY_HPP_
