#ifndef SMOOTHFB_SYNTHESIS_HPP_
#define SMOOTHFB_SYNTHESIS_HPP_

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothfb/certificate.hpp"
#include "smoothfb/certify.hpp"
#include "smoothfb/feedback.hpp"
#include "smoothfb/lyapunov.hpp"
#include "smoothfb/problem.hpp"
#include "smoothfb/regularize.hpp"

namespace smoothfb {

// A swept parameter violates a pipeline condition.
class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// κ(s) = -ln(s)/a or s^{-q}.
struct KappaSchedule {
  enum class Form { log, power };
  Form form = Form::log;
  double parameter = 1.0;

  static KappaSchedule log(double a);
  static KappaSchedule power(double q);
  double operator()(double s) const;
  std::string describe() const;
};

// η(s) held through its logarithm so tiny values survive.
struct EtaSchedule {
  std::function<double(double)> log_value;
  std::string label;

  double operator()(double s) const { return std::exp(log_value(s)); }
  static EtaSchedule power(double c, double r);  // c s^r
  // exp(-K(s)κ(s)/p - 1/s²)
  static EtaSchedule exp_decay(std::function<double(double)> k_of_s, KappaSchedule kappa, double p);
};

struct TailCheck {
  std::vector<double> s;
  std::vector<double> log_product;  // natural log of the tail product
  bool decreasing = true;
};
// κ(s)^{(p-1)/p} (e^{Kκ(s)} - 1)^{1/p} s² on a decreasing s sweep.
TailCheck kappa_tail_semiconcave(const KappaSchedule& kappa, double k, double p, std::span<const double> s);
// κ(s)^{(p-1)/p} (e^{K(s)κ(s)} - 1)^{1/p} η(s) + κ(s) s^{(2α-1)/(2-α)}.
TailCheck kappa_tail_hoelder(const KappaSchedule& kappa, const std::function<double(double)>& k_of_s,
                             const EtaSchedule& eta, double p, double alpha, std::span<const double> s);

enum class Pipeline { c1, semiconvex, semiconcave, hoelder };
const char* to_string(Pipeline p);

struct PlanEntry {
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double s = std::numeric_limits<double>::quiet_NaN();  // deviation fed to κ
  double kappa = std::numeric_limits<double>::quiet_NaN();
  double escape_horizon = std::numeric_limits<double>::infinity();  // δ/(σ terms)
  double tau = 0.0;
  std::string tau_branch;  // "kappa", "escape" or "cap"
  double deviation = std::numeric_limits<double>::quiet_NaN();  // ‖u - u_V‖ in the pipeline's norm
  double predicted_bound = std::numeric_limits<double>::quiet_NaN();
  double k = std::numeric_limits<double>::quiet_NaN();
  double sigma1 = std::numeric_limits<double>::quiet_NaN();
  double sigma2 = std::numeric_limits<double>::quiet_NaN();
  double gradient_gap = std::numeric_limits<double>::quiet_NaN();
  double eta = std::numeric_limits<double>::quiet_NaN();
  std::size_t excluded_nodes = 0;
  double excluded_measure = 0.0;
  bool accepted = true;
  std::string diagnostic;
  std::optional<ScalarField> surrogate;
  FeedbackLaw law;
};

struct SynthesisPlan {
  Pipeline pipeline = Pipeline::c1;
  KappaSchedule kappa;
  double tau_max = 50.0;
  double delta = 0.0;
  std::vector<PlanEntry> entries;
  std::vector<CertConstant> diagnostics;
  std::optional<double> lambda0;
  std::optional<TailCheck> tail;

  std::vector<const PlanEntry*> accepted() const;
  // τ finite, positive and nondecreasing as the parameter decreases.
  bool tau_monotone() const;
  nlohmann::json to_json() const;
};

struct PlanOptions {
  double tau_max = 50.0;
  int region_points = 41;  // per-axis grid for sups and norms over ω_δ
  SigmaOptions sigma{};
  std::size_t lipschitz_pairs = 4000;
  double fd_consistency = 10.0;  // left/right slopes must agree within this × h
  int epsilon_candidates = 12;   // geometric ε grid length
  double epsilon_ratio = 0.7071067811865476;
  int jobs = 1;
  std::uint64_t seed = 1;
};

// u_V at node-level resolution: grid gradient where the FD stencil is
// consistent, excluded elsewhere.
struct GridGradientMask {
  ScalarField field;
  std::vector<std::uint8_t> consistent;
  double tolerance = 0.0;
  bool defined_at(const Vec& x) const;  // nearest node consistent
};
GridGradientMask gradient_mask(const ScalarField& v, double factor = 10.0);

// Samples fn on a grid with spacing ≈ h covering the region's bounding box
// padded by `pad`.
ScalarField sample_padded(const std::function<double(const Vec&)>& fn, const Region& region, double pad, double h,
                          Interp interp = Interp::cubic);

struct LawFamilyMember {
  double epsilon = 0.0;
  FeedbackLaw law;
  std::optional<ScalarField> surrogate;
};

SynthesisPlan plan_c1(const ControlProblem& problem, const ScalarFunction& value, const LyapunovSetup& setup,
                      std::span<const LawFamilyMember> family, const KappaSchedule& kappa,
                      const PlanOptions& opts = {});

// λ sweeps run in decreasing order; each ε(λ) is capped by the previous one.
SynthesisPlan plan_semiconvex(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                              std::span<const double> lambdas, const KappaSchedule& kappa,
                              const PlanOptions& opts = {});

SynthesisPlan plan_semiconcave(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                               std::span<const double> epsilons, const KappaSchedule& kappa, double p,
                               const PlanOptions& opts = {});

struct HoelderData {
  double alpha = 1.0;    // Hölder exponent of V, must exceed 1/2
  double sigma_w = 1.0;  // Hölder exponent of ∇w, in (1-α, 1]
};
SynthesisPlan plan_hoelder(const ControlProblem& problem, const ScalarField& value, const LyapunovSetup& setup,
                           std::span<const double> lambdas, const KappaSchedule& kappa, const EtaSchedule& eta,
                           double p, const HoelderData& holder, const PlanOptions& opts = {});

// ‖𝒱_{u,τ} + V∘y(τ) - V‖ over sampled starts, for one plan entry.
struct EntryResidual {
  double sup = 0.0;
  double lp = 0.0;
  std::size_t starts = 0;
  std::size_t escaped = 0;
};
EntryResidual measure_plan_entry(const ControlProblem& problem, const ScalarFunction& value, const PlanEntry& entry,
                                 const RegionSample& starts, double p, const SimConfig& sim = {}, int jobs = 1);

}  // namespace smoothfb

#endif  // SMOOTHFB_SYNTHESIS_HPP_
