#ifndef SMOOTHFB_TRAJECTORY_HPP_
#define SMOOTHFB_TRAJECTORY_HPP_

#include <string>
#include <vector>

#include "smoothfb/types.hpp"

namespace smoothfb {

enum class TrajStatus { completed, escaped, blew_up };
enum class EscapeReason { none, region_exit, law_domain };

const char* to_string(TrajStatus s);

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;
  std::vector<Vec> controls;
  std::vector<double> running_cost;  // ∫₀ᵗ ℓ + β/2|u|²
  std::vector<double> integrand;     // ℓ + β/2|u|² at each stored time
  std::vector<double> aux;           // optional extra integral, empty if unused
  TrajStatus status = TrajStatus::completed;
  EscapeReason escape_reason = EscapeReason::none;
  double escape_time = std::numeric_limits<double>::infinity();
  std::string note;

  std::size_t size() const { return times.size(); }
  double final_time() const { return times.empty() ? 0.0 : times.back(); }
  const Vec& final_state() const { return states.back(); }
  // Checks ordering and monotone cost; throws ParameterError on violation.
  void check_invariants() const;
};

}  // namespace smoothfb

#endif  // SMOOTHFB_TRAJECTORY_HPP_
