#ifndef SMOOTHFB_FEEDBACK_HPP_
#define SMOOTHFB_FEEDBACK_HPP_

#include <functional>
#include <string>

#include "smoothfb/grid.hpp"
#include "smoothfb/problem.hpp"

namespace smoothfb {

// State-to-control map. Field-based laws throw DomainError when queried
// outside the field's grid.
class FeedbackLaw {
 public:
  using Map = std::function<Vec(const Vec&)>;

  FeedbackLaw() = default;
  static FeedbackLaw analytic(Map map, std::string name = "analytic");
  // u_v = -(1/β) B(y)ᵀ ∇v(y).
  static FeedbackLaw from_value(const ScalarFunction& v, const ControlProblem& problem, std::string name,
                                bool field_based);

  Vec operator()(const Vec& y) const { return map_(y); }
  const std::string& name() const { return name_; }
  bool field_based() const { return field_based_; }
  explicit operator bool() const { return static_cast<bool>(map_); }

 private:
  Map map_;
  std::string name_;
  bool field_based_ = false;
};

// Law from a grid field; interpolation is switched to cubic so the control is
// C¹ along trajectories.
FeedbackLaw feedback_from(const ScalarField& v, const ControlProblem& problem, std::string name = "field");
FeedbackLaw feedback_from(const ScalarFunction& v, const ControlProblem& problem, std::string name = "analytic");

}  // namespace smoothfb

#endif  // SMOOTHFB_FEEDBACK_HPP_
