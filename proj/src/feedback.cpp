#include "smoothfb/feedback.hpp"

namespace smoothfb {

FeedbackLaw FeedbackLaw::analytic(Map map, std::string name) {
  FeedbackLaw law;
  law.map_ = std::move(map);
  law.name_ = std::move(name);
  return law;
}

FeedbackLaw FeedbackLaw::from_value(const ScalarFunction& v, const ControlProblem& problem, std::string name,
                                    bool field_based) {
  FeedbackLaw law;
  const auto input = problem.input;
  const double inv_beta = 1.0 / problem.beta;
  auto grad = v.gradient;
  law.map_ = [input, grad, inv_beta](const Vec& y) -> Vec {
    return -inv_beta * (input(y).transpose() * grad(y));
  };
  law.name_ = std::move(name);
  law.field_based_ = field_based;
  return law;
}

FeedbackLaw feedback_from(const ScalarField& v, const ControlProblem& problem, std::string name) {
  if (v.dim() != problem.dim_state) throw ParameterError("feedback_from: field dimension != state dimension");
  const ScalarField smooth = v.interp() == Interp::cubic ? v : v.with_interp(Interp::cubic);
  return FeedbackLaw::from_value(ScalarFunction::from_field(smooth), problem, std::move(name), true);
}

FeedbackLaw feedback_from(const ScalarFunction& v, const ControlProblem& problem, std::string name) {
  return FeedbackLaw::from_value(v, problem, std::move(name), false);
}

}  // namespace smoothfb
