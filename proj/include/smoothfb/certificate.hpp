#ifndef SMOOTHFB_CERTIFICATE_HPP_
#define SMOOTHFB_CERTIFICATE_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace smoothfb {

enum class Verdict { pass, fail, inconclusive };
const char* to_string(Verdict v);

struct CertConstant {
  std::string name;
  double value = 0.0;
  std::string source;  // "sampled", "supplied" or "derived"
};

// Inequality lhs ≤ rhs + tolerance. Escape-time bounds put the prediction on
// the left (a lower bound on the measured time); error estimates put the
// measurement on the left.
struct BoundCertificate {
  std::string name;
  std::string kind;  // what inequality is being checked, in words
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  bool predicted_is_lhs = false;
  std::vector<CertConstant> constants;
  std::vector<std::pair<std::string, bool>> conditions;  // side conditions that must all hold
  std::vector<std::string> notes;
  std::uint64_t seed = 0;
  bool vacuous = false;  // guarded infinite prediction
  Verdict verdict = Verdict::fail;

  double predicted() const { return predicted_is_lhs ? lhs : rhs; }
  double measured() const { return predicted_is_lhs ? rhs : lhs; }
  double slack() const { return rhs - lhs; }
  bool passed() const { return verdict == Verdict::pass; }

  void add(std::string cname, double value, std::string source) {
    constants.push_back({std::move(cname), value, std::move(source)});
  }
  // Sets the verdict from slack, tolerance and side conditions (keeps an
  // inconclusive verdict set by the caller).
  void decide();

  nlohmann::json to_json() const;
  static std::string csv_header();
  std::string csv_row() const;
};

void to_json(nlohmann::json& j, const BoundCertificate& c);

}  // namespace smoothfb

#endif  // SMOOTHFB_CERTIFICATE_HPP_
