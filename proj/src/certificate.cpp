#include "smoothfb/certificate.hpp"

#include <cmath>
#include <sstream>

#include "smoothfb/io.hpp"

namespace smoothfb {

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

void BoundCertificate::decide() {
  if (verdict == Verdict::inconclusive) return;
  bool ok = !std::isnan(lhs) && !std::isnan(rhs) && lhs <= rhs + tolerance;
  // an infinite prediction passes only against an infinite measurement
  for (const auto& [what, holds] : conditions) ok = ok && holds;
  verdict = ok ? Verdict::pass : Verdict::fail;
}

namespace {
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}
}  // namespace

nlohmann::json BoundCertificate::to_json() const {
  nlohmann::json j;
  j["name"] = name;
  j["quantity"] = kind;
  j["lhs"] = number(lhs);
  j["rhs"] = number(rhs);
  j["predicted"] = number(predicted());
  j["measured"] = number(measured());
  j["slack"] = number(slack());
  j["tolerance"] = tolerance;
  j["verdict"] = to_string(verdict);
  j["vacuous"] = vacuous;
  j["seed"] = seed;
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : constants) cs.push_back({{"name", c.name}, {"value", number(c.value)}, {"source", c.source}});
  j["constants"] = cs;
  nlohmann::json conds = nlohmann::json::array();
  for (const auto& [what, holds] : conditions) conds.push_back({{"condition", what}, {"holds", holds}});
  j["conditions"] = conds;
  j["notes"] = notes;
  return j;
}

void to_json(nlohmann::json& j, const BoundCertificate& c) { j = c.to_json(); }

std::string BoundCertificate::csv_header() { return "name,quantity,lhs,rhs,slack,tolerance,verdict,seed"; }

std::string BoundCertificate::csv_row() const {
  std::string quoted = "\"";
  for (char ch : kind) {
    if (ch == '"') quoted += '"';
    quoted += ch;
  }
  quoted += '"';
  std::ostringstream os;
  os << name << ',' << quoted << ',' << format_double(lhs) << ',' << format_double(rhs) << ',' << format_double(slack())
     << ',' << format_double(tolerance) << ',' << to_string(verdict) << ',' << seed;
  return os.str();
}

}  // namespace smoothfb
