#ifndef SMOOTHFB_TOOLS_CONFIG_HPP_
#define SMOOTHFB_TOOLS_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smoothfb/example8.hpp"
#include "smoothfb/problem.hpp"

namespace smoothfb::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // runtime error
inline constexpr int kExitConfig = 2;
inline constexpr int kExitCertificate = 3;

// Message already carries "file:line:col: field: reason".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Line/column of every value in a JSON text, keyed by dotted path
// ("certify.epsilons.2").
std::map<std::string, std::pair<int, int>> locate_values(const std::string& text);

// Typed, validated access to one config object.
class Section {
 public:
  Section(const nlohmann::json* node, std::string path, const class Config* root);

  bool has(const std::string& key) const;
  double number(const std::string& key, std::optional<double> fallback = std::nullopt,
                const std::function<bool(double)>& valid = {}, const char* requirement = "") const;
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt, int min = 0) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::string text(const std::string& key, std::optional<std::string> fallback = std::nullopt,
                   const std::vector<std::string>& allowed = {}) const;
  std::vector<double> numbers(const std::string& key, std::optional<std::vector<double>> fallback = std::nullopt,
                              const std::function<bool(double)>& valid = {}, const char* requirement = "") const;
  std::vector<std::vector<double>> points(const std::string& key, int dim) const;
  Mat matrix(const std::string& key) const;
  Section child(const std::string& key) const;  // empty object if absent
  [[noreturn]] void fail(const std::string& key, const std::string& reason) const;
  const std::string& path() const { return path_; }

 private:
  const nlohmann::json& at(const std::string& key) const;
  std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  const nlohmann::json* node_;
  std::string path_;
  const Config* root_;
};

class Config {
 public:
  // Parses and checks the top-level shape. Throws ConfigError.
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, std::string source = "<config>");

  const std::string& text() const { return text_; }
  const nlohmann::json& json() const { return json_; }
  Section root() const { return Section(&json_, "", this); }
  Section section(const std::string& key) const { return root().child(key); }
  std::string where(const std::string& path) const;

 private:
  std::string source_, text_;
  nlohmann::json json_;
  std::map<std::string, std::pair<int, int>> positions_;
};

// Problem selector: "example8" or "linear_quadratic".
struct ProblemSpec {
  std::string type = "example8";
  bump::Example8Config example8;
  Mat a, b, q;
  double beta = 1.0;

  ControlProblem build() const;
  bool is_example8() const { return type == "example8"; }
};
ProblemSpec read_problem(const Config& cfg);

}  // namespace smoothfb::cli

#endif  // SMOOTHFB_TOOLS_CONFIG_HPP_
