#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

namespace smoothfb::cli {

namespace {

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

const nlohmann::json kEmptyObject = nlohmann::json::object();

}  // namespace

std::map<std::string, std::pair<int, int>> locate_values(const std::string& text) {
  struct Frame {
    bool object;
    std::string key;
    int index = 0;
    bool want_key = true;
  };
  std::map<std::string, std::pair<int, int>> out;
  std::vector<Frame> stack;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto path = [&] {
    std::string p;
    for (const auto& f : stack) {
      if (!p.empty()) p += '.';
      p += f.object ? f.key : std::to_string(f.index);
    }
    return p;
  };
  auto step = [&] {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++i;
  };
  auto record = [&] { out.emplace(path(), std::make_pair(line, col)); };
  while (i < text.size()) {
    const char c = text[i];
    if (c == '{' || c == '[') {
      record();
      stack.push_back({c == '{', "", 0, c == '{'});
      step();
    } else if (c == '}' || c == ']') {
      if (!stack.empty()) stack.pop_back();
      step();
    } else if (c == ',') {
      if (!stack.empty()) {
        if (stack.back().object)
          stack.back().want_key = true;
        else
          ++stack.back().index;
      }
      step();
    } else if (c == ':') {
      if (!stack.empty()) stack.back().want_key = false;
      step();
    } else if (c == '"') {
      const bool is_key = !stack.empty() && stack.back().object && stack.back().want_key;
      if (!is_key) record();
      std::string s;
      step();
      while (i < text.size() && text[i] != '"') {
        if (text[i] == '\\' && i + 1 < text.size()) step();
        s += text[i];
        step();
      }
      step();
      if (is_key) stack.back().key = s;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      step();
    } else {
      record();
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != ',' &&
             text[i] != '}' && text[i] != ']')
        step();
    }
  }
  return out;
}

Config Config::parse(const std::string& text, std::string source) {
  Config c;
  c.source_ = std::move(source);
  c.text_ = text;
  try {
    c.json_ = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    throw ConfigError(fmt::format("{}:{}:{}: {}", c.source_, line, col, what));
  }
  if (!c.json_.is_object()) throw ConfigError(fmt::format("{}:1:1: top level must be an object", c.source_));
  c.positions_ = locate_values(text);
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("{}: cannot open config", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

std::string Config::where(const std::string& path) const {
  // walk up to the nearest located ancestor
  std::string p = path;
  while (true) {
    if (const auto it = positions_.find(p); it != positions_.end())
      return fmt::format("{}:{}:{}", source_, it->second.first, it->second.second);
    const auto dot = p.rfind('.');
    if (dot == std::string::npos) break;
    p.resize(dot);
  }
  return fmt::format("{}:1:1", source_);
}

Section::Section(const nlohmann::json* node, std::string path, const Config* root)
    : node_(node), path_(std::move(path)), root_(root) {}

void Section::fail(const std::string& key, const std::string& reason) const {
  const std::string field = key.empty() ? path_ : join(key);
  throw ConfigError(fmt::format("{}: {}: {}", root_->where(field), field, reason));
}

bool Section::has(const std::string& key) const { return node_->is_object() && node_->contains(key); }

const nlohmann::json& Section::at(const std::string& key) const { return node_->at(key); }

double Section::number(const std::string& key, std::optional<double> fallback, const std::function<bool(double)>& valid,
                       const char* requirement) const {
  double v;
  if (!has(key)) {
    if (!fallback) fail(key, "missing required number");
    v = *fallback;
  } else {
    const auto& j = at(key);
    if (!j.is_number()) fail(key, "expected a number");
    v = j.get<double>();
  }
  if (!std::isfinite(v)) fail(key, "must be finite");
  if (valid && !valid(v)) fail(key, fmt::format("must be {} (got {})", requirement, v));
  return v;
}

int Section::integer(const std::string& key, std::optional<int> fallback, int min) const {
  int v;
  if (!has(key)) {
    if (!fallback) fail(key, "missing required integer");
    v = *fallback;
  } else {
    const auto& j = at(key);
    if (!j.is_number_integer()) fail(key, "expected an integer");
    v = j.get<int>();
  }
  if (v < min) fail(key, fmt::format("must be at least {} (got {})", min, v));
  return v;
}

bool Section::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto& j = at(key);
  if (!j.is_boolean()) fail(key, "expected true or false");
  return j.get<bool>();
}

std::string Section::text(const std::string& key, std::optional<std::string> fallback,
                          const std::vector<std::string>& allowed) const {
  std::string v;
  if (!has(key)) {
    if (!fallback) fail(key, "missing required string");
    v = *fallback;
  } else {
    const auto& j = at(key);
    if (!j.is_string()) fail(key, "expected a string");
    v = j.get<std::string>();
  }
  if (!allowed.empty() && std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    fail(key, fmt::format("must be one of {} (got \"{}\")", list, v));
  }
  return v;
}

std::vector<double> Section::numbers(const std::string& key, std::optional<std::vector<double>> fallback,
                                     const std::function<bool(double)>& valid, const char* requirement) const {
  if (!has(key)) {
    if (!fallback) fail(key, "missing required array of numbers");
    return *fallback;
  }
  const auto& j = at(key);
  if (!j.is_array() || j.empty()) fail(key, "expected a non-empty array of numbers");
  Section items(&j, join(key), root_);
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) items.fail(std::to_string(k), "expected a number");
    const double v = j[k].get<double>();
    if (!std::isfinite(v) || (valid && !valid(v)))
      items.fail(std::to_string(k), fmt::format("must be {} (got {})", requirement, v));
    out.push_back(v);
  }
  return out;
}

std::vector<std::vector<double>> Section::points(const std::string& key, int dim) const {
  if (!has(key)) return {};
  const auto& j = at(key);
  if (!j.is_array()) fail(key, "expected an array of points");
  Section items(&j, join(key), root_);
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_array() || static_cast<int>(j[k].size()) != dim)
      items.fail(std::to_string(k), fmt::format("expected a point with {} coordinates", dim));
    std::vector<double> p;
    for (const auto& x : j[k]) {
      if (!x.is_number()) items.fail(std::to_string(k), "coordinates must be numbers");
      p.push_back(x.get<double>());
    }
    out.push_back(std::move(p));
  }
  return out;
}

Mat Section::matrix(const std::string& key) const {
  if (!has(key)) fail(key, "missing required matrix");
  const auto& j = at(key);
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty()) fail(key, "expected a non-empty array of rows");
  const std::size_t cols = j[0].size();
  Mat m(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) fail(key, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) fail(key, "entries must be numbers");
      m(r, c) = j[r][c].get<double>();
    }
  }
  return m;
}

Section Section::child(const std::string& key) const {
  if (!has(key)) return Section(&kEmptyObject, join(key), root_);
  const auto& j = at(key);
  if (!j.is_object()) fail(key, "expected an object");
  return Section(&j, join(key), root_);
}

ControlProblem ProblemSpec::build() const {
  if (is_example8()) return bump::make_problem(example8);
  return linear_quadratic(a, b, q, beta);
}

ProblemSpec read_problem(const Config& cfg) {
  const Section s = cfg.section("problem");
  auto positive = [](double v) { return v > 0; };
  ProblemSpec p;
  p.type = s.text("type", "example8", {"example8", "linear_quadratic"});
  if (p.is_example8()) {
    auto& e = p.example8;
    e.alpha = s.number("alpha", 0.0, [](double v) { return v >= 0; }, "non-negative");
    e.beta = s.number("beta", 1.0, positive, "positive");
    const auto z = s.numbers("z", std::vector<double>{-2.0, 0.0});
    if (z.size() != 2) s.fail("z", "expected two coordinates");
    e.z = {z[0], z[1]};
    e.sigma = s.number("sigma", 0.5, positive, "positive");
    e.horizon = s.number("horizon", 15.0, positive, "positive");
    e.nodes = s.integer("nodes", 200, 2);
    p.beta = e.beta;
  } else {
    p.a = s.matrix("A");
    p.b = s.matrix("B");
    p.q = s.matrix("Q");
    p.beta = s.number("beta", 1.0, positive, "positive");
    if (p.a.rows() != p.a.cols()) s.fail("A", "must be square");
    if (p.b.rows() != p.a.rows()) s.fail("B", "row count must match A");
    if (p.q.rows() != p.a.rows() || p.q.cols() != p.a.cols()) s.fail("Q", "must have the shape of A");
  }
  return p;
}

}  // namespace smoothfb::cli
