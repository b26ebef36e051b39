#include "smoothfb/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>

namespace smoothfb {

static_assert(std::endian::native == std::endian::little, "binary grid format assumes little endian");

const char* to_string(TrajStatus s) {
  switch (s) {
    case TrajStatus::completed: return "completed";
    case TrajStatus::escaped: return "escaped";
    case TrajStatus::blew_up: return "blew_up";
  }
  return "unknown";
}

void Trajectory::check_invariants() const {
  const std::size_t n = times.size();
  if (states.size() != n || controls.size() != n || running_cost.size() != n)
    throw ParameterError("trajectory: column lengths differ");
  if (n > 0 && times[0] != 0.0) throw ParameterError("trajectory: times must start at 0");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(times[i] > times[i - 1])) throw ParameterError("trajectory: times not strictly increasing");
    if (running_cost[i] < running_cost[i - 1] - 1e-12 * (1.0 + std::abs(running_cost[i - 1])))
      throw ParameterError("trajectory: running cost decreased");
  }
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

template <class T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParameterError("grid file truncated");
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw ParameterError("cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

void write_grid_binary(const std::filesystem::path& path, const ScalarField& field) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  const BoxGrid& g = field.grid();
  put<std::uint64_t>(out, static_cast<std::uint64_t>(g.dim()));
  for (int a = 0; a < g.dim(); ++a) put<double>(out, g.lower()[a]);
  for (int a = 0; a < g.dim(); ++a) put<double>(out, g.upper()[a]);
  for (int a = 0; a < g.dim(); ++a) put<std::uint64_t>(out, static_cast<std::uint64_t>(g.points(a)));
  out.write(reinterpret_cast<const char*>(field.values().data()),
            static_cast<std::streamsize>(field.values().size() * sizeof(double)));
}

ScalarField read_grid_binary(const std::filesystem::path& path, Interp interp) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParameterError("cannot open " + path.string());
  const auto d = get<std::uint64_t>(in);
  if (d == 0 || d > static_cast<std::uint64_t>(kMaxDim)) throw ParameterError("grid file: bad dimension");
  Vec lo(d), hi(d);
  std::vector<int> pts(d);
  for (std::uint64_t a = 0; a < d; ++a) lo[a] = get<double>(in);
  for (std::uint64_t a = 0; a < d; ++a) hi[a] = get<double>(in);
  for (std::uint64_t a = 0; a < d; ++a) pts[a] = static_cast<int>(get<std::uint64_t>(in));
  BoxGrid grid(lo, hi, pts);
  std::vector<double> v(grid.size());
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!in) throw ParameterError("grid file truncated");
  return ScalarField(grid, std::move(v), interp, true);
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field, const std::string& quantity) {
  auto out = open_out(path);
  const BoxGrid& g = field.grid();
  out << "# quantity: " << quantity << "\n";
  for (int a = 0; a < g.dim(); ++a) out << "x" << a << ",";
  out << "value\n";
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec x = g.node(n);
    for (int a = 0; a < g.dim(); ++a) out << format_double(x[a]) << ",";
    out << format_double(field[n]) << "\n";
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_out(path);
  out << "# quantity: closed-loop trajectory, running cost is the integral of l(y)+beta/2|u|^2\n";
  out << "# status: " << to_string(traj.status);
  if (traj.status == TrajStatus::escaped) out << " at t=" << format_double(traj.escape_time);
  out << "\n";
  if (traj.size() == 0) return;
  const auto d = traj.states[0].size(), m = traj.controls[0].size();
  out << "t";
  for (Eigen::Index a = 0; a < d; ++a) out << ",y" << a;
  for (Eigen::Index a = 0; a < m; ++a) out << ",u" << a;
  out << ",running_cost\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.times[i]);
    for (Eigen::Index a = 0; a < d; ++a) out << "," << format_double(traj.states[i][a]);
    for (Eigen::Index a = 0; a < m; ++a) out << "," << format_double(traj.controls[i][a]);
    out << "," << format_double(traj.running_cost[i]) << "\n";
  }
}

}  // namespace smoothfb
