#ifndef SMOOTHFB_IO_HPP_
#define SMOOTHFB_IO_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "smoothfb/grid.hpp"
#include "smoothfb/trajectory.hpp"

namespace smoothfb {

// Binary grid layout, little endian:
//   u64 dims | f64 lower[dims] | f64 upper[dims] | u64 points[dims] | f64 values (row-major)
void write_grid_binary(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_grid_binary(const std::filesystem::path& path, Interp interp = Interp::multilinear);

// CSV with columns x0..x{d-1},value. `quantity` goes into a leading comment line.
void write_field_csv(const std::filesystem::path& path, const ScalarField& field,
                     const std::string& quantity = "value");

// CSV with columns t, y0.., u0.., running_cost.
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace smoothfb

#endif  // SMOOTHFB_IO_HPP_
