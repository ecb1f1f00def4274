#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "twoscale/basis.hpp"
#include "twoscale/rng.hpp"

namespace twoscale {

// State of the coupled pair at one time.
struct SlowFastState {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
  double eps = 1.0;
};

// Standard-normal increments for one step; the integrator applies the
// sqrt(dt) and exact-convolution scalings.
struct NoiseDraw {
  Eigen::VectorXd z_slow;
  Eigen::VectorXd z_fast;
};

// Uniform-grid path of u and/or v coefficients. Carries the stream keys it
// was generated from so dependent runs (auxiliary process, common-noise
// averaged solve) can replay the same increments.
struct Trajectory {
  double dt = 0.0;
  double eps = 1.0;
  int grid_size = 0;  // collocation size the run used (replays must match)
  std::vector<double> times;
  std::vector<Eigen::VectorXd> u;  // empty if not recorded
  std::vector<Eigen::VectorXd> v;  // empty if not recorded
  StreamKey slow_key;
  StreamKey fast_key;

  int steps() const { return static_cast<int>(times.size()) - 1; }
  bool has_u() const { return !u.empty(); }
  bool has_v() const { return !v.empty(); }
};

// CSV columns: t, u_1..u_N, then v_1..v_N when present.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// Row-major 64-bit floats preceded by a one-line JSON header.
void write_trajectory_binary(const Trajectory& traj, const std::string& path);

}  // namespace twoscale
