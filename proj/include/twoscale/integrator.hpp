#pragma once

#include <functional>

#include "twoscale/averaged.hpp"
#include "twoscale/model.hpp"
#include "twoscale/trajectory.hpp"

namespace twoscale {

// Raised when dt > eps/10 for a coupled run without the explicit override.
struct StabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// phi1(z) = (1 - e^{-z}) / z, continuously extended by phi1(0) = 1.
double phi1(double z);

// Exact one-step standard deviation of the linear stochastic convolution:
// lambda * sqrt((1 - e^{-2 alpha dt_eff}) / (2 alpha)).
double conv_std(double lambda, double alpha, double dt_eff);

// Exponential Euler on the eigenbasis with exact sampling of the fast linear
// stochastic convolution. Nonlinearities are evaluated pseudo-spectrally at
// the left endpoint. All per-mode scale vectors are precomputed for a fixed
// (dt, eps).
class ExpEuler {
 public:
  ExpEuler(const ModelSpec& model, double dt, double eps, int grid_size);

  void advance_coupled(Eigen::VectorXd& u, Eigen::VectorXd& v,
                       const Eigen::VectorXd& z_slow,
                       const Eigen::VectorXd& z_fast) const;

  // Fast equation with the slow argument frozen on its grid values.
  void advance_fast(const Eigen::VectorXd& x_grid, Eigen::VectorXd& v,
                    const Eigen::VectorXd& z_fast) const;

  void advance_averaged(const AveragedCoeffs& avg, Eigen::VectorXd& u,
                        const Eigen::VectorXd& z_slow) const;

  const SineTransform& transform() const { return tr_; }
  double dt() const { return dt_; }

  // Per-mode fast convolution standard deviations (exact linear part).
  const Eigen::VectorXd& fast_conv_std() const { return nu_fast_; }

 private:
  const ModelSpec& model_;
  SineTransform tr_;
  double dt_ = 0.0;
  double eps_ = 1.0;
  Eigen::VectorXd decay_slow_, phidt_slow_, noise_slow_;  // e^{-a dt} lam sqrt(dt)
  Eigen::VectorXd decay_fast_, phidt_fast_, nu_fast_;
};

// One public step of the coupled pair (test surface; drivers below reuse one
// ExpEuler across steps).
SlowFastState step_coupled(const ModelSpec& model, const SlowFastState& state,
                           double dt, const NoiseDraw& noise, int grid_size,
                           bool allow_unstable = false);

using CoupledObserver =
    std::function<void(int, double, const Eigen::VectorXd&, const Eigen::VectorXd&)>;
using PathObserver = std::function<void(int, double, const Eigen::VectorXd&)>;

// Streaming drivers: the observer sees every grid point including step 0.
void run_coupled(const ModelSpec& model, const FieldCoeffs& x,
                 const FieldCoeffs& y, double eps, double T, double dt,
                 const StreamKey& slow_key, const StreamKey& fast_key,
                 int grid_size, bool allow_unstable, const CoupledObserver& obs);

void run_frozen_fast(const ModelSpec& model, const FieldCoeffs& x,
                     const FieldCoeffs& y, double T, double dt,
                     const StreamKey& fast_key, int grid_size,
                     const PathObserver& obs);

void run_averaged(const AveragedCoeffs& avg, const BasisPtr& slow_basis,
                  const FieldCoeffs& x, double T, double dt,
                  const StreamKey& slow_key, const PathObserver& obs);

// Trajectory-recording wrappers.
Trajectory simulate_coupled(const ModelSpec& model, const FieldCoeffs& x,
                            const FieldCoeffs& y, double eps, double T,
                            double dt, const StreamKey& slow_key,
                            const StreamKey& fast_key, int grid_size,
                            bool allow_unstable = false);

Trajectory simulate_frozen_fast(const ModelSpec& model, const FieldCoeffs& x,
                                const FieldCoeffs& y, double T, double dt,
                                const StreamKey& fast_key, int grid_size);

Trajectory simulate_averaged(const AveragedCoeffs& avg,
                             const BasisPtr& slow_basis, const FieldCoeffs& x,
                             double T, double dt, const StreamKey& slow_key);

int default_grid_size(const ModelSpec& model);

}  // namespace twoscale
