#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace twoscale {

// Coefficients of the averaged equation on the truncated slow basis.
// bbar maps slow coefficients to drift coefficients. gbar factors act on
// unit-variance mode increments; the noise amplitudes lambda_{1,k} are folded
// in, so gbar * z has covariance S (the Gram matrix of the averaged
// diffusion applied to the weighted modes).
struct AveragedCoeffs {
  enum class Provenance { analytic, estimated };

  Provenance provenance = Provenance::analytic;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> bbar;
  // gbar at anchor points; a single entry means x-independent gbar. When
  // several anchors are present the solver picks the nearest anchor in H
  // (piecewise-constant interpolation).
  std::vector<Eigen::VectorXd> anchors;
  std::vector<Eigen::MatrixXd> gbar_at;
  double delta_floor = 0.0;

  const Eigen::MatrixXd& gbar_for(const Eigen::VectorXd& x) const {
    if (gbar_at.empty()) throw std::logic_error("AveragedCoeffs: no gbar set");
    if (gbar_at.size() == 1) return gbar_at[0];
    std::size_t best = 0;
    double best_d = (x - anchors[0]).norm();
    for (std::size_t i = 1; i < anchors.size(); ++i) {
      const double d = (x - anchors[i]).norm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    return gbar_at[best];
  }
};

}  // namespace twoscale
