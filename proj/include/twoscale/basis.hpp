#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>
#include <json.hpp>

namespace twoscale {

enum class BasisRole { slow, fast };
enum class BoundaryKind { dirichlet, robin };
enum class BasisKind { dirichlet_laplacian, shifted_laplacian };

// Sine eigenbasis of -d^2/dxi^2 (+ shift) on (0, L) with zero boundary
// values: alpha_k = (k pi / L)^2 + shift, e_k = sqrt(2/L) sin(k pi xi / L).
// The diagonal covariance Q e_k = lambda_k e_k lives here as noise_amps.
struct SpectralBasis {
  BasisRole role = BasisRole::slow;
  BasisKind kind = BasisKind::dirichlet_laplacian;
  BoundaryKind boundary = BoundaryKind::dirichlet;
  int mode_count = 0;
  double length = 0.0;
  double shift = 0.0;
  Eigen::VectorXd eigenvalues;   // alpha_k > 0
  Eigen::VectorXd noise_amps;    // lambda_k >= 0
  Eigen::VectorXd sup_bounds;    // |e_k|_0

  double eigfun(int k, double xi) const;  // e_k(xi), k is 1-based
  double spectral_gap() const { return eigenvalues.minCoeff(); }

  nlohmann::json to_json() const;
};

using BasisPtr = std::shared_ptr<const SpectralBasis>;

BasisPtr build_basis(BasisKind kind, BasisRole role, int mode_count,
                     double length, double shift = 0.0);

// Same basis with different diagonal covariance amplitudes.
BasisPtr with_noise_amps(const BasisPtr& basis, const Eigen::VectorXd& amps);

// Function on (0, L) in eigen-coefficient representation. The H = L^2 norm
// is the Euclidean norm of the coefficients.
struct FieldCoeffs {
  BasisPtr basis;
  Eigen::VectorXd coeffs;

  double norm() const { return coeffs.norm(); }
};

FieldCoeffs make_field(const BasisPtr& basis, const Eigen::VectorXd& coeffs);
FieldCoeffs zero_field(const BasisPtr& basis);
// c * e_k, k 1-based.
FieldCoeffs unit_mode(const BasisPtr& basis, int k, double c = 1.0);

// Collocation values at the M interior points xi_j = j L / (M + 1).
struct GridField {
  BasisPtr basis;
  int grid_size = 0;
  Eigen::VectorXd values;
};

// Synthesis/analysis between N coefficients and M collocation values.
// The grid xi_j = j L / (M + 1) makes the discrete sine quadrature exact:
// analysis inverts synthesis to rounding for every M >= N.
class SineTransform {
 public:
  SineTransform(const SpectralBasis& basis, int grid_size);

  int modes() const { return static_cast<int>(synth_.cols()); }
  int grid_size() const { return static_cast<int>(synth_.rows()); }
  double quad_weight() const { return quad_w_; }
  const Eigen::VectorXd& grid_points() const { return points_; }

  Eigen::VectorXd to_grid(const Eigen::VectorXd& coeffs) const;
  Eigen::VectorXd from_grid(const Eigen::VectorXd& values) const;
  // L^2(0, L) inner product of two grid fields by quadrature.
  double inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

 private:
  Eigen::MatrixXd synth_;   // M x N, synth(j, k) = e_{k+1}(xi_{j+1})
  Eigen::VectorXd points_;  // xi_j
  double quad_w_ = 0.0;
};

// e^{tA} u, diagonal on the eigenbasis: c_k -> exp(-alpha_k t) c_k.
FieldCoeffs apply_semigroup(const FieldCoeffs& u, double t);

GridField to_grid(const FieldCoeffs& u, int grid_size);
FieldCoeffs from_grid(const GridField& g);

}  // namespace twoscale
