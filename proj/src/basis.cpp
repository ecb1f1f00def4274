#include "twoscale/basis.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace twoscale {

namespace {

const char* role_name(BasisRole r) {
  return r == BasisRole::slow ? "slow" : "fast";
}

const char* boundary_name(BoundaryKind b) {
  return b == BoundaryKind::dirichlet ? "dirichlet" : "robin";
}

}  // namespace

double SpectralBasis::eigfun(int k, double xi) const {
  const double pi = std::numbers::pi;
  return std::sqrt(2.0 / length) * std::sin(k * pi * xi / length);
}

nlohmann::json SpectralBasis::to_json() const {
  nlohmann::json j;
  j["role"] = role_name(role);
  j["N"] = mode_count;
  j["L"] = length;
  j["boundary"] = boundary_name(boundary);
  j["shift"] = shift;
  j["alphas"] = std::vector<double>(eigenvalues.begin(), eigenvalues.end());
  j["lambdas"] = std::vector<double>(noise_amps.begin(), noise_amps.end());
  return j;
}

BasisPtr build_basis(BasisKind kind, BasisRole role, int mode_count,
                     double length, double shift) {
  if (mode_count < 1) throw std::invalid_argument("build_basis: N must be >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("build_basis: L must be > 0");
  if (shift < 0.0) throw std::invalid_argument("build_basis: shift must be >= 0");

  auto b = std::make_shared<SpectralBasis>();
  b->role = role;
  b->kind = kind;
  // The shift device stands in for a Robin-type boundary/potential term.
  b->boundary = (kind == BasisKind::shifted_laplacian) ? BoundaryKind::robin
                                                       : BoundaryKind::dirichlet;
  b->mode_count = mode_count;
  b->length = length;
  b->shift = shift;
  b->eigenvalues.resize(mode_count);
  b->sup_bounds.resize(mode_count);
  const double pi = std::numbers::pi;
  for (int k = 1; k <= mode_count; ++k) {
    const double w = k * pi / length;
    b->eigenvalues[k - 1] = w * w + shift;
    b->sup_bounds[k - 1] = std::sqrt(2.0 / length);
  }
  b->noise_amps = Eigen::VectorXd::Ones(mode_count);
  return b;
}

BasisPtr with_noise_amps(const BasisPtr& basis, const Eigen::VectorXd& amps) {
  if (amps.size() != basis->mode_count)
    throw std::invalid_argument("with_noise_amps: size mismatch");
  if ((amps.array() < 0.0).any())
    throw std::invalid_argument("with_noise_amps: amplitudes must be >= 0");
  auto b = std::make_shared<SpectralBasis>(*basis);
  b->noise_amps = amps;
  return b;
}

FieldCoeffs make_field(const BasisPtr& basis, const Eigen::VectorXd& coeffs) {
  if (coeffs.size() != basis->mode_count)
    throw std::invalid_argument("make_field: coefficient count != N");
  if (!coeffs.allFinite())
    throw std::invalid_argument("make_field: non-finite coefficients");
  return FieldCoeffs{basis, coeffs};
}

FieldCoeffs zero_field(const BasisPtr& basis) {
  return FieldCoeffs{basis, Eigen::VectorXd::Zero(basis->mode_count)};
}

FieldCoeffs unit_mode(const BasisPtr& basis, int k, double c) {
  if (k < 1 || k > basis->mode_count)
    throw std::invalid_argument("unit_mode: mode index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(basis->mode_count);
  v[k - 1] = c;
  return FieldCoeffs{basis, v};
}

SineTransform::SineTransform(const SpectralBasis& basis, int grid_size) {
  const int n = basis.mode_count;
  if (grid_size < n)
    throw std::invalid_argument("SineTransform: grid size M must be >= N");
  synth_.resize(grid_size, n);
  points_.resize(grid_size);
  const double h = basis.length / (grid_size + 1);
  for (int j = 0; j < grid_size; ++j) {
    points_[j] = (j + 1) * h;
    for (int k = 1; k <= n; ++k) synth_(j, k - 1) = basis.eigfun(k, points_[j]);
  }
  quad_w_ = h;
}

Eigen::VectorXd SineTransform::to_grid(const Eigen::VectorXd& coeffs) const {
  return synth_ * coeffs;
}

Eigen::VectorXd SineTransform::from_grid(const Eigen::VectorXd& values) const {
  return quad_w_ * (synth_.transpose() * values);
}

double SineTransform::inner(const Eigen::VectorXd& a,
                            const Eigen::VectorXd& b) const {
  return quad_w_ * a.dot(b);
}

FieldCoeffs apply_semigroup(const FieldCoeffs& u, double t) {
  if (t < 0.0) throw std::invalid_argument("apply_semigroup: t must be >= 0");
  FieldCoeffs out = u;
  out.coeffs.array() *= (-u.basis->eigenvalues.array() * t).exp();
  return out;
}

GridField to_grid(const FieldCoeffs& u, int grid_size) {
  SineTransform tr(*u.basis, grid_size);
  return GridField{u.basis, grid_size, tr.to_grid(u.coeffs)};
}

FieldCoeffs from_grid(const GridField& g) {
  SineTransform tr(*g.basis, g.grid_size);
  return FieldCoeffs{g.basis, tr.from_grid(g.values)};
}

}  // namespace twoscale
