#pragma once

#include <numbers>

#include "twoscale/ergodics.hpp"

namespace twoscale::test {

inline BasisPtr slow_pi(int n) {
  return build_basis(BasisKind::dirichlet_laplacian, BasisRole::slow, n,
                     std::numbers::pi);
}

inline BasisPtr fast_pi(int n, double shift = 0.0) {
  return build_basis(shift > 0.0 ? BasisKind::shifted_laplacian
                                 : BasisKind::dirichlet_laplacian,
                     BasisRole::fast, n, std::numbers::pi, shift);
}

inline ModelSpec linear_model(int n, nlohmann::json params = {}) {
  return make_model("linear_test_model", params, slow_pi(n), fast_pi(n));
}

inline StreamKey key_of(std::uint64_t seed) {
  StreamKey k;
  k.seed = seed;
  return k;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace twoscale::test
