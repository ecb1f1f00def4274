#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace twoscale {

// Noise channels inside one replica. Slow and fast increments come from
// separate engines so a run that consumes only one channel (the averaged
// equation, the auxiliary fast process) can replay it independently.
enum class Channel : std::uint32_t {
  slow_noise = 1,
  fast_noise = 2,
  branch = 3,
  sampling = 4,
};

// Address of one noise stream. Streams are derived, never advanced into each
// other: changing the replica count or the job count cannot perturb the draws
// of any other (study, eps_index, replica, branch, channel) tuple.
struct StreamKey {
  std::uint64_t seed = 0;
  std::uint32_t study = 0;
  std::uint32_t eps_index = 0;
  std::uint32_t replica = 0;
  std::uint32_t branch = 0;
  std::uint32_t channel = 0;

  StreamKey with(Channel c) const {
    StreamKey k = *this;
    k.channel = static_cast<std::uint32_t>(c);
    return k;
  }
  StreamKey with_replica(std::uint32_t r) const {
    StreamKey k = *this;
    k.replica = r;
    return k;
  }
  StreamKey with_branch(std::uint32_t b) const {
    StreamKey k = *this;
    k.branch = b;
    return k;
  }
  StreamKey with_eps_index(std::uint32_t e) const {
    StreamKey k = *this;
    k.eps_index = e;
    return k;
  }
};

// Sequential Gaussian stream over one StreamKey. Draw order is part of the
// contract: integrators consume exactly one vector per channel per step, so
// replays (common-noise coupling, auxiliary process) line up bitwise.
class GaussianStream {
 public:
  explicit GaussianStream(const StreamKey& key) : eng_(seed_of(key)) {}

  double next() { return dist_(eng_); }

  void fill(Eigen::VectorXd& z) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = dist_(eng_);
  }

  Eigen::VectorXd draw(Eigen::Index n) {
    Eigen::VectorXd z(n);
    fill(z);
    return z;
  }

 private:
  static std::mt19937_64 seed_of(const StreamKey& key) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(key.seed & 0xffffffffu),
        static_cast<std::uint32_t>(key.seed >> 32),
        key.study, key.eps_index, key.replica, key.branch, key.channel};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 eng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace twoscale
