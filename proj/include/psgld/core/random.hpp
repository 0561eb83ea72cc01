#pragma once

#include "psgld/core/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace psgld {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic stream keyed by (master_seed, stream_index). The engine is
// mt19937_64, whose output sequence is fixed by the standard; the uniform and
// normal transforms are written out here because the std distributions are
// implementation-defined.
class RandomSource {
 public:
  RandomSource(std::uint64_t master_seed, std::uint64_t stream_index)
      : master_seed_(master_seed),
        stream_index_(stream_index),
        key_(splitmix64(splitmix64(master_seed) ^ splitmix64(~stream_index))),
        engine_(key_) {}

  std::uint64_t master_seed() const { return master_seed_; }
  std::uint64_t stream_index() const { return stream_index_; }

  // Independent child stream; used to split one logical stream into
  // sub-streams (e.g. gradient noise vs. injected Langevin noise).
  RandomSource derive(std::uint64_t label) const {
    RandomSource child(master_seed_, stream_index_);
    child.key_ = splitmix64(key_ ^ splitmix64(label + 0x632be59bd9b4e019ULL));
    child.engine_.seed(child.key_);
    return child;
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;
    }
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  ParamVector normal_vector(Eigen::Index n) {
    ParamVector w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = normal();
    return w;
  }

  // Uniform integer in [0, n) by rejection (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw Error("uniform_index: empty range");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    for (;;) {
      const std::uint64_t v = engine_();
      if (v < limit) return v % n;
    }
  }

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t key_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace psgld
