#pragma once

#include <cmath>
#include <cstdint>

namespace weakmom {

// SplitMix64: used only to expand seeds into generator state.
struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t s) : state(s) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// xoshiro256++ with SplitMix64 seeding. Every Monte Carlo replication gets
// its own stream derived from (masterSeed, replication index), so streams
// are independent of scheduling order.
class Rng {
public:
  explicit Rng(uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static uint64_t replicationSeed(uint64_t masterSeed, uint64_t repIndex) {
    SplitMix64 a(masterSeed);
    return a.next() + 0x9e3779b97f4a7c15ull * (repIndex + 1);
  }

  uint64_t nextU64() {
    const uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform on (0,1); never returns an exact endpoint
  double uniform() {
    return (static_cast<double>(nextU64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (haveSpare_) {
      haveSpare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    haveSpare_ = true;
    return r * std::cos(a);
  }

  double cauchy(double mu, double gamma) {
    return mu + gamma * std::tan(3.14159265358979323846 * (uniform() - 0.5));
  }

  // chi-squared with integer degrees of freedom (all model samplers here
  // need k in {1, 3})
  double chisq(int k) {
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
      const double z = normal();
      s += z * z;
    }
    return s;
  }

private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  uint64_t s_[4];
  double spare_ = 0.0;
  bool haveSpare_ = false;
};

}  // namespace weakmom
