#ifndef CATNET_RNG_HPP
#define CATNET_RNG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

namespace catnet {

// Counter-based stream RNG (Philox-4x32-10).  A stream is identified by a
// 64-bit key derived from (master seed, purpose tag, stream index); draws
// within a stream advance a 128-bit counter.  Streams never collide and the
// sequence depends only on the key, so results are independent of thread
// scheduling.
class Rng {
 public:
  Rng() : Rng(0, "default", 0) {}

  Rng(std::uint64_t master_seed, std::string_view purpose, std::uint64_t index) {
    std::uint64_t h = mix64(master_seed ^ 0x9e3779b97f4a7c15ull);
    for (char c : purpose) h = mix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    h = mix64(h ^ index);
    key_[0] = static_cast<std::uint32_t>(h);
    key_[1] = static_cast<std::uint32_t>(h >> 32);
    ctr_ = {0, 0, 0, 0};
    have_ = 0;
    norm_cached_ = false;
  }

  std::uint32_t next_u32() {
    if (have_ == 0) {
      block_ = philox(ctr_, key_);
      bump_counter();
      have_ = 4;
    }
    return block_[4 - have_--];
  }

  std::uint64_t next_u64() {
    std::uint64_t lo = next_u32();
    std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; one spare value cached per pair.
  double normal() {
    if (norm_cached_) {
      norm_cached_ = false;
      return norm_spare_;
    }
    double u1 = uniform(), u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    norm_spare_ = r * std::sin(a);
    norm_cached_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  double exponential(double mean) { return -mean * std::log(uniform()); }

  // Gamma(shape, scale).  Marsaglia-Tsang for shape >= 1; for shape < 1 the
  // boosted draw Gamma(shape+1) * U^(1/shape) keeps the exact law.
  double gamma(double shape, double scale) {
    if (shape < 1.0) {
      double u = uniform();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  // Poisson(mean): inversion chain for small means, transformed rejection
  // with descending squeeze (PTRD) for large ones.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean <= 10.0) {
      double l = std::exp(-mean);
      std::uint64_t k = 0;
      double p = uniform();
      while (p > l) {
        ++k;
        p *= uniform();
      }
      return k;
    }
    return poisson_ptrd(mean);
  }

 private:
  static std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> ctr,
                                             std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t m0 = 0xD2511F53u, m1 = 0xCD9E8D57u;
    constexpr std::uint32_t w0 = 0x9E3779B9u, w1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = static_cast<std::uint64_t>(m0) * ctr[0];
      std::uint64_t p1 = static_cast<std::uint64_t>(m1) * ctr[2];
      std::array<std::uint32_t, 4> out;
      out[0] = static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0];
      out[1] = static_cast<std::uint32_t>(p1);
      out[2] = static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1];
      out[3] = static_cast<std::uint32_t>(p0);
      ctr = out;
      key[0] += w0;
      key[1] += w1;
    }
    return ctr;
  }

  void bump_counter() {
    for (int i = 0; i < 4; ++i) {
      if (++ctr_[i] != 0) break;
    }
  }

  std::uint64_t poisson_ptrd(double mu) {
    const double smu = std::sqrt(mu);
    const double b = 0.931 + 2.53 * smu;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      double u = uniform() - 0.5;
      double v = uniform();
      double us = 0.5 - std::fabs(u);
      double kf = std::floor((2.0 * a / us + b) * u + mu + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
      double rhs = kf * std::log(mu) - mu - std::lgamma(kf + 1.0);
      if (lhs <= rhs) return static_cast<std::uint64_t>(kf);
    }
  }

  std::array<std::uint32_t, 4> ctr_;
  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> block_{};
  int have_ = 0;
  double norm_spare_ = 0.0;
  bool norm_cached_ = false;
};

// Stream provenance label, recorded in Monte-Carlo estimates.
struct StreamId {
  std::uint64_t master_seed = 0;
  std::string purpose;
  std::uint64_t index = 0;
};

}  // namespace catnet

#endif  // CATNET_RNG_HPP
