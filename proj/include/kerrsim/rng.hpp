#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace kerrsim {

// Philox4x32-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). A pure function of (counter, key), which is
// what makes Monte Carlo results independent of thread scheduling: every
// trial owns a counter and any worker can evaluate it.
struct Philox4x32 {
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::array<std::uint32_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
      std::uint64_t p0 = std::uint64_t(kMul0) * ctr[0];
      std::uint64_t p1 = std::uint64_t(kMul1) * ctr[2];
      std::uint32_t hi0 = std::uint32_t(p0 >> 32), lo0 = std::uint32_t(p0);
      std::uint32_t hi1 = std::uint32_t(p1 >> 32), lo1 = std::uint32_t(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }
};

// Counter layout: {block_index, stream_lo, stream_hi, domain}. Domains keep
// unrelated uses of the same seed from colliding.
enum class StreamDomain : std::uint32_t {
  trial = 1,        // one stream per Monte Carlo trial
  seed_derive = 2,  // seed-splitting for replications / campaign points
  generic = 3,      // miscellaneous sampling (tests, tools)
};

double normal_icdf(double u);

// Stateful view over one Philox stream; cheap to construct per trial.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_index,
               StreamDomain domain = StreamDomain::generic)
      : key_{std::uint32_t(seed), std::uint32_t(seed >> 32)},
        base_{0u, std::uint32_t(stream_index), std::uint32_t(stream_index >> 32),
              static_cast<std::uint32_t>(domain)} {}

  // Uniform in [0, 1) with 53 random bits.
  double uniform() {
    if (pending_) {
      pending_ = false;
      return make_uniform(words_[2], words_[3]);
    }
    auto ctr = base_;
    ctr[0] = block_index_++;
    words_ = Philox4x32::block(ctr, key_);
    pending_ = true;
    return make_uniform(words_[0], words_[1]);
  }

  // Standard normal via inverse-CDF (preserves the one-uniform-per-variate
  // counter discipline; no rejection loops).
  double normal() { return normal_icdf(uniform()); }

 private:
  static double make_uniform(std::uint32_t w0, std::uint32_t w1) {
    // 27 + 26 = 53 bits, value in [0, 1).
    return (double(w0 >> 5) * 67108864.0 + double(w1 >> 6)) *
           (1.0 / 9007199254740992.0);
  }

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> base_;
  std::array<std::uint32_t, 4> words_{};
  std::uint32_t block_index_ = 0;
  bool pending_ = false;
};

// Deterministic seed splitting: child seeds for replications / campaign
// points are
// Philox outputs in a dedicated domain, so they never alias trial streams.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t label) {
  auto words = Philox4x32::block(
      {0u, std::uint32_t(label), std::uint32_t(label >> 32),
       static_cast<std::uint32_t>(StreamDomain::seed_derive)},
      {std::uint32_t(base_seed), std::uint32_t(base_seed >> 32)});
  return (std::uint64_t(words[0]) << 32) | words[1];
}

// Inverse normal CDF: Acklam's rational approximation refined by one Halley
// step against erfc, giving ~1e-15 relative accuracy over (0, 1).
inline double normal_icdf(double u) {
  if (u <= 0.0) return -HUGE_VAL;
  if (u >= 1.0) return HUGE_VAL;

  static constexpr double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                  -2.759285104469687e+02, 1.383577518672690e+02,
                                  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                  -1.556989798598866e+02, 6.680131188771972e+01,
                                  -1.328068155288572e+01};
  static constexpr double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                  -2.400758277161838e+00, -2.549732539343734e+00,
                                  4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                  2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;

  double x;
  if (u < p_low) {
    double q = std::sqrt(-2.0 * std::log(u));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (u <= 1.0 - p_low) {
    double q = u - 0.5;
    double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    double q = std::sqrt(-2.0 * std::log(1.0 - u));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }

  // One Halley refinement: err = Phi(x) - u, with Phi via erfc for tail
  // accuracy.
  constexpr double sqrt2pi = 2.5066282746310005024;
  double err = 0.5 * std::erfc(-x * (1.0 / 1.4142135623730950488)) - u;
  double step = err * sqrt2pi * std::exp(0.5 * x * x);
  x -= step / (1.0 + 0.5 * x * step);
  return x;
}

}  // namespace kerrsim
