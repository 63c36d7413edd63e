#pragma once

#include <cmath>
#include <cstdint>

#include "hjprox/core.hpp"

namespace hjprox {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Deterministically derives an independent stream seed from (base, stream).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t state = base + 0x9E3779B97F4A7C15ull * (stream + 1);
  return splitmix64_next(state);
}

/// xoshiro256++ by Blackman and Vigna; state seeded through splitmix64 as the
/// authors recommend.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t st = seed;
    for (auto& w : s_) w = splitmix64_next(st);
  }

  std::uint64_t operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t s_[4];
};

namespace detail {

// 128-layer ziggurat tables for the standard normal (Doornik's layout).
struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kR = 3.442619855899;
  double x[kLayers + 1];
  double ratio[kLayers];

  ZigguratTables() {
    constexpr double kV = 9.91256303526217e-3;
    const double f = std::exp(-0.5 * kR * kR);
    x[0] = kV / f;
    x[1] = kR;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] +
                                       std::exp(-0.5 * x[i - 1] * x[i - 1])));
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// Seeded random stream producing uniforms and standard normals.
///
/// Normals come from a ziggurat, which is several times faster than
/// std::normal_distribution and matters here: the estimators in this library
/// routinely draw 1e8+ normals per call tree.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double next_unit() { return to_unit(engine_()); }

  /// Standard normal.
  double next_normal() {
    const auto& zig = detail::ziggurat();
    for (;;) {
      const std::uint64_t bits = engine_();
      const int i = static_cast<int>(bits & 0x7F);
      const double u = 2.0 * to_unit(bits) - 1.0;  // (-1, 1)
      if (std::abs(u) < zig.ratio[i]) return u * zig.x[i];
      if (i == 0) return tail_sample(u < 0.0);
      const double x = u * zig.x[i];
      const double f0 = std::exp(-0.5 * (zig.x[i] * zig.x[i] - x * x));
      const double f1 = std::exp(-0.5 * (zig.x[i + 1] * zig.x[i + 1] - x * x));
      if (f1 + next_unit() * (f0 - f1) < 1.0) return x;
    }
  }

  void fill_normal(double* out, Index n) {
    for (Index i = 0; i < n; ++i) out[i] = next_normal();
  }

  void fill_normal(Array& out) { fill_normal(out.data(), out.size()); }

 private:
  static double to_unit(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

  double tail_sample(bool negative) {
    constexpr double kR = detail::ZigguratTables::kR;
    double x, y;
    do {
      x = -std::log(1.0 - next_unit()) / kR;
      y = -std::log(1.0 - next_unit());
    } while (y + y < x * x);
    return negative ? -(kR + x) : kR + x;
  }

  Xoshiro256pp engine_;
};

}  // namespace hjprox
