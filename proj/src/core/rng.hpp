#pragma once

#include <cstdint>
#include <random>

namespace tscd {

// Deterministic random source. The raw stream is std::mt19937_64 (whose
// output is fixed by the standard); all derived draws are hand-rolled so
// that streams are bit-identical across platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return std::ldexp(static_cast<double>(gen_() >> 11), -53); }

  // Standard normal via the polar method; pairs are cached.
  double normal();

  // Weibull with shape 2 by inverse transform.
  double weibull2(double scale);

  // Binomial(n, 1/2) as a sum of coin flips.
  int binom(int n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace tscd
