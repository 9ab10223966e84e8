#include "core/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace tscd {

double Rng::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  have_spare_ = true;
  return u * f;
}

double Rng::weibull2(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("Rng::weibull2: scale must be positive");
  return scale * std::sqrt(-std::log(1.0 - uniform()));
}

int Rng::binom(int n) {
  if (n < 0) throw std::invalid_argument("Rng::binom: negative trial count");
  int k = 0;
  for (int i = 0; i < n; ++i)
    if (uniform() < 0.5) ++k;
  return k;
}

}  // namespace tscd
