#pragma once

#include <string>
#include <vector>

#include "core/types.hpp"

namespace tscd {

enum class LinkFunc : uint8_t { Linear, NonlinF1 };

// Structural link: cause (i, t - tau) enters the equation of effect (j, t)
// with the given coefficient and link function.
struct Link {
  int i = 0;
  int tau = 0;
  int j = 0;
  double coeff = 0.0;
  LinkFunc func = LinkFunc::Linear;
};

enum class NoiseDist : uint8_t { Gauss, Weibull, Binom };

// Per-variable innovation term. For gauss the scale is the standard
// deviation, for weibull the scale parameter of a shape-2 Weibull (centered
// to zero mean), for binom the number of trials of the discrete dynamics.
struct NoiseSpec {
  NoiseDist dist = NoiseDist::Gauss;
  double scale = 1.0;
};

// Ground-truth structural causal model of a stationary process. Variables
// not listed in `observed` are latent.
struct GroundTruthModel {
  int n_vars = 0;
  std::vector<Link> links;
  std::vector<int> observed;
  std::vector<NoiseSpec> noise;

  int max_lag() const;
  bool is_observed(int var) const;
  // Index of var within `observed`, or -1.
  int observed_index(int var) const;

  // Throws std::invalid_argument on structural problems: out-of-range
  // variables, negative lags, contemporaneous self-links or cycles,
  // duplicate links, bad observed list, noise list size mismatch.
  void validate() const;

  std::string to_json() const;
  static GroundTruthModel from_json(const std::string& text);
};

const char* link_func_name(LinkFunc f);
LinkFunc link_func_from_name(const std::string& s);
const char* noise_dist_name(NoiseDist d);
NoiseDist noise_dist_from_name(const std::string& s);

// The bounded nonlinearity used by the synthetic models:
// f(x) = (1 + 5 x e^{-x^2/20}) x.
double nonlin_f1(double x);
double eval_link_func(LinkFunc f, double x);

}  // namespace tscd
