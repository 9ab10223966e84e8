#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "core/model.hpp"

namespace tscd {

// Parameters of the random model generator. Defaults follow the benchmark
// setup: one cross link per variable, lags 0 with probability 0.3 and
// otherwise uniform on [1, p_ts], autodependencies a_j ~ U[max(0, a-0.3), a],
// coefficient magnitudes U[coeff_min, coeff_max] with random sign, noise
// scales U[0.5, 2].
struct ModelConfig {
  int n_total = 5;
  int n_links = -1;  // number of cross links; -1 means n_total
  double autocorr = 0.9;
  double coeff_min = 0.2;
  double coeff_max = 0.8;
  double contemp_frac = 0.3;
  int p_ts = 3;
  double latent_frac = 0.0;
  std::vector<LinkFunc> func_set{LinkFunc::Linear};
  bool mixed_noise = false;  // roughly a third of noises become Weibull shape 2
  bool discrete = false;     // binomial noise, bounded integer dynamics
  int n_bin = 4;

  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// Draws a random stationary model. Non-stationary draws are rejected and
// redrawn up to 1000 times (linear: exact companion criterion; nonlinear: a
// 500-step probe simulation with explosion threshold 1e4). Deterministic in
// the seed.
GroundTruthModel random_model(const ModelConfig& cfg, uint64_t seed);

// Simulates the process with zero initial state and a burn-in of
// max(200, 20 * max_lag) discarded steps, then returns the observed columns
// (sorted variable order), t_len rows. Contemporaneous assignments are
// evaluated in topological order; noise is drawn in variable order per step
// so the stream does not depend on that order. Throws on trajectory
// explosion (|value| > 1e4).
Eigen::MatrixXd simulate(const GroundTruthModel& model, int t_len, uint64_t seed);

}  // namespace tscd
