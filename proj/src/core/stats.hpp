#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/model.hpp"
#include "core/types.hpp"

namespace tscd {

// Solves the discrete Lyapunov equation P = A P A^T + Q by a squaring
// (doubling) iteration with tolerance 1e-12, falling back to a direct
// Kronecker-product solve for dimensions up to 60 when the iteration is slow
// to converge. Throws std::runtime_error if the system is not stable.
Eigen::MatrixXd dlyap_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q);

// Exact second-order statistics of a stationary linear structural process.
// Contemporaneous links are reduced out through (I - B0)^-1, lagged links
// enter a companion-form Lyapunov equation. Only noise variances matter:
// gauss scale^2, weibull (shape 2) scale^2 * (1 - pi/4), binomial n/4.
// Construction throws for nonlinear links or a non-stationary model.
class StationaryCov {
 public:
  StationaryCov(const GroundTruthModel& model, int max_lag);

  int max_lag() const { return static_cast<int>(gamma_.size()) - 1; }

  // Covariance of X^a.var_{t-a.lag} and X^b.var_{t-b.lag}, model indices,
  // lag difference at most max_lag.
  double cov(const Node& a, const Node& b) const;

  // Population partial correlation of x and y given cond (model indices).
  double parcorr(const Node& x, const Node& y, const std::vector<Node>& cond) const;

 private:
  int n_ = 0;
  std::vector<Eigen::MatrixXd> gamma_;  // gamma_[tau] = E[X_t X_{t-tau}^T]
};

}  // namespace tscd
