#include "core/stats.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace tscd {

namespace {

bool lyap_residual_ok(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q,
                      const Eigen::MatrixXd& p) {
  if (!p.allFinite()) return false;
  double scale = std::max(1.0, std::max(q.norm(), p.norm()));
  return (p - a * p * a.transpose() - q).norm() <= 1e-8 * scale;
}

double noise_variance(const NoiseSpec& s) {
  switch (s.dist) {
    case NoiseDist::Gauss:
      return s.scale * s.scale;
    case NoiseDist::Weibull:
      // shape 2: var = scale^2 * (Gamma(2) - Gamma(1.5)^2) = scale^2 * (1 - pi/4)
      return s.scale * s.scale * (1.0 - std::acos(-1.0) / 4.0);
    case NoiseDist::Binom:
      return s.scale / 4.0;  // n trials, p = 1/2
  }
  throw std::logic_error("unknown noise distribution");
}

}  // namespace

Eigen::MatrixXd dlyap_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows())
    throw std::invalid_argument("dlyap_solve: dimension mismatch");
  const double tol = 1e-12;
  Eigen::MatrixXd ak = a;
  Eigen::MatrixXd p = q;
  for (int it = 0; it < 60; ++it) {
    Eigen::MatrixXd delta = ak * p * ak.transpose();
    p += delta;
    if (!p.allFinite() || p.norm() > 1e120) break;
    if (delta.norm() <= tol * std::max(1.0, p.norm())) {
      if (lyap_residual_ok(a, q, p)) return p;
      break;
    }
    ak = (ak * ak).eval();
  }
  // Slow convergence or stagnation: direct solve of the vectorized system
  // (I - A (x) A) vec(P) = vec(Q) for moderate dimensions.
  const long n = a.rows();
  if (n <= 60) {
    Eigen::MatrixXd big = Eigen::MatrixXd::Identity(n * n, n * n);
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j)
        big.block(i * n, j * n, n, n) -= a(i, j) * a;
    Eigen::VectorXd vec_q(n * n);
    for (long c = 0; c < n; ++c) vec_q.segment(c * n, n) = q.col(c);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(big);
    if (lu.isInvertible()) {
      Eigen::VectorXd vec_p = lu.solve(vec_q);
      Eigen::MatrixXd p_direct(n, n);
      for (long c = 0; c < n; ++c) p_direct.col(c) = vec_p.segment(c * n, n);
      p_direct = 0.5 * (p_direct + p_direct.transpose().eval());
      if (lyap_residual_ok(a, q, p_direct) && p_direct.diagonal().minCoeff() >= -1e-9)
        return p_direct;
    }
  }
  throw std::runtime_error("dlyap_solve: system is not covariance stationary");
}

StationaryCov::StationaryCov(const GroundTruthModel& model, int max_lag) {
  model.validate();
  if (max_lag < 0) throw std::invalid_argument("StationaryCov: negative max_lag");
  n_ = model.n_vars;
  const int p = model.max_lag();

  for (const Link& l : model.links)
    if (l.func != LinkFunc::Linear)
      throw std::invalid_argument("StationaryCov: model has nonlinear links");

  // Structural form X_t = B0 X_t + sum_k Bk X_{t-k} + eps; reduce the
  // contemporaneous part out.
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(n_, n_);
  std::vector<Eigen::MatrixXd> bk(static_cast<size_t>(p) + 1,
                                  Eigen::MatrixXd::Zero(n_, n_));
  for (const Link& l : model.links) {
    if (l.tau == 0)
      b0(l.j, l.i) += l.coeff;
    else
      bk[static_cast<size_t>(l.tau)](l.j, l.i) += l.coeff;
  }
  Eigen::MatrixXd mix = (Eigen::MatrixXd::Identity(n_, n_) - b0).partialPivLu().solve(
      Eigen::MatrixXd::Identity(n_, n_));

  Eigen::MatrixXd noise_diag = Eigen::MatrixXd::Zero(n_, n_);
  for (int v = 0; v < n_; ++v) noise_diag(v, v) = noise_variance(model.noise[static_cast<size_t>(v)]);
  Eigen::MatrixXd sigma = mix * noise_diag * mix.transpose();  // reduced noise cov

  std::vector<Eigen::MatrixXd> ak(static_cast<size_t>(p) + 1);
  for (int k = 1; k <= p; ++k) ak[static_cast<size_t>(k)] = mix * bk[static_cast<size_t>(k)];

  gamma_.assign(static_cast<size_t>(max_lag) + 1, Eigen::MatrixXd::Zero(n_, n_));
  if (p == 0) {
    gamma_[0] = sigma;  // white process: all lagged covariances vanish
    return;
  }

  // Companion form Z_t = [X_t; ...; X_{t-p+1}] with P = E[Z Z^T].
  const int dim = n_ * p;
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 1; k <= p; ++k) comp.block(0, (k - 1) * n_, n_, n_) = ak[static_cast<size_t>(k)];
  if (p > 1)
    comp.block(n_, 0, n_ * (p - 1), n_ * (p - 1)) =
        Eigen::MatrixXd::Identity(n_ * (p - 1), n_ * (p - 1));
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(dim, dim);
  q.block(0, 0, n_, n_) = sigma;

  Eigen::MatrixXd big_p = dlyap_solve(comp, q);
  for (int tau = 0; tau <= max_lag && tau < p; ++tau)
    gamma_[static_cast<size_t>(tau)] = big_p.block(0, tau * n_, n_, n_);
  for (int tau = std::max(1, p); tau <= max_lag; ++tau) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n_, n_);
    for (int k = 1; k <= p; ++k) g += ak[static_cast<size_t>(k)] * gamma_[static_cast<size_t>(tau - k)];
    gamma_[static_cast<size_t>(tau)] = g;
  }
}

double StationaryCov::cov(const Node& a, const Node& b) const {
  if (a.var < 0 || a.var >= n_ || b.var < 0 || b.var >= n_ || a.lag < 0 || b.lag < 0)
    throw std::invalid_argument("StationaryCov::cov: node out of range");
  // Orient so that early has the larger lag; E[X^late_t X^early_{t-d}] is
  // entry (late, early) of gamma_[d].
  const Node& early = a.lag >= b.lag ? a : b;
  const Node& late = a.lag >= b.lag ? b : a;
  int d = early.lag - late.lag;
  if (d > max_lag()) throw std::invalid_argument("StationaryCov::cov: lag difference too large");
  return gamma_[static_cast<size_t>(d)](late.var, early.var);
}

double StationaryCov::parcorr(const Node& x, const Node& y,
                              const std::vector<Node>& cond) const {
  std::vector<Node> all{x, y};
  all.insert(all.end(), cond.begin(), cond.end());
  std::set<Node, NodeLess> uniq(all.begin(), all.end());
  if (uniq.size() != all.size())
    throw std::invalid_argument("StationaryCov::parcorr: repeated node");

  const long m = static_cast<long>(all.size());
  Eigen::MatrixXd joint(m, m);
  for (long i = 0; i < m; ++i)
    for (long j = 0; j < m; ++j)
      joint(i, j) = cov(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);

  Eigen::Matrix2d resid = joint.topLeftCorner<2, 2>();
  if (m > 2) {
    Eigen::MatrixXd css = joint.bottomRightCorner(m - 2, m - 2);
    Eigen::MatrixXd cas = joint.topRightCorner(2, m - 2);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(css);
    if (!lu.isInvertible())
      throw std::runtime_error("StationaryCov::parcorr: singular conditioning covariance");
    resid -= cas * lu.solve(cas.transpose());
  }
  double denom = std::sqrt(resid(0, 0) * resid(1, 1));
  if (!(denom > 0.0))
    throw std::runtime_error("StationaryCov::parcorr: degenerate residual variance");
  double r = resid(0, 1) / denom;
  return std::min(1.0, std::max(-1.0, r));
}

}  // namespace tscd
