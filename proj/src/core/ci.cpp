#include "core/ci.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace tscd {

namespace {

void check_query(const Node& x, const Node& y, const std::vector<Node>& cond, int n_cols) {
  auto check_node = [&](const Node& v) {
    if (v.var < 0 || v.var >= n_cols || v.lag < 0)
      throw std::invalid_argument("CI query node out of range");
  };
  check_node(x);
  check_node(y);
  for (const Node& c : cond) check_node(c);
  std::set<Node, NodeLess> uniq(cond.begin(), cond.end());
  uniq.insert(x);
  uniq.insert(y);
  if (uniq.size() != cond.size() + 2)
    throw std::invalid_argument("CI query has repeated nodes");
}

int query_max_lag(const Node& x, const Node& y, const std::vector<Node>& cond) {
  int m = std::max(x.lag, y.lag);
  for (const Node& c : cond) m = std::max(m, c.lag);
  return m;
}

// Fixed conditioning order so the design matrix is independent of the
// caller's set ordering.
std::vector<Node> sorted_cond(std::vector<Node> cond) {
  std::sort(cond.begin(), cond.end(), node_less);
  return cond;
}

}  // namespace

ParCorrTest::ParCorrTest(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() < 3 || data_.cols() < 1)
    throw std::invalid_argument("ParCorrTest: need at least 3 rows of data");
}

CIResult ParCorrTest::test(const Node& x, const Node& y, const std::vector<Node>& cond_in) {
  check_query(x, y, cond_in, static_cast<int>(data_.cols()));
  std::vector<Node> cond = sorted_cond(cond_in);

  const long t_total = data_.rows();
  const int lmax = query_max_lag(x, y, cond);
  const long n = t_total - lmax;
  const long k = static_cast<long>(cond.size());
  if (n < k + 3) {
    ++degenerate_;  // too few rows to estimate: claim dependence, never fabricate independence
    return {1.0, 0.0};
  }

  auto column = [&](const Node& v) {
    Eigen::VectorXd out(n);
    for (long r = 0; r < n; ++r) out(r) = data_(lmax + r - v.lag, v.var);
    return out;
  };
  Eigen::VectorXd xv = column(x), yv = column(y);

  Eigen::MatrixXd design(n, k + 1);
  design.col(0).setOnes();
  for (long c = 0; c < k; ++c) design.col(c + 1) = column(cond[static_cast<size_t>(c)]);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  Eigen::VectorXd rx = xv - design * cod.solve(xv);
  Eigen::VectorXd ry = yv - design * cod.solve(yv);

  double x_scale = (xv.array() - xv.mean()).matrix().squaredNorm();
  double y_scale = (yv.array() - yv.mean()).matrix().squaredNorm();
  if (x_scale <= 0.0 || y_scale <= 0.0) {
    ++degenerate_;  // constant input carries no evidence either way
    return {0.0, 1.0};
  }
  double nx = rx.squaredNorm(), ny = ry.squaredNorm();
  if (nx < 1e-12 * x_scale || ny < 1e-12 * y_scale) {
    ++degenerate_;  // residual collapsed: deterministic given the conditions
    return {1.0, 0.0};
  }

  double r = rx.dot(ry) / std::sqrt(nx * ny);
  r = std::min(1.0, std::max(-1.0, r));
  if (std::abs(r) >= 1.0 - 1e-12) return {r, 0.0};

  double dof = static_cast<double>(n - k - 2);
  double t = r * std::sqrt(dof / (1.0 - r * r));
  boost::math::students_t dist(dof);
  double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
  return {r, p};
}

GSquaredTest::GSquaredTest(Eigen::MatrixXd data) : data_(std::move(data)) {
  if (data_.rows() < 1 || data_.cols() < 1)
    throw std::invalid_argument("GSquaredTest: empty data");
}

CIResult GSquaredTest::test(const Node& x, const Node& y, const std::vector<Node>& cond_in) {
  check_query(x, y, cond_in, static_cast<int>(data_.cols()));
  std::vector<Node> cond = sorted_cond(cond_in);

  const long t_total = data_.rows();
  const int lmax = query_max_lag(x, y, cond);
  const long n = t_total - lmax;
  if (n < 1) return {0.0, 1.0};

  auto code = [&](long r, const Node& v) {
    return static_cast<long long>(std::llround(data_(lmax + r - v.lag, v.var)));
  };

  // stratum key -> (x value, y value) -> count
  std::map<std::vector<long long>, std::map<std::pair<long long, long long>, long>> strata;
  for (long r = 0; r < n; ++r) {
    std::vector<long long> key;
    key.reserve(cond.size());
    for (const Node& c : cond) key.push_back(code(r, c));
    ++strata[key][{code(r, x), code(r, y)}];
  }

  double g = 0.0;
  long dof = 0;
  for (const auto& [key, cells] : strata) {
    std::map<long long, long> row_tot, col_tot;
    long tot = 0;
    for (const auto& [xy, cnt] : cells) {
      row_tot[xy.first] += cnt;
      col_tot[xy.second] += cnt;
      tot += cnt;
    }
    long rows = static_cast<long>(row_tot.size());
    long cols = static_cast<long>(col_tot.size());
    if (rows < 2 || cols < 2) continue;  // no degrees of freedom in this stratum
    for (const auto& [xy, cnt] : cells) {
      double expected = static_cast<double>(row_tot[xy.first]) * col_tot[xy.second] / tot;
      g += 2.0 * cnt * std::log(cnt / expected);
    }
    dof += (rows - 1) * (cols - 1);
  }
  if (dof < 1) return {g, 1.0};
  boost::math::chi_squared dist(static_cast<double>(dof));
  double p = boost::math::cdf(boost::math::complement(dist, g));
  return {g, p};
}

CIResult OracleCI::test(const Node& x, const Node& y, const std::vector<Node>& cond) {
  check_query(x, y, cond, oracle_.n_observed());
  bool indep = oracle_.indep(x, y, cond);
  return indep ? CIResult{0.0, 1.0} : CIResult{1.0, 0.0};
}

CIResult CachedCI::test(const Node& x, const Node& y, const std::vector<Node>& cond) {
  ++lookups_;
  Node a = x, b = y;
  if (node_less(b, a)) std::swap(a, b);
  std::vector<Node> cs = sorted_cond(cond);
  std::vector<int> key{a.var, a.lag, b.var, b.lag};
  for (const Node& c : cs) {
    key.push_back(c.var);
    key.push_back(c.lag);
  }
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  ++evaluations_;
  CIResult res = inner_.test(x, y, cond);
  cache_.emplace(std::move(key), res);
  return res;
}

}  // namespace tscd
