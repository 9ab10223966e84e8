#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <vector>

#include "core/oracle.hpp"
#include "core/types.hpp"

namespace tscd {

struct CIResult {
  double stat = 0.0;    // effect-size statistic of the concrete test
  double pvalue = 1.0;
};

// Conditional independence test on window nodes (variable, lag) evaluated
// against a fixed dataset or ground truth. Implementations must be
// deterministic functions of the query.
class CITest {
 public:
  virtual ~CITest() = default;
  virtual CIResult test(const Node& x, const Node& y, const std::vector<Node>& cond) = 0;
  virtual std::string name() const = 0;
};

// Partial correlation via OLS residuals with intercept, t-distributed
// p-values with n - |cond| - 2 degrees of freedom. Rows are trimmed to the
// maximum lag of each query. Near-deterministic residuals are reported as
// dependent and counted in degenerate_count().
class ParCorrTest : public CITest {
 public:
  explicit ParCorrTest(Eigen::MatrixXd data);  // rows = time, cols = variables
  CIResult test(const Node& x, const Node& y, const std::vector<Node>& cond) override;
  std::string name() const override { return "parcorr"; }
  int degenerate_count() const { return degenerate_; }

 private:
  Eigen::MatrixXd data_;
  int degenerate_ = 0;
};

// G-squared likelihood-ratio test for discrete data: one contingency table
// of (x, y) per configuration of the conditioning variables, zero rows and
// columns dropped, statistics and degrees of freedom summed over strata.
// Total dof < 1 yields p = 1.
class GSquaredTest : public CITest {
 public:
  explicit GSquaredTest(Eigen::MatrixXd data);  // entries are category codes
  CIResult test(const Node& x, const Node& y, const std::vector<Node>& cond) override;
  std::string name() const override { return "gsquared"; }

 private:
  Eigen::MatrixXd data_;
};

// Adapter that answers queries from the ground-truth oracle: p = 1 for
// d-separated, p = 0 otherwise. Node indices refer to observed variables.
class OracleCI : public CITest {
 public:
  explicit OracleCI(const Oracle& oracle) : oracle_(oracle) {}
  CIResult test(const Node& x, const Node& y, const std::vector<Node>& cond) override;
  std::string name() const override { return "oracle"; }

 private:
  const Oracle& oracle_;
};

// Memoizing wrapper; the key is order-insensitive in (x, y) and in the
// conditioning set. Also counts lookups and evaluations of the inner test.
class CachedCI : public CITest {
 public:
  explicit CachedCI(CITest& inner) : inner_(inner) {}
  CIResult test(const Node& x, const Node& y, const std::vector<Node>& cond) override;
  std::string name() const override { return inner_.name(); }
  size_t lookups() const { return lookups_; }
  size_t evaluations() const { return evaluations_; }

 private:
  CITest& inner_;
  std::map<std::vector<int>, CIResult> cache_;
  size_t lookups_ = 0;
  size_t evaluations_ = 0;
};

}  // namespace tscd
