#pragma once

#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "core/discovery.hpp"

// Shared internals of the removal phases, the rule engine and the baselines.

namespace tscd {
namespace detail {

// Lpcmci: middle-mark gates, sepset votes with apds_t searches, dependence
// certification against every recorded set, weak minimization of rule-found
// sepsets. Standard: classic rule semantics with adjacency-based majority
// votes and raw sepset recording, as the baselines use them.
enum class RuleMode { Lpcmci, Standard };

bool contains(const std::vector<Node>& sorted, const Node& v);
std::vector<Node> nset_union(std::vector<Node> a, const std::vector<Node>& b);
std::vector<Node> nset_minus(std::vector<Node> a, const std::vector<Node>& b);
std::vector<Node> nset_intersect(const std::vector<Node>& a, const std::vector<Node>& b);
void nset_insert(std::vector<Node>& sorted, const Node& v);

// Runs the CI test, writing a trace line if configured. Queries whose nodes
// sit at negative lags (possible for re-tests of stored sets recorded by the
// baselines) are shifted up into valid lags first.
CIResult tested(const DiscoveryConfig& cfg, CITest& ci, const Node& x, const Node& y,
                std::vector<Node> cond, const char* action);

// Whether the query can be expressed inside the stationary window: after
// shifting negative lags up, every node must land within [0, tau_max].
// Stored sets rehydrated onto translated pair instances can fall outside;
// such queries have no in-window equivalent and are skipped by the callers.
bool window_query_ok(int tau_max, const Node& x, const Node& y, const std::vector<Node>& cond);

// Rebuilds the directed-link memory from the current graph, keeping earlier
// entries.
void sweep_ever_parents(DiscoveryState& st);

// Visits index combinations of size k out of base in lexicographic order; fn
// receives the chosen nodes and returns false to stop early. Returns false
// if stopped.
template <typename F>
bool for_each_subset(const std::vector<Node>& base, int k, F&& fn) {
  const int n = static_cast<int>(base.size());
  if (k < 0 || k > n) return true;
  std::vector<int> idx(k);
  for (int i = 0; i < k; ++i) idx[i] = i;
  std::vector<Node> pick(k);
  while (true) {
    for (int i = 0; i < k; ++i) pick[i] = base[idx[i]];
    if (!fn(pick)) return false;
    int i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) return true;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

struct Engine {
  DiscoveryState& st;
  CITest& ci;
  RuleMode mode = RuleMode::Lpcmci;

  // Vote collections per (pair, fresh-search flag), valid for one revision.
  uint64_t cache_rev = ~uint64_t{0};
  std::map<std::pair<PairKey, bool>, std::vector<std::vector<Node>>> collections;

  const std::vector<std::vector<Node>>& collection(const Node& a, const Node& c, bool with_fresh);
  Vote vote(const Node& a, const Node& c, const Node& b, VoteMode vmode);
  Vote recorded_vote(const Node& a, const Node& c, const Node& b);
};

Vote vote_over(const std::vector<std::vector<Node>>& sets, const Node& a, const Node& c,
               const Node& b);

// One rule evaluation pass: proposals are collected without touching the
// graph and applied as a batch afterwards.
struct Batch {
  struct MarkProposal {
    Node node;   // endpoint whose mark changes
    Node other;  // other endpoint of the edge
    Mark mark;
  };
  struct MiddleProposal {
    Node a, b;
    Middle middle;  // combined into the existing mark
  };
  struct RemovalProposal {
    Node a, b;
    std::vector<Node> sepset;  // window frame of (a, b)
  };
  std::vector<MarkProposal> marks;
  std::vector<MiddleProposal> middles;
  std::vector<RemovalProposal> removals;

  bool empty() const { return marks.empty() && middles.empty() && removals.empty(); }
};

Batch evaluate_rule(Engine& e, RuleId r);

// Applies a batch: removals win over orientations on the same edge, repeated
// contradictory mark proposals and contradictions with definite marks resolve
// to 'x', middle proposals combine, and removal sepsets are recorded (weakly
// minimized in Lpcmci mode). Returns whether anything changed.
bool apply_batch(Engine& e, const Batch& batch, bool lagged_only);

// Rule loop of one orientation phase; restarts at the first rule after any
// applied change. Returns whether any change was applied.
bool run_rules(Engine& e, const std::vector<RuleId>& rules, bool lagged_only);

}  // namespace detail
}  // namespace tscd
