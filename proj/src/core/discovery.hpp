#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "core/ci.hpp"
#include "core/graph.hpp"
#include "core/types.hpp"

namespace tscd {

// Orientation rules. The ER variants extend the classic FCI rules with
// middle-mark awareness, separating-set votes and dependence certification;
// R4 is the classic discriminating-path rule and ER4 its certifying variant.
// APR and MMR update middle marks only.
enum class RuleId {
  ER0a,
  ER0b,
  ER0c,
  ER0d,
  ER1,
  ER2,
  ER3,
  ER4,
  R4,
  ER8,
  ER9,
  ER10,
  APR,
  MMR,
};

const char* rule_name(RuleId r);

// Rule list run after removals inside the ancestral phase (orients lagged
// links only) and the full list run at phase ends and inside the
// non-ancestral phase.
std::vector<RuleId> default_lagged_rules();
std::vector<RuleId> default_full_rules();

// Canonical form of an unordered pair of window nodes: both nodes shifted in
// time so the later one sits at lag 0; for tau == 0 the convention i < j.
struct PairKey {
  int i = 0;
  int tau = 0;
  int j = 0;

  friend bool operator==(const PairKey& a, const PairKey& b) {
    return a.i == b.i && a.tau == b.tau && a.j == b.j;
  }
  friend bool operator<(const PairKey& a, const PairKey& b) {
    if (a.tau != b.tau) return a.tau < b.tau;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  }
};

PairKey pair_key(const Node& a, const Node& b);

// Translation of nodes into and out of the pair frame of (a, b): the frame
// shifts times so that the later of the two sits at lag 0.
Node to_pair_frame(const Node& a, const Node& b, const Node& v);
Node from_pair_frame(const Node& a, const Node& b, const Node& v);
std::vector<Node> to_pair_frame(const Node& a, const Node& b, std::vector<Node> vs);
std::vector<Node> from_pair_frame(const Node& a, const Node& b, std::vector<Node> vs);

// Lexicographic order on sorted node vectors, used to keep collections of
// separating sets deterministic.
struct NodeVecLess {
  bool operator()(const std::vector<Node>& x, const std::vector<Node>& y) const;
};

// Accumulating store of separating sets and of the minimum absolute test
// statistic seen per pair. Sets are stored in the pair frame of their key;
// adding never overwrites earlier sets.
class SepSetStore {
 public:
  // sepset holds window-frame nodes relative to the same time frame as (a, b).
  void add(const Node& a, const Node& b, std::vector<Node> sepset);
  const std::vector<std::vector<Node>>& sets(const Node& a, const Node& b) const;
  bool any(const Node& a, const Node& b) const;

  void lower_imin(const Node& a, const Node& b, double value);
  double imin(const Node& a, const Node& b) const;  // +infinity until first test

  void clear();
  size_t pair_count() const { return sets_.size(); }

 private:
  std::map<PairKey, std::vector<std::vector<Node>>> sets_;
  std::map<PairKey, double> imin_;
};

struct DiscoveryState;

struct DiscoveryConfig {
  int tau_max = 1;
  double alpha = 0.01;
  int k = 0;          // preliminary ancestral-phase iterations
  int max_cond = 3;   // cap on |S| in the non-ancestral search and in vote
                      // searches; -1 lifts the cap
  bool ancestral_only = false;  // stop after the ancestral phase
  std::vector<RuleId> lagged_rules = default_lagged_rules();
  std::vector<RuleId> full_rules = default_full_rules();
  std::ostream* trace = nullptr;  // JSON lines, one per executed CI test
  // Called after each removal application and orientation phase with a label;
  // used by tests to validate intermediate states.
  std::function<void(const DiscoveryState&, const std::string&)> checkpoint;
};

struct DiscoveryState {
  WindowGraph graph;
  SepSetStore sepsets;
  // Directed links (parent var, lag gap, child var) ever present since the
  // last re-initialization; superset of the current parents.
  std::set<std::array<int, 3>> ever_parents;
  DiscoveryConfig config;
  uint64_t revision = 0;  // bumped on every mutation batch

  DiscoveryState(int n_vars, DiscoveryConfig cfg);
};

enum class Vote { In, NotIn, Ambiguous };
enum class VoteMode { In, NotIn };

// Candidate conditioning nodes adjacent to center whose mark at the candidate
// is not a head, excluding other. Candidates at window lags only.
std::vector<Node> apds_t(const WindowGraph& g, const Node& center, const Node& other);

// Tighter candidate set for pairs where neither node is an ancestor of the
// other: the non-head adjacencies of center minus nodes tail-connected to
// other, plus nodes reachable by collider-like walks. Callers must have
// exhausted the unshielded-collider rule first.
std::vector<Node> napds_t(const WindowGraph& g, const Node& center, const Node& other);

// Classic Possible-D-Sep restricted to the window; used by the baselines.
std::vector<Node> pds_t(const WindowGraph& g, const Node& center, const Node& other);

// Nodes currently marked as a parent of a or of b, minus {a, b}.
std::vector<Node> current_parents(const WindowGraph& g, const Node& a, const Node& b);

// ever_parents entries materialized in the window frame of {a, b}, minus the
// pair itself.
std::vector<Node> ever_parents_of(const DiscoveryState& st, const Node& a, const Node& b);

// Nodes connected into {a, b} through chains of tail marks, i.e. known
// ancestors of a or b under the graph's orientations.
std::vector<Node> known_ancestors(const WindowGraph& g, const Node& a, const Node& b);

// Drops single elements outside known_anc while the set keeps separating,
// removing the element with the largest resulting p-value first. Errors if
// the input set does not separate the pair.
std::vector<Node> weakly_minimize(std::vector<Node> sepset, const Node& a, const Node& b,
                                  const std::vector<Node>& known_anc, CITest& ci, double alpha,
                                  std::ostream* trace = nullptr);

// Majority vote answering "is b in a separating set of (a, c)". NotIn-type
// queries vote over recorded sets plus a fresh subset search of the apds_t
// candidates with default parent conditioning; In-type queries include the
// fresh search only if b is adjacent to both a and c through edges with empty
// middle marks, and otherwise use recorded sets alone. Errors if no set is
// available at all.
Vote sepset_vote(DiscoveryState& st, CITest& ci, const Node& a, const Node& c, const Node& b,
                 VoteMode mode);

// One orientation phase: rules run in list order, any change restarts the
// list; per-rule proposals are collected exhaustively, conflicts resolved to
// 'x', and rule-found removals recorded with weakly minimized sepsets. With
// lagged_only, end-mark orientations of contemporaneous edges are suppressed
// (middle-mark updates are not).
void orientation_phase(DiscoveryState& st, CITest& ci, const std::vector<RuleId>& rules,
                       bool lagged_only);

// Ancestral removal phase: certifies or removes edges whose pairs have an
// ancestral relation, driving middle marks to '!' or empty.
void ancestral_removal(DiscoveryState& st, CITest& ci);

// Non-ancestral removal phase: same sweep over the napds_t candidate sets,
// driving every middle mark to empty.
void nonancestral_removal(DiscoveryState& st, CITest& ci);

// Full procedure: k preliminary ancestral iterations with parent carry-over
// across re-initializations, a final ancestral phase, then the non-ancestral
// phase (unless configured ancestral-only).
WindowGraph run_lpcmci(CITest& ci, int n_vars, const DiscoveryConfig& cfg);
WindowGraph run_lpcmci(CITest& ci, int n_vars, int tau_max, double alpha, int k);

// Baselines: constraint-based discovery with stationary edge bookkeeping but
// classic adjacency-based searches and rules.
WindowGraph run_svarfci(CITest& ci, int n_vars, const DiscoveryConfig& cfg);
WindowGraph run_svarfci(CITest& ci, int n_vars, int tau_max, double alpha);
WindowGraph run_svarrfci(CITest& ci, int n_vars, const DiscoveryConfig& cfg);
WindowGraph run_svarrfci(CITest& ci, int n_vars, int tau_max, double alpha);

}  // namespace tscd
