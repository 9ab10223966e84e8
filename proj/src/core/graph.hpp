#pragma once

#include <string>
#include <vector>

#include "core/types.hpp"

namespace tscd {

// Canonical identifier of an edge between X^i_{t-tau} and X^j_t. For tau == 0
// the convention i < j holds. Homologous (time-shifted) copies of an edge all
// map to the same key.
struct EdgeKey {
  int i = 0;
  int tau = 0;
  int j = 0;

  friend bool operator==(const EdgeKey& a, const EdgeKey& b) {
    return a.i == b.i && a.tau == b.tau && a.j == b.j;
  }
};

// Edge as seen from an ordered node pair (a, b): at_a / at_b are the marks at
// a and b respectively.
struct EdgeView {
  bool present = false;
  Mark at_a = Mark::Circle;
  Mark at_b = Mark::Circle;
  Middle middle = Middle::Unknown;
};

// Mixed graph over the nodes (variable, lag) for lags 0..tau_max with
// stationarity built in: an edge and all its time-shifted copies are one
// stored object, so orienting or removing one copy affects all of them.
//
// Queries accept nodes at arbitrary non-negative lags as long as the pair's
// lag difference is within tau_max; the pair is shifted to canonical form
// internally. Setters enforce the time-order invariant that the later node of
// a lagged edge never carries a tail or circle mark.
class WindowGraph {
 public:
  WindowGraph(int n_vars, int tau_max);

  // Complete graph as discovery algorithms start from: lagged edges
  // circle-head with middle 'L', contemporaneous edges circle-circle with
  // middle '?'.
  static WindowGraph complete_initial(int n_vars, int tau_max);

  int n_vars() const { return n_; }
  int tau_max() const { return taumax_; }

  // True if the pair can be represented at all (distinct nodes, lag
  // difference within tau_max, valid variable indices, non-negative lags).
  bool representable(const Node& a, const Node& b) const;

  EdgeView edge(const Node& a, const Node& b) const;
  bool adjacent(const Node& a, const Node& b) const;
  Mark mark_at(const Node& a, const Node& b) const;  // mark at a on edge a-b
  Middle middle(const Node& a, const Node& b) const;

  void set_edge(const Node& a, const Node& b, Mark at_a, Mark at_b, Middle m);
  void set_mark(const Node& a, const Node& b, Mark at_a);
  void set_middle(const Node& a, const Node& b, Middle m);
  void combine_middle(const Node& a, const Node& b, Middle m);
  void remove_edge(const Node& a, const Node& b);

  // Neighbors of a within the window (lags 0..tau_max), sorted by node_less.
  std::vector<Node> neighbors_in_window(const Node& a) const;

  // All window nodes, sorted by node_less (past to present).
  std::vector<Node> window_nodes() const;

  // Canonical edges, ordered by (tau, i, j).
  std::vector<std::pair<EdgeKey, EdgeView>> edges() const;
  size_t edge_count() const;

  bool operator==(const WindowGraph& other) const;
  bool operator!=(const WindowGraph& other) const { return !(*this == other); }

  std::string to_json() const;
  static WindowGraph from_json(const std::string& text);

 private:
  struct Slot {
    bool present = false;
    Mark mark_i = Mark::Circle;  // at the earlier endpoint (i, tau)
    Mark mark_j = Mark::Circle;  // at the later endpoint (j, 0)
    Middle middle = Middle::Unknown;
  };

  // Maps the pair to its canonical key plus the flag whether (a, b) arrived
  // in (earlier, later) order. Throws if the pair is not representable.
  EdgeKey canonical(const Node& a, const Node& b, bool* a_is_earlier) const;
  size_t index(const EdgeKey& k) const;
  Slot& slot(const EdgeKey& k) { return slots_[index(k)]; }
  const Slot& slot(const EdgeKey& k) const { return slots_[index(k)]; }
  void check_time_order(const EdgeKey& k, Mark mark_j) const;

  int n_ = 0;
  int taumax_ = 0;
  std::vector<Slot> slots_;
};

}  // namespace tscd
