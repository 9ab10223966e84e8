#pragma once

// Reference separation oracle used only by tests. Works on an explicit node
// list with marked edges and decides m-separation by enumerating all simple
// paths, the textbook definition. Exponential, fine for the tiny fixtures
// here. DAGs are the special case where every edge is tail-head, so the same
// routine doubles as a d-separation reference.

#include <algorithm>
#include <map>
#include <set>
#include <vector>

#include "core/model.hpp"
#include "core/types.hpp"

namespace tscd::test {

struct RefNode {
  int var = 0;
  int t = 0;  // absolute time index
  friend bool operator==(const RefNode& a, const RefNode& b) { return a.var == b.var && a.t == b.t; }
  friend bool operator<(const RefNode& a, const RefNode& b) {
    return a.t != b.t ? a.t < b.t : a.var < b.var;
  }
};

struct RefEdge {
  RefNode a, b;
  Mark at_a = Mark::Tail, at_b = Mark::Head;
};

struct RefGraph {
  std::vector<RefNode> nodes;
  std::vector<RefEdge> edges;

  std::vector<std::pair<RefNode, std::pair<Mark, Mark>>> incident(const RefNode& v) const {
    // Pairs (other endpoint, (mark at v, mark at other)).
    std::vector<std::pair<RefNode, std::pair<Mark, Mark>>> out;
    for (const RefEdge& e : edges) {
      if (e.a == v) out.push_back({e.b, {e.at_a, e.at_b}});
      else if (e.b == v) out.push_back({e.a, {e.at_b, e.at_a}});
    }
    return out;
  }

  // Ancestors of any node in S (via tail-head directed edges), including S.
  std::set<RefNode> anc_closure(const std::set<RefNode>& s) const {
    std::set<RefNode> out = s;
    bool grew = true;
    while (grew) {
      grew = false;
      for (const RefEdge& e : edges) {
        if (e.at_a == Mark::Tail && e.at_b == Mark::Head && out.count(e.b) && !out.count(e.a)) {
          out.insert(e.a);
          grew = true;
        }
        if (e.at_b == Mark::Tail && e.at_a == Mark::Head && out.count(e.a) && !out.count(e.b)) {
          out.insert(e.b);
          grew = true;
        }
      }
    }
    return out;
  }

  bool msep(const RefNode& x, const RefNode& y, const std::vector<RefNode>& cond) const {
    std::set<RefNode> s(cond.begin(), cond.end());
    std::set<RefNode> anc_s = anc_closure(s);
    std::vector<RefNode> path{x};
    std::vector<Mark> into;  // into[k] = mark at path[k+1] on edge (path[k], path[k+1])
    std::set<RefNode> on_path{x};
    return !connect_dfs(x, y, s, anc_s, path, into, on_path);
  }

 private:
  bool connect_dfs(const RefNode& cur, const RefNode& y, const std::set<RefNode>& s,
                   const std::set<RefNode>& anc_s, std::vector<RefNode>& path,
                   std::vector<Mark>& into, std::set<RefNode>& on_path) const {
    if (cur == y) return path_connects(path, into, s, anc_s);
    for (const auto& [next, marks] : incident(cur)) {
      if (on_path.count(next)) continue;
      path.push_back(next);
      into.push_back(marks.second);
      on_path.insert(next);
      // Record the mark at cur on this new edge so path_connects can see it.
      from_marks_.push_back(marks.first);
      bool hit = connect_dfs(next, y, s, anc_s, path, into, on_path);
      from_marks_.pop_back();
      on_path.erase(next);
      into.pop_back();
      path.pop_back();
      if (hit) return true;
    }
    return false;
  }

  bool path_connects(const std::vector<RefNode>& path, const std::vector<Mark>& into,
                     const std::set<RefNode>& s, const std::set<RefNode>& anc_s) const {
    // Interior node path[k] (k in 1..n-2): edge k-1 arrives with mark
    // into[k-1] at path[k]; edge k leaves with mark from_marks_[k] at path[k].
    for (size_t k = 1; k + 1 < path.size(); ++k) {
      bool collider = into[k - 1] == Mark::Head && from_marks_[k] == Mark::Head;
      if (collider) {
        if (!anc_s.count(path[k])) return false;
      } else {
        if (s.count(path[k])) return false;
      }
    }
    return true;
  }

  mutable std::vector<Mark> from_marks_;
};

// Unroll the model's time-series DAG over absolute times 0..T-1.
inline RefGraph unroll_model(const GroundTruthModel& m, int T) {
  RefGraph g;
  for (int t = 0; t < T; ++t)
    for (int v = 0; v < m.n_vars; ++v) g.nodes.push_back(RefNode{v, t});
  for (int t = 0; t < T; ++t) {
    for (const Link& l : m.links) {
      int ts = t - l.tau;
      if (ts < 0) continue;
      g.edges.push_back(RefEdge{RefNode{l.i, ts}, RefNode{l.j, t}, Mark::Tail, Mark::Head});
    }
  }
  return g;
}

}  // namespace tscd::test
