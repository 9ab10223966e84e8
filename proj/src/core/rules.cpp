#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "core/discovery_internal.hpp"

namespace tscd {
namespace detail {
namespace {

bool after(const Node& v, const Node& u) { return v.lag < u.lag; }

bool adj(const WindowGraph& g, const Node& x, const Node& y) {
  return g.representable(x, y) && g.adjacent(x, y);
}

// s -> t with definite tail and head; conflict marks do not qualify
bool fully_directed(const WindowGraph& g, const Node& s, const Node& t) {
  return adj(g, s, t) && g.mark_at(s, t) == Mark::Tail && g.mark_at(t, s) == Mark::Head;
}

// step u toward v on a potentially directed path; conflict marks break it
bool pd_step(const WindowGraph& g, const Node& u, const Node& v) {
  const Mark mu = g.mark_at(u, v);
  const Mark mv = g.mark_at(v, u);
  return (mu == Mark::Circle || mu == Mark::Tail) && (mv == Mark::Circle || mv == Mark::Head);
}

// [sigma plus current parents of x or y] minus x, y and nodes later than both
std::vector<Node> default_cond(const WindowGraph& g, const Node& x, const Node& y,
                               const std::vector<Node>& sigma) {
  const std::vector<Node> cond = nset_union(sigma, current_parents(g, x, y));
  std::vector<Node> out;
  out.reserve(cond.size());
  for (const Node& v : cond) {
    if (v == x || v == y) continue;
    if (after(v, x) && after(v, y)) continue;
    out.push_back(v);
  }
  return out;
}

// rule-level separating-set question; the baselines answer it from recorded
// sets alone while the full engine runs the vote machinery
Vote rule_vote(Engine& e, const Node& a, const Node& c, const Node& b, VoteMode vm) {
  if (e.mode == RuleMode::Standard) return e.recorded_vote(a, c, b);
  return e.vote(a, c, b, vm);
}

// separating-set candidates of (a, c) brought back into the window frame
std::vector<std::vector<Node>> sigmas_for(Engine& e, const Node& a, const Node& c) {
  std::vector<std::vector<Node>> out;
  for (const auto& s : e.collection(a, c, true)) out.push_back(from_pair_frame(a, c, s));
  return out;
}

Batch eval_er0a(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  const double alpha = e.st.config.alpha;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (size_t x = 0; x < nb.size(); ++x) {
      for (size_t y = x + 1; y < nb.size(); ++y) {
        const Node a = nb[x];
        const Node c = nb[y];
        if (adj(g, a, c)) continue;
        const bool plain_ab = g.middle(a, b) == Middle::Empty;
        const bool plain_cb = g.middle(c, b) == Middle::Empty;
        bool certified = plain_ab && plain_cb;
        if (!certified) {
          // dependence of both edges must be witnessed under one shared set;
          // every independence found on the way marks that edge for removal
          for (const auto& sigma : sigmas_for(e, a, c)) {
            bool ok_ab = plain_ab;
            bool ok_cb = plain_cb;
            if (!plain_ab) {
              std::vector<Node> cond = default_cond(g, a, b, sigma);
              if (window_query_ok(e.st.config.tau_max, a, b, cond)) {
                const CIResult r = tested(e.st.config, e.ci, a, b, cond, "rule-test");
                if (r.pvalue > alpha) {
                  out.removals.push_back({a, b, std::move(cond)});
                } else {
                  ok_ab = true;
                }
              }
            }
            if (!plain_cb) {
              std::vector<Node> cond = default_cond(g, c, b, sigma);
              if (window_query_ok(e.st.config.tau_max, c, b, cond)) {
                const CIResult r = tested(e.st.config, e.ci, c, b, cond, "rule-test");
                if (r.pvalue > alpha) {
                  out.removals.push_back({c, b, std::move(cond)});
                } else {
                  ok_cb = true;
                }
              }
            }
            if (ok_ab && ok_cb) certified = true;
          }
        }
        if (!certified) continue;
        const Mark mba = g.mark_at(b, a);
        const Mark mbc = g.mark_at(b, c);
        if (mba == Mark::Tail || mba == Mark::Conflict) continue;
        if (mbc == Mark::Tail || mbc == Mark::Conflict) continue;
        if (rule_vote(e, a, c, b, VoteMode::NotIn) != Vote::NotIn) continue;
        out.marks.push_back({b, a, Mark::Head});
        out.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  return out;
}

// shared middle-mark condition of the partial collider rules: the search
// centered on b has been exhausted for the (b, c) pair
bool exhausted_toward(const WindowGraph& g, const Node& b, const Node& c) {
  const Middle mid = g.middle(b, c);
  // the empty mark and the '!' mark both subsume the single-letter cases
  return mid == Middle::Empty || mid == Middle::Both ||
         (mid == Middle::Right && node_less(b, c)) || (mid == Middle::Left && node_less(c, b));
}

Batch eval_er0b(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  const double alpha = e.st.config.alpha;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || adj(g, a, c)) continue;
        if (g.mark_at(b, a) != Mark::Head) continue;
        if (g.mark_at(b, c) != Mark::Circle) continue;
        if (g.mark_at(c, b) == Mark::Conflict) continue;
        if (!exhausted_toward(g, b, c)) continue;
        bool certified = g.middle(a, b) == Middle::Empty;
        if (!certified) {
          for (const auto& sigma : sigmas_for(e, a, c)) {
            std::vector<Node> cond = default_cond(g, a, b, sigma);
            if (!window_query_ok(e.st.config.tau_max, a, b, cond)) continue;
            const CIResult r = tested(e.st.config, e.ci, a, b, cond, "rule-test");
            if (r.pvalue > alpha) {
              out.removals.push_back({a, b, std::move(cond)});
            } else {
              certified = true;
            }
          }
        }
        if (!certified) continue;
        if (rule_vote(e, a, c, b, VoteMode::NotIn) != Vote::NotIn) continue;
        out.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  return out;
}

Batch eval_er0c(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || adj(g, a, c)) continue;
        if (g.middle(a, b) != Middle::Empty) continue;
        if (g.mark_at(b, c) != Mark::Circle) continue;
        if (g.mark_at(c, b) == Mark::Conflict) continue;
        if (!exhausted_toward(g, b, c)) continue;
        if (rule_vote(e, a, c, b, VoteMode::NotIn) != Vote::NotIn) continue;
        out.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  return out;
}

Batch eval_er0d(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || adj(g, a, c)) continue;
        if (g.middle(a, b) != Middle::Empty || g.middle(c, b) != Middle::Empty) continue;
        if (g.mark_at(b, c) != Mark::Circle) continue;
        const Mark mba = g.mark_at(b, a);
        if (mba != Mark::Circle && mba != Mark::Head) continue;
        if (rule_vote(e, a, c, b, VoteMode::NotIn) != Vote::NotIn) continue;
        out.marks.push_back({b, a, Mark::Head});
        out.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  return out;
}

Batch eval_er1(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || adj(g, a, c)) continue;
        if (g.mark_at(b, a) != Mark::Head) continue;
        if (g.mark_at(b, c) != Mark::Circle) continue;
        if (g.mark_at(c, b) == Mark::Conflict) continue;
        if (rule_vote(e, a, c, b, VoteMode::In) != Vote::In) continue;
        out.marks.push_back({b, c, Mark::Tail});
        out.marks.push_back({c, b, Mark::Head});
      }
    }
  }
  return out;
}

Batch eval_er2(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || !adj(g, a, c)) continue;
        if (g.mark_at(a, c) == Mark::Conflict) continue;
        if (g.mark_at(c, a) != Mark::Circle) continue;
        const bool chain1 = fully_directed(g, a, b) && g.mark_at(c, b) == Mark::Head;
        const bool chain2 = g.mark_at(b, a) == Mark::Head && fully_directed(g, b, c);
        if (!chain1 && !chain2) continue;
        out.marks.push_back({c, a, Mark::Head});
      }
    }
  }
  return out;
}

Batch eval_er3(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (size_t x = 0; x < nb.size(); ++x) {
      for (size_t y = x + 1; y < nb.size(); ++y) {
        const Node a = nb[x];
        const Node c = nb[y];
        if (adj(g, a, c)) continue;
        if (g.mark_at(b, a) != Mark::Head || g.mark_at(b, c) != Mark::Head) continue;
        for (const Node& d : nb) {
          if (d == a || d == c) continue;
          if (g.mark_at(b, d) != Mark::Circle) continue;
          if (g.mark_at(d, b) == Mark::Conflict) continue;
          if (!adj(g, a, d) || !adj(g, d, c)) continue;
          if (g.mark_at(d, a) != Mark::Circle || g.mark_at(a, d) == Mark::Conflict) continue;
          if (g.mark_at(d, c) != Mark::Circle || g.mark_at(c, d) == Mark::Conflict) continue;
          if (rule_vote(e, a, c, d, VoteMode::In) != Vote::In) continue;
          out.marks.push_back({b, d, Mark::Head});
        }
      }
    }
  }
  return out;
}

// one discriminating path per reachable far endpoint, shortest first
struct DiscPath {
  Node theta;
  std::vector<Node> nodes;  // theta, colliders..., alpha, beta
};

std::vector<DiscPath> discriminating_paths(const WindowGraph& g, const Node& beta, const Node& c,
                                           const Node& alpha) {
  std::vector<DiscPath> out;
  std::map<Node, Node, NodeLess> succ;  // collider -> next node toward beta
  std::set<Node, NodeLess> visited{alpha, beta, c};
  std::deque<Node> queue{alpha};
  while (!queue.empty()) {
    const Node v = queue.front();
    queue.pop_front();
    for (const Node& w : g.neighbors_in_window(v)) {
      if (visited.count(w)) continue;
      if (g.mark_at(v, w) != Mark::Head) continue;  // v keeps its collider status
      if (!adj(g, w, c)) {
        visited.insert(w);
        DiscPath p;
        p.theta = w;
        p.nodes.push_back(w);
        for (Node cur = v;; cur = succ.at(cur)) {
          p.nodes.push_back(cur);
          if (cur == alpha) break;
        }
        p.nodes.push_back(beta);
        out.push_back(std::move(p));
        continue;
      }
      if (fully_directed(g, w, c) && g.mark_at(w, v) == Mark::Head) {
        visited.insert(w);
        succ.emplace(w, v);
        queue.push_back(w);
      }
    }
  }
  return out;
}

void discriminating_votes(Engine& e, const Node& theta, const Node& c, const Node& beta,
                          const Node& alpha, Batch& out) {
  const Vote vin = rule_vote(e, theta, c, beta, VoteMode::In);
  const Vote vni = rule_vote(e, theta, c, beta, VoteMode::NotIn);
  if (vin == Vote::In) {
    out.marks.push_back({beta, c, Mark::Tail});
    out.marks.push_back({c, beta, Mark::Head});
  }
  if (vni == Vote::NotIn) {
    out.marks.push_back({beta, alpha, Mark::Head});
    out.marks.push_back({beta, c, Mark::Head});
    out.marks.push_back({c, beta, Mark::Head});
  }
}

Batch eval_r4(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& beta : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(beta);
    for (const Node& c : nb) {
      if (g.mark_at(beta, c) != Mark::Circle) continue;
      for (const Node& alpha : nb) {
        if (alpha == c) continue;
        if (g.mark_at(alpha, beta) != Mark::Head) continue;
        if (!fully_directed(g, alpha, c)) continue;
        for (const auto& p : discriminating_paths(g, beta, c, alpha))
          discriminating_votes(e, p.theta, c, beta, alpha, out);
      }
    }
  }
  return out;
}

// dependence of every edge on the path under sigma; failures mark removals
bool er4_certify(Engine& e, const std::vector<Node>& path, const std::vector<Node>& sigma,
                 Batch& out) {
  const WindowGraph& g = e.st.graph;
  bool all_dependent = true;
  for (size_t i = 0; i + 1 < path.size(); ++i) {
    const Node& x = path[i];
    const Node& y = path[i + 1];
    std::vector<Node> cond;
    if (e.mode == RuleMode::Lpcmci) {
      if (adj(g, x, y) && g.middle(x, y) == Middle::Empty) continue;
      cond = default_cond(g, x, y, sigma);
    } else {
      std::vector<Node> pairv{x, y};
      if (node_less(y, x)) std::swap(pairv[0], pairv[1]);
      cond = nset_minus(sigma, pairv);
    }
    if (!window_query_ok(e.st.config.tau_max, x, y, cond)) {
      all_dependent = false;
      continue;
    }
    const CIResult r = tested(e.st.config, e.ci, x, y, cond, "rule-test");
    if (r.pvalue > e.st.config.alpha) {
      out.removals.push_back({x, y, std::move(cond)});
      all_dependent = false;
    }
  }
  return all_dependent;
}

std::vector<std::vector<Node>> er4_sigmas(Engine& e, const Node& theta, const Node& c) {
  std::vector<std::vector<Node>> out;
  if (e.mode == RuleMode::Lpcmci) {
    for (const auto& s : e.collection(theta, c, true)) out.push_back(from_pair_frame(theta, c, s));
  } else {
    for (const auto& s : e.st.sepsets.sets(theta, c)) out.push_back(from_pair_frame(theta, c, s));
  }
  return out;
}

Batch eval_er4(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& beta : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(beta);
    for (const Node& c : nb) {
      if (g.mark_at(beta, c) != Mark::Circle) continue;
      for (const Node& alpha : nb) {
        if (alpha == c) continue;
        if (g.mark_at(alpha, beta) != Mark::Head) continue;
        if (!fully_directed(g, alpha, c)) continue;
        for (const auto& p : discriminating_paths(g, beta, c, alpha)) {
          bool certified = false;
          for (const auto& sigma : er4_sigmas(e, p.theta, c))
            if (er4_certify(e, p.nodes, sigma, out)) certified = true;
          if (!certified) continue;
          discriminating_votes(e, p.theta, c, beta, alpha, out);
        }
      }
    }
  }
  return out;
}

Batch eval_er8(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (const Node& a : nb) {
      for (const Node& c : nb) {
        if (a == c || !adj(g, a, c)) continue;
        if (!fully_directed(g, a, b) || !fully_directed(g, b, c)) continue;
        if (g.mark_at(a, c) != Mark::Circle) continue;
        if (g.mark_at(c, a) == Mark::Conflict) continue;
        out.marks.push_back({a, c, Mark::Tail});
        out.marks.push_back({c, a, Mark::Head});
      }
    }
  }
  return out;
}

// uncovered potentially directed path search shared by the tail rules; every
// step beyond the entry edge needs a directed edge or a winning vote
bool tail_path_dfs(Engine& e, std::vector<Node>& path, const Node& target, const Node& start_back) {
  const WindowGraph& g = e.st.graph;
  const Node u = path.back();
  for (const Node& v : g.neighbors_in_window(u)) {
    if (std::find(path.begin(), path.end(), v) != path.end()) continue;
    if (!pd_step(g, u, v)) continue;
    const size_t t = path.size() - 1;
    if (t == 0) {
      if (v == target || adj(g, v, target)) continue;
    } else if (adj(g, path[t - 1], v)) {
      continue;
    }
    if (e.mode == RuleMode::Lpcmci && !fully_directed(g, u, v)) {
      const Node& back = (t == 0) ? start_back : path[t - 1];
      if (rule_vote(e, v, back, u, VoteMode::In) != Vote::In) continue;
    }
    if (v == target) return true;
    path.push_back(v);
    if (tail_path_dfs(e, path, target, start_back)) return true;
    path.pop_back();
  }
  return false;
}

Batch eval_er9(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& a1 : g.window_nodes()) {
    for (const Node& an : g.neighbors_in_window(a1)) {
      if (g.mark_at(a1, an) != Mark::Circle) continue;
      if (g.mark_at(an, a1) != Mark::Head) continue;
      std::vector<Node> path{a1};
      if (!tail_path_dfs(e, path, an, an)) continue;
      out.marks.push_back({a1, an, Mark::Tail});
      out.marks.push_back({an, a1, Mark::Head});
    }
  }
  return out;
}

// first-step nodes of valid uncovered potentially directed paths a -> target;
// the entry edge itself carries no side condition
std::vector<Node> path_firsts(Engine& e, const Node& a, const Node& target) {
  const WindowGraph& g = e.st.graph;
  std::vector<Node> firsts;
  for (const Node& b1 : g.neighbors_in_window(a)) {
    if (!pd_step(g, a, b1)) continue;
    if (b1 == target) {
      firsts.push_back(b1);
      continue;
    }
    std::vector<Node> path{a, b1};
    auto dfs = [&](auto&& self) -> bool {
      const Node u = path.back();
      for (const Node& v : g.neighbors_in_window(u)) {
        if (std::find(path.begin(), path.end(), v) != path.end()) continue;
        if (!pd_step(g, u, v)) continue;
        const size_t t = path.size() - 1;
        if (adj(g, path[t - 1], v)) continue;
        if (e.mode == RuleMode::Lpcmci && !fully_directed(g, u, v)) {
          if (rule_vote(e, v, path[t - 1], u, VoteMode::In) != Vote::In) continue;
        }
        if (v == target) return true;
        path.push_back(v);
        if (self(self)) return true;
        path.pop_back();
      }
      return false;
    };
    if (dfs(dfs)) firsts.push_back(b1);
  }
  return firsts;
}

Batch eval_er10(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const Node& a : g.window_nodes()) {
    for (const Node& d : g.neighbors_in_window(a)) {
      if (g.mark_at(a, d) != Mark::Circle) continue;
      if (g.mark_at(d, a) != Mark::Head) continue;
      std::vector<Node> ins;
      for (const Node& x : g.neighbors_in_window(d))
        if (x != a && fully_directed(g, x, d)) ins.push_back(x);
      bool oriented = false;
      for (size_t x = 0; x < ins.size() && !oriented; ++x) {
        const std::vector<Node> fb = path_firsts(e, a, ins[x]);
        if (fb.empty()) continue;
        for (size_t y = x + 1; y < ins.size() && !oriented; ++y) {
          const std::vector<Node> fc = path_firsts(e, a, ins[y]);
          for (const Node& b1 : fb) {
            for (const Node& c1 : fc) {
              if (b1 == c1 || adj(g, b1, c1)) continue;
              if (e.mode == RuleMode::Lpcmci &&
                  rule_vote(e, b1, c1, a, VoteMode::In) != Vote::In)
                continue;
              out.marks.push_back({a, d, Mark::Tail});
              out.marks.push_back({d, a, Mark::Head});
              oriented = true;
              break;
            }
            if (oriented) break;
          }
        }
      }
    }
  }
  return out;
}

Batch eval_apr(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const auto& [key, view] : g.edges()) {
    const Node na{key.i, key.tau};
    const Node nb{key.j, 0};
    Node s = na;
    Node t = nb;
    if (view.at_a == Mark::Tail && view.at_b == Mark::Head) {
      // keep s -> t
    } else if (view.at_a == Mark::Head && view.at_b == Mark::Tail) {
      std::swap(s, t);
    } else {
      continue;
    }
    const bool src_smaller = node_less(s, t);
    if ((view.middle == Middle::Left && !src_smaller) ||
        (view.middle == Middle::Right && src_smaller))
      out.middles.push_back({na, nb, Middle::Empty});
  }
  return out;
}

Batch eval_mmr(Engine& e) {
  Batch out;
  const WindowGraph& g = e.st.graph;
  for (const auto& [key, view] : g.edges()) {
    if (view.middle == Middle::Empty || view.middle == Middle::Both) continue;
    const Node na{key.i, key.tau};
    const Node nb{key.j, 0};
    // na sorts before nb, so a head at nb resolves '?' to L and R to the
    // empty mark, while a head at na resolves '?' to R and L to the empty mark
    const bool head_early = view.at_a == Mark::Head;
    const bool head_late = view.at_b == Mark::Head;
    Middle target = view.middle;
    if (view.middle == Middle::Unknown) {
      if (head_early && head_late)
        target = Middle::Empty;
      else if (head_late)
        target = Middle::Left;
      else if (head_early)
        target = Middle::Right;
    } else if (view.middle == Middle::Left && head_early) {
      target = Middle::Empty;
    } else if (view.middle == Middle::Right && head_late) {
      target = Middle::Empty;
    }
    if (target != view.middle) out.middles.push_back({na, nb, target});
  }
  return out;
}

}  // namespace

Batch evaluate_rule(Engine& e, RuleId r) {
  switch (r) {
    case RuleId::ER0a:
      return eval_er0a(e);
    case RuleId::ER0b:
      return eval_er0b(e);
    case RuleId::ER0c:
      return eval_er0c(e);
    case RuleId::ER0d:
      return eval_er0d(e);
    case RuleId::ER1:
      return eval_er1(e);
    case RuleId::ER2:
      return eval_er2(e);
    case RuleId::ER3:
      return eval_er3(e);
    case RuleId::ER4:
      return eval_er4(e);
    case RuleId::R4:
      return eval_r4(e);
    case RuleId::ER8:
      return eval_er8(e);
    case RuleId::ER9:
      return eval_er9(e);
    case RuleId::ER10:
      return eval_er10(e);
    case RuleId::APR:
      return eval_apr(e);
    case RuleId::MMR:
      return eval_mmr(e);
  }
  throw std::logic_error("unknown rule id");
}

bool apply_batch(Engine& e, const Batch& batch, bool lagged_only) {
  DiscoveryState& st = e.st;
  WindowGraph& g = st.graph;
  bool changed = false;

  std::set<PairKey> removed;
  for (const auto& r : batch.removals) removed.insert(pair_key(r.a, r.b));

  // endpoint orientations; repeated contradictory proposals resolve to 'x'.
  // Proposals are deduplicated per side of the representative edge so that
  // consistent marks from translated instances of one edge do not collide.
  struct SideKey {
    PairKey pk;
    bool at_earlier;  // side of the earlier node, or the smaller variable
    bool operator<(const SideKey& o) const {
      if (!(pk == o.pk)) return pk < o.pk;
      return at_earlier < o.at_earlier;
    }
  };
  std::map<SideKey, std::tuple<Node, Node, Mark>> sides;
  for (const auto& p : batch.marks) {
    const PairKey pk = pair_key(p.node, p.other);
    if (removed.count(pk)) continue;
    if (lagged_only && p.node.lag == p.other.lag) continue;
    const SideKey key{pk, node_less(p.node, p.other)};
    auto [it, fresh] = sides.try_emplace(key, std::make_tuple(p.node, p.other, p.mark));
    if (!fresh && std::get<2>(it->second) != p.mark) std::get<2>(it->second) = Mark::Conflict;
  }
  for (const auto& [side, om] : sides) {
    const Node& node = std::get<0>(om);
    const Node& other = std::get<1>(om);
    const Mark proposed = std::get<2>(om);
    if (!adj(g, node, other)) continue;
    const Mark existing = g.mark_at(node, other);
    if (existing == proposed || existing == Mark::Conflict) continue;
    // contradictions with definite marks placed earlier also resolve to 'x'
    const Mark target = existing == Mark::Circle ? proposed : Mark::Conflict;
    g.set_mark(node, other, target);
    changed = true;
  }

  for (const auto& m : batch.middles) {
    if (removed.count(pair_key(m.a, m.b))) continue;
    if (!adj(g, m.a, m.b)) continue;
    const Middle cur = g.middle(m.a, m.b);
    const Middle next = combine_middle_marks(cur, m.middle);
    if (next == cur) continue;
    g.set_middle(m.a, m.b, next);
    changed = true;
  }

  // removals last; every proposed separating set is kept
  for (const auto& r : batch.removals) {
    if (adj(g, r.a, r.b)) {
      g.remove_edge(r.a, r.b);
      changed = true;
    }
    std::vector<Node> sep = r.sepset;
    if (e.mode == RuleMode::Lpcmci) {
      sep = weakly_minimize(std::move(sep), r.a, r.b, known_ancestors(g, r.a, r.b), e.ci,
                            st.config.alpha, st.config.trace);
    }
    st.sepsets.add(r.a, r.b, std::move(sep));
  }

  if (changed) {
    ++st.revision;
    sweep_ever_parents(st);
  }
  return changed;
}

bool run_rules(Engine& e, const std::vector<RuleId>& rules, bool lagged_only) {
  bool any = false;
  size_t i = 0;
  while (i < rules.size()) {
    const Batch batch = evaluate_rule(e, rules[i]);
    if (!batch.empty() && apply_batch(e, batch, lagged_only)) {
      any = true;
      i = 0;
    } else {
      ++i;
    }
  }
  return any;
}

}  // namespace detail
}  // namespace tscd
