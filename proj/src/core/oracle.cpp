#include "core/oracle.hpp"

#include <algorithm>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace tscd {

namespace {

std::string node_str(const Node& v) {
  std::ostringstream os;
  os << "(" << v.var << ", " << v.lag << ")";
  return os.str();
}

// Ancestral closure within the window of a marked graph: every node with a
// directed path (tail-head edges) into the seed set, including the seeds.
std::set<Node, NodeLess> mag_anc_closure(const WindowGraph& g, std::set<Node, NodeLess> seed) {
  bool grew = true;
  while (grew) {
    grew = false;
    for (const Node& v : g.window_nodes()) {
      if (seed.count(v)) continue;
      for (const Node& w : g.neighbors_in_window(v)) {
        if (!seed.count(w)) continue;
        EdgeView e = g.edge(v, w);
        if (e.at_a == Mark::Tail && e.at_b == Mark::Head) {
          seed.insert(v);
          grew = true;
          break;
        }
      }
    }
  }
  return seed;
}

}  // namespace

bool mag_msep(const WindowGraph& g, const Node& x, const Node& y, const std::vector<Node>& cond) {
  if (x == y) throw std::invalid_argument("mag_msep: identical endpoints");
  std::set<Node, NodeLess> s(cond.begin(), cond.end());
  if (s.count(x) || s.count(y)) throw std::invalid_argument("mag_msep: endpoint conditioned on");
  if (g.adjacent(x, y)) return false;
  std::set<Node, NodeLess> anc_s = mag_anc_closure(g, s);

  // Walk states (node, arrived through an edge with a head at node).
  auto state_less = [](const std::pair<Node, bool>& a, const std::pair<Node, bool>& b) {
    if (a.first != b.first) return node_less(a.first, b.first);
    return a.second < b.second;
  };
  std::set<std::pair<Node, bool>, decltype(state_less)> seen(state_less);
  std::deque<std::pair<Node, bool>> queue;
  for (const Node& u : g.neighbors_in_window(x)) {
    bool head_in = g.edge(x, u).at_b == Mark::Head;
    if (seen.insert({u, head_in}).second) queue.push_back({u, head_in});
  }
  while (!queue.empty()) {
    auto [u, head_in] = queue.front();
    queue.pop_front();
    if (u == y) return false;
    for (const Node& w : g.neighbors_in_window(u)) {
      if (w == x) continue;
      EdgeView e = g.edge(u, w);
      bool collider_here = head_in && e.at_a == Mark::Head;
      bool passable = collider_here ? anc_s.count(u) > 0 : s.count(u) == 0;
      if (!passable) continue;
      bool next_head = e.at_b == Mark::Head;
      if (seen.insert({w, next_head}).second) queue.push_back({w, next_head});
    }
  }
  return true;
}

Oracle::Oracle(GroundTruthModel model, int tau_max)
    : model_(std::move(model)),
      taumax_(tau_max),
      mag_(1, 0),
      pag_(1, 0) {
  model_.validate();
  if (taumax_ < 0) throw std::invalid_argument("Oracle: tau_max must be non-negative");
  base_window_ = taumax_ + (model_.n_vars + 1) * (model_.max_lag() + 1);
  build_mag();
  build_pag();
}

Node Oracle::to_model(const Node& v) const {
  if (v.var < 0 || v.var >= n_observed()) throw std::invalid_argument("Oracle: observed index out of range");
  return Node{model_.observed[v.var], v.lag};
}

namespace {

// Active-trail reachability on the unrolled graph over times 0..window-1 with
// the reference time at window-1. Returns true iff x and y are d-separated
// given cond.
bool dsep_at_window(const GroundTruthModel& m, const Node& x, const Node& y,
                    const std::vector<Node>& cond, int window) {
  const int n = m.n_vars;
  auto id = [&](int var, int t) { return t * n + var; };
  auto at = [&](const Node& v) { return id(v.var, window - 1 - v.lag); };

  std::vector<std::vector<int>> parents(static_cast<size_t>(n) * window);
  std::vector<std::vector<int>> children(static_cast<size_t>(n) * window);
  for (int t = 0; t < window; ++t) {
    for (const Link& l : m.links) {
      int ts = t - l.tau;
      if (ts < 0) continue;
      parents[id(l.j, t)].push_back(id(l.i, ts));
      children[id(l.i, ts)].push_back(id(l.j, t));
    }
  }

  std::vector<char> in_z(static_cast<size_t>(n) * window, 0);
  for (const Node& v : cond) in_z[at(v)] = 1;
  // Ancestors of the conditioning set, conditioning nodes included.
  std::vector<char> anc_z = in_z;
  {
    std::deque<int> q;
    for (size_t v = 0; v < anc_z.size(); ++v)
      if (anc_z[v]) q.push_back(static_cast<int>(v));
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int p : parents[v]) {
        if (!anc_z[p]) {
          anc_z[p] = 1;
          q.push_back(p);
        }
      }
    }
  }

  // States (node, direction): 0 = entered against an arrow (from a child),
  // 1 = entered along an arrow (from a parent).
  std::vector<char> visited(static_cast<size_t>(2) * n * window, 0);
  std::deque<std::pair<int, int>> q;
  auto push = [&](int v, int dir) {
    if (!visited[2 * static_cast<size_t>(v) + dir]) {
      visited[2 * static_cast<size_t>(v) + dir] = 1;
      q.push_back({v, dir});
    }
  };
  const int src = at(x), dst = at(y);
  push(src, 0);
  while (!q.empty()) {
    auto [v, dir] = q.front();
    q.pop_front();
    if (v == dst && !in_z[v]) return false;
    if (dir == 0) {
      if (!in_z[v]) {
        for (int p : parents[v]) push(p, 0);
        for (int c : children[v]) push(c, 1);
      }
    } else {
      if (!in_z[v]) {
        for (int c : children[v]) push(c, 1);
      }
      if (anc_z[v]) {
        for (int p : parents[v]) push(p, 0);
      }
    }
  }
  return true;
}

}  // namespace

bool Oracle::dsep(const Node& x, const Node& y, const std::vector<Node>& cond) const {
  if (x == y) throw std::invalid_argument("Oracle::dsep: identical nodes");
  int max_lag = std::max(x.lag, y.lag);
  for (const Node& v : cond) {
    if (v == x || v == y) throw std::invalid_argument("Oracle::dsep: endpoint conditioned on");
    max_lag = std::max(max_lag, v.lag);
  }
  auto check = [&](const Node& v) {
    if (v.var < 0 || v.var >= model_.n_vars || v.lag < 0)
      throw std::invalid_argument("Oracle::dsep: node out of range");
  };
  check(x);
  check(y);
  for (const Node& v : cond) check(v);

  int window = std::max(base_window_, max_lag + 1);
  bool prev = dsep_at_window(model_, x, y, cond, window);
  for (int step = 0; step < 10; ++step) {
    window *= 2;
    bool cur = dsep_at_window(model_, x, y, cond, window);
    if (cur == prev) return cur;
    prev = cur;
  }
  throw std::runtime_error("Oracle::dsep: window doubling did not converge");
}

bool Oracle::indep(const Node& x, const Node& y, const std::vector<Node>& cond) const {
  std::vector<Node> mapped;
  mapped.reserve(cond.size());
  for (const Node& v : cond) mapped.push_back(to_model(v));
  return dsep(to_model(x), to_model(y), mapped);
}

std::vector<Node> Oracle::ancestors(const Node& v, int max_lag) const {
  if (v.var < 0 || v.var >= model_.n_vars || v.lag < 0)
    throw std::invalid_argument("Oracle::ancestors: node out of range");
  std::set<Node, NodeLess> out{v};
  std::deque<Node> q{v};
  while (!q.empty()) {
    Node cur = q.front();
    q.pop_front();
    for (const Link& l : model_.links) {
      if (l.j != cur.var) continue;
      Node p{l.i, cur.lag + l.tau};
      if (p.lag > max_lag) continue;
      if (out.insert(p).second) q.push_back(p);
    }
  }
  return {out.begin(), out.end()};
}

bool Oracle::is_ancestor(const Node& a, const Node& b) const {
  if (a == b) return true;
  if (a.lag < b.lag) return false;
  auto anc = ancestors(b, a.lag);
  return std::find(anc.begin(), anc.end(), a) != anc.end();
}

bool Oracle::is_ancestor_observed(const Node& a, const Node& b) const {
  return is_ancestor(to_model(a), to_model(b));
}

bool Oracle::separable(const Node& a, const Node& b) const {
  Node ma = to_model(a), mb = to_model(b);
  std::set<Node, NodeLess> witness;
  for (const Node& v : ancestors(ma, taumax_))
    if (model_.is_observed(v.var)) witness.insert(v);
  for (const Node& v : ancestors(mb, taumax_))
    if (model_.is_observed(v.var)) witness.insert(v);
  witness.erase(ma);
  witness.erase(mb);
  return dsep(ma, mb, {witness.begin(), witness.end()});
}

void Oracle::build_mag() {
  const int n = n_observed();
  mag_ = WindowGraph(n, taumax_);
  for (int tau = 0; tau <= taumax_; ++tau) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (tau == 0 && i >= j) continue;
        Node a{i, tau}, b{j, 0};
        if (separable(a, b)) continue;
        bool a_anc = is_ancestor(to_model(a), to_model(b));
        bool b_anc = is_ancestor(to_model(b), to_model(a));
        Mark at_a = a_anc ? Mark::Tail : Mark::Head;
        Mark at_b = b_anc ? Mark::Tail : Mark::Head;
        mag_.set_edge(a, b, at_a, at_b, Middle::Empty);
      }
    }
  }
}

namespace {

bool sepset_contains(const Oracle& o, const Node& member, const Node& x, const Node& y) {
  return o.is_ancestor_observed(member, x) || o.is_ancestor_observed(member, y);
}

bool is_pd_edge(const WindowGraph& g, const Node& from, const Node& to) {
  EdgeView e = g.edge(from, to);
  return e.present && e.at_a != Mark::Head && e.at_b != Mark::Tail;
}

// Second nodes of uncovered potentially directed paths from a to target with
// at least one intermediate node.
std::vector<Node> ucpd_second_nodes(const WindowGraph& g, const Node& a, const Node& target) {
  std::vector<Node> path{a};
  std::set<Node, NodeLess> on_path{a};
  std::set<Node, NodeLess> found;

  auto dfs = [&](auto&& self, const Node& cur) -> void {
    for (const Node& next : g.neighbors_in_window(cur)) {
      if (on_path.count(next)) continue;
      if (!is_pd_edge(g, cur, next)) continue;
      if (path.size() >= 2 && g.adjacent(path[path.size() - 2], next)) continue;
      if (next == target) {
        if (path.size() >= 2) found.insert(path[1]);
        continue;
      }
      path.push_back(next);
      on_path.insert(next);
      self(self, next);
      on_path.erase(next);
      path.pop_back();
    }
  };
  dfs(dfs, a);
  return {found.begin(), found.end()};
}

}  // namespace

void Oracle::build_pag() {
  const int n = n_observed();
  pag_ = WindowGraph(n, taumax_);
  for (const auto& [k, v] : mag_.edges()) {
    Node a{k.i, k.tau}, b{k.j, 0};
    // Time order fixes heads at the later end of lagged edges; everything
    // else starts as a circle.
    pag_.set_edge(a, b, Mark::Circle, k.tau > 0 ? Mark::Head : Mark::Circle, Middle::Empty);
  }

  auto nodes = pag_.window_nodes();

  // Unshielded colliders.
  for (const Node& b : nodes) {
    auto nb = pag_.neighbors_in_window(b);
    for (size_t p = 0; p < nb.size(); ++p) {
      for (size_t q = p + 1; q < nb.size(); ++q) {
        const Node &x = nb[p], &y = nb[q];
        if (pag_.adjacent(x, y)) continue;
        if (!sepset_contains(*this, b, x, y)) {
          pag_.set_mark(b, x, Mark::Head);
          pag_.set_mark(b, y, Mark::Head);
        }
      }
    }
  }

  auto directed = [&](const Node& a, const Node& b) {
    EdgeView e = pag_.edge(a, b);
    return e.present && e.at_a == Mark::Tail && e.at_b == Mark::Head;
  };
  auto orient = [&](const Node& at, const Node& other, Mark m, bool* changed) {
    if (pag_.mark_at(at, other) != m) {
      pag_.set_mark(at, other, m);
      *changed = true;
    }
  };

  bool changed = true;
  while (changed) {
    changed = false;

    // Away-from-collider: x*->b o-* c with x, c non-adjacent turns into b -> c.
    for (const Node& b : nodes) {
      for (const Node& x : pag_.neighbors_in_window(b)) {
        if (pag_.mark_at(b, x) != Mark::Head) continue;
        for (const Node& c : pag_.neighbors_in_window(b)) {
          if (c == x || pag_.adjacent(x, c)) continue;
          if (pag_.mark_at(b, c) != Mark::Circle) continue;
          orient(b, c, Mark::Tail, &changed);
          orient(c, b, Mark::Head, &changed);
        }
      }
    }

    // Directed chain a -> b *-> c (or a *-> b -> c) with a o-* c closes to
    // a *-> c.
    for (const Node& b : nodes) {
      for (const Node& a : pag_.neighbors_in_window(b)) {
        for (const Node& c : pag_.neighbors_in_window(b)) {
          if (a == c || !pag_.adjacent(a, c)) continue;
          if (pag_.mark_at(c, a) != Mark::Circle) continue;
          bool chain1 = directed(a, b) && pag_.mark_at(c, b) == Mark::Head;
          bool chain2 = pag_.mark_at(b, a) == Mark::Head && directed(b, c);
          if (chain1 || chain2) orient(c, a, Mark::Head, &changed);
        }
      }
    }

    // Double collider: x *-> b <-* c, x o-* d *-o c (circles at d), d *-o b,
    // x and c non-adjacent gives d *-> b.
    for (const Node& b : nodes) {
      auto nb = pag_.neighbors_in_window(b);
      for (const Node& x : nb) {
        if (pag_.mark_at(b, x) != Mark::Head) continue;
        for (const Node& c : nb) {
          if (c == x || pag_.mark_at(b, c) != Mark::Head) continue;
          if (pag_.adjacent(x, c)) continue;
          for (const Node& d : nb) {
            if (d == x || d == c) continue;
            if (pag_.mark_at(b, d) != Mark::Circle) continue;
            if (!pag_.adjacent(d, x) || !pag_.adjacent(d, c)) continue;
            if (pag_.mark_at(d, x) != Mark::Circle || pag_.mark_at(d, c) != Mark::Circle) continue;
            orient(b, d, Mark::Head, &changed);
          }
        }
      }
    }

    // Discriminating paths <d, ..., a, b, c>: interior nodes are colliders
    // and parents of c, d and c non-adjacent, circle at b on the b-c edge.
    for (const Node& b : nodes) {
      for (const Node& c : pag_.neighbors_in_window(b)) {
        if (pag_.mark_at(b, c) != Mark::Circle) continue;
        for (const Node& a : pag_.neighbors_in_window(b)) {
          if (a == c) continue;
          if (pag_.mark_at(a, b) != Mark::Head) continue;
          if (!directed(a, c)) continue;
          // Search backwards from a for the far endpoint.
          std::vector<Node> stack{a};
          std::set<Node, NodeLess> on_path{a, b, c};
          bool done = false;
          auto dfs = [&](auto&& self, const Node& v) -> void {
            if (done) return;
            for (const Node& w : pag_.neighbors_in_window(v)) {
              if (done) return;
              if (on_path.count(w)) continue;
              if (pag_.mark_at(v, w) != Mark::Head) continue;  // head at v
              if (!pag_.adjacent(w, c)) {
                // Found the discriminating path.
                done = true;
                if (sepset_contains(*this, b, w, c)) {
                  orient(b, c, Mark::Tail, &changed);
                  orient(c, b, Mark::Head, &changed);
                } else {
                  orient(b, a, Mark::Head, &changed);
                  orient(b, c, Mark::Head, &changed);
                  orient(c, b, Mark::Head, &changed);
                }
                return;
              }
              if (directed(w, c) && pag_.mark_at(w, v) == Mark::Head) {
                on_path.insert(w);
                self(self, w);
                on_path.erase(w);
              }
            }
          };
          dfs(dfs, a);
          if (done) break;
        }
      }
    }

    // Chain closure: a -> b -> c with a o-> c gives tail at a.
    for (const Node& a : nodes) {
      for (const Node& c : pag_.neighbors_in_window(a)) {
        EdgeView e = pag_.edge(a, c);
        if (e.at_a != Mark::Circle || e.at_b != Mark::Head) continue;
        for (const Node& b : pag_.neighbors_in_window(a)) {
          if (b == c) continue;
          if (directed(a, b) && directed(b, c)) {
            orient(a, c, Mark::Tail, &changed);
            break;
          }
        }
      }
    }

    // Uncovered potentially directed path closures.
    for (const Node& a : nodes) {
      for (const Node& c : pag_.neighbors_in_window(a)) {
        EdgeView e = pag_.edge(a, c);
        if (e.at_a != Mark::Circle || e.at_b != Mark::Head) continue;

        bool oriented = false;
        for (const Node& second : ucpd_second_nodes(pag_, a, c)) {
          if (!pag_.adjacent(second, c)) {
            orient(a, c, Mark::Tail, &changed);
            oriented = true;
            break;
          }
        }
        if (oriented) continue;

        // Two uncovered potentially directed paths to two distinct directed
        // parents of c, leaving a through distinct non-adjacent first nodes.
        std::vector<Node> parents_of_c;
        for (const Node& w : pag_.neighbors_in_window(c))
          if (directed(w, c)) parents_of_c.push_back(w);
        std::vector<std::vector<Node>> firsts(parents_of_c.size());
        for (size_t pi = 0; pi < parents_of_c.size(); ++pi) {
          firsts[pi] = ucpd_second_nodes(pag_, a, parents_of_c[pi]);
          if (is_pd_edge(pag_, a, parents_of_c[pi])) firsts[pi].push_back(parents_of_c[pi]);
        }
        for (size_t p1 = 0; p1 < parents_of_c.size() && !oriented; ++p1) {
          for (size_t p2 = 0; p2 < parents_of_c.size() && !oriented; ++p2) {
            if (p1 == p2) continue;
            for (const Node& e1 : firsts[p1]) {
              for (const Node& e2 : firsts[p2]) {
                if (e1 == e2 || pag_.adjacent(e1, e2)) continue;
                orient(a, c, Mark::Tail, &changed);
                oriented = true;
                break;
              }
              if (oriented) break;
            }
          }
        }
      }
    }
  }
}

std::vector<Node> Oracle::dsep_set(const Node& b, const Node& a) const {
  std::set<Node, NodeLess> anc = mag_anc_closure(mag_, {a, b});
  std::set<Node, NodeLess> out;

  auto state_less = [](const std::pair<Node, bool>& s1, const std::pair<Node, bool>& s2) {
    if (s1.first != s2.first) return node_less(s1.first, s2.first);
    return s1.second < s2.second;
  };
  std::set<std::pair<Node, bool>, decltype(state_less)> seen(state_less);
  std::deque<std::pair<Node, bool>> queue;
  for (const Node& u : mag_.neighbors_in_window(b)) {
    if (!anc.count(u)) continue;
    bool head_in = mag_.edge(b, u).at_b == Mark::Head;
    if (seen.insert({u, head_in}).second) queue.push_back({u, head_in});
  }
  while (!queue.empty()) {
    auto [u, head_in] = queue.front();
    queue.pop_front();
    if (u != a && u != b) out.insert(u);
    if (!head_in) continue;  // interior nodes must be colliders
    for (const Node& w : mag_.neighbors_in_window(u)) {
      if (w == b) continue;
      EdgeView e = mag_.edge(u, w);
      if (e.at_a != Mark::Head) continue;  // collider at u needs both heads
      if (!anc.count(w)) continue;
      bool next_head = e.at_b == Mark::Head;
      if (seen.insert({w, next_head}).second) queue.push_back({w, next_head});
    }
  }
  return {out.begin(), out.end()};
}

std::optional<std::string> validate_lpcmci_pag(const WindowGraph& c, const Oracle& oracle) {
  if (c.n_vars() != oracle.n_observed() || c.tau_max() != oracle.tau_max())
    return "graph dimensions do not match the ground truth";
  const WindowGraph& mag = oracle.true_mag();

  auto pa_in_mag = [&](const Node& v) {
    std::vector<Node> out;
    for (const Node& w : mag.neighbors_in_window(v)) {
      EdgeView e = mag.edge(v, w);  // seen from v: a parent w has tail at w, head at v
      if (e.at_a == Mark::Head && e.at_b == Mark::Tail) out.push_back(w);
    }
    return out;
  };

  auto separable_by_parents_of = [&](const Node& target, const Node& x, const Node& y) {
    std::vector<Node> pa = pa_in_mag(target);
    // Remove the endpoints themselves from the candidate pool.
    pa.erase(std::remove_if(pa.begin(), pa.end(), [&](const Node& v) { return v == x || v == y; }),
             pa.end());
    const size_t m = pa.size();
    for (size_t bits = 0; bits < (static_cast<size_t>(1) << m); ++bits) {
      std::vector<Node> s;
      for (size_t k = 0; k < m; ++k)
        if (bits & (static_cast<size_t>(1) << k)) s.push_back(pa[k]);
      if (mag_msep(mag, x, y, s)) return true;
    }
    return false;
  };

  for (int tau = 0; tau <= c.tau_max(); ++tau) {
    for (int i = 0; i < c.n_vars(); ++i) {
      for (int j = 0; j < c.n_vars(); ++j) {
        if (tau == 0 && i >= j) continue;
        Node a{i, tau}, b{j, 0};  // a < b in the total order
        std::string pair_str = node_str(a) + " - " + node_str(b);
        if (!c.adjacent(a, b)) {
          if (mag.adjacent(a, b))
            return "removed edge " + pair_str + " is adjacent in the true graph";
          continue;
        }
        EdgeView e = c.edge(a, b);

        bool ok_type = (e.at_a == Mark::Circle && e.at_b == Mark::Circle) ||
                       (e.at_a == Mark::Circle && e.at_b == Mark::Head) ||
                       (e.at_a == Mark::Head && e.at_b == Mark::Circle) ||
                       (e.at_a == Mark::Head && e.at_b == Mark::Head) ||
                       (e.at_a == Mark::Tail && e.at_b == Mark::Head) ||
                       (e.at_a == Mark::Head && e.at_b == Mark::Tail);
        if (!ok_type) return "edge " + pair_str + " has a disallowed mark combination";

        if (e.at_b == Mark::Head && oracle.is_ancestor_observed(b, a))
          return "head at " + node_str(b) + " on " + pair_str + " contradicts ancestry";
        if (e.at_a == Mark::Head && oracle.is_ancestor_observed(a, b))
          return "head at " + node_str(a) + " on " + pair_str + " contradicts ancestry";
        if (e.at_a == Mark::Tail && !oracle.is_ancestor_observed(a, b))
          return "tail at " + node_str(a) + " on " + pair_str + " asserts false ancestry";
        if (e.at_b == Mark::Tail && !oracle.is_ancestor_observed(b, a))
          return "tail at " + node_str(b) + " on " + pair_str + " asserts false ancestry";

        // An empty middle mark also implies both statements below, but they
        // follow from true adjacency, which is checked separately.
        bool need_l = e.middle == Middle::Left || e.middle == Middle::Both;
        bool need_r = e.middle == Middle::Right || e.middle == Middle::Both;
        if (need_l && oracle.is_ancestor_observed(b, a) && separable_by_parents_of(a, a, b))
          return "middle mark on " + pair_str + " wrongly rules out separation by parents of " +
                 node_str(a);
        if (need_r && oracle.is_ancestor_observed(a, b) && separable_by_parents_of(b, a, b))
          return "middle mark on " + pair_str + " wrongly rules out separation by parents of " +
                 node_str(b);
        if (e.middle == Middle::Empty && !mag.adjacent(a, b))
          return "empty middle mark on " + pair_str + " but the pair is not truly adjacent";
      }
    }
  }
  return std::nullopt;
}

}  // namespace tscd
