#include "core/discovery.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>

#include "core/discovery_internal.hpp"
#include "json.hpp"

namespace tscd {

const char* rule_name(RuleId r) {
  switch (r) {
    case RuleId::ER0a: return "ER0a";
    case RuleId::ER0b: return "ER0b";
    case RuleId::ER0c: return "ER0c";
    case RuleId::ER0d: return "ER0d";
    case RuleId::ER1: return "ER1";
    case RuleId::ER2: return "ER2";
    case RuleId::ER3: return "ER3";
    case RuleId::ER4: return "ER4";
    case RuleId::R4: return "R4";
    case RuleId::ER8: return "ER8";
    case RuleId::ER9: return "ER9";
    case RuleId::ER10: return "ER10";
    case RuleId::APR: return "APR";
    case RuleId::MMR: return "MMR";
  }
  return "?";
}

std::vector<RuleId> default_lagged_rules() {
  return {RuleId::APR, RuleId::MMR, RuleId::ER8, RuleId::ER2,
          RuleId::ER1, RuleId::ER9, RuleId::ER10};
}

std::vector<RuleId> default_full_rules() {
  return {RuleId::APR, RuleId::MMR, RuleId::ER8,  RuleId::ER2,  RuleId::ER1,
          RuleId::ER0d, RuleId::ER0c, RuleId::ER3, RuleId::R4,   RuleId::ER9,
          RuleId::ER10, RuleId::ER0b, RuleId::ER0a};
}

PairKey pair_key(const Node& a, const Node& b) {
  if (a == b) throw std::invalid_argument("pair_key: identical nodes");
  const int shift = std::min(a.lag, b.lag);
  Node u{a.var, a.lag - shift};
  Node v{b.var, b.lag - shift};
  if (node_less(v, u)) std::swap(u, v);
  // u is now the earlier node, v the later one at lag 0
  return PairKey{u.var, u.lag, v.var};
}

Node to_pair_frame(const Node& a, const Node& b, const Node& v) {
  const int shift = std::min(a.lag, b.lag);
  return Node{v.var, v.lag - shift};
}

Node from_pair_frame(const Node& a, const Node& b, const Node& v) {
  const int shift = std::min(a.lag, b.lag);
  return Node{v.var, v.lag + shift};
}

std::vector<Node> to_pair_frame(const Node& a, const Node& b, std::vector<Node> vs) {
  const int shift = std::min(a.lag, b.lag);
  for (Node& v : vs) v.lag -= shift;
  return vs;
}

std::vector<Node> from_pair_frame(const Node& a, const Node& b, std::vector<Node> vs) {
  const int shift = std::min(a.lag, b.lag);
  for (Node& v : vs) v.lag += shift;
  return vs;
}

bool NodeVecLess::operator()(const std::vector<Node>& x, const std::vector<Node>& y) const {
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end(), node_less);
}

void SepSetStore::add(const Node& a, const Node& b, std::vector<Node> sepset) {
  sepset = to_pair_frame(a, b, std::move(sepset));
  std::sort(sepset.begin(), sepset.end(), node_less);
  sepset.erase(std::unique(sepset.begin(), sepset.end()), sepset.end());
  auto& list = sets_[pair_key(a, b)];
  auto pos = std::lower_bound(list.begin(), list.end(), sepset, NodeVecLess{});
  if (pos == list.end() || *pos != sepset) list.insert(pos, std::move(sepset));
}

const std::vector<std::vector<Node>>& SepSetStore::sets(const Node& a, const Node& b) const {
  static const std::vector<std::vector<Node>> empty;
  auto it = sets_.find(pair_key(a, b));
  return it == sets_.end() ? empty : it->second;
}

bool SepSetStore::any(const Node& a, const Node& b) const {
  auto it = sets_.find(pair_key(a, b));
  return it != sets_.end() && !it->second.empty();
}

void SepSetStore::lower_imin(const Node& a, const Node& b, double value) {
  auto [it, inserted] = imin_.try_emplace(pair_key(a, b), value);
  if (!inserted && value < it->second) it->second = value;
}

double SepSetStore::imin(const Node& a, const Node& b) const {
  auto it = imin_.find(pair_key(a, b));
  return it == imin_.end() ? std::numeric_limits<double>::infinity() : it->second;
}

void SepSetStore::clear() {
  sets_.clear();
  imin_.clear();
}

DiscoveryState::DiscoveryState(int n_vars, DiscoveryConfig cfg)
    : graph(WindowGraph::complete_initial(n_vars, cfg.tau_max)), config(std::move(cfg)) {}

namespace detail {

bool contains(const std::vector<Node>& sorted, const Node& v) {
  return std::binary_search(sorted.begin(), sorted.end(), v, node_less);
}

std::vector<Node> nset_union(std::vector<Node> a, const std::vector<Node>& b) {
  std::vector<Node> out;
  out.reserve(a.size() + b.size());
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), node_less);
  return out;
}

std::vector<Node> nset_minus(std::vector<Node> a, const std::vector<Node>& b) {
  std::vector<Node> out;
  out.reserve(a.size());
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out), node_less);
  return out;
}

std::vector<Node> nset_intersect(const std::vector<Node>& a, const std::vector<Node>& b) {
  std::vector<Node> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out),
                        node_less);
  return out;
}

void nset_insert(std::vector<Node>& sorted, const Node& v) {
  auto pos = std::lower_bound(sorted.begin(), sorted.end(), v, node_less);
  if (pos == sorted.end() || *pos != v) sorted.insert(pos, v);
}

CIResult tested(const DiscoveryConfig& cfg, CITest& ci, const Node& x, const Node& y,
                std::vector<Node> cond, const char* action) {
  Node tx = x, ty = y;
  int min_lag = std::min(x.lag, y.lag);
  for (const Node& v : cond) min_lag = std::min(min_lag, v.lag);
  if (min_lag < 0) {
    // shift the whole query up into valid lags; stationarity keeps it equivalent
    tx.lag -= min_lag;
    ty.lag -= min_lag;
    for (Node& v : cond) v.lag -= min_lag;
  }
  CIResult r = ci.test(tx, ty, cond);
  if (cfg.trace != nullptr) {
    nlohmann::json line;
    line["action"] = action;
    line["x"] = {tx.var, tx.lag};
    line["y"] = {ty.var, ty.lag};
    auto& jc = line["cond"] = nlohmann::json::array();
    for (const Node& v : cond) jc.push_back({v.var, v.lag});
    line["stat"] = r.stat;
    line["pvalue"] = r.pvalue;
    (*cfg.trace) << line.dump() << '\n';
  }
  return r;
}

bool window_query_ok(int tau_max, const Node& x, const Node& y, const std::vector<Node>& cond) {
  int lo = std::min(x.lag, y.lag);
  int hi = std::max(x.lag, y.lag);
  for (const Node& v : cond) {
    lo = std::min(lo, v.lag);
    hi = std::max(hi, v.lag);
  }
  return hi - std::min(lo, 0) <= tau_max;
}

void sweep_ever_parents(DiscoveryState& st) {
  for (const auto& [key, view] : st.graph.edges()) {
    // earlier endpoint (key.i, key.tau), later endpoint (key.j, 0)
    if (view.at_a == Mark::Tail && view.at_b == Mark::Head)
      st.ever_parents.insert({key.i, key.tau, key.j});
    if (key.tau == 0 && view.at_a == Mark::Head && view.at_b == Mark::Tail)
      st.ever_parents.insert({key.j, 0, key.i});
  }
}

}  // namespace detail

using detail::contains;
using detail::nset_minus;
using detail::nset_union;
using detail::tested;

std::vector<Node> apds_t(const WindowGraph& g, const Node& center, const Node& other) {
  std::vector<Node> out;
  for (const Node& k : g.neighbors_in_window(center)) {
    if (k == other) continue;
    if (g.mark_at(k, center) == Mark::Head) continue;
    out.push_back(k);
  }
  return out;  // neighbors come sorted by node_less
}

namespace {

bool head_like(Mark m) { return m == Mark::Head || m == Mark::Conflict; }

// v lies strictly after u in time
bool after(const Node& v, const Node& u) { return v.lag < u.lag; }

}  // namespace

std::vector<Node> napds_t(const WindowGraph& g, const Node& center, const Node& other) {
  const Node& b = center;
  const Node& a = other;
  std::set<Node, NodeLess> result;

  // part 1: non-head adjacencies of b minus nodes tail-connected at a
  for (const Node& k : apds_t(g, b, a)) {
    if (g.representable(a, k) && g.adjacent(a, k) && g.mark_at(a, k) == Mark::Tail) continue;
    result.insert(k);
  }

  // part 2: walk reachability over states (previous, current); a path may
  // revisit a node via a different predecessor, which reachability covers
  std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> seen;
  std::deque<std::pair<Node, Node>> queue;
  auto push = [&](const Node& prev, const Node& cur) {
    auto key = std::make_pair(std::make_pair(prev.var, prev.lag),
                              std::make_pair(cur.var, cur.lag));
    if (seen.insert(key).second) queue.emplace_back(prev, cur);
  };

  for (const Node& n1 : g.neighbors_in_window(b)) {
    if (n1 == a) continue;
    if (g.mark_at(b, n1) == Mark::Tail) continue;  // tail allowed only at the far endpoint
    // the b-neighbor must not carry a head toward a and must not be after a
    if (g.representable(a, n1) && g.adjacent(a, n1) && g.mark_at(n1, a) == Mark::Head) continue;
    if (after(n1, a)) continue;
    push(b, n1);
  }

  while (!queue.empty()) {
    auto [prev, cur] = queue.front();
    queue.pop_front();

    if (prev != b) {
      // interior/endpoint constraints for nodes beyond the b-neighbor
      bool tail_b = g.representable(cur, b) && g.adjacent(cur, b) && g.mark_at(b, cur) == Mark::Tail;
      bool tail_a = g.representable(cur, a) && g.adjacent(cur, a) && g.mark_at(a, cur) == Mark::Tail;
      if (tail_b || tail_a) continue;
      bool head_to_b = g.representable(cur, b) && g.adjacent(cur, b) && g.mark_at(cur, b) == Mark::Head;
      bool head_to_a = g.representable(cur, a) && g.adjacent(cur, a) && g.mark_at(cur, a) == Mark::Head;
      if (head_to_b && head_to_a) continue;
      if (after(cur, b) && after(cur, a)) continue;
    }
    result.insert(cur);

    if (g.mark_at(cur, prev) == Mark::Tail) continue;  // tails end the walk at cur
    for (const Node& nxt : g.neighbors_in_window(cur)) {
      if (nxt == a || nxt == b || nxt == prev) continue;
      if (g.mark_at(cur, nxt) == Mark::Tail) continue;
      if (!(g.representable(prev, nxt) && g.adjacent(prev, nxt))) {
        // unshielded middle node must be a collider on the walk
        if (!head_like(g.mark_at(cur, prev)) || !head_like(g.mark_at(cur, nxt))) continue;
      }
      push(cur, nxt);
    }
  }

  result.erase(a);
  result.erase(b);
  return std::vector<Node>(result.begin(), result.end());
}

std::vector<Node> pds_t(const WindowGraph& g, const Node& center, const Node& other) {
  std::set<Node, NodeLess> result;
  std::set<std::pair<std::pair<int, int>, std::pair<int, int>>> seen;
  std::deque<std::pair<Node, Node>> queue;
  auto push = [&](const Node& prev, const Node& cur) {
    auto key = std::make_pair(std::make_pair(prev.var, prev.lag),
                              std::make_pair(cur.var, cur.lag));
    if (seen.insert(key).second) queue.emplace_back(prev, cur);
  };
  for (const Node& n1 : g.neighbors_in_window(center)) push(center, n1);
  while (!queue.empty()) {
    auto [prev, cur] = queue.front();
    queue.pop_front();
    result.insert(cur);
    for (const Node& nxt : g.neighbors_in_window(cur)) {
      if (nxt == prev || nxt == cur || nxt == center) continue;
      bool triangle = g.representable(prev, nxt) && g.adjacent(prev, nxt);
      bool collider = head_like(g.mark_at(cur, prev)) && head_like(g.mark_at(cur, nxt));
      if (triangle || collider) push(cur, nxt);
    }
  }
  result.erase(center);
  result.erase(other);
  return std::vector<Node>(result.begin(), result.end());
}

std::vector<Node> current_parents(const WindowGraph& g, const Node& a, const Node& b) {
  std::vector<Node> out;
  for (const Node& child : {a, b}) {
    for (const Node& p : g.neighbors_in_window(child)) {
      if (g.mark_at(p, child) == Mark::Tail && g.mark_at(child, p) == Mark::Head)
        detail::nset_insert(out, p);
    }
  }
  std::vector<Node> pair{a, b};
  std::sort(pair.begin(), pair.end(), node_less);
  return nset_minus(std::move(out), pair);
}

std::vector<Node> ever_parents_of(const DiscoveryState& st, const Node& a, const Node& b) {
  std::vector<Node> out;
  const int taumax = st.config.tau_max;
  for (const Node& child : {a, b}) {
    for (const auto& link : st.ever_parents) {
      if (link[2] != child.var) continue;
      Node p{link[0], child.lag + link[1]};
      if (p.lag > taumax) continue;  // outside the window
      detail::nset_insert(out, p);
    }
  }
  std::vector<Node> pair{a, b};
  std::sort(pair.begin(), pair.end(), node_less);
  return nset_minus(std::move(out), pair);
}

std::vector<Node> known_ancestors(const WindowGraph& g, const Node& a, const Node& b) {
  // reverse reachability through tail-at-source marks
  std::set<Node, NodeLess> reached;
  std::deque<Node> frontier{a, b};
  reached.insert(a);
  reached.insert(b);
  while (!frontier.empty()) {
    Node v = frontier.front();
    frontier.pop_front();
    for (const Node& w : g.neighbors_in_window(v)) {
      if (g.mark_at(w, v) != Mark::Tail || g.mark_at(v, w) != Mark::Head) continue;
      if (reached.insert(w).second) frontier.push_back(w);
    }
  }
  reached.erase(a);
  reached.erase(b);
  return std::vector<Node>(reached.begin(), reached.end());
}

std::vector<Node> weakly_minimize(std::vector<Node> sepset, const Node& a, const Node& b,
                                  const std::vector<Node>& known_anc, CITest& ci, double alpha,
                                  std::ostream* trace) {
  DiscoveryConfig shim;
  shim.trace = trace;
  std::sort(sepset.begin(), sepset.end(), node_less);
  if (tested(shim, ci, a, b, sepset, "minimize").pvalue <= alpha)
    throw std::invalid_argument("weakly_minimize: input set does not separate the pair");
  while (true) {
    bool have_best = false;
    double best_p = -1.0;
    size_t best_at = 0;
    for (size_t i = 0; i < sepset.size(); ++i) {
      if (contains(known_anc, sepset[i])) continue;
      std::vector<Node> trial = sepset;
      trial.erase(trial.begin() + static_cast<long>(i));
      CIResult r = tested(shim, ci, a, b, trial, "minimize");
      if (r.pvalue > alpha && r.pvalue > best_p) {
        have_best = true;
        best_p = r.pvalue;
        best_at = i;
      }
    }
    if (!have_best) break;
    sepset.erase(sepset.begin() + static_cast<long>(best_at));
  }
  return sepset;
}

namespace detail {

namespace {

// descending I^min of (center, candidate); ties recent-first, then by index
std::vector<Node> order_by_imin(const SepSetStore& store, const Node& center,
                                std::vector<Node> nodes) {
  std::stable_sort(nodes.begin(), nodes.end(), [&](const Node& x, const Node& y) {
    double ix = store.imin(center, x);
    double iy = store.imin(center, y);
    if (ix != iy) return ix > iy;
    if (x.lag != y.lag) return x.lag < y.lag;
    return x.var < y.var;
  });
  return nodes;
}

}  // namespace

const std::vector<std::vector<Node>>& Engine::collection(const Node& a, const Node& c,
                                                         bool with_fresh) {
  if (cache_rev != st.revision) {
    collections.clear();
    cache_rev = st.revision;
  }
  const PairKey pk = pair_key(a, c);
  const auto key = std::make_pair(pk, with_fresh);
  auto it = collections.find(key);
  if (it != collections.end()) return it->second;

  std::set<std::vector<Node>, NodeVecLess> acc;
  // canonical frame of the pair: later node at lag 0
  const Node ae{pk.i, pk.tau};
  const Node al{pk.j, 0};
  const WindowGraph& g = st.graph;
  const int cap = st.config.max_cond;

  if (mode == RuleMode::Lpcmci) {
    for (const auto& s : st.sepsets.sets(a, c)) acc.insert(s);
    if (with_fresh) {
      const std::vector<Node> sdef = current_parents(g, ae, al);
      std::vector<std::pair<Node, Node>> dirs{{al, ae}};
      if (pk.tau == 0) dirs.emplace_back(ae, al);
      for (const auto& [center, other] : dirs) {
        std::vector<Node> base = nset_minus(apds_t(g, center, other), sdef);
        base = order_by_imin(st.sepsets, center, std::move(base));
        const int top = cap < 0 ? static_cast<int>(base.size())
                                : std::min<int>(cap, static_cast<int>(base.size()));
        for (int size = 0; size <= top; ++size) {
          for_each_subset(base, size, [&](const std::vector<Node>& pick) {
            std::vector<Node> cond = pick;
            std::sort(cond.begin(), cond.end(), node_less);
            cond = nset_union(std::move(cond), sdef);
            CIResult r = tested(st.config, ci, ae, al, cond, "vote-search");
            if (r.pvalue > st.config.alpha) acc.insert(cond);
            return true;
          });
        }
      }
    }
  } else {
    // classic majority search over adjacency subsets of both endpoints
    for (const auto& [center, other] : {std::pair<Node, Node>{al, ae}, {ae, al}}) {
      std::vector<Node> base = g.neighbors_in_window(center);
      base.erase(std::remove(base.begin(), base.end(), other), base.end());
      const int top = cap < 0 ? static_cast<int>(base.size())
                              : std::min<int>(cap, static_cast<int>(base.size()));
      for (int size = 0; size <= top; ++size) {
        for_each_subset(base, size, [&](const std::vector<Node>& pick) {
          std::vector<Node> cond = pick;
          std::sort(cond.begin(), cond.end(), node_less);
          CIResult r = tested(st.config, ci, ae, al, cond, "vote-search");
          if (r.pvalue > st.config.alpha) acc.insert(cond);
          return true;
        });
      }
    }
  }

  auto& slot = collections[key];
  slot.assign(acc.begin(), acc.end());
  return slot;
}

Vote vote_over(const std::vector<std::vector<Node>>& sets, const Node& a, const Node& c,
               const Node& b) {
  const Node probe = to_pair_frame(a, c, b);
  size_t n_in = 0;
  for (const auto& s : sets)
    if (contains(s, probe)) ++n_in;
  if (2 * n_in > sets.size()) return Vote::In;
  if (2 * n_in < sets.size()) return Vote::NotIn;
  return Vote::Ambiguous;
}

Vote Engine::vote(const Node& a, const Node& c, const Node& b, VoteMode vmode) {
  bool with_fresh = true;
  if (mode == RuleMode::Lpcmci && vmode == VoteMode::In) {
    // weak minimality of searched sets is only droppable when b connects to
    // both endpoints through edges already known to be in the target graph
    const WindowGraph& g = st.graph;
    with_fresh = g.representable(a, b) && g.adjacent(a, b) && g.middle(a, b) == Middle::Empty &&
                 g.representable(c, b) && g.adjacent(c, b) && g.middle(c, b) == Middle::Empty;
  }
  const auto& sets = collection(a, c, with_fresh);
  if (sets.empty()) {
    if (mode == RuleMode::Standard) return Vote::Ambiguous;
    throw std::logic_error("sepset vote without any separating set for the pair");
  }
  return vote_over(sets, a, c, b);
}

Vote Engine::recorded_vote(const Node& a, const Node& c, const Node& b) {
  const auto& sets = st.sepsets.sets(a, c);
  if (sets.empty()) return Vote::Ambiguous;
  return vote_over(sets, a, c, b);
}

}  // namespace detail

Vote sepset_vote(DiscoveryState& st, CITest& ci, const Node& a, const Node& c, const Node& b,
                 VoteMode mode) {
  detail::Engine engine{st, ci, detail::RuleMode::Lpcmci};
  return engine.vote(a, c, b, mode);
}

void orientation_phase(DiscoveryState& st, CITest& ci, const std::vector<RuleId>& rules,
                       bool lagged_only) {
  detail::Engine engine{st, ci, detail::RuleMode::Lpcmci};
  detail::run_rules(engine, rules, lagged_only);
  if (st.config.checkpoint) st.config.checkpoint(st, lagged_only ? "orient-lagged" : "orient");
}

namespace {

// canonical adjacent pairs (earlier, later) matching the sweep slot: m == -1
// selects autodependencies, m >= 0 cross pairs at lag m
std::vector<std::pair<Node, Node>> sweep_pairs(const WindowGraph& g, int m) {
  std::vector<std::pair<Node, Node>> out;
  for (const auto& [key, view] : g.edges()) {
    if (m == -1 && key.i != key.j) continue;
    if (m >= 0 && (key.tau != m || key.i == key.j)) continue;
    out.emplace_back(Node{key.i, key.tau}, Node{key.j, 0});
  }
  return out;
}

void apply_marked_removals(DiscoveryState& st, const std::set<PairKey>& marked) {
  if (marked.empty()) return;
  for (const PairKey& pk : marked) {
    Node a{pk.i, pk.tau}, b{pk.j, 0};
    if (st.graph.adjacent(a, b)) st.graph.remove_edge(a, b);
  }
  ++st.revision;
  if (st.config.checkpoint) st.config.checkpoint(st, "removal");
}

}  // namespace

void ancestral_removal(DiscoveryState& st, CITest& ci) {
  const double alpha = st.config.alpha;
  int p = 0;
  while (true) {
    bool removed_any = false;
    for (int m = -1; m <= st.config.tau_max; ++m) {
      std::set<PairKey> marked;
      for (const auto& [a, b] : sweep_pairs(st.graph, m)) {
        const std::vector<Node> sdef = current_parents(st.graph, a, b);
        // two passes: searches centered on the later node certify toward 'R',
        // searches centered on the earlier node toward 'L'
        for (int branch = 0; branch < 2; ++branch) {
          const Middle mm = st.graph.middle(a, b);
          if (mm == Middle::Empty || mm == Middle::Both) break;
          const bool near_later = branch == 0;
          if (near_later && mm == Middle::Right) continue;
          if (!near_later && mm == Middle::Left) continue;
          const Node center = near_later ? b : a;
          const Node other = near_later ? a : b;
          std::vector<Node> search = detail::nset_minus(apds_t(st.graph, center, other), sdef);
          if (static_cast<int>(search.size()) < p) {
            st.graph.combine_middle(a, b, near_later ? Middle::Right : Middle::Left);
            ++st.revision;
            continue;
          }
          search = detail::order_by_imin(st.sepsets, center, std::move(search));
          detail::for_each_subset(search, p, [&](const std::vector<Node>& pick) {
            std::vector<Node> cond = pick;
            std::sort(cond.begin(), cond.end(), node_less);
            cond = nset_union(std::move(cond), sdef);
            CIResult r = tested(st.config, ci, a, b, cond, "removal");
            st.sepsets.lower_imin(a, b, std::abs(r.stat));
            if (r.pvalue > alpha) {
              st.sepsets.add(a, b, cond);
              marked.insert(pair_key(a, b));
              return false;
            }
            return true;
          });
        }
      }
      if (!marked.empty()) removed_any = true;
      apply_marked_removals(st, marked);
    }
    if (removed_any) {
      orientation_phase(st, ci, st.config.lagged_rules, true);
      p = 0;
    } else {
      ++p;
    }
    bool done = true;
    for (const auto& [key, view] : st.graph.edges()) {
      if (view.middle != Middle::Both && view.middle != Middle::Empty) {
        done = false;
        break;
      }
    }
    if (done) break;
    if (p > static_cast<int>(st.graph.window_nodes().size()) + 2)
      throw std::logic_error("ancestral removal failed to converge");
  }
  orientation_phase(st, ci, st.config.full_rules, false);
}

void nonancestral_removal(DiscoveryState& st, CITest& ci) {
  const double alpha = st.config.alpha;
  const int cap = st.config.max_cond;
  int p = 0;
  while (true) {
    bool removed_any = false;
    for (int m = -1; m <= st.config.tau_max; ++m) {
      std::set<PairKey> marked;
      for (const auto& [a, b] : sweep_pairs(st.graph, m)) {
        if (st.graph.middle(a, b) == Middle::Empty) continue;
        const int tau = a.lag - b.lag;
        const std::vector<Node> s1def = current_parents(st.graph, a, b);
        const std::vector<Node> s2def = ever_parents_of(st, a, b);
        const std::vector<Node> defaults = nset_union(s1def, s2def);
        const std::vector<Node> napds_b = napds_t(st.graph, b, a);
        const std::vector<Node> napds_a = tau == 0 ? napds_t(st.graph, a, b) : std::vector<Node>{};
        const std::vector<Node> s1search = nset_minus(napds_b, defaults);
        const std::vector<Node> s2search = nset_minus(napds_a, defaults);
        const bool exhausted =
            (cap >= 0 && p > cap) || static_cast<int>(s1search.size()) < p ||
            (tau == 0 && static_cast<int>(s2search.size()) < p);
        if (exhausted) {
          st.graph.combine_middle(a, b, Middle::Empty);
          ++st.revision;
          continue;
        }
        // search centered on the later node, then for contemporaneous pairs
        // the mirrored search centered on the earlier node
        struct Side {
          Node x, y;
          const std::vector<Node>* search;
          const std::vector<Node>* napds;
          Node center;
        };
        std::vector<Side> sides{{a, b, &s1search, &napds_b, b}};
        if (tau == 0) sides.push_back({b, a, &s2search, &napds_a, a});
        for (const Side& side : sides) {
          std::vector<Node> base = detail::order_by_imin(st.sepsets, side.center, *side.search);
          const std::vector<Node> sdef =
              nset_union(s1def, detail::nset_intersect(s2def, *side.napds));
          detail::for_each_subset(base, p, [&](const std::vector<Node>& pick) {
            std::vector<Node> cond = pick;
            std::sort(cond.begin(), cond.end(), node_less);
            cond = nset_union(std::move(cond), sdef);
            CIResult r = tested(st.config, ci, side.x, side.y, cond, "removal");
            st.sepsets.lower_imin(side.x, side.y, std::abs(r.stat));
            if (r.pvalue > alpha) {
              st.sepsets.add(side.x, side.y, cond);
              marked.insert(pair_key(side.x, side.y));
              return false;
            }
            return true;
          });
        }
      }
      if (!marked.empty()) removed_any = true;
      apply_marked_removals(st, marked);
    }
    if (removed_any) {
      orientation_phase(st, ci, st.config.full_rules, false);
      p = 0;
    } else {
      ++p;
    }
    bool done = true;
    for (const auto& [key, view] : st.graph.edges()) {
      if (view.middle != Middle::Empty) {
        done = false;
        break;
      }
    }
    if (done) break;
    if (p > static_cast<int>(st.graph.window_nodes().size()) + 2)
      throw std::logic_error("non-ancestral removal failed to converge");
  }
  orientation_phase(st, ci, st.config.full_rules, false);
}

WindowGraph run_lpcmci(CITest& ci_in, int n_vars, const DiscoveryConfig& cfg) {
  if (n_vars < 1) throw std::invalid_argument("run_lpcmci: need at least one variable");
  if (cfg.tau_max < 0) throw std::invalid_argument("run_lpcmci: negative tau_max");
  if (cfg.k < 0) throw std::invalid_argument("run_lpcmci: negative k");
  CachedCI ci(ci_in);
  DiscoveryState st(n_vars, cfg);
  detail::sweep_ever_parents(st);
  if (st.config.checkpoint) st.config.checkpoint(st, "init");

  for (int iter = 0; iter < cfg.k; ++iter) {
    ancestral_removal(st, ci);
    // carry the directed links over as default parents of the next iteration
    std::set<std::array<int, 3>> carried;
    for (const auto& [key, view] : st.graph.edges()) {
      if (view.at_a == Mark::Tail && view.at_b == Mark::Head)
        carried.insert({key.i, key.tau, key.j});
      if (key.tau == 0 && view.at_a == Mark::Head && view.at_b == Mark::Tail)
        carried.insert({key.j, 0, key.i});
    }
    // only the graph is re-initialized; separating sets and the minimal test
    // statistic memory persist across the preliminary iterations
    st.graph = WindowGraph::complete_initial(n_vars, cfg.tau_max);
    for (const auto& link : carried) {
      Node parent{link[0], link[1]};
      Node child{link[2], 0};
      st.graph.set_edge(parent, child, Mark::Tail, Mark::Head, Middle::Unknown);
    }
    st.ever_parents.clear();
    detail::sweep_ever_parents(st);
    ++st.revision;
    if (st.config.checkpoint) st.config.checkpoint(st, "reinit");
  }

  ancestral_removal(st, ci);
  if (!cfg.ancestral_only) {
    nonancestral_removal(st, ci);
    for (const auto& [key, view] : st.graph.edges())
      if (view.middle != Middle::Empty)
        throw std::logic_error("non-ancestral phase left a non-empty middle mark");
  } else {
    for (const auto& [key, view] : st.graph.edges())
      if (view.middle != Middle::Both && view.middle != Middle::Empty)
        throw std::logic_error("ancestral phase left an unfinished middle mark");
  }
  if (st.config.checkpoint) st.config.checkpoint(st, "done");
  return st.graph;
}

WindowGraph run_lpcmci(CITest& ci, int n_vars, int tau_max, double alpha, int k) {
  DiscoveryConfig cfg;
  cfg.tau_max = tau_max;
  cfg.alpha = alpha;
  cfg.k = k;
  return run_lpcmci(ci, n_vars, cfg);
}

}  // namespace tscd
