#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "core/discovery_internal.hpp"

// Baseline discovery pipelines. Both share the stationary window graph and
// edge bookkeeping of the full engine but run classic adjacency-based
// searches, record separating sets verbatim and answer sepset questions by
// majority over the recorded sets.

namespace tscd {

namespace {

// drop the middle-mark machinery: baselines treat every edge as settled
void baseline_initial(WindowGraph& g) {
  for (const auto& [key, view] : g.edges()) {
    const Node ea{key.i, key.tau};
    const Node lb{key.j, 0};
    g.set_middle(ea, lb, Middle::Empty);
  }
}

// time-ordered default orientations: circles everywhere, heads at the later
// end of lagged edges
void reset_orientations(WindowGraph& g) {
  for (const auto& [key, view] : g.edges()) {
    const Node ea{key.i, key.tau};
    const Node lb{key.j, 0};
    if (key.tau == 0)
      g.set_edge(ea, lb, Mark::Circle, Mark::Circle, Middle::Empty);
    else
      g.set_edge(ea, lb, Mark::Circle, Mark::Head, Middle::Empty);
  }
}

using Removal = std::tuple<Node, Node, std::vector<Node>>;

void apply_removals(DiscoveryState& st, std::vector<Removal>& removals) {
  for (auto& [a, b, sep] : removals) {
    if (st.graph.adjacent(a, b)) st.graph.remove_edge(a, b);
    st.sepsets.add(a, b, std::move(sep));
  }
  if (!removals.empty()) ++st.revision;
}

// adjacency-based skeleton search with level-wise deferred removals, so the
// candidate sets of one level are unaffected by its own removals
void baseline_skeleton(DiscoveryState& st, CITest& ci) {
  WindowGraph& g = st.graph;
  int p = 0;
  while (true) {
    bool any_candidates = false;
    std::vector<Removal> removals;
    for (const auto& [key, view] : g.edges()) {
      const Node ea{key.i, key.tau};
      const Node lb{key.j, 0};
      bool separated = false;
      for (int side = 0; side < 2 && !separated; ++side) {
        const Node center = side == 0 ? lb : ea;
        const Node other = side == 0 ? ea : lb;
        std::vector<Node> cand = g.neighbors_in_window(center);
        cand.erase(std::remove(cand.begin(), cand.end(), other), cand.end());
        if (static_cast<int>(cand.size()) >= p) any_candidates = true;
        detail::for_each_subset(cand, p, [&](const std::vector<Node>& pick) {
          std::vector<Node> cond = pick;
          const CIResult r = detail::tested(st.config, ci, ea, lb, cond, "removal");
          st.sepsets.lower_imin(ea, lb, std::abs(r.stat));
          if (r.pvalue > st.config.alpha) {
            removals.emplace_back(ea, lb, std::move(cond));
            separated = true;
            return false;
          }
          return true;
        });
      }
    }
    apply_removals(st, removals);
    if (!any_candidates) break;
    ++p;
  }
}

// collider orientation by majority over fresh adjacency-subset searches
void majority_r0(DiscoveryState& st, CITest& ci) {
  detail::Engine e{st, ci, detail::RuleMode::Standard};
  detail::Batch batch;
  const WindowGraph& g = st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (size_t x = 0; x < nb.size(); ++x) {
      for (size_t y = x + 1; y < nb.size(); ++y) {
        const Node a = nb[x];
        const Node c = nb[y];
        if (g.representable(a, c) && g.adjacent(a, c)) continue;
        if (e.vote(a, c, b, VoteMode::NotIn) != Vote::NotIn) continue;
        batch.marks.push_back({b, a, Mark::Head});
        batch.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  detail::apply_batch(e, batch, false);
}

// second removal sweep over the possible-d-sep sets of the collider-oriented
// skeleton; conditioning size capped like the non-ancestral search
void pds_removal(DiscoveryState& st, CITest& ci) {
  WindowGraph& g = st.graph;
  std::vector<Removal> removals;
  for (const auto& [key, view] : g.edges()) {
    const Node ea{key.i, key.tau};
    const Node lb{key.j, 0};
    bool separated = false;
    for (int side = 0; side < 2 && !separated; ++side) {
      const Node center = side == 0 ? lb : ea;
      const Node other = side == 0 ? ea : lb;
      const std::vector<Node> base = pds_t(g, center, other);
      const int cap = st.config.max_cond < 0
                          ? static_cast<int>(base.size())
                          : std::min<int>(st.config.max_cond, static_cast<int>(base.size()));
      for (int size = 0; size <= cap && !separated; ++size) {
        detail::for_each_subset(base, size, [&](const std::vector<Node>& pick) {
          std::vector<Node> cond = pick;
          const CIResult r = detail::tested(st.config, ci, ea, lb, cond, "removal");
          st.sepsets.lower_imin(ea, lb, std::abs(r.stat));
          if (r.pvalue > st.config.alpha) {
            removals.emplace_back(ea, lb, std::move(cond));
            separated = true;
            return false;
          }
          return true;
        });
      }
    }
  }
  apply_removals(st, removals);
}

// re-test both edges of every unshielded triple against the recorded
// separating sets of its outer pair; repeats until no edge falls
void rfci_triple_phase(DiscoveryState& st, CITest& ci) {
  WindowGraph& g = st.graph;
  while (true) {
    std::vector<Removal> removals;
    for (const Node& b : g.window_nodes()) {
      const std::vector<Node> nb = g.neighbors_in_window(b);
      for (size_t x = 0; x < nb.size(); ++x) {
        for (size_t y = x + 1; y < nb.size(); ++y) {
          const Node a = nb[x];
          const Node c = nb[y];
          if (g.representable(a, c) && g.adjacent(a, c)) continue;
          for (const auto& sframe : st.sepsets.sets(a, c)) {
            const std::vector<Node> sw = from_pair_frame(a, c, sframe);
            const std::vector<Node> cond = detail::nset_minus(sw, std::vector<Node>{b});
            if (detail::window_query_ok(st.config.tau_max, a, b, cond)) {
              const CIResult r1 = detail::tested(st.config, ci, a, b, cond, "removal");
              st.sepsets.lower_imin(a, b, std::abs(r1.stat));
              if (r1.pvalue > st.config.alpha) removals.emplace_back(a, b, cond);
            }
            if (detail::window_query_ok(st.config.tau_max, c, b, cond)) {
              const CIResult r2 = detail::tested(st.config, ci, c, b, cond, "removal");
              st.sepsets.lower_imin(c, b, std::abs(r2.stat));
              if (r2.pvalue > st.config.alpha) removals.emplace_back(c, b, cond);
            }
          }
        }
      }
    }
    if (removals.empty()) break;
    apply_removals(st, removals);
  }
}

// collider orientation from recorded sets only, with both-edge dependence
// certified against at least one recorded set of the outer pair
void rfci_collider_pass(DiscoveryState& st, CITest& ci) {
  detail::Engine e{st, ci, detail::RuleMode::Standard};
  detail::Batch batch;
  const WindowGraph& g = st.graph;
  for (const Node& b : g.window_nodes()) {
    const std::vector<Node> nb = g.neighbors_in_window(b);
    for (size_t x = 0; x < nb.size(); ++x) {
      for (size_t y = x + 1; y < nb.size(); ++y) {
        const Node a = nb[x];
        const Node c = nb[y];
        if (g.representable(a, c) && g.adjacent(a, c)) continue;
        bool certified = false;
        for (const auto& sframe : st.sepsets.sets(a, c)) {
          const std::vector<Node> sw = from_pair_frame(a, c, sframe);
          const std::vector<Node> cond = detail::nset_minus(sw, std::vector<Node>{b});
          if (!detail::window_query_ok(st.config.tau_max, a, b, cond) ||
              !detail::window_query_ok(st.config.tau_max, c, b, cond))
            continue;
          const CIResult r1 = detail::tested(st.config, ci, a, b, cond, "rule-test");
          const CIResult r2 = detail::tested(st.config, ci, c, b, cond, "rule-test");
          if (r1.pvalue <= st.config.alpha && r2.pvalue <= st.config.alpha) certified = true;
        }
        if (!certified) continue;
        if (e.recorded_vote(a, c, b) != Vote::NotIn) continue;
        batch.marks.push_back({b, a, Mark::Head});
        batch.marks.push_back({b, c, Mark::Head});
      }
    }
  }
  detail::apply_batch(e, batch, false);
}

void validate_baseline_config(int n_vars, const DiscoveryConfig& cfg) {
  if (n_vars < 1) throw std::invalid_argument("n_vars must be at least 1");
  if (cfg.tau_max < 0) throw std::invalid_argument("tau_max must not be negative");
}

}  // namespace

WindowGraph run_svarfci(CITest& ci, int n_vars, const DiscoveryConfig& cfg) {
  validate_baseline_config(n_vars, cfg);
  CachedCI cached(ci);
  DiscoveryState st(n_vars, cfg);
  baseline_initial(st.graph);
  baseline_skeleton(st, cached);
  majority_r0(st, cached);
  pds_removal(st, cached);
  reset_orientations(st.graph);
  ++st.revision;
  majority_r0(st, cached);
  detail::Engine engine{st, cached, detail::RuleMode::Standard};
  const std::vector<RuleId> rules{RuleId::ER1, RuleId::ER2, RuleId::ER3, RuleId::R4,
                                  RuleId::ER8, RuleId::ER9, RuleId::ER10};
  detail::run_rules(engine, rules, false);
  return st.graph;
}

WindowGraph run_svarfci(CITest& ci, int n_vars, int tau_max, double alpha) {
  DiscoveryConfig cfg;
  cfg.tau_max = tau_max;
  cfg.alpha = alpha;
  return run_svarfci(ci, n_vars, cfg);
}

WindowGraph run_svarrfci(CITest& ci, int n_vars, const DiscoveryConfig& cfg) {
  validate_baseline_config(n_vars, cfg);
  CachedCI cached(ci);
  DiscoveryState st(n_vars, cfg);
  baseline_initial(st.graph);
  baseline_skeleton(st, cached);
  rfci_triple_phase(st, cached);
  rfci_collider_pass(st, cached);
  detail::Engine engine{st, cached, detail::RuleMode::Standard};
  const std::vector<RuleId> rules{RuleId::ER1, RuleId::ER2, RuleId::ER3, RuleId::ER4,
                                  RuleId::ER8, RuleId::ER9, RuleId::ER10};
  detail::run_rules(engine, rules, false);
  return st.graph;
}

WindowGraph run_svarrfci(CITest& ci, int n_vars, int tau_max, double alpha) {
  DiscoveryConfig cfg;
  cfg.tau_max = tau_max;
  cfg.alpha = alpha;
  return run_svarrfci(ci, n_vars, cfg);
}

}  // namespace tscd
