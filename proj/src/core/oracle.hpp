#pragma once

#include <optional>
#include <string>
#include <vector>

#include "core/graph.hpp"
#include "core/model.hpp"
#include "core/types.hpp"

namespace tscd {

// m-separation on a mixed marked graph materialized over the window nodes of
// g (lags 0..tau_max). Conditioning nodes must lie within the window.
bool mag_msep(const WindowGraph& g, const Node& x, const Node& y, const std::vector<Node>& cond);

// Exact ground-truth queries for a stationary structural model. Separation
// statements refer to the infinite unrolled graph; they are evaluated on
// finite windows that are doubled until two consecutive evaluations agree.
//
// Nodes passed to dsep/ancestors use model variable indices. The marginal
// graphs (MAG, PAG) and indep() use observed-variable indices 0..N_obs-1,
// i.e. positions within model.observed, since those are the variables a
// dataset exposes.
class Oracle {
 public:
  Oracle(GroundTruthModel model, int tau_max);

  const GroundTruthModel& model() const { return model_; }
  int tau_max() const { return taumax_; }
  int n_observed() const { return static_cast<int>(model_.observed.size()); }

  // d-separation in the infinite graph, model variable indices, lags >= 0.
  bool dsep(const Node& x, const Node& y, const std::vector<Node>& cond) const;

  // Conditional independence of observed variables (observed indices).
  bool indep(const Node& x, const Node& y, const std::vector<Node>& cond) const;

  // Ancestors of v (model indices) in the infinite graph up to max_lag,
  // including v itself.
  std::vector<Node> ancestors(const Node& v, int max_lag) const;
  bool is_ancestor(const Node& a, const Node& b) const;  // a in an(b, G)

  // Same ancestry questions among observed variables (observed indices).
  bool is_ancestor_observed(const Node& a, const Node& b) const;

  // The true marginal graph over the observed variables with repeating
  // adjacencies enforced, and its maximally informative stationary partial
  // ancestral graph under time order.
  const WindowGraph& true_mag() const { return mag_; }
  const WindowGraph& true_pag() const { return pag_; }

  // Classical D-Sep(b, a) set of the true marginal graph, observed indices,
  // restricted to window nodes.
  std::vector<Node> dsep_set(const Node& b, const Node& a) const;

 private:
  Node to_model(const Node& v) const;  // observed index -> model index
  bool separable(const Node& a, const Node& b) const;  // observed indices
  void build_mag();
  void build_pag();

  GroundTruthModel model_;
  int taumax_ = 0;
  int base_window_ = 0;
  WindowGraph mag_;
  WindowGraph pag_;
};

// Seven-point validity check of a candidate graph against the ground truth:
// heads mean non-ancestry, tails mean ancestry, removed edges mean true
// non-adjacency, middle marks mean the matching pa-separability statements,
// and empty middle marks mean true adjacency. Returns std::nullopt when the
// graph is valid, otherwise a description of the first violation.
std::optional<std::string> validate_lpcmci_pag(const WindowGraph& c, const Oracle& oracle);

}  // namespace tscd
