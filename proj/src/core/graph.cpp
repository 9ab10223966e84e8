#include "core/graph.hpp"

#include <algorithm>
#include <stdexcept>

#include "json.hpp"

namespace tscd {

WindowGraph::WindowGraph(int n_vars, int tau_max) : n_(n_vars), taumax_(tau_max) {
  if (n_vars < 1) throw std::invalid_argument("WindowGraph: n_vars must be positive");
  if (tau_max < 0) throw std::invalid_argument("WindowGraph: tau_max must be non-negative");
  slots_.resize(static_cast<size_t>(taumax_ + 1) * n_ * n_);
}

WindowGraph WindowGraph::complete_initial(int n_vars, int tau_max) {
  WindowGraph g(n_vars, tau_max);
  for (int tau = 0; tau <= tau_max; ++tau) {
    for (int i = 0; i < n_vars; ++i) {
      for (int j = 0; j < n_vars; ++j) {
        if (tau == 0 && i >= j) continue;
        Slot& s = g.slot(EdgeKey{i, tau, j});
        s.present = true;
        s.mark_i = Mark::Circle;
        s.mark_j = tau > 0 ? Mark::Head : Mark::Circle;
        s.middle = tau > 0 ? Middle::Left : Middle::Unknown;
      }
    }
  }
  return g;
}

bool WindowGraph::representable(const Node& a, const Node& b) const {
  if (a.var < 0 || a.var >= n_ || b.var < 0 || b.var >= n_) return false;
  if (a.lag < 0 || b.lag < 0) return false;
  if (a.var == b.var && a.lag == b.lag) return false;
  int dtau = a.lag - b.lag;
  if (dtau < -taumax_ || dtau > taumax_) return false;
  if (dtau == 0 && a.var == b.var) return false;
  return true;
}

EdgeKey WindowGraph::canonical(const Node& a, const Node& b, bool* a_is_earlier) const {
  if (!representable(a, b)) throw std::invalid_argument("WindowGraph: pair not representable");
  int dtau = a.lag - b.lag;
  if (dtau > 0 || (dtau == 0 && a.var < b.var)) {
    *a_is_earlier = true;
    return EdgeKey{a.var, dtau, b.var};
  }
  *a_is_earlier = false;
  return EdgeKey{b.var, -dtau, a.var};
}

size_t WindowGraph::index(const EdgeKey& k) const {
  return (static_cast<size_t>(k.tau) * n_ + k.i) * n_ + k.j;
}

void WindowGraph::check_time_order(const EdgeKey& k, Mark mark_j) const {
  if (k.tau > 0 && mark_j != Mark::Head && mark_j != Mark::Conflict) {
    throw std::logic_error("WindowGraph: lagged edge must keep a head or conflict mark at the later node");
  }
}

EdgeView WindowGraph::edge(const Node& a, const Node& b) const {
  bool a_first = false;
  const Slot& s = slot(canonical(a, b, &a_first));
  EdgeView v;
  v.present = s.present;
  v.at_a = a_first ? s.mark_i : s.mark_j;
  v.at_b = a_first ? s.mark_j : s.mark_i;
  v.middle = s.middle;
  return v;
}

bool WindowGraph::adjacent(const Node& a, const Node& b) const {
  if (!representable(a, b)) return false;
  bool a_first = false;
  return slot(canonical(a, b, &a_first)).present;
}

Mark WindowGraph::mark_at(const Node& a, const Node& b) const {
  EdgeView v = edge(a, b);
  if (!v.present) throw std::logic_error("WindowGraph: mark_at on absent edge");
  return v.at_a;
}

Middle WindowGraph::middle(const Node& a, const Node& b) const {
  EdgeView v = edge(a, b);
  if (!v.present) throw std::logic_error("WindowGraph: middle on absent edge");
  return v.middle;
}

void WindowGraph::set_edge(const Node& a, const Node& b, Mark at_a, Mark at_b, Middle m) {
  bool a_first = false;
  EdgeKey k = canonical(a, b, &a_first);
  check_time_order(k, a_first ? at_b : at_a);
  Slot& s = slot(k);
  s.present = true;
  s.mark_i = a_first ? at_a : at_b;
  s.mark_j = a_first ? at_b : at_a;
  s.middle = m;
}

void WindowGraph::set_mark(const Node& a, const Node& b, Mark at_a) {
  bool a_first = false;
  EdgeKey k = canonical(a, b, &a_first);
  Slot& s = slot(k);
  if (!s.present) throw std::logic_error("WindowGraph: set_mark on absent edge");
  if (!a_first) check_time_order(k, at_a);
  (a_first ? s.mark_i : s.mark_j) = at_a;
}

void WindowGraph::set_middle(const Node& a, const Node& b, Middle m) {
  bool a_first = false;
  Slot& s = slot(canonical(a, b, &a_first));
  if (!s.present) throw std::logic_error("WindowGraph: set_middle on absent edge");
  s.middle = m;
}

void WindowGraph::combine_middle(const Node& a, const Node& b, Middle m) {
  bool a_first = false;
  Slot& s = slot(canonical(a, b, &a_first));
  if (!s.present) throw std::logic_error("WindowGraph: combine_middle on absent edge");
  s.middle = combine_middle_marks(s.middle, m);
}

void WindowGraph::remove_edge(const Node& a, const Node& b) {
  bool a_first = false;
  Slot& s = slot(canonical(a, b, &a_first));
  s = Slot{};
  s.present = false;
}

std::vector<Node> WindowGraph::neighbors_in_window(const Node& a) const {
  std::vector<Node> out;
  for (int lag = 0; lag <= taumax_; ++lag) {
    for (int v = 0; v < n_; ++v) {
      Node b{v, lag};
      if (b == a) continue;
      if (adjacent(a, b)) out.push_back(b);
    }
  }
  std::sort(out.begin(), out.end(), node_less);
  return out;
}

std::vector<Node> WindowGraph::window_nodes() const {
  std::vector<Node> out;
  out.reserve(static_cast<size_t>(taumax_ + 1) * n_);
  for (int lag = taumax_; lag >= 0; --lag) {
    for (int v = 0; v < n_; ++v) out.push_back(Node{v, lag});
  }
  return out;
}

std::vector<std::pair<EdgeKey, EdgeView>> WindowGraph::edges() const {
  std::vector<std::pair<EdgeKey, EdgeView>> out;
  for (int tau = 0; tau <= taumax_; ++tau) {
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        if (tau == 0 && i >= j) continue;
        const Slot& s = slot(EdgeKey{i, tau, j});
        if (!s.present) continue;
        EdgeView v;
        v.present = true;
        v.at_a = s.mark_i;
        v.at_b = s.mark_j;
        v.middle = s.middle;
        out.push_back({EdgeKey{i, tau, j}, v});
      }
    }
  }
  return out;
}

size_t WindowGraph::edge_count() const {
  size_t c = 0;
  for (const Slot& s : slots_) c += s.present ? 1 : 0;
  return c;
}

bool WindowGraph::operator==(const WindowGraph& other) const {
  if (n_ != other.n_ || taumax_ != other.taumax_) return false;
  for (size_t idx = 0; idx < slots_.size(); ++idx) {
    const Slot& a = slots_[idx];
    const Slot& b = other.slots_[idx];
    if (a.present != b.present) return false;
    if (!a.present) continue;
    if (a.mark_i != b.mark_i || a.mark_j != b.mark_j || a.middle != b.middle) return false;
  }
  return true;
}

std::string WindowGraph::to_json() const {
  nlohmann::json out;
  out["n_vars"] = n_;
  out["tau_max"] = taumax_;
  out["edges"] = nlohmann::json::array();
  for (const auto& [k, v] : edges()) {
    nlohmann::json e;
    e["i"] = k.i;
    e["tau"] = k.tau;
    e["j"] = k.j;
    e["mark_i"] = mark_name(v.at_a);
    e["mark_j"] = mark_name(v.at_b);
    if (v.middle != Middle::Empty) e["middle"] = middle_name(v.middle);
    out["edges"].push_back(std::move(e));
  }
  return out.dump(2);
}

WindowGraph WindowGraph::from_json(const std::string& text) {
  nlohmann::json in = nlohmann::json::parse(text);
  WindowGraph g(in.at("n_vars").get<int>(), in.at("tau_max").get<int>());
  for (const auto& e : in.at("edges")) {
    int i = e.at("i").get<int>();
    int tau = e.at("tau").get<int>();
    int j = e.at("j").get<int>();
    if (tau < 0 || tau > g.taumax_) throw std::invalid_argument("graph json: tau out of range");
    if (tau == 0 && i >= j) throw std::invalid_argument("graph json: contemporaneous edge must have i < j");
    Middle m = Middle::Empty;
    if (e.contains("middle")) m = middle_from_name(e.at("middle").get<std::string>());
    g.set_edge(Node{i, tau}, Node{j, 0}, mark_from_name(e.at("mark_i").get<std::string>()),
               mark_from_name(e.at("mark_j").get<std::string>()), m);
  }
  return g;
}

}  // namespace tscd
