#include "core/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace tscd {

int GroundTruthModel::max_lag() const {
  int m = 0;
  for (const Link& l : links) m = std::max(m, l.tau);
  return m;
}

bool GroundTruthModel::is_observed(int var) const {
  return std::find(observed.begin(), observed.end(), var) != observed.end();
}

int GroundTruthModel::observed_index(int var) const {
  auto it = std::find(observed.begin(), observed.end(), var);
  return it == observed.end() ? -1 : static_cast<int>(it - observed.begin());
}

void GroundTruthModel::validate() const {
  if (n_vars < 1) throw std::invalid_argument("model: n_vars must be positive");
  std::set<std::tuple<int, int, int>> seen;
  for (const Link& l : links) {
    if (l.i < 0 || l.i >= n_vars || l.j < 0 || l.j >= n_vars)
      throw std::invalid_argument("model: link variable out of range");
    if (l.tau < 0) throw std::invalid_argument("model: link lag must be non-negative");
    if (l.tau == 0 && l.i == l.j) throw std::invalid_argument("model: contemporaneous self-link");
    if (!std::isfinite(l.coeff)) throw std::invalid_argument("model: non-finite coefficient");
    if (!seen.insert({l.i, l.tau, l.j}).second)
      throw std::invalid_argument("model: duplicate link");
  }
  // Contemporaneous part must be acyclic so the process is well defined.
  std::vector<std::vector<int>> adj0(n_vars);
  std::vector<int> indeg(n_vars, 0);
  for (const Link& l : links) {
    if (l.tau == 0) {
      adj0[l.i].push_back(l.j);
      ++indeg[l.j];
    }
  }
  std::vector<int> queue;
  for (int v = 0; v < n_vars; ++v)
    if (indeg[v] == 0) queue.push_back(v);
  int seen_count = 0;
  for (size_t q = 0; q < queue.size(); ++q) {
    ++seen_count;
    for (int w : adj0[queue[q]])
      if (--indeg[w] == 0) queue.push_back(w);
  }
  if (seen_count != n_vars) throw std::invalid_argument("model: contemporaneous links form a cycle");

  if (observed.empty()) throw std::invalid_argument("model: observed list is empty");
  std::set<int> obs_seen;
  for (int v : observed) {
    if (v < 0 || v >= n_vars) throw std::invalid_argument("model: observed variable out of range");
    if (!obs_seen.insert(v).second) throw std::invalid_argument("model: duplicate observed variable");
  }
  if (!std::is_sorted(observed.begin(), observed.end()))
    throw std::invalid_argument("model: observed list must be sorted");

  if (noise.size() != static_cast<size_t>(n_vars))
    throw std::invalid_argument("model: noise list must have one entry per variable");
  for (const NoiseSpec& s : noise) {
    if (!std::isfinite(s.scale) || s.scale <= 0.0)
      throw std::invalid_argument("model: noise scale must be positive");
    if (s.dist == NoiseDist::Binom) {
      double r = std::round(s.scale);
      if (std::abs(s.scale - r) > 1e-9 || r < 1.0)
        throw std::invalid_argument("model: binom noise scale must be a positive integer trial count");
    }
  }
}

std::string GroundTruthModel::to_json() const {
  nlohmann::json out;
  out["n_vars"] = n_vars;
  out["links"] = nlohmann::json::array();
  for (const Link& l : links) {
    nlohmann::json e;
    e["i"] = l.i;
    e["tau"] = l.tau;
    e["j"] = l.j;
    e["coeff"] = l.coeff;
    e["func"] = link_func_name(l.func);
    out["links"].push_back(std::move(e));
  }
  out["observed"] = observed;
  out["noise"] = nlohmann::json::array();
  for (const NoiseSpec& s : noise) {
    nlohmann::json e;
    e["dist"] = noise_dist_name(s.dist);
    e["scale"] = s.scale;
    out["noise"].push_back(std::move(e));
  }
  return out.dump(2);
}

GroundTruthModel GroundTruthModel::from_json(const std::string& text) {
  nlohmann::json in = nlohmann::json::parse(text);
  GroundTruthModel m;
  m.n_vars = in.at("n_vars").get<int>();
  for (const auto& e : in.at("links")) {
    Link l;
    l.i = e.at("i").get<int>();
    l.tau = e.at("tau").get<int>();
    l.j = e.at("j").get<int>();
    l.coeff = e.at("coeff").get<double>();
    l.func = link_func_from_name(e.at("func").get<std::string>());
    m.links.push_back(l);
  }
  m.observed = in.at("observed").get<std::vector<int>>();
  for (const auto& e : in.at("noise")) {
    NoiseSpec s;
    s.dist = noise_dist_from_name(e.at("dist").get<std::string>());
    s.scale = e.at("scale").get<double>();
    m.noise.push_back(s);
  }
  m.validate();
  return m;
}

const char* link_func_name(LinkFunc f) {
  return f == LinkFunc::Linear ? "linear" : "nonlin_f1";
}

LinkFunc link_func_from_name(const std::string& s) {
  if (s == "linear") return LinkFunc::Linear;
  if (s == "nonlin_f1") return LinkFunc::NonlinF1;
  throw std::runtime_error("unknown link function: " + s);
}

const char* noise_dist_name(NoiseDist d) {
  switch (d) {
    case NoiseDist::Gauss: return "gauss";
    case NoiseDist::Weibull: return "weibull";
    case NoiseDist::Binom: return "binom";
  }
  throw std::logic_error("unreachable");
}

NoiseDist noise_dist_from_name(const std::string& s) {
  if (s == "gauss") return NoiseDist::Gauss;
  if (s == "weibull") return NoiseDist::Weibull;
  if (s == "binom") return NoiseDist::Binom;
  throw std::runtime_error("unknown noise distribution: " + s);
}

double nonlin_f1(double x) {
  return (1.0 + 5.0 * x * std::exp(-x * x / 20.0)) * x;
}

double eval_link_func(LinkFunc f, double x) {
  return f == LinkFunc::Linear ? x : nonlin_f1(x);
}

}  // namespace tscd
