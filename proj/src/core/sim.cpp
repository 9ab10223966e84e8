#include "core/sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "core/rng.hpp"
#include "core/stats.hpp"

namespace tscd {

namespace {

constexpr double kExplosionThreshold = 1e4;

// Topological order of the contemporaneous subgraph (model indices).
std::vector<int> contemporaneous_order(const GroundTruthModel& m) {
  std::vector<std::vector<int>> children(static_cast<size_t>(m.n_vars));
  std::vector<int> indeg(static_cast<size_t>(m.n_vars), 0);
  for (const Link& l : m.links) {
    if (l.tau != 0) continue;
    children[static_cast<size_t>(l.i)].push_back(l.j);
    ++indeg[static_cast<size_t>(l.j)];
  }
  std::vector<int> order;
  std::vector<int> ready;
  for (int v = 0; v < m.n_vars; ++v)
    if (indeg[static_cast<size_t>(v)] == 0) ready.push_back(v);
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    order.push_back(v);
    for (int c : children[static_cast<size_t>(v)])
      if (--indeg[static_cast<size_t>(c)] == 0) ready.push_back(c);
  }
  if (static_cast<int>(order.size()) != m.n_vars)
    throw std::logic_error("contemporaneous subgraph has a cycle");
  return order;
}

bool is_stationary(const GroundTruthModel& m, Rng& rng) {
  bool nonlinear = false;
  for (const Link& l : m.links)
    if (l.func != LinkFunc::Linear) nonlinear = true;
  if (m.noise[0].dist == NoiseDist::Binom) return true;  // bounded dynamics
  if (!nonlinear) {
    try {
      StationaryCov probe(m, 0);
      return true;
    } catch (const std::runtime_error&) {
      return false;
    }
  }
  try {
    simulate(m, 500, rng.raw());
    return true;
  } catch (const std::runtime_error&) {
    return false;
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (n_total < 1) throw std::invalid_argument("ModelConfig: n_total must be positive");
  int links = n_links < 0 ? n_total : n_links;
  if (links > n_total * (n_total - 1) / 2)
    throw std::invalid_argument("ModelConfig: more cross links than variable pairs");
  if (autocorr < 0.0) throw std::invalid_argument("ModelConfig: negative autocorr");
  if (!(coeff_min >= 0.0) || coeff_max < coeff_min)
    throw std::invalid_argument("ModelConfig: bad coefficient range");
  if (contemp_frac < 0.0 || contemp_frac > 1.0)
    throw std::invalid_argument("ModelConfig: contemp_frac outside [0, 1]");
  if (p_ts < 0) throw std::invalid_argument("ModelConfig: negative p_ts");
  if (p_ts == 0 && contemp_frac < 1.0 && links > 0)
    throw std::invalid_argument("ModelConfig: lagged links requested but p_ts is 0");
  if (latent_frac < 0.0 || latent_frac >= 1.0)
    throw std::invalid_argument("ModelConfig: latent_frac outside [0, 1)");
  if (func_set.empty()) throw std::invalid_argument("ModelConfig: empty func_set");
  if (discrete && n_bin < 1) throw std::invalid_argument("ModelConfig: n_bin must be >= 1");
}

GroundTruthModel random_model(const ModelConfig& cfg, uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const int n = cfg.n_total;
  const int n_cross = cfg.n_links < 0 ? n : cfg.n_links;

  std::string last_failure = "none";
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GroundTruthModel m;
    m.n_vars = n;

    // Hidden causal order for contemporaneous links.
    std::vector<int> perm(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) perm[static_cast<size_t>(v)] = v;
    for (int v = n - 1; v > 0; --v) {
      int w = static_cast<int>(rng.raw() % static_cast<uint64_t>(v + 1));
      std::swap(perm[static_cast<size_t>(v)], perm[static_cast<size_t>(w)]);
    }
    std::vector<int> pos(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) pos[static_cast<size_t>(perm[static_cast<size_t>(v)])] = v;

    // Autodependencies; a zero coefficient means no link at all.
    double a_lo = std::max(0.0, cfg.autocorr - 0.3);
    for (int v = 0; v < n; ++v) {
      double a = a_lo + (cfg.autocorr - a_lo) * rng.uniform();
      if (a != 0.0) m.links.push_back({v, 1, v, a, LinkFunc::Linear});
    }

    // Cross links over distinct unordered pairs.
    std::set<std::pair<int, int>> used;
    while (static_cast<int>(used.size()) < n_cross) {
      int i = static_cast<int>(rng.raw() % static_cast<uint64_t>(n));
      int j = static_cast<int>(rng.raw() % static_cast<uint64_t>(n));
      if (i == j) continue;
      if (!used.insert({std::min(i, j), std::max(i, j)}).second) continue;

      int tau;
      if (cfg.p_ts == 0 || rng.uniform() < cfg.contemp_frac) {
        tau = 0;
        // Orient along the hidden order to keep the subgraph acyclic.
        if (pos[static_cast<size_t>(i)] > pos[static_cast<size_t>(j)]) std::swap(i, j);
      } else {
        tau = 1 + static_cast<int>(rng.raw() % static_cast<uint64_t>(cfg.p_ts));
      }
      double mag = cfg.coeff_min + (cfg.coeff_max - cfg.coeff_min) * rng.uniform();
      double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
      LinkFunc f = cfg.func_set[rng.raw() % cfg.func_set.size()];
      if (mag != 0.0) m.links.push_back({i, tau, j, sign * mag, f});
    }

    // Noise specification.
    m.noise.resize(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) {
      double scale = 0.5 + 1.5 * rng.uniform();
      NoiseSpec spec{NoiseDist::Gauss, scale};
      if (cfg.discrete)
        spec = {NoiseDist::Binom, static_cast<double>(cfg.n_bin)};
      else if (cfg.mixed_noise && rng.uniform() < 1.0 / 3.0)
        spec.dist = NoiseDist::Weibull;
      m.noise[static_cast<size_t>(v)] = spec;
    }

    // Observed subset of size ceil((1 - latent_frac) * n), sorted.
    int n_obs = static_cast<int>(std::ceil((1.0 - cfg.latent_frac) * n));
    std::vector<int> idx(static_cast<size_t>(n));
    for (int v = 0; v < n; ++v) idx[static_cast<size_t>(v)] = v;
    for (int v = 0; v < n_obs; ++v) {
      int w = v + static_cast<int>(rng.raw() % static_cast<uint64_t>(n - v));
      std::swap(idx[static_cast<size_t>(v)], idx[static_cast<size_t>(w)]);
    }
    m.observed.assign(idx.begin(), idx.begin() + n_obs);
    std::sort(m.observed.begin(), m.observed.end());

    m.validate();
    if (is_stationary(m, rng)) return m;
    last_failure = "non-stationary draw";
  }
  throw std::runtime_error("random_model: exhausted 1000 redraws (last failure: " +
                           last_failure + ")");
}

Eigen::MatrixXd simulate(const GroundTruthModel& model, int t_len, uint64_t seed) {
  model.validate();
  if (t_len < 1) throw std::invalid_argument("simulate: t_len must be positive");
  const int n = model.n_vars;
  const int p = model.max_lag();
  const int burn = std::max(200, 20 * p);
  const long total = static_cast<long>(burn) + t_len;

  std::vector<int> order = contemporaneous_order(model);
  // Incoming links per target for the update step.
  std::vector<std::vector<const Link*>> into(static_cast<size_t>(n));
  for (const Link& l : model.links) into[static_cast<size_t>(l.j)].push_back(&l);

  const bool discrete = model.noise[0].dist == NoiseDist::Binom;
  const double pi = std::acos(-1.0);

  Rng rng(seed);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(total, n);
  std::vector<double> noise(static_cast<size_t>(n));
  for (long t = 0; t < total; ++t) {
    // Noise first, in variable order, so the raw stream is independent of
    // the contemporaneous evaluation order.
    for (int v = 0; v < n; ++v) {
      const NoiseSpec& s = model.noise[static_cast<size_t>(v)];
      switch (s.dist) {
        case NoiseDist::Gauss:
          noise[static_cast<size_t>(v)] = s.scale * rng.normal();
          break;
        case NoiseDist::Weibull:
          // centered at the shape-2 mean scale * sqrt(pi) / 2
          noise[static_cast<size_t>(v)] = rng.weibull2(s.scale) - s.scale * std::sqrt(pi) / 2.0;
          break;
        case NoiseDist::Binom:
          noise[static_cast<size_t>(v)] = static_cast<double>(rng.binom(static_cast<int>(s.scale)));
          break;
      }
    }
    for (int v : order) {
      double acc = noise[static_cast<size_t>(v)];
      for (const Link* l : into[static_cast<size_t>(v)]) {
        if (t < l->tau) continue;  // zero initial state
        double parent = x(t - l->tau, l->i);
        if (discrete) parent -= model.noise[static_cast<size_t>(l->i)].scale / 2.0;
        acc += l->coeff * eval_link_func(l->func, parent);
      }
      if (discrete) {
        double hi = model.noise[static_cast<size_t>(v)].scale;
        acc = std::min(hi, std::max(0.0, std::round(acc)));
      }
      if (std::abs(acc) > kExplosionThreshold)
        throw std::runtime_error("simulate: trajectory explosion at step " + std::to_string(t));
      x(t, v) = acc;
    }
  }

  Eigen::MatrixXd out(t_len, static_cast<long>(model.observed.size()));
  for (long t = 0; t < t_len; ++t)
    for (size_t k = 0; k < model.observed.size(); ++k)
      out(t, static_cast<long>(k)) = x(burn + t, model.observed[k]);
  return out;
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["n_total"] = n_total;
  j["n_links"] = n_links;
  j["autocorr"] = autocorr;
  j["coeff_min"] = coeff_min;
  j["coeff_max"] = coeff_max;
  j["contemp_frac"] = contemp_frac;
  j["p_ts"] = p_ts;
  j["latent_frac"] = latent_frac;
  std::vector<std::string> funcs;
  for (LinkFunc f : func_set) funcs.push_back(link_func_name(f));
  j["func_set"] = funcs;
  j["mixed_noise"] = mixed_noise;
  j["discrete"] = discrete;
  j["n_bin"] = n_bin;
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ModelConfig cfg;
  cfg.n_total = j.at("n_total").get<int>();
  if (j.contains("n_links")) cfg.n_links = j.at("n_links").get<int>();
  if (j.contains("autocorr")) cfg.autocorr = j.at("autocorr").get<double>();
  if (j.contains("coeff_min")) cfg.coeff_min = j.at("coeff_min").get<double>();
  if (j.contains("coeff_max")) cfg.coeff_max = j.at("coeff_max").get<double>();
  if (j.contains("contemp_frac")) cfg.contemp_frac = j.at("contemp_frac").get<double>();
  if (j.contains("p_ts")) cfg.p_ts = j.at("p_ts").get<int>();
  if (j.contains("latent_frac")) cfg.latent_frac = j.at("latent_frac").get<double>();
  if (j.contains("func_set")) {
    cfg.func_set.clear();
    for (const auto& s : j.at("func_set")) cfg.func_set.push_back(link_func_from_name(s.get<std::string>()));
  }
  if (j.contains("mixed_noise")) cfg.mixed_noise = j.at("mixed_noise").get<bool>();
  if (j.contains("discrete")) cfg.discrete = j.at("discrete").get<bool>();
  if (j.contains("n_bin")) cfg.n_bin = j.at("n_bin").get<int>();
  cfg.validate();
  return cfg;
}

}  // namespace tscd
