#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <set>
#include <sstream>

#include "core/csv.hpp"
#include "core/model.hpp"
#include "core/sim.hpp"
#include "core/stats.hpp"

using namespace tscd;

TEST_CASE("model config json round trip and validation") {
  ModelConfig cfg;
  cfg.n_total = 7;
  cfg.latent_frac = 0.3;
  cfg.func_set = {LinkFunc::Linear, LinkFunc::NonlinF1};
  cfg.mixed_noise = true;
  ModelConfig back = ModelConfig::from_json(cfg.to_json());
  CHECK(back.n_total == 7);
  CHECK(back.latent_frac == doctest::Approx(0.3));
  CHECK(back.func_set.size() == 2);
  CHECK(back.mixed_noise);

  ModelConfig bad;
  bad.n_total = 3;
  bad.n_links = 10;  // only 3 unordered pairs exist
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = ModelConfig{};
  bad.latent_frac = 1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("random models are deterministic in the seed and well formed") {
  ModelConfig cfg;
  cfg.n_total = 6;
  cfg.p_ts = 3;
  cfg.latent_frac = 0.25;
  GroundTruthModel a = random_model(cfg, 11);
  GroundTruthModel b = random_model(cfg, 11);
  GroundTruthModel c = random_model(cfg, 12);
  CHECK(a.to_json() == b.to_json());
  CHECK(a.to_json() != c.to_json());

  int autos = 0, cross = 0;
  std::set<std::pair<int, int>> pairs;
  for (const Link& l : a.links) {
    CHECK(l.tau >= 0);
    CHECK(l.tau <= 3);
    if (l.i == l.j) {
      ++autos;
      CHECK(l.tau == 1);
      CHECK(l.coeff >= 0.6);
      CHECK(l.coeff <= 0.9);
    } else {
      ++cross;
      double mag = std::abs(l.coeff);
      CHECK(mag >= 0.2);
      CHECK(mag <= 0.8);
      CHECK(pairs.insert({std::min(l.i, l.j), std::max(l.i, l.j)}).second);
    }
  }
  CHECK(autos == 6);
  CHECK(cross == 6);
  CHECK(a.observed.size() == 5);  // ceil(0.75 * 6)
  for (const NoiseSpec& s : a.noise) {
    CHECK(s.dist == NoiseDist::Gauss);
    CHECK(s.scale >= 0.5);
    CHECK(s.scale <= 2.0);
  }
}

TEST_CASE("zero autocorrelation omits the self links") {
  ModelConfig cfg;
  cfg.n_total = 4;
  cfg.autocorr = 0.0;
  GroundTruthModel m = random_model(cfg, 3);
  for (const Link& l : m.links) CHECK(l.i != l.j);
}

TEST_CASE("noise menu options") {
  ModelConfig cfg;
  cfg.n_total = 30;
  cfg.n_links = 0;
  cfg.mixed_noise = true;
  GroundTruthModel m = random_model(cfg, 5);
  int weib = 0, gauss = 0;
  for (const NoiseSpec& s : m.noise) (s.dist == NoiseDist::Weibull ? weib : gauss)++;
  CHECK(weib > 0);
  CHECK(gauss > 0);

  cfg.mixed_noise = false;
  cfg.discrete = true;
  cfg.n_bin = 6;
  GroundTruthModel d = random_model(cfg, 5);
  for (const NoiseSpec& s : d.noise) {
    CHECK(s.dist == NoiseDist::Binom);
    CHECK(s.scale == 6.0);
  }
}

TEST_CASE("hopeless configurations exhaust the redraw budget") {
  ModelConfig cfg;
  cfg.n_total = 2;
  cfg.n_links = 0;
  cfg.autocorr = 1.5;  // a_j is drawn from [1.2, 1.5]: always explosive
  CHECK_THROWS_AS(random_model(cfg, 1), std::runtime_error);
}

TEST_CASE("simulation is deterministic and leaves out latent columns") {
  GroundTruthModel m;
  m.n_vars = 3;
  m.links = {{0, 1, 0, 0.5, LinkFunc::Linear},
             {0, 1, 1, 0.4, LinkFunc::Linear},
             {1, 0, 2, 0.6, LinkFunc::Linear}};
  m.observed = {0, 1, 2};
  m.noise.assign(3, {NoiseDist::Gauss, 1.0});

  Eigen::MatrixXd full = simulate(m, 100, 77);
  CHECK(simulate(m, 100, 77) == full);
  CHECK(simulate(m, 100, 78) != full);

  GroundTruthModel partial = m;
  partial.observed = {0, 2};
  Eigen::MatrixXd obs = simulate(partial, 100, 77);
  REQUIRE(obs.cols() == 2);
  CHECK(obs.col(0) == full.col(0));
  CHECK(obs.col(1) == full.col(2));
}

TEST_CASE("sample moments match the analytic stationary covariance") {
  GroundTruthModel m;
  m.n_vars = 3;
  m.links = {{0, 1, 0, 0.5, LinkFunc::Linear},
             {1, 1, 1, 0.4, LinkFunc::Linear},
             {2, 1, 2, 0.3, LinkFunc::Linear},
             {0, 1, 2, 0.6, LinkFunc::Linear},
             {2, 0, 1, 0.7, LinkFunc::Linear}};
  m.observed = {0, 1, 2};
  m.noise = {{NoiseDist::Gauss, 1.0}, {NoiseDist::Gauss, 0.8}, {NoiseDist::Weibull, 1.2}};

  const int t_len = 100000;
  Eigen::MatrixXd d = simulate(m, t_len, 2024);
  StationaryCov s(m, 1);

  auto sample_cov = [&](int i, int li, int j, int lj) {
    int lmax = std::max(li, lj);
    double mi = 0, mj = 0;
    int n = t_len - lmax;
    for (int t = lmax; t < t_len; ++t) {
      mi += d(t - li, i);
      mj += d(t - lj, j);
    }
    mi /= n;
    mj /= n;
    double acc = 0;
    for (int t = lmax; t < t_len; ++t) acc += (d(t - li, i) - mi) * (d(t - lj, j) - mj);
    return acc / n;
  };

  struct Probe {
    int i, li, j, lj;
  };
  for (const Probe& p : {Probe{0, 0, 0, 0}, Probe{1, 0, 1, 0}, Probe{2, 0, 2, 0},
                         Probe{1, 0, 2, 0}, Probe{0, 1, 2, 0}, Probe{0, 1, 1, 0},
                         Probe{0, 0, 1, 0}}) {
    double expect = s.cov(Node{p.i, p.li}, Node{p.j, p.lj});
    double got = sample_cov(p.i, p.li, p.j, p.lj);
    CHECK(got == doctest::Approx(expect).epsilon(0.08).scale(0.05));
  }
}

TEST_CASE("weibull noise is centered") {
  GroundTruthModel m;
  m.n_vars = 1;
  m.links = {};
  m.observed = {0};
  m.noise = {{NoiseDist::Weibull, 1.3}};
  Eigen::MatrixXd d = simulate(m, 100000, 99);
  double mean = d.col(0).mean();
  double var = (d.col(0).array() - mean).square().mean();
  CHECK(std::abs(mean) < 0.02);
  CHECK(var == doctest::Approx(1.3 * 1.3 * (1.0 - std::acos(-1.0) / 4.0)).epsilon(0.05));
}

TEST_CASE("nonlinear links stay bounded for accepted models") {
  GroundTruthModel m;
  m.n_vars = 2;
  m.links = {{0, 1, 0, 0.5, LinkFunc::Linear}, {0, 1, 1, 0.4, LinkFunc::NonlinF1}};
  m.observed = {0, 1};
  m.noise.assign(2, {NoiseDist::Gauss, 1.0});
  Eigen::MatrixXd d = simulate(m, 5000, 5);
  CHECK(d.allFinite());
  CHECK(d.cwiseAbs().maxCoeff() < 1e4);
  CHECK(d.cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("discrete dynamics stay on the integer grid") {
  ModelConfig cfg;
  cfg.n_total = 3;
  cfg.discrete = true;
  cfg.n_bin = 4;
  GroundTruthModel m = random_model(cfg, 21);
  Eigen::MatrixXd d = simulate(m, 4000, 21);
  for (long r = 0; r < d.rows(); ++r)
    for (long c = 0; c < d.cols(); ++c) {
      CHECK(d(r, c) == std::floor(d(r, c)));
      CHECK(d(r, c) >= 0.0);
      CHECK(d(r, c) <= 4.0);
    }
  // Values concentrate around the binomial center.
  CHECK(std::abs(d.mean() - 2.0) < 0.35);
}

TEST_CASE("explosions are reported") {
  GroundTruthModel m;
  m.n_vars = 1;
  m.links = {{0, 1, 0, 1.5, LinkFunc::Linear}};
  m.observed = {0};
  m.noise = {{NoiseDist::Gauss, 1.0}};
  CHECK_THROWS_AS(simulate(m, 1000, 1), std::runtime_error);
}

TEST_CASE("csv round trip is exact") {
  Eigen::MatrixXd d(3, 3);
  d << 1.0 / 3.0, -2.5, 1e-17, 3.14159265358979, 0.0, -1e100, 42.0, 0.1 + 0.2, 7.0;
  std::ostringstream out;
  write_csv(out, d, false);
  std::istringstream in(out.str());
  CsvData back = read_csv(in);
  REQUIRE(back.names.size() == 3);
  CHECK(back.names[0] == "X0");
  CHECK(back.names[2] == "X2");
  REQUIRE(back.values.rows() == 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(back.values(r, c) == d(r, c));
}

TEST_CASE("integer format prints whole numbers") {
  Eigen::MatrixXd d(2, 2);
  d << 0.0, 3.0, 4.0, 1.0;
  std::ostringstream out;
  write_csv(out, d, true);
  CHECK(out.str() == "X0,X1\n0,3\n4,1\n");
}

TEST_CASE("csv parse errors name the offending cell") {
  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return read_csv(in);
  };
  CHECK_THROWS_WITH_AS(parse("X0,X1\n1,2\n3\n"), doctest::Contains("row 3"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("X0\nabc\n"), doctest::Contains("row 2, column 1"),
                       std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("X0\nnan\n"), doctest::Contains("non-finite"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse(""), doctest::Contains("header"), std::runtime_error);
  CHECK_THROWS_WITH_AS(parse("X0,X1\n"), doctest::Contains("no data rows"), std::runtime_error);

  Eigen::MatrixXd d(3, 2);
  d << 1, 5, 1, 6, 1, 7;
  auto konst = first_constant_column(d);
  REQUIRE(konst.has_value());
  CHECK(*konst == 0);
  d(2, 0) = 2;
  CHECK(!first_constant_column(d).has_value());
}
