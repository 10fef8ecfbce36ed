#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../oracles.hpp"
#include "proxnest/convex.hpp"
#include "proxnest/error.hpp"
#include "proxnest/fourier.hpp"
#include "proxnest/langevin.hpp"
#include "proxnest/wavelet.hpp"

using namespace proxnest;

namespace {

OperatorPtr identity(std::size_t n) { return std::make_shared<IdentityOperator>(n); }

std::vector<double> histogram_2d(const std::vector<Vec>& pts, double lo0, double hi0, double lo1,
                                 double hi1, int n) {
  std::vector<double> h(static_cast<std::size_t>(n * n), 0.0);
  for (const auto& p : pts) {
    const int i = std::clamp(static_cast<int>((p[0] - lo0) / (hi0 - lo0) * n), 0, n - 1);
    const int j = std::clamp(static_cast<int>((p[1] - lo1) / (hi1 - lo1) * n), 0, n - 1);
    h[static_cast<std::size_t>(i * n + j)] += 1.0;
  }
  for (double& v : h) v /= static_cast<double>(pts.size());
  return h;
}

}  // namespace

TEST_CASE("default chain configs") {
  const auto g = default_chain_config(PriorModel::gaussian(0.5, identity(3)));
  CHECK(g.lambda == doctest::Approx(1.0));
  CHECK(g.delta == doctest::Approx(0.4));
  const auto l = default_chain_config(PriorModel::laplace(2.0, identity(100)));
  CHECK(l.delta == doctest::Approx(0.1 * 0.5));  // (1/sqrt(100)) * (sqrt(2)/2)^2
  CHECK(l.lambda == doctest::Approx(5 * l.delta));
  ChainConfig bad = g;
  bad.delta = 0.0;
  CHECK_THROWS_AS(bad.validate(1.0), DomainError);
  bad.delta = 0.6;  // above 1/(L_f + 1/lambda) = 0.5
  CHECK_THROWS_AS(bad.validate(1.0), DomainError);
}

TEST_CASE("prior step: explicit per-prior forms with zero noise") {
  const PriorModel gauss = PriorModel::gaussian(0.5, identity(3));
  ChainConfig c = default_chain_config(gauss);
  c.delta = 0.1;
  LangevinKernel k(gauss, nullptr, c);
  const Vec x{1.0, -2.0, 0.5};
  const Vec next = k.propose(k.make_state(x), Vec(3, 0.0));
  for (int i = 0; i < 3; ++i) CHECK(next[i] == doctest::Approx(0.95 * x[i]).epsilon(1e-15));

  const PriorModel flat = PriorModel::flat(2, 10.0);
  LangevinKernel kf(flat, nullptr, default_chain_config(flat));
  CHECK(kf.propose(kf.make_state(Vec{3.0, 4.0}), Vec(2, 0.0)) == Vec{3.0, 4.0});

  // Laplace: x + (delta / 2 lambda) Psi(soft(Psi^T x) - Psi^T x)
  auto w = std::make_shared<WaveletOperator>(WaveletSpec{WaveletFamily::DB2, 1}, 4, 4);
  const PriorModel lap = PriorModel::laplace(1.5, w);
  const ChainConfig lc = default_chain_config(lap);
  LangevinKernel kl(lap, nullptr, lc);
  std::mt19937_64 g(1);
  const Vec xl = oracle::random_vec(16, g, 2.0);
  const Vec c0 = w->analysis(xl);
  const Vec st = soft_threshold(c0, lc.lambda * 1.5);
  Vec diff(16);
  for (int i = 0; i < 16; ++i) diff[i] = st[i] - c0[i];
  const Vec drift = w->synthesis(diff);
  const Vec got = kl.propose(kl.make_state(xl), Vec(16, 0.0));
  for (int i = 0; i < 16; ++i)
    CHECK(std::fabs(got[i] - (xl[i] + lc.delta / (2 * lc.lambda) * drift[i])) <= 1e-12);
}

TEST_CASE("prior chain: Gaussian stationary covariance") {
  const double mu = 0.5;
  const PriorModel gauss = PriorModel::gaussian(mu, identity(4));
  ChainConfig c = default_chain_config(gauss);
  LangevinKernel k(gauss, nullptr, c);
  Rng rng(7);
  ChainState s = k.make_state(Vec(4, 0.0));
  for (int i = 0; i < 1000; ++i) k.step(s, rng);
  const int n = 100000, thin = 10;
  double cov[4][4] = {};
  double mean[4] = {};
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < thin; ++i) k.step(s, rng);
    for (int a = 0; a < 4; ++a) {
      mean[a] += s.x[a];
      for (int b = 0; b < 4; ++b) cov[a][b] += s.x[a] * s.x[b];
    }
  }
  const double target = 1.0 / (2 * mu);
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      const double v = cov[a][b] / n - (mean[a] / n) * (mean[b] / n);
      CHECK(std::fabs(v - (a == b ? target : 0.0)) <= 0.05 * target);
    }
}

TEST_CASE("constrained drift: interior cancellation and pull toward the ball") {
  auto op = std::make_shared<FourierOperator>(generate_vds_mask(8, 8, 0.3, 2));
  auto w = std::make_shared<WaveletOperator>(WaveletSpec{WaveletFamily::DB2, 1}, 8, 8);
  std::mt19937_64 g(2);
  const Vec truth = oracle::random_vec(64, g);
  const GaussianLikelihood lik(op->forward(truth), op, 0.5);
  const PriorModel lap = PriorModel::laplace(1.0, w);
  const ChainConfig c = default_chain_config(lap);
  LangevinKernel free_k(lap, &lik, c), bound_k(lap, &lik, c);

  // interior point: identical proposal means
  bound_k.set_tau(lik.potential(truth) + 1.0);
  const ChainState a = free_k.make_state(truth), b = bound_k.make_state(truth);
  CHECK(a.mean == b.mean);

  // flat prior: the drift at an exterior point has a positive component toward the projection
  const PriorModel flat = PriorModel::flat(64, 100.0);
  ChainConfig fc = default_chain_config(flat);
  LangevinKernel kf(flat, &lik, fc);
  kf.set_tau(1.0);
  Vec x = truth;
  for (double& v : x) v = 50.0 + v;
  const ChainState s = kf.make_state(x);
  REQUIRE(s.g > 1.0);
  const auto proj = project_to_ball(LikelihoodBall(lik, 1.0), x, fc.projector);
  Vec drift(64), toward(64);
  for (int i = 0; i < 64; ++i) {
    drift[i] = s.mean[i] - x[i];
    toward[i] = proj.x[i] - x[i];
  }
  CHECK(oracle::dot(drift, toward) > 0.0);
}

TEST_CASE("MH: exterior proposals are rejected, symmetric moves accepted") {
  const GaussianLikelihood lik(Vec{5.0, 5.0}, identity(2), 1.0);
  const PriorModel flat = PriorModel::flat(2, 10.0);
  ChainConfig c = default_chain_config(flat);
  LangevinKernel k(flat, &lik, c);
  k.set_tau(2.0);
  Rng rng(3);
  ChainState s = k.make_state(Vec{5.0, 5.0});
  const Vec before = s.x;
  CHECK_FALSE(k.mh_correct(s, Vec{8.0, 5.0}, rng));  // g = 4.5 >= tau
  CHECK(s.x == before);
  CHECK_FALSE(k.mh_correct(s, Vec{7.0, 5.0}, rng));  // g = tau exactly
  CHECK(k.stats().constraint_violations == 0u);

  // flat prior, no constraint, proposal mean = x: every in-box move is taken
  ChainConfig small = c;
  small.delta = 0.01;
  small.lambda = 0.05;
  LangevinKernel free_k(flat, nullptr, small);
  ChainState f = free_k.make_state(Vec{5.0, 5.0});
  int accepted = 0;
  for (int i = 0; i < 1000; ++i) accepted += free_k.step(f, rng);
  CHECK(accepted == 1000);
}

TEST_CASE("constrained chain: flat prior on an interval is uniform") {
  const GaussianLikelihood lik(Vec{5.0}, identity(1), 1.0);
  const PriorModel flat = PriorModel::flat(1, 10.0);
  LangevinKernel k(flat, &lik, default_chain_config(flat));
  k.set_tau(2.0);  // interval [3, 7]
  Rng rng(4);
  ChainState s = k.make_state(Vec{5.0});
  const int bins = 20, n = 10000;
  std::vector<double> counts(bins, 0.0);
  for (int t = 0; t < n; ++t) {
    for (int i = 0; i < 10; ++i) k.step(s, rng);
    REQUIRE(std::fabs(s.x[0] - 5.0) < 2.0);
    counts[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>((s.x[0] - 3.0) / 4.0 * bins)))] += 1;
  }
  CHECK(oracle::chi_square_p(counts, std::vector<double>(bins, 1.0 / bins)) > 0.01);
}

TEST_CASE("constrained chain: d = 2 Gaussian prior inside an identity-operator ball") {
  const double mu = 0.5, tau = 1.0;
  const Vec y{1.0, 0.5};
  const GaussianLikelihood lik(y, identity(2), 1.0);
  const PriorModel gauss = PriorModel::gaussian(mu, identity(2));
  LangevinKernel k(gauss, &lik, default_chain_config(gauss));
  k.set_tau(tau);
  const double r = std::sqrt(2 * tau);
  const auto ref = oracle::truncated_gaussian_bins(mu, y[0], y[1], r, y[0] - r, y[0] + r, y[1] - r,
                                                   y[1] + r, 16);
  Rng rng(5);

  SUBCASE("chain histogram") {
    ChainState s = k.make_state(y);
    std::vector<Vec> pts;
    for (int t = 0; t < 100000; ++t) {
      for (int i = 0; i < 5; ++i) k.step(s, rng);
      pts.push_back(s.x);
    }
    CHECK(oracle::total_variation(histogram_2d(pts, y[0] - r, y[0] + r, y[1] - r, y[1] + r, 16), ref) <
          0.05);
    CHECK(k.stats().constraint_violations == 0u);
  }
  SUBCASE("draw_constrained_sample outputs") {
    Vec start = y;
    std::vector<Vec> pts;
    for (int t = 0; t < 50000; ++t) {
      const DrawResult d = draw_constrained_sample(k, start, rng);
      REQUIRE(d.ok);
      REQUIRE(LikelihoodBall(lik, tau).contains(d.state.x));
      start = d.state.x;
      pts.push_back(start);
    }
    CHECK(oracle::total_variation(histogram_2d(pts, y[0] - r, y[0] + r, y[1] - r, y[1] + r, 16), ref) <
          0.07);
  }
}

TEST_CASE("constrained chain: every accepted state satisfies the hard constraint") {
  auto op = std::make_shared<FourierOperator>(generate_vds_mask(16, 16, 0.3, 4));
  auto w = std::make_shared<WaveletOperator>(WaveletSpec{WaveletFamily::DB8, 2}, 16, 16);
  std::mt19937_64 g(6);
  const Vec truth = oracle::random_vec(256, g);
  Vec y = op->forward(truth);
  for (double& v : y) v += 0.1 * std::normal_distribution<double>()(g);
  const GaussianLikelihood lik(y, op, 0.1);
  const PriorModel lap = PriorModel::laplace(0.5, w);
  ChainConfig c = default_chain_config(lap);
  c.delta = std::min(c.delta, 2 * 0.01 / static_cast<double>(op->out_dim()));
  c.lambda = 5 * c.delta;
  LangevinKernel k(lap, &lik, c);
  const double tau = lik.potential(truth) * 1.2;
  k.set_tau(tau);
  Rng rng(7);
  ChainState s = k.make_state(truth);
  REQUIRE(s.g < tau);
  int accepted = 0;
  for (int i = 0; i < 3000; ++i) {
    if (k.step(s, rng)) ++accepted;
    REQUIRE(s.g < tau);
    REQUIRE(std::fabs(s.g - lik.potential(s.x)) <= 1e-10 * std::max(1.0, s.g));
  }
  CHECK(accepted > 0);
  CHECK(k.stats().constraint_violations == 0u);
}

TEST_CASE("draw_constrained_sample without a constraint takes exactly k_gap steps") {
  const PriorModel gauss = PriorModel::gaussian(0.5, identity(3));
  const GaussianLikelihood lik(Vec(3, 0.0), identity(3), 1.0);
  ChainConfig c = default_chain_config(gauss);
  c.k_gap = 7;
  LangevinKernel k(gauss, &lik, c);
  Rng rng(8);
  const DrawResult d = draw_constrained_sample(k, Vec{0.1, 0.2, 0.3}, rng);
  CHECK(d.ok);
  CHECK(d.steps == 7);
  CHECK(k.stats().proposals == 7u);
}

TEST_CASE("live set draws") {
  SUBCASE("Gaussian prior mean") {
    const PriorModel gauss = PriorModel::gaussian(0.5, identity(1));
    LangevinKernel k(gauss, nullptr, default_chain_config(gauss));
    Rng rng(9);
    const auto live = draw_live_set(k, 200, rng);
    REQUIRE(live.size() == 200u);
    Vec v;
    for (const auto& x : live) v.push_back(x[0]);
    CHECK(std::fabs(oracle::mean_se(v).first) <= 3.0 / std::sqrt(200.0));
  }
  SUBCASE("flat prior on the unit box is uniform per coordinate") {
    const PriorModel flat = PriorModel::flat(3, 1.0);
    // the live set comes from a single chain; thin it so the KS test sees
    // nearly independent draws
    ChainConfig cc = default_chain_config(flat);
    cc.k_gap = 50;
    LangevinKernel k(flat, nullptr, cc);
    Rng rng(10);
    const auto live = draw_live_set(k, 2000, rng);
    for (int c = 0; c < 3; ++c) {
      Vec v;
      for (const auto& x : live) v.push_back(x[static_cast<std::size_t>(c)]);
      CHECK(oracle::ks_p(v, [](double t) { return std::clamp(t, 0.0, 1.0); }) > 0.01);
    }
  }
  SUBCASE("seeded reproducibility") {
    auto w = std::make_shared<WaveletOperator>(WaveletSpec{WaveletFamily::DB2, 1}, 4, 4);
    const PriorModel lap = PriorModel::laplace(1.0, w);
    LangevinKernel k1(lap, nullptr, default_chain_config(lap)), k2(lap, nullptr, default_chain_config(lap));
    Rng r1(11), r2(11);
    CHECK(draw_live_set(k1, 20, r1) == draw_live_set(k2, 20, r2));
  }
  SUBCASE("needs two points and no constraint") {
    const PriorModel gauss = PriorModel::gaussian(0.5, identity(1));
    LangevinKernel k(gauss, nullptr, default_chain_config(gauss));
    Rng rng(1);
    CHECK_THROWS_AS(draw_live_set(k, 1, rng), DomainError);
    CHECK_THROWS_AS(k.set_tau(1.0), DomainError);
  }
}

TEST_CASE("chain trace lines") {
  const PriorModel gauss = PriorModel::gaussian(0.5, identity(2));
  LangevinKernel k(gauss, nullptr, default_chain_config(gauss));
  std::ostringstream os;
  k.set_trace(&os);
  Rng rng(12);
  ChainState s = k.make_state(Vec{0.0, 0.0});
  for (int i = 0; i < 3; ++i) k.step(s, rng);
  std::istringstream in(os.str());
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("step").get<int>() == ++n);
    CHECK(j.contains("accepted"));
  }
  CHECK(n == 3);
}
