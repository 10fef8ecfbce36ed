#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <random>

#include "../oracles.hpp"
#include "proxnest/convex.hpp"
#include "proxnest/error.hpp"
#include "proxnest/wavelet.hpp"

using namespace proxnest;

namespace {

// Dense matrix of an operator, built column by column.
Vec dense_of(const LinearOperator& op) {
  const std::size_t n = op.in_dim(), m = op.out_dim();
  Vec a(m * n);
  Vec e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = 1.0;
    const Vec col = op.forward(e);
    for (std::size_t r = 0; r < m; ++r) a[r * n + c] = col[r];
    e[c] = 0.0;
  }
  return a;
}

// prox of theta*||A^T u||_1 through its dual: min over ||z||_inf <= theta of
// 0.5 ||x - A z||^2 by projected gradient, then u = x - A z.
Vec dual_prox_oracle(const Vec& a, std::size_t n, const Vec& x, double theta) {
  Vec at(n * n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) at[c * n + r] = a[r * n + c];
  // step 1/||A||^2 from power iteration on A^T A
  Vec v(n, 1.0);
  double l = 1.0;
  for (int it = 0; it < 200; ++it) {
    Vec w = oracle::matvec(at, n, n, oracle::matvec(a, n, n, v));
    l = oracle::norm2(w);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / l;
  }
  Vec z(n, 0.0);
  for (int it = 0; it < 20000; ++it) {
    Vec az = oracle::matvec(a, n, n, z);
    Vec r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = az[i] - x[i];
    Vec g = oracle::matvec(at, n, n, r);
    double moved = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double zn = std::clamp(z[i] - g[i] / l, -theta, theta);
      moved = std::max(moved, std::fabs(zn - z[i]));
      z[i] = zn;
    }
    if (moved < 1e-15) break;
  }
  Vec az = oracle::matvec(a, n, n, z);
  Vec u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = x[i] - az[i];
  return u;
}

}  // namespace

TEST_CASE("soft_threshold: closed-form cases") {
  CHECK(soft_threshold(Vec{0.5}, 1.0) == Vec{0.0});
  CHECK(soft_threshold(Vec{3.0, -3.0}, 1.0) == Vec{2.0, -2.0});
  CHECK_THROWS_AS(soft_threshold(Vec{1.0}, -0.1), DomainError);
}

TEST_CASE("soft_threshold: matches scalar minimisation") {
  const Vec v{0.7, -2.4, 0.0};
  const double theta = 0.7;
  const Vec out = soft_threshold(v, theta);
  REQUIRE(out.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vi = v[i];
    const double u = oracle::argmin_1d(
        [&](double t) { return theta * std::fabs(t) + 0.5 * (t - vi) * (t - vi); }, -5.0, 5.0);
    CHECK(std::fabs(out[i] - u) <= 1e-8);
  }
}

TEST_CASE("soft_threshold: complex modulus shrinkage") {
  const std::vector<std::complex<double>> v{{3.0, 4.0}, {0.3, 0.4}, {0.0, 0.0}};
  const auto out = soft_threshold(std::span<const std::complex<double>>(v), 1.0);
  CHECK(std::abs(out[0] - std::complex<double>(2.4, 3.2)) < 1e-15);
  CHECK(out[1] == std::complex<double>(0.0, 0.0));
  CHECK(out[2] == std::complex<double>(0.0, 0.0));
}

TEST_CASE("soft_threshold: firmly nonexpansive on random pairs") {
  std::mt19937_64 g(11);
  for (int t = 0; t < 200; ++t) {
    const Vec a = oracle::random_vec(16, g, 2.0), b = oracle::random_vec(16, g, 2.0);
    const double theta = std::uniform_real_distribution<double>(0.0, 2.0)(g);
    const Vec sa = soft_threshold(a, theta), sb = soft_threshold(b, theta);
    Vec da(16), db(16);
    for (int i = 0; i < 16; ++i) {
      da[i] = sa[i] - sb[i];
      db[i] = a[i] - b[i];
    }
    // firm nonexpansiveness: ||Sa - Sb||^2 <= <Sa - Sb, a - b>
    CHECK(oracle::dot(da, da) <= oracle::dot(da, db) + 1e-12);
    CHECK(oracle::norm2(da) <= oracle::norm2(db) + 1e-12);
  }
}

TEST_CASE("prox_l1_synthesis: trivial cases") {
  IdentityOperator id(1);
  CHECK(prox_l1_synthesis(Vec{3.0}, 1.0, id) == Vec{2.0});
  std::mt19937_64 g(3);
  const Vec x = oracle::random_vec(16, g);
  WaveletOperator w({WaveletFamily::DB2, 1}, 4, 4);
  CHECK(prox_l1_synthesis(x, 0.0, w) == x);
}

TEST_CASE("prox_l1_synthesis: one-level DB2 on 8 samples matches a dual iterative solve") {
  WaveletOperator w({WaveletFamily::DB2, 1}, 2, 4);
  const Vec a = dense_of(w);
  std::mt19937_64 g(2024);
  for (int t = 0; t < 5; ++t) {
    const Vec x = oracle::random_vec(8, g);
    const Vec u = prox_l1_synthesis(x, 0.3, w);
    const Vec ref = dual_prox_oracle(a, 8, x, 0.3);
    CHECK(oracle::max_abs_diff(u, ref) <= 1e-6);
  }
}

TEST_CASE("prox_l1_synthesis: rejects a non-orthonormal dictionary") {
  DenseMatrixOperator a(2, 2, Vec{1.0, 0.5, 0.0, 1.0});
  CHECK_THROWS_AS(prox_l1_synthesis(Vec{1.0, 1.0}, 0.1, a), ContractError);
  CHECK_THROWS_AS(prox_l1_synthesis(Vec{1.0}, -1.0, IdentityOperator(1)), DomainError);
}

TEST_CASE("prox_l1_synthesis: subgradient optimality on random instances") {
  std::mt19937_64 g(99);
  WaveletOperator w({WaveletFamily::DB8, 2}, 16, 16);
  for (int t = 0; t < 20; ++t) {
    const Vec x = oracle::random_vec(256, g, 3.0);
    const double lambda = 0.5, mu = std::uniform_real_distribution<double>(0.1, 4.0)(g);
    const Vec u = prox_l1_synthesis(x, lambda * mu, w);
    const Vec c = w.analysis(u);
    Vec diff(256);
    for (int i = 0; i < 256; ++i) diff[i] = x[i] - u[i];
    // (x - u)/(lambda mu) must lie in the subdifferential of ||.||_1 at Psi^T u
    const Vec r = w.analysis(diff);
    for (int i = 0; i < 256; ++i) {
      const double ri = r[i] / (lambda * mu);
      if (std::fabs(c[i]) > 1e-12)
        CHECK(std::fabs(ri - std::copysign(1.0, c[i])) <= 1e-9);
      else
        CHECK(std::fabs(ri) <= 1.0 + 1e-9);
    }
  }
}

TEST_CASE("project_l2_ball: closed-form cases and errors") {
  const Vec c{1.0, -2.0};
  const Vec inside{1.2, -2.1};
  CHECK(project_l2_ball(inside, c, 1.0) == inside);
  const Vec p = project_l2_ball(Vec{3.0, -2.0}, c, 1.0);
  CHECK(p == Vec{2.0, -2.0});
  CHECK_THROWS_AS(project_l2_ball(Vec{}, Vec{}, 1.0), DomainError);
  CHECK_THROWS_AS(project_l2_ball(Vec{1.0}, Vec{0.0}, 0.0), DomainError);
}

TEST_CASE("project_l2_ball: boundary distance, optimality and idempotence") {
  std::mt19937_64 g(5);
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 1 + t % 12;
    const Vec c = oracle::random_vec(d, g);
    Vec z = oracle::random_vec(d, g, 5.0);
    const double r = 0.5;
    if (oracle::dist2(z, c) <= r) continue;
    const Vec p = project_l2_ball(z, c, r);
    CHECK(std::fabs(oracle::dist2(p, c) - r) <= 1e-12);
    // no boundary sample is closer to z than the projection
    const double best = oracle::dist2(p, z);
    for (int s = 0; s < 200; ++s) {
      Vec u = oracle::random_vec(d, g);
      const double nu = oracle::norm2(u);
      for (std::size_t i = 0; i < d; ++i) u[i] = c[i] + r * u[i] / nu;
      CHECK(oracle::dist2(u, z) >= best - 1e-12);
    }
    const Vec pp = project_l2_ball(p, c, r);
    CHECK(oracle::max_abs_diff(pp, p) <= 1e-15);
  }
}

TEST_CASE("moreau_grad: closed-form cases") {
  const ProxFn ball = [](std::span<const double> x) {
    return project_l2_ball(x, Vec(x.size(), 0.0), 1.0);
  };
  CHECK(moreau_grad(ball, SmoothingParam(1.0), Vec{0.3, 0.2}) == Vec{0.0, 0.0});
  CHECK(moreau_grad(ball, SmoothingParam(1.0), Vec{2.0, 0.0}) == Vec{1.0, 0.0});
  CHECK_THROWS_AS(SmoothingParam(0.0), DomainError);
}

TEST_CASE("moreau_grad: agrees with finite differences of the envelope") {
  std::mt19937_64 g(8);
  const Vec c{0.5, -0.5, 1.0};
  const double r = 0.8;
  const ProxFn ball = [&](std::span<const double> x) { return project_l2_ball(x, c, r); };
  for (int t = 0; t < 50; ++t) {
    const double lambda = std::uniform_real_distribution<double>(0.1, 2.0)(g);
    Vec x = oracle::random_vec(3, g, 2.0);
    if (oracle::dist2(x, c) < r + 0.05) continue;
    auto env = [&](const Vec& v) {
      const Vec p = project_l2_ball(v, c, r);
      const double d = oracle::dist2(v, p);
      return d * d / (2.0 * lambda);
    };
    const Vec grad = moreau_grad(ball, SmoothingParam(lambda), x);
    const double h = 1e-5;
    Vec fd(3);
    for (int i = 0; i < 3; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      fd[i] = (env(xp) - env(xm)) / (2 * h);
    }
    CHECK(oracle::dist2(fd, grad) <= 1e-4 * oracle::norm2(grad));
  }
}

TEST_CASE("prox_conjugate: Moreau decomposition") {
  const ProxFn zero = [](std::span<const double> x) { return Vec(x.begin(), x.end()); };
  CHECK(prox_conjugate(zero, Vec{1.0, -2.0}) == Vec{0.0, 0.0});
  const ProxFn st = [](std::span<const double> x) { return soft_threshold(x, 1.0); };
  CHECK(prox_conjugate(st, Vec{3.0}) == Vec{1.0});
  CHECK(prox_conjugate(st, Vec{-0.25}) == Vec{-0.25});

  std::mt19937_64 g(21);
  auto wav = std::make_shared<WaveletOperator>(WaveletSpec{WaveletFamily::DB2, 2}, 8, 8);
  const std::vector<ProxFn> proxes{
      st,
      [](std::span<const double> x) { return project_l2_ball(x, Vec(x.size(), 0.1), 0.7); },
      [&](std::span<const double> x) { return prox_l1_synthesis(x, 0.4, *wav); }};
  for (const auto& p : proxes) {
    for (int t = 0; t < 20; ++t) {
      const Vec x = oracle::random_vec(64, g);
      const Vec a = p(x), b = prox_conjugate(p, x);
      for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::fabs(a[i] + b[i] - x[i]) <= 1e-14);
    }
  }
}

TEST_CASE("orthonormality check") {
  WaveletOperator w({WaveletFamily::DB8, 3}, 32, 32);
  CHECK(orthonormality_defect(w, 4, 1) <= kOrthonormalTol);
  CHECK_NOTHROW(require_orthonormal(w));
  DenseMatrixOperator scaled(2, 2, Vec{1.0, 0.0, 0.0, 1.0 + 1e-8});
  CHECK_THROWS_AS(require_orthonormal(scaled), ContractError);
}
