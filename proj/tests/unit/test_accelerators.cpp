#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "micstokes/accelerators.hpp"
#include "micstokes/scenarios.hpp"
#include "oracles.hpp"

using namespace mic;

namespace {

Vec random_vec(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec v(n);
  for (double& x : v) x = u(rng);
  return v;
}

SinkerParams tiny_sinker() {
  SinkerParams s;
  s.nx = 24;
  s.ny = 28;
  s.eta_inclusion = 1e20;
  return s;
}

}  // namespace

TEST(Gcr, MatchesDenseLuSolve) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd A = oracle::random_matrix(10, rng, 4.0);
    const Vec b = random_vec(10, rng);
    const GcrResult r = gcr_solve(oracle::as_map(A), oracle::identity_map(), b, Vec(10, 0.0), 10, 1e-15, 40);
    const Eigen::VectorXd ref = A.lu().solve(Eigen::Map<const Eigen::VectorXd>(b.data(), 10));
    for (int k = 0; k < 10; ++k) EXPECT_NEAR(r.x[k], ref(k), 1e-10);
  }
}

TEST(Gcr, ResidualNeverIncreases) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd A = oracle::random_matrix(30, rng, 3.0);
  const Vec b = random_vec(30, rng);
  for (int m : {3, 7, 30}) {
    const GcrResult r = gcr_solve(oracle::as_map(A), oracle::identity_map(), b, Vec(30, 0.0), m, 1e-12, 200);
    for (std::size_t k = 1; k < r.residuals.size(); ++k)
      EXPECT_LE(r.residuals[k], r.residuals[k - 1] * (1.0 + 1e-14)) << "m=" << m << " k=" << k;
  }
}

TEST(Gcr, HistoryIsBoundedByRestart) {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd A = oracle::random_matrix(20, rng, 3.0);
  Gcr g(oracle::as_map(A), oracle::identity_map(), 4);
  g.reset(Vec(20, 0.0), random_vec(20, rng));
  for (int k = 0; k < 9; ++k) {
    g.iterate();
    EXPECT_LT(g.stored(), 4u);
  }
}

TEST(Gcr, BreakdownReportsIterate) {
  const Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4, 4);
  Gcr g(oracle::as_map(A), oracle::identity_map(), 4);
  g.reset(Vec(4, 0.0), Vec{1, 2, 3, 4});
  EXPECT_THROW(g.iterate(), GcrBreakdown);
}

TEST(Anderson, CoefficientsMatchKktSolve) {
  std::mt19937_64 rng(13);
  for (int m : {2, 3, 5, 6}) {
    std::vector<Vec> f;
    for (int k = 0; k < m; ++k) f.push_back(random_vec(40, rng));
    std::vector<const Vec*> fp;
    for (const Vec& v : f) fp.push_back(&v);
    std::vector<double> alpha;
    bool truncated = true;
    ASSERT_TRUE(anderson_coefficients(fp, alpha, truncated));
    EXPECT_FALSE(truncated);
    const Eigen::VectorXd ref = oracle::anderson_kkt(f);
    for (int k = 0; k < m; ++k) EXPECT_NEAR(alpha[k], ref(k), 1e-10);
    EXPECT_NEAR(std::accumulate(alpha.begin(), alpha.end(), 0.0), 1.0, 1e-12);
  }
}

TEST(Anderson, RankDeficientHistoryIsTruncated) {
  std::mt19937_64 rng(14);
  const Vec a = random_vec(10, rng), b = random_vec(10, rng);
  std::vector<const Vec*> fp{&a, &b, &b};
  std::vector<double> alpha;
  bool truncated = false;
  ASSERT_TRUE(anderson_coefficients(fp, alpha, truncated));
  EXPECT_TRUE(truncated);
  EXPECT_NEAR(alpha[0] + alpha[1] + alpha[2], 1.0, 1e-12);
}

TEST(Anderson, IdenticalResidualsFallBack) {
  AndersonWorkspace aa(3, 0.5);
  const auto G = [](const Vec& x) {
    Vec y = x;
    for (double& v : y) v += 1.0;
    return y;
  };
  Vec x(5, 0.0);
  x = aa.step(G, x);
  EXPECT_FALSE(aa.last_fallback());
  x = aa.step(G, x);  // f is the same vector, no usable direction
  EXPECT_TRUE(aa.last_fallback());
  EXPECT_EQ(aa.last_alpha().back(), 1.0);
}

TEST(Anderson, AcceleratesLinearFixedPoint) {
  std::mt19937_64 rng(15);
  const int n = 20;
  // symmetric, spectrum in [0, 0.95]: Picard converges slowly
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(oracle::random_matrix(n, rng, 0.0));
  const Eigen::MatrixXd Q = qr.householderQ();
  Eigen::VectorXd lambda = Eigen::VectorXd::LinSpaced(n, 0.0, 0.95);
  const Eigen::MatrixXd M = Q * lambda.asDiagonal() * Q.transpose();
  const Vec c = random_vec(n, rng);
  const auto G = [&](const Vec& x) {
    Eigen::Map<const Eigen::VectorXd> xv(x.data(), n);
    Eigen::VectorXd y = M * xv + Eigen::Map<const Eigen::VectorXd>(c.data(), n);
    return Vec(y.data(), y.data() + n);
  };
  auto residual = [&](const Vec& x) {
    const Vec gx = G(x);
    double e = 0.0;
    for (int k = 0; k < n; ++k) e = std::max(e, std::abs(gx[k] - x[k]));
    return e;
  };
  AndersonWorkspace aa(5, 1.0);
  Vec x(n, 0.0), picard(n, 0.0);
  for (int k = 0; k < 20; ++k) {
    x = aa.step(G, x);
    picard = G(picard);
    const std::vector<double>& a = aa.last_alpha();
    EXPECT_NEAR(std::accumulate(a.begin(), a.end(), 0.0), 1.0, 1e-12);
    EXPECT_LE(aa.stored(), 6u);
  }
  EXPECT_LT(residual(x), 1e-2 * residual(picard));
}

TEST(Anderson, RejectsBadParameters) {
  EXPECT_THROW(AndersonWorkspace(-1, 0.5), InvalidArgument);
  EXPECT_THROW(AndersonWorkspace(3, 0.0), InvalidArgument);
}

TEST(UzawaOperators, RichardsonStepEqualsUzawaStep) {
  const Scenario sc = build_sinker(tiny_sinker());
  const StokesProblem& p = sc.problem;
  const Grid& g = p.grid;
  MgHierarchy h(g, p.etab, p.etap, 2, 2.0, p.bc, {});
  const double omega = 0.6;
  UzawaOperators ops(g, p.bc, h, omega);

  StokesState s = initial_state(p);
  std::mt19937_64 rng(16);
  const Field2D vx = oracle::random_field(g, rng, -1e-3, 1e-3), vy = oracle::random_field(g, rng, -1e-3, 1e-3);
  s.vx = vx;
  s.vy = vy;
  apply_velocity_bc(s.vx, s.vy, g, p.bc);
  Vec x = flatten(s, g);
  const Vec b = flatten_force(p.force, g);
  Vec ax(x.size()), r(x.size()), z(x.size());
  ops.apply_A(x, ax);
  for (std::size_t k = 0; k < x.size(); ++k) r[k] = b[k] - ax[k];
  ops.precond(r, z);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] += z[k];
  demean_flat(x, g);

  uzawa_step(s, p.force, h, StepOptions{omega, 1, true});
  const Vec ref = flatten(s, g);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num = std::max(num, std::abs(x[k] - ref[k]));
    den = std::max(den, std::abs(ref[k]));
  }
  EXPECT_LE(num / den, 1e-10);
}

TEST(AcceleratedSolve, BothKindsReduceSinkerResidual) {
  const Scenario sc = build_sinker(tiny_sinker());
  UzawaConfig cfg;
  cfg.max_cycles = 60;
  cfg.schedule = {{1.0, 0}};
  for (AccelKind k : {AccelKind::Gcr, AccelKind::Anderson}) {
    AccelParams ap;
    ap.kind = k;
    const SolveResult r = accelerated_solve(sc.problem, cfg, MgSettings{2, 2.0, {}}, ap);
    ASSERT_FALSE(r.report.records.empty());
    EXPECT_LT(r.report.records.back().res_total, 1e-2 * r.report.initial_residual) << to_string(k);
    EXPECT_LE(std::abs(pressure_mean(r.state.p, sc.problem.grid)),
              1e-13 * oracle::max_abs(r.state.p, sc.problem.grid.p_physical()));
  }
}

TEST(AcceleratedSolve, KindNamesRoundTrip) {
  for (AccelKind k : {AccelKind::None, AccelKind::Gcr, AccelKind::Anderson})
    EXPECT_EQ(accel_from_string(to_string(k)), k);
  EXPECT_THROW(accel_from_string("cg"), InvalidArgument);
}
