#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "micstokes/errors.hpp"
#include "micstokes/multigrid.hpp"
#include "micstokes/stokes.hpp"
#include "oracles.hpp"

using namespace mic;

namespace {

bool bitwise_equal(const Field2D& a, const Field2D& b) {
  return a.same_shape(b) && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double residual_norm(MgLevel& lvl) {
  level_residual(lvl);
  double s = 0.0;
  for (long i = 1; i <= lvl.grid.ny; ++i)
    for (long j = 1; j <= lvl.grid.nx - 1; ++j) s += lvl.res_x(i, j) * lvl.res_x(i, j);
  for (long i = 1; i <= lvl.grid.ny - 1; ++i)
    for (long j = 1; j <= lvl.grid.nx; ++j) s += lvl.res_y(i, j) * lvl.res_y(i, j);
  return std::sqrt(s);
}

void random_level(MgLevel& lvl, const Grid& g, std::mt19937_64& rng) {
  lvl.allocate(g);
  lvl.etab = oracle::random_field(g, rng, 1.0, 100.0);
  lvl.etap = oracle::random_field(g, rng, 1.0, 100.0);
  lvl.refresh_diag();
  lvl.rhs_x = oracle::random_field(g, rng, -1.0, 1.0);
  lvl.rhs_y = oracle::random_field(g, rng, -1.0, 1.0);
}

}  // namespace

TEST(BisectBound, MatchesLinearScanOnRandomVectors) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(1, 64);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(len(rng));
    for (double& v : x) v = u(rng);
    std::sort(x.begin(), x.end());
    for (int q = 0; q < 8; ++q) {
      const double xt = (q == 0) ? x[x.size() / 2] : u(rng) * 1.2;
      ASSERT_EQ(bisect_bound(x, xt), oracle::linear_bound(x, xt));
    }
  }
}

TEST(BisectBound, EmptyVectorThrows) {
  EXPECT_THROW(bisect_bound(std::span<const double>{}, 1.0), InvalidArgument);
}

TEST(Hierarchy, LevelCountsAndAutoFactor) {
  EXPECT_EQ(level_node_counts(101, 3, 2.0), (std::vector<int>{101, 51, 25}));
  EXPECT_DOUBLE_EQ(auto_coarsening_factor(50, 6), 1.5);  // floor applies
  EXPECT_NEAR(auto_coarsening_factor(3000, 3), 10.0, 1e-12);
}

TEST(Hierarchy, CoarsestBelowFourNodesIsRejected) {
  const Grid g = make_uniform_grid(16, 16, 1.0, 1.0);
  const Field2D e = g.make_field(1.0);
  EXPECT_THROW(MgHierarchy(g, e, e, 4, 2.0, BcSpec::all(BcKind::FreeSlip), {}), InvalidConfiguration);
  EXPECT_NO_THROW(MgHierarchy(g, e, e, 3, 2.0, BcSpec::all(BcKind::FreeSlip), {}));
}

TEST(Hierarchy, PeriodicBoundariesAreRejected) {
  const Grid g = make_uniform_grid(16, 16, 1.0, 1.0);
  const Field2D e = g.make_field(1.0);
  EXPECT_THROW(MgHierarchy(g, e, e, 2, 2.0, BcSpec::all(BcKind::Periodic), {}), InvalidConfiguration);
}

TEST(Restriction, ColouredSweepsMatchSerialPassBitwise) {
  std::mt19937_64 rng(77);
  for (auto [fnx, fny, cnx, cny] : {std::array{40, 30, 16, 12}, std::array{33, 47, 13, 19}, std::array{20, 20, 8, 8}}) {
    const Grid gf = make_uniform_grid(fnx, fny, 2.0, 1.5), gc = make_uniform_grid(cnx, cny, 2.0, 1.5);
    for (Stagger s : {Stagger::Basic, Stagger::Pressure, Stagger::Vx, Stagger::Vy}) {
      const Field2D fine = oracle::random_field(gf, rng, -5.0, 5.0);
      Field2D a = gc.make_field(), b = gc.make_field();
      const auto fw = transfer_window(gf, s, gf.physical(s)), cw = transfer_window(gc, s, gc.physical(s));
      restrict_field(fine, fw, a, cw);
      oracle::serial_restrict(fine, fw, b, cw);
      EXPECT_TRUE(bitwise_equal(a, b)) << to_string(s) << " " << fnx << "x" << fny;
    }
  }
}

TEST(Restriction, PreservesConstants) {
  const Grid gf = make_uniform_grid(30, 24, 1.0, 1.0), gc = make_uniform_grid(12, 10, 1.0, 1.0);
  const Field2D fine = gf.make_field(3.25);
  Field2D c = gc.make_field();
  restrict_field(fine, transfer_window(gf, Stagger::Vx, gf.vx_unknowns()), c,
                 transfer_window(gc, Stagger::Vx, gc.vx_unknowns()));
  for (long i = 1; i <= gc.ny; ++i)
    for (long j = 1; j <= gc.nx - 1; ++j) EXPECT_NEAR(c(i, j), 3.25, 1e-14);
}

TEST(Prolongation, ReproducesLinearFields) {
  const Grid gf = make_uniform_grid(30, 24, 1.0, 1.0), gc = make_uniform_grid(12, 10, 1.0, 1.0);
  auto lin = [](double x, double y) { return 0.3 + 2.0 * x - 1.5 * y; };
  Field2D c = gc.make_field(), f = gf.make_field();
  for (long i = 0; i <= gc.ny + 1; ++i)
    for (long j = 0; j <= gc.nx; ++j) c(i, j) = lin(gc.node_x(Stagger::Vx, j), gc.node_y(Stagger::Vx, i));
  prolong_field(c, transfer_window(gc, Stagger::Vx, {0, gc.ny + 1, 0, gc.nx}), f,
                transfer_window(gf, Stagger::Vx, gf.vx_unknowns()), false);
  for (long i = 1; i <= gf.ny; ++i)
    for (long j = 1; j <= gf.nx - 1; ++j)
      EXPECT_NEAR(f(i, j), lin(gf.node_x(Stagger::Vx, j), gf.node_y(Stagger::Vx, i)), 1e-13);
}

TEST(Smoothers, RasSingleTileEqualsJacobi) {
  const Grid g = make_uniform_grid(12, 10, 1.0, 1.0);
  const BcSpec bc = BcSpec::all(BcKind::FreeSlip);
  std::mt19937_64 rng(5);
  MgLevel a, b;
  random_level(a, g, rng);
  b = a;
  SmootherConfig cfg;
  cfg.ras_tile_i = cfg.ras_tile_j = 64;
  cfg.ras_inner = 4;
  std::mt19937_64 r2(1);
  smooth_ras(a, bc, 8, cfg, r2);  // two outer iterations of four sweeps
  smooth_jacobi(b, bc, 8, cfg.omega_v);
  EXPECT_LE(oracle::max_abs_diff(a.vx, b.vx, g.vx_unknowns()), 1e-14);
  EXPECT_LE(oracle::max_abs_diff(a.vy, b.vy, g.vy_unknowns()), 1e-14);
}

TEST(Smoothers, RasOuterCountIsEven) {
  EXPECT_EQ(ras_outer_count(10, 4), 4);
  EXPECT_EQ(ras_outer_count(8, 4), 2);
  EXPECT_EQ(ras_outer_count(1, 2), 2);
}

TEST(Smoothers, AllKindsReduceResidual) {
  const Grid g = make_uniform_grid(24, 20, 1.0, 1.0);
  const BcSpec bc = BcSpec::all(BcKind::FreeSlip);
  std::mt19937_64 rng(8);
  MgLevel base;
  random_level(base, g, rng);
  const double r0 = residual_norm(base);
  SmootherConfig cfg;
  cfg.ras_tile_i = cfg.ras_tile_j = 8;
  MgLevel j = base, r = base, t = base;
  smooth_jacobi(j, bc, 20, cfg.omega_v);
  smooth_rbgs(r, bc, 20, cfg.omega_v);
  std::mt19937_64 rr(3);
  smooth_ras(t, bc, 20, cfg, rr);
  EXPECT_LT(residual_norm(j), r0);
  EXPECT_LT(residual_norm(r), r0);
  EXPECT_LT(residual_norm(t), r0);
}

TEST(VCycle, ContractsResidualOnVariableViscosity) {
  const Grid g = make_uniform_grid(48, 40, 1.0, 1.0);
  std::mt19937_64 rng(4);
  Field2D etab = g.make_field(1.0), etap = g.make_field(1.0);
  for (long i = 0; i < static_cast<long>(g.rows()); ++i)
    for (long j = 0; j < static_cast<long>(g.cols()); ++j) {
      etab(i, j) = 1.0 + 9.0 * (j > g.nx / 2);
      etap(i, j) = 1.0 + 9.0 * (j > g.nx / 2);
    }
  for (SmootherKind k : {SmootherKind::Jacobi, SmootherKind::Rbgs, SmootherKind::Ras, SmootherKind::Mixed}) {
    SmootherConfig cfg;
    cfg.kind = k;
    cfg.ras_tile_i = cfg.ras_tile_j = 16;
    MgHierarchy h(g, etab, etap, 3, 2.0, BcSpec::all(BcKind::FreeSlip), cfg);
    h.finest().rhs_x = oracle::random_field(g, rng, -1.0, 1.0);
    h.finest().rhs_y = oracle::random_field(g, rng, -1.0, 1.0);
    const double r0 = residual_norm(h.finest());
    for (int c = 0; c < 5; ++c) h.v_cycle();
    const double r5 = residual_norm(h.finest());
    EXPECT_LT(r5, 0.5 * r0) << to_string(k);
  }
}

TEST(VCycle, GhostLayerValuesDoNotLeak) {
  const Grid g = make_uniform_grid(32, 32, 1.0, 1.0);
  std::mt19937_64 rng(12);
  const Field2D e = oracle::random_field(g, rng, 1.0, 10.0);
  MgHierarchy a(g, e, e, 3, 2.0, BcSpec::all(BcKind::FreeSlip), {});
  a.finest().rhs_x = oracle::random_field(g, rng, -1.0, 1.0);
  a.finest().rhs_y = oracle::random_field(g, rng, -1.0, 1.0);
  MgHierarchy b = a;
  for (std::size_t i = 0; i < g.rows(); ++i) b.finest().vx(i, g.nx + 1) = 1e300;
  for (std::size_t j = 0; j < g.cols(); ++j) b.finest().vy(g.ny + 1, j) = -1e300;
  a.v_cycle();
  b.v_cycle();
  EXPECT_EQ(oracle::max_abs_diff(a.finest().vx, b.finest().vx, g.vx_unknowns()), 0.0);
  EXPECT_EQ(oracle::max_abs_diff(a.finest().vy, b.finest().vy, g.vy_unknowns()), 0.0);
}
