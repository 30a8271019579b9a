#include <benchmark/benchmark.h>

#include <map>
#include <random>

#include "micstokes/distributed.hpp"
#include "micstokes/markers.hpp"
#include "micstokes/multigrid.hpp"
#include "micstokes/scenarios.hpp"
#include "micstokes/uzawa.hpp"

using namespace mic;

namespace {

const Scenario& sinker(int nx, int ny) {
  static std::map<std::pair<int, int>, Scenario> cache;
  auto it = cache.find({nx, ny});
  if (it == cache.end()) {
    SinkerParams p;
    p.nx = nx;
    p.ny = ny;
    it = cache.emplace(std::pair{nx, ny}, build_sinker(p)).first;
  }
  return it->second;
}

MgHierarchy sinker_hierarchy(const Scenario& sc, SmootherKind k) {
  MgSettings mg;
  mg.smoother.kind = k;
  return MgHierarchy(sc.problem.grid, sc.problem.etab, sc.problem.etap, mg.levels, mg.factor, sc.problem.bc,
                     mg.smoother);
}

void BM_Smoother(benchmark::State& st) {
  const auto kind = static_cast<SmootherKind>(st.range(0));
  const Scenario& sc = sinker(static_cast<int>(st.range(1)), static_cast<int>(st.range(1) * 6 / 5));
  MgHierarchy h = sinker_hierarchy(sc, kind);
  MgLevel& L = h.finest();
  L.rhs_y = sc.problem.force.fy;
  std::mt19937_64 rng(1);
  // warm-up sweep outside the timed region
  smooth_jacobi(L, sc.problem.bc, 1, 0.3);
  for (auto _ : st) {
    switch (kind) {
      case SmootherKind::Jacobi: smooth_jacobi(L, sc.problem.bc, 10, 0.3); break;
      case SmootherKind::Rbgs: smooth_rbgs(L, sc.problem.bc, 10, 0.3); break;
      default: smooth_ras(L, sc.problem.bc, 10, h.config(), rng); break;
    }
    benchmark::DoNotOptimize(L.vx.data());
  }
  st.SetLabel(to_string(kind));
  st.SetItemsProcessed(st.iterations() * 10 * static_cast<long>(L.vx.size() + L.vy.size()));
}
BENCHMARK(BM_Smoother)
    ->ArgsProduct({{0, 1, 2}, {100, 200}})
    ->Unit(benchmark::kMillisecond);

void BM_VCycle(benchmark::State& st) {
  const Scenario& sc = sinker(static_cast<int>(st.range(0)), static_cast<int>(st.range(0) * 6 / 5));
  MgHierarchy h = sinker_hierarchy(sc, SmootherKind::Jacobi);
  h.finest().rhs_y = sc.problem.force.fy;
  h.v_cycle();
  for (auto _ : st) {
    h.v_cycle();
    benchmark::DoNotOptimize(h.finest().vy.data());
  }
}
BENCHMARK(BM_VCycle)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_UzawaStep(benchmark::State& st) {
  const Scenario& sc = sinker(100, 120);
  MgHierarchy h = sinker_hierarchy(sc, SmootherKind::Jacobi);
  StokesState s = initial_state(sc.problem);
  const StepOptions opt;
  uzawa_step(s, sc.problem.force, h, opt);
  for (auto _ : st) {
    uzawa_step(s, sc.problem.force, h, opt);
    benchmark::DoNotOptimize(s.p.data());
  }
}
BENCHMARK(BM_UzawaStep)->Unit(benchmark::kMillisecond);

void BM_MarkersToGrid(benchmark::State& st) {
  const RotatingSlabParams p;
  static const SlabScenario sc = build_rotating_slab(p);
  markers_to_grid(sc.markers, "eta", Stagger::Basic, sc.grid);
  for (auto _ : st) benchmark::DoNotOptimize(markers_to_grid(sc.markers, "eta", Stagger::Basic, sc.grid));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(sc.markers.size()));
}
BENCHMARK(BM_MarkersToGrid)->Unit(benchmark::kMillisecond);

void BM_Advect(benchmark::State& st) {
  static const SlabScenario sc = build_rotating_slab(RotatingSlabParams{});
  const auto kind = static_cast<Integrator>(st.range(0));
  const VelocityField vf = VelocityField::single(sc.vx, sc.vy, sc.grid);
  MarkerPool pool = sc.markers;
  advect(pool, vf, 1e-4, kind);
  for (auto _ : st) {
    advect(pool, vf, 1e-4, kind);
    benchmark::DoNotOptimize(pool.x.data());
  }
  st.SetLabel(to_string(kind));
  st.SetItemsProcessed(st.iterations() * static_cast<long>(pool.size()));
}
BENCHMARK(BM_Advect)->DenseRange(0, 4)->Unit(benchmark::kMillisecond);

void BM_DistributedSlabStep(benchmark::State& st) {
  static const SlabScenario sc = build_rotating_slab(RotatingSlabParams{});
  const int px = static_cast<int>(st.range(0)), py = static_cast<int>(st.range(1));
  const Grid& g = sc.grid;
  const double dt = compute_timestep(sc.vx, sc.vy, g, TimeStepPolicy{});
  const auto topo = build_topology(px, py, false, false, px * py);
  auto pools = distribute_markers(sc.markers, g, topo);
  for (auto _ : st) {
    run_world(g, px, py, false, false, [&](RankContext& ctx) {
      RankVelocity v{scatter_local(sc.vx, ctx.sub, g, false, false), scatter_local(sc.vy, ctx.sub, g, false, false)};
      halo_exchange(v.vx, ctx.sub, ctx.topo, ctx.transport);
      halo_exchange(v.vy, ctx.sub, ctx.topo, ctx.transport);
      distributed_advect_step(pools[ctx.rank], v, dt, g, ctx.sub, ctx.topo, ctx.transport);
    });
  }
  st.SetItemsProcessed(st.iterations() * static_cast<long>(sc.markers.size()));
}
BENCHMARK(BM_DistributedSlabStep)->Args({1, 1})->Args({2, 2})->Args({4, 2})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
