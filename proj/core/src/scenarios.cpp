#include "micstokes/scenarios.hpp"

#include <cmath>
#include <numbers>

#include "micstokes/errors.hpp"

namespace mic {

void assign_sinker_materials(MarkerPool& pool, const SinkerParams& p, const Scaling& s) {
  if (!pool.has_property("eta")) pool.add_property("eta");
  if (!pool.has_property("rho")) pool.add_property("rho");
  auto& eta = pool.prop("eta");
  auto& rho = pool.prop("rho");
  const double cx = 0.5 * p.xsize / s.L0, cy = 0.5 * p.ysize / s.L0, r = p.radius / s.L0;
  const double eta0 = s.eta0();
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const double dx = pool.x[m] - cx, dy = pool.y[m] - cy;
    const bool in = dx * dx + dy * dy <= r * r;
    eta[m] = (in ? p.eta_inclusion : p.eta_host) / eta0;
    rho[m] = (in ? p.rho_inclusion : p.rho_host) / s.rho0;
  }
}

void markers_to_problem(const MarkerPool& pool, StokesProblem& prob) {
  const Grid& g = prob.grid;
  GridInterp eb = markers_to_grid(pool, "eta", Stagger::Basic, g);
  GridInterp ep = markers_to_grid(pool, "eta", Stagger::Pressure, g);
  GridInterp rb = markers_to_grid(pool, "rho", Stagger::Basic, g);
  auto check = [&](const GridInterp& gi, const IndexBox& box, const char* what) {
    for (long i = box.i0; i <= box.i1; ++i)
      for (long j = box.j0; j <= box.j1; ++j)
        if (gi.is_empty(i, j))
          throw InvalidConfiguration(std::string("no marker reached ") + what + " node (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
  };
  check(eb, g.basic_physical(), "basic");
  check(ep, g.p_physical(), "pressure");
  prob.etab = std::move(eb.value);
  prob.etap = std::move(ep.value);
  prob.rho = std::move(rb.value);
  // entries outside the physical windows are never read; keep them positive
  for (std::size_t i = 0; i < prob.etab.rows(); ++i)
    for (std::size_t j = 0; j < prob.etab.cols(); ++j) {
      if (!(prob.etab(i, j) > 0.0)) prob.etab(i, j) = 1.0;
      if (!(prob.etap(i, j) > 0.0)) prob.etap(i, j) = 1.0;
    }
  prob.force = gravity_force(prob.rho, prob.g_y, g);
}

Scenario build_sinker(const SinkerParams& p) {
  Scenario sc;
  sc.scaling = unit_scaling(p.t0, p.x0, p.eta0);
  const Scaling& s = sc.scaling;
  StokesProblem& prob = sc.problem;
  prob.grid = make_uniform_grid(p.nx, p.ny, p.xsize / s.L0, p.ysize / s.L0);
  // walls: normal velocity zero; tangential free-slip on all four sides
  prob.bc.west = {BcKind::NoSlip, BcKind::FreeSlip};
  prob.bc.east = {BcKind::NoSlip, BcKind::FreeSlip};
  prob.bc.north = {BcKind::FreeSlip, BcKind::NoSlip};
  prob.bc.south = {BcKind::FreeSlip, BcKind::NoSlip};
  prob.g_y = p.g_y / s.g0;
  sc.markers = seed_markers(prob.grid, p.markers_per_cell, p.jitter, p.seed);
  assign_sinker_materials(sc.markers, p, s);
  markers_to_problem(sc.markers, prob);
  return sc;
}

void rotating_velocity(const Grid& g, double omega, Field2D& vx, Field2D& vy) {
  const double pi = std::numbers::pi;
  const double X = g.xsize, Y = g.ysize;
  const double A = 2.0 * omega / (pi * pi * (1.0 / (X * X) + 1.0 / (Y * Y)));
  auto psi = [&](long i, long j) {
    return A * std::sin(pi * (j * g.dx) / X) * std::sin(pi * (i * g.dy) / Y);
  };
  vx = g.make_field();
  vy = g.make_field();
  for (long i = 0; i <= g.ny + 1; ++i)
    for (long j = 0; j <= g.nx; ++j) vx(i, j) = (psi(i, j) - psi(i - 1, j)) / g.dy;
  for (long i = 0; i <= g.ny; ++i)
    for (long j = 0; j <= g.nx + 1; ++j) vy(i, j) = -(psi(i, j) - psi(i, j - 1)) / g.dx;
  // exact zeros on the walls
  for (long i = 0; i <= g.ny + 1; ++i) {
    vx(i, 0) = 0.0;
    vx(i, g.nx) = 0.0;
  }
  for (long j = 0; j <= g.nx + 1; ++j) {
    vy(0, j) = 0.0;
    vy(g.ny, j) = 0.0;
  }
}

SlabScenario build_rotating_slab(const RotatingSlabParams& p) {
  SlabScenario sc;
  sc.grid = make_uniform_grid(p.nx, p.ny, p.xsize, p.ysize);
  sc.bc = BcSpec::all(BcKind::FreeSlip);
  rotating_velocity(sc.grid, p.omega, sc.vx, sc.vy);
  sc.markers = seed_markers(sc.grid, p.markers_per_cell, p.jitter, p.seed);
  sc.markers.add_property("eta", p.eta_host);
  sc.markers.add_property("id");
  auto& eta = sc.markers.prop("eta");
  auto& id = sc.markers.prop("id");
  const double x0 = p.slab_x0 * p.xsize, x1 = p.slab_x1 * p.xsize;
  const double y0 = p.slab_y0 * p.ysize, y1 = p.slab_y1 * p.ysize;
  for (std::size_t m = 0; m < sc.markers.size(); ++m) {
    const double x = sc.markers.x[m], y = sc.markers.y[m];
    if (x >= x0 && x <= x1 && y >= y0 && y <= y1) eta[m] = p.eta_slab;
    id[m] = static_cast<double>(m);
  }
  return sc;
}

}  // namespace mic
