#pragma once

#include <cstdint>

#include "micstokes/grid.hpp"
#include "micstokes/markers.hpp"
#include "micstokes/uzawa.hpp"

namespace mic {

struct SinkerParams {
  int nx = 100, ny = 120;
  double xsize = 1e5, ysize = 1e5;  // m
  double eta_host = 1e18, eta_inclusion = 1e26;  // Pa s
  double rho_host = 3200.0, rho_inclusion = 3300.0;  // kg/m^3
  double radius = 2e4;  // m
  double g_y = 10.0;  // m/s^2
  double t0 = 1.0, x0 = 1e5, eta0 = 1e18;
  int markers_per_cell = 4;
  double jitter = 0.0;
  std::uint64_t seed = 1;
};

struct Scenario {
  StokesProblem problem;
  MarkerPool markers;
  Scaling scaling;
};

// Marker-derived viscosity/density on a unit-scaled grid. Throws
// InvalidConfiguration if any stencil-referenced node received no marker.
Scenario build_sinker(const SinkerParams& p);

// Sets material properties of sinker markers (by position, scaled units).
void assign_sinker_materials(MarkerPool& pool, const SinkerParams& p, const Scaling& s);

// Interpolates eta/rho from markers to a problem's grid arrays.
void markers_to_problem(const MarkerPool& pool, StokesProblem& prob);

struct RotatingSlabParams {
  int nx = 256, ny = 256;
  double xsize = 1.0, ysize = 1.0;
  double omega = 1.0;  // angular rate at the centre
  double eta_host = 1.0, eta_slab = 1e3;
  // slab rectangle, fractions of the domain
  double slab_x0 = 0.3, slab_x1 = 0.7, slab_y0 = 0.45, slab_y1 = 0.55;
  int markers_per_cell = 3;
  double jitter = 0.5;
  std::uint64_t seed = 7;
};

struct SlabScenario {
  Grid grid;
  BcSpec bc;
  Field2D vx, vy;
  MarkerPool markers;
};

// Divergence-free circulating velocity from a discrete streamfunction.
void rotating_velocity(const Grid& g, double omega, Field2D& vx, Field2D& vy);
SlabScenario build_rotating_slab(const RotatingSlabParams& p);

}  // namespace mic
