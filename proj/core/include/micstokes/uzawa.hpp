#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "micstokes/errors.hpp"
#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"
#include "micstokes/multigrid.hpp"
#include "micstokes/stokes.hpp"

namespace mic {

struct ThetaStage {
  double theta = 1.0;
  int start_cycle = 0;
};

struct UzawaConfig {
  double omega_p = 0.6;
  int max_cycles = 1000;
  int vcycles_per_step = 1;
  double tol = 1e-4;
  std::vector<ThetaStage> schedule = default_schedule();
  int log_every = 1;
  double divergence_factor = 1e6;

  static std::vector<ThetaStage> default_schedule();
  // Theta active at a zero-based cycle index.
  [[nodiscard]] double theta_at(int cycle) const;
  void validate() const;
};

struct MgSettings {
  int levels = 4;
  double factor = 2.5;  // <= 0 selects the automatic factor
  SmootherConfig smoother;
};

struct CycleRecord {
  int cycle = 0;  // 1-based count of completed cycles
  double theta = 0.0;
  double res_v = 0.0, res_p = 0.0, res_total = 0.0;
};

struct SolveReport {
  std::vector<CycleRecord> records;
  double initial_residual = 0.0;
  bool converged = false;
  int cycles_used = 0;

  // `cycle,theta,res_v,res_p,res_total` lines with a header.
  [[nodiscard]] std::string csv() const;
  static std::string csv_line(const CycleRecord& r);
};

class DivergenceError : public NumericalBreakdown {
 public:
  DivergenceError(const std::string& what, SolveReport r) : NumericalBreakdown(what), report(std::move(r)) {}
  SolveReport report;
};

struct StokesProblem {
  Grid grid;
  BcSpec bc;
  Field2D etab, etap;  // physical viscosity
  Field2D rho;
  double g_y = 0.0;
  BodyForce force;
};

struct StokesState {
  Field2D vx, vy, p;
  static StokesState zeros(const Grid& g);
};

// Pointwise (1 - theta) * eta_min + theta * eta with eta_min over both
// physical windows.
std::pair<Field2D, Field2D> blend_viscosity(const Field2D& etab, const Field2D& etap, double theta,
                                            const Grid& g);
double min_viscosity(const Field2D& etab, const Field2D& etap, const Grid& g);

// Column-wise integral of rho * g_y from the top wall, exact discrete
// hydrostatic balance for the momentum stencil.
Field2D lithostatic_pressure(const Field2D& rho, double g_y, const Grid& g);

// fx - G p, fy - G p on the finest level rhs buffers.
void velocity_rhs(const BodyForce& f, const Field2D& p, const Grid& g, Field2D& rhs_x, Field2D& rhs_y);

struct StepOptions {
  double omega_p = 0.6;
  int vcycles = 1;
  bool demean = true;
};

// One inexact Uzawa step using the hierarchy's current viscosity.
void uzawa_step(StokesState& s, const BodyForce& f, MgHierarchy& h, const StepOptions& opt);

ResidualNorms stokes_residual(const StokesState& s, const BodyForce& f, const Field2D& etab,
                              const Field2D& etap, const Grid& g);

using CycleObserver = std::function<void(const CycleRecord&, const StokesState&)>;

struct SolveResult {
  StokesState state;
  SolveReport report;
};

// Runs the rescaling schedule from `initial` (or lithostatic pressure when
// null). Throws DivergenceError carrying the report on blow-up.
SolveResult solve(const StokesProblem& prob, const UzawaConfig& cfg, const MgSettings& mg,
                  const StokesState* initial = nullptr, const CycleObserver& observer = {});

StokesState initial_state(const StokesProblem& prob);

}  // namespace mic
