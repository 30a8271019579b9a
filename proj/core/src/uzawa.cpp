#include "micstokes/uzawa.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace mic {

std::vector<ThetaStage> UzawaConfig::default_schedule() {
  return {{0.0, 0}, {0.25, 25}, {0.5, 50}, {0.75, 75}, {1.0, 100}};
}

double UzawaConfig::theta_at(int cycle) const {
  double t = schedule.empty() ? 1.0 : schedule.front().theta;
  for (const auto& s : schedule)
    if (s.start_cycle <= cycle) t = s.theta;
  return t;
}

void UzawaConfig::validate() const {
  if (!(omega_p > 0.0 && omega_p <= 1.0)) throw InvalidArgument("omega_p must lie in (0, 1]");
  if (max_cycles < 0) throw InvalidArgument("max_cycles must be >= 0");
  if (vcycles_per_step < 1) throw InvalidArgument("vcycles_per_step must be >= 1");
  if (!(tol > 0.0)) throw InvalidArgument("tol must be positive");
  if (log_every < 1) throw InvalidArgument("log_every must be >= 1");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (schedule[k].theta < 0.0 || schedule[k].theta > 1.0) throw InvalidArgument("theta outside [0, 1]");
    if (k > 0 && (schedule[k].theta <= schedule[k - 1].theta ||
                  schedule[k].start_cycle <= schedule[k - 1].start_cycle))
      throw InvalidArgument("theta schedule must ascend");
  }
  if (!schedule.empty() && schedule.back().theta != 1.0)
    throw InvalidArgument("theta schedule must end at 1");
}

std::string SolveReport::csv_line(const CycleRecord& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g", r.cycle, r.theta, r.res_v, r.res_p,
                r.res_total);
  return buf;
}

std::string SolveReport::csv() const {
  std::ostringstream os;
  os << "cycle,theta,res_v,res_p,res_total\n";
  for (const auto& r : records) os << csv_line(r) << '\n';
  return os.str();
}

StokesState StokesState::zeros(const Grid& g) { return {g.make_field(), g.make_field(), g.make_field()}; }

double min_viscosity(const Field2D& etab, const Field2D& etap, const Grid& g) {
  double m = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= g.ny; ++i)
    for (int j = 0; j <= g.nx; ++j) m = std::min(m, etab(i, j));
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) m = std::min(m, etap(i, j));
  return m;
}

std::pair<Field2D, Field2D> blend_viscosity(const Field2D& etab, const Field2D& etap, double theta,
                                            const Grid& g) {
  if (!(theta >= 0.0 && theta <= 1.0)) throw InvalidArgument("theta outside [0, 1]");
  const double emin = min_viscosity(etab, etap, g);
  Field2D b = etab, p = etap;
  for (int i = 0; i <= g.ny; ++i)
    for (int j = 0; j <= g.nx; ++j) b(i, j) = (1.0 - theta) * emin + theta * etab(i, j);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) p(i, j) = (1.0 - theta) * emin + theta * etap(i, j);
  return {std::move(b), std::move(p)};
}

Field2D lithostatic_pressure(const Field2D& rho, double g_y, const Grid& g) {
  Field2D p = g.make_field();
  for (int j = 1; j <= g.nx; ++j) {
    auto col = [&](int i) { return 0.5 * (rho(i, j - 1) + rho(i, j)); };
    p(1, j) = g_y * 0.5 * g.dy * col(0);
    for (int i = 2; i <= g.ny; ++i) p(i, j) = p(i - 1, j) + g_y * g.dy * col(i - 1);
  }
  return p;
}

void velocity_rhs(const BodyForce& f, const Field2D& p, const Grid& g, Field2D& rhs_x, Field2D& rhs_y) {
  const double idx = 1.0 / g.dx, idy = 1.0 / g.dy;
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) rhs_x(i, j) = f.fx(i, j) - (p(i, j) - p(i, j + 1)) * idx;
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) rhs_y(i, j) = f.fy(i, j) - (p(i, j) - p(i + 1, j)) * idy;
}

void uzawa_step(StokesState& s, const BodyForce& f, MgHierarchy& h, const StepOptions& opt) {
  MgLevel& L = h.finest();
  const Grid& g = L.grid;
  velocity_rhs(f, s.p, g, L.rhs_x, L.rhs_y);
  L.vx = s.vx;
  L.vy = s.vy;
  for (int k = 0; k < opt.vcycles; ++k) h.v_cycle();
  s.vx = L.vx;
  s.vy = L.vy;
  const double idx = 1.0 / g.dx, idy = 1.0 / g.dy;
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) {
      const double div = (s.vx(i, j) - s.vx(i, j - 1)) * idx + (s.vy(i, j) - s.vy(i - 1, j)) * idy;
      s.p(i, j) -= opt.omega_p * L.etap(i, j) * div;
    }
  if (opt.demean) pressure_demean(s.p, g);
  apply_velocity_bc(s.vx, s.vy, g, h.bc());
}

ResidualNorms stokes_residual(const StokesState& s, const BodyForce& f, const Field2D& etab,
                              const Field2D& etap, const Grid& g) {
  Field2D rx = g.make_field(), ry = g.make_field();
  vx_momentum_apply(s.vx, s.vy, &s.p, etab, etap, g, rx);
  vy_momentum_apply(s.vx, s.vy, &s.p, etab, etap, g, ry);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) rx(i, j) = f.fx(i, j) - rx(i, j);
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) ry(i, j) = f.fy(i, j) - ry(i, j);
  const Field2D div = continuity_apply(s.vx, s.vy, g);
  return energy_residual(rx, ry, div, diag_minus_L(etab, etap, g), schur_diag_surrogate(etap, g), f, g);
}

StokesState initial_state(const StokesProblem& prob) {
  StokesState s = StokesState::zeros(prob.grid);
  s.p = lithostatic_pressure(prob.rho, prob.g_y, prob.grid);
  pressure_demean(s.p, prob.grid);
  return s;
}

namespace {

bool zero_force(const BodyForce& f) {
  for (double v : f.fx.flat())
    if (v != 0.0) return false;
  for (double v : f.fy.flat())
    if (v != 0.0) return false;
  return true;
}

}  // namespace

SolveResult solve(const StokesProblem& prob, const UzawaConfig& cfg, const MgSettings& mg,
                  const StokesState* initial, const CycleObserver& observer) {
  cfg.validate();
  prob.bc.validate();
  if (prob.bc.any_periodic()) throw InvalidConfiguration("the Stokes solver supports wall boundaries only");
  const Grid& g = prob.grid;
  SolveResult out;
  out.state = initial ? *initial : initial_state(prob);
  apply_velocity_bc(out.state.vx, out.state.vy, g, prob.bc);
  if (zero_force(prob.force)) {
    out.state = StokesState::zeros(g);
    out.report.converged = true;
    return out;
  }

  double theta = cfg.theta_at(0);
  auto [eb, ep] = blend_viscosity(prob.etab, prob.etap, theta, g);
  MgHierarchy h(g, eb, ep, mg.levels, mg.factor, prob.bc, mg.smoother);
  const StepOptions opt{cfg.omega_p, cfg.vcycles_per_step, true};

  SolveReport& rep = out.report;
  rep.initial_residual = stokes_residual(out.state, prob.force, eb, ep, g).res_total;
  for (int c = 0; c < cfg.max_cycles; ++c) {
    const double t = cfg.theta_at(c);
    if (t != theta) {
      theta = t;
      std::tie(eb, ep) = blend_viscosity(prob.etab, prob.etap, theta, g);
      h.set_viscosity(eb, ep);
    }
    uzawa_step(out.state, prob.force, h, opt);
    const ResidualNorms n = stokes_residual(out.state, prob.force, eb, ep, g);
    const CycleRecord rec{c + 1, theta, n.res_v, n.res_p, n.res_total};
    rep.cycles_used = c + 1;
    const bool done = theta == 1.0 && n.res_total <= cfg.tol;
    const bool bad = !std::isfinite(n.res_total) ||
                     (rep.initial_residual > 0.0 && n.res_total > cfg.divergence_factor * rep.initial_residual);
    if ((c + 1) % cfg.log_every == 0 || done || bad || c + 1 == cfg.max_cycles) rep.records.push_back(rec);
    if (observer) observer(rec, out.state);
    if (bad) throw DivergenceError("Uzawa iteration diverged at cycle " + std::to_string(c + 1), rep);
    if (done) {
      rep.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mic
