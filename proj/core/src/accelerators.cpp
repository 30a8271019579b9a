#include "micstokes/accelerators.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace mic {

double dot(const Vec& a, const Vec& b) {
  // sequential long double accumulation; fixed order, so results are reproducible
  long double acc = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(acc);
}

double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

double wdot(const Vec& a, const Vec& b, const Vec& w) {
  if (w.empty()) return dot(a, b);
  long double acc = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<long double>(w[k]) * a[k] * b[k];
  return static_cast<double>(acc);
}

std::size_t state_size(const Grid& g) {
  const std::size_t nx = g.nx, ny = g.ny;
  return ny * (nx - 1) + (ny - 1) * nx + ny * nx;
}

Vec flatten(const StokesState& s, const Grid& g) {
  Vec v;
  v.reserve(state_size(g));
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) v.push_back(s.vx(i, j));
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) v.push_back(s.vy(i, j));
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) v.push_back(s.p(i, j));
  return v;
}

void unflatten(const Vec& v, const Grid& g, const BcSpec& bc, StokesState& s) {
  if (s.vx.rows() != g.rows()) s = StokesState::zeros(g);
  std::size_t k = 0;
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) s.vx(i, j) = v[k++];
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) s.vy(i, j) = v[k++];
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) s.p(i, j) = v[k++];
  apply_velocity_bc(s.vx, s.vy, g, bc);
}

Vec flatten_force(const BodyForce& f, const Grid& g) {
  StokesState s{f.fx, f.fy, g.make_field()};
  return flatten(s, g);
}

Vec energy_weights(const Field2D& etab, const Field2D& etap, const Grid& g) {
  const DiagMinusL d = diag_minus_L(etab, etap, g);
  StokesState s{g.make_field(), g.make_field(), schur_diag_surrogate(etap, g)};
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) s.vx(i, j) = 1.0 / d.vx(i, j);
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) s.vy(i, j) = 1.0 / d.vy(i, j);
  return flatten(s, g);
}

void demean_flat(Vec& v, const Grid& g) {
  const std::size_t np = static_cast<std::size_t>(g.nx) * g.ny;
  const std::size_t off = v.size() - np;
  long double acc = 0.0L;
  for (std::size_t k = off; k < v.size(); ++k) acc += v[k];
  const double m = static_cast<double>(acc / np);
  for (std::size_t k = off; k < v.size(); ++k) v[k] -= m;
}

Gcr::Gcr(LinearMap apply_A, LinearMap precond, int restart_m, Projection project)
    : A_(std::move(apply_A)), P_(std::move(precond)), m_(restart_m), project_(std::move(project)) {
  if (m_ < 1) throw InvalidArgument("GCR restart length must be >= 1");
}

void Gcr::reset(const Vec& x0, const Vec& b) {
  x_ = x0;
  if (project_) project_(x_);
  Vec ax(x_.size());
  A_(x_, ax);
  r_.resize(b.size());
  for (std::size_t k = 0; k < b.size(); ++k) r_[k] = b[k] - ax[k];
  clear_history();
}

void Gcr::clear_history() {
  z_.clear();
  w_.clear();
}

void Gcr::iterate() {
  const std::size_t n = r_.size();
  Vec z(n), w(n);
  P_(r_, z);
  A_(z, w);
  for (std::size_t k = 0; k < w_.size(); ++k) {
    const double beta = wdot(w, w_[k], weights_);
    for (std::size_t q = 0; q < n; ++q) {
      w[q] -= beta * w_[k][q];
      z[q] -= beta * z_[k][q];
    }
  }
  const double nu = std::sqrt(wdot(w, w, weights_));
  if (!(nu > 1e-14 * residual_norm())) throw GcrBreakdown("GCR breakdown: ||w|| vanished", x_);
  for (std::size_t q = 0; q < n; ++q) {
    w[q] /= nu;
    z[q] /= nu;
  }
  const double alpha = wdot(r_, w, weights_);
  for (std::size_t q = 0; q < n; ++q) {
    x_[q] += alpha * z[q];
    r_[q] -= alpha * w[q];
  }
  if (project_) project_(x_);
  z_.push_back(std::move(z));
  w_.push_back(std::move(w));
  if (static_cast<int>(w_.size()) >= m_) clear_history();
}

GcrResult gcr_solve(const LinearMap& apply_A, const LinearMap& precond, const Vec& b, const Vec& x0,
                    int restart_m, double tol, int max_iters) {
  Gcr gcr(apply_A, precond, restart_m);
  gcr.reset(x0, b);
  GcrResult res;
  const double bn = norm2(b);
  res.residuals.push_back(gcr.residual_norm());
  for (int k = 0; k < max_iters; ++k) {
    if (gcr.residual_norm() <= tol * bn) break;
    gcr.iterate();
    res.iterations = k + 1;
    res.residuals.push_back(gcr.residual_norm());
  }
  res.converged = gcr.residual_norm() <= tol * bn;
  res.x = gcr.x();
  return res;
}

bool anderson_coefficients(const std::vector<const Vec*>& f, std::vector<double>& alpha, bool& truncated) {
  const std::size_t n = f.size();
  truncated = false;
  alpha.assign(n, 0.0);
  if (n == 0) return false;
  if (n == 1) {
    alpha[0] = 1.0;
    return true;
  }
  const std::size_t len = f[0]->size();
  const std::size_t k = n - 1;
  Eigen::MatrixXd dF(len, k);
  Eigen::VectorXd rhs(len);
  for (std::size_t q = 0; q < len; ++q) {
    rhs(q) = (*f[n - 1])[q];
    for (std::size_t c = 0; c < k; ++c) dF(q, c) = (*f[c + 1])[q] - (*f[c])[q];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(dF, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0) || !std::isfinite(sv(0))) return false;
  const double cut = 1e-12 * sv(0);
  Eigen::VectorXd utb = svd.matrixU().transpose() * rhs;
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index s = 0; s < sv.size(); ++s) {
    if (sv(s) > cut)
      coef(s) = utb(s) / sv(s);
    else
      truncated = true;
  }
  const Eigen::VectorXd gamma = svd.matrixV() * coef;
  if (!gamma.allFinite()) return false;
  alpha[0] = gamma(0);
  for (std::size_t c = 1; c < k; ++c) alpha[c] = gamma(c) - gamma(c - 1);
  alpha[k] = 1.0 - gamma(k - 1);
  return true;
}

AndersonWorkspace::AndersonWorkspace(int depth_m, double beta) : m_(depth_m), beta_(beta) {
  if (m_ < 0) throw InvalidArgument("Anderson depth must be >= 0");
  if (!(beta_ > 0.0 && beta_ <= 1.0)) throw InvalidArgument("Anderson mixing must lie in (0, 1]");
}

void AndersonWorkspace::clear() {
  xs_.clear();
  gs_.clear();
}

Vec AndersonWorkspace::step(const std::function<Vec(const Vec&)>& G, const Vec& x_k) {
  Vec g = G(x_k);
  xs_.push_back(x_k);
  gs_.push_back(g);
  while (xs_.size() > static_cast<std::size_t>(m_) + 1) {
    xs_.pop_front();
    gs_.pop_front();
  }
  const std::size_t n = xs_.size(), len = x_k.size();
  std::vector<Vec> f(n, Vec(len));
  std::vector<const Vec*> fp(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t q = 0; q < len; ++q) f[i][q] = gs_[i][q] - xs_[i][q];
    fp[i] = &f[i];
  }
  fallback_ = !anderson_coefficients(fp, alpha_, truncated_);
  if (fallback_) {
    alpha_.assign(n, 0.0);
    alpha_.back() = 1.0;
    return g;
  }
  Vec out(len, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = alpha_[i];
    for (std::size_t q = 0; q < len; ++q) out[q] += a * ((1.0 - beta_) * xs_[i][q] + beta_ * gs_[i][q]);
  }
  return out;
}

UzawaOperators::UzawaOperators(const Grid& g, const BcSpec& bc, MgHierarchy& h, double omega_p)
    : g_(g), bc_(bc), h_(h), omega_p_(omega_p) {}

void UzawaOperators::apply_A(const Vec& x, Vec& out) const {
  StokesState s = StokesState::zeros(g_);
  unflatten(x, g_, bc_, s);
  const MgLevel& L = h_.level(0);
  Field2D ax = g_.make_field(), ay = g_.make_field();
  vx_momentum_apply(s.vx, s.vy, &s.p, L.etab, L.etap, g_, ax);
  vy_momentum_apply(s.vx, s.vy, &s.p, L.etab, L.etap, g_, ay);
  Field2D d = continuity_apply(s.vx, s.vy, g_);
  for (std::size_t k = 0; k < d.size(); ++k) d.flat()[k] = -d.flat()[k];
  out = flatten(StokesState{ax, ay, d}, g_);
}

void UzawaOperators::precond(const Vec& r, Vec& z) const {
  StokesState rs = StokesState::zeros(g_);
  std::size_t k = 0;
  MgLevel& L = h_.finest();
  for (int i = 1; i <= g_.ny; ++i)
    for (int j = 1; j <= g_.nx - 1; ++j) L.rhs_x(i, j) = r[k++];
  for (int i = 1; i <= g_.ny - 1; ++i)
    for (int j = 1; j <= g_.nx; ++j) L.rhs_y(i, j) = r[k++];
  L.vx.fill(0.0);
  L.vy.fill(0.0);
  h_.v_cycle();
  rs.vx = L.vx;
  rs.vy = L.vy;
  const double idx = 1.0 / g_.dx, idy = 1.0 / g_.dy;
  for (int i = 1; i <= g_.ny; ++i)
    for (int j = 1; j <= g_.nx; ++j) {
      const double div = (rs.vx(i, j) - rs.vx(i, j - 1)) * idx + (rs.vy(i, j) - rs.vy(i - 1, j)) * idy;
      rs.p(i, j) = omega_p_ * L.etap(i, j) * (-div - r[k++]);
    }
  z = flatten(rs, g_);
}

LinearMap UzawaOperators::apply_A_map() const {
  return [this](const Vec& x, Vec& y) { apply_A(x, y); };
}

LinearMap UzawaOperators::precond_map() const {
  return [this](const Vec& r, Vec& z) { precond(r, z); };
}

std::string to_string(AccelKind k) {
  switch (k) {
    case AccelKind::None: return "none";
    case AccelKind::Gcr: return "gcr";
    case AccelKind::Anderson: return "anderson";
  }
  return "?";
}

AccelKind accel_from_string(const std::string& s) {
  if (s == "none") return AccelKind::None;
  if (s == "gcr") return AccelKind::Gcr;
  if (s == "anderson") return AccelKind::Anderson;
  throw InvalidArgument("unknown accelerator '" + s + "'");
}

SolveResult accelerated_solve(const StokesProblem& prob, const UzawaConfig& cfg, const MgSettings& mg,
                              const AccelParams& accel, const StokesState* initial,
                              const CycleObserver& observer) {
  if (accel.kind == AccelKind::None) return solve(prob, cfg, mg, initial, observer);
  cfg.validate();
  prob.bc.validate();
  if (prob.bc.any_periodic()) throw InvalidConfiguration("the Stokes solver supports wall boundaries only");
  const Grid& g = prob.grid;
  SolveResult out;
  out.state = initial ? *initial : initial_state(prob);
  apply_velocity_bc(out.state.vx, out.state.vy, g, prob.bc);

  double theta = cfg.theta_at(0);
  auto [eb, ep] = blend_viscosity(prob.etab, prob.etap, theta, g);
  MgHierarchy h(g, eb, ep, mg.levels, mg.factor, prob.bc, mg.smoother);
  UzawaOperators ops(g, prob.bc, h, cfg.omega_p);
  const Vec b = flatten_force(prob.force, g);
  if (norm2(b) == 0.0) {
    out.state = StokesState::zeros(g);
    out.report.converged = true;
    return out;
  }
  Vec x = flatten(out.state, g);
  demean_flat(x, g);

  auto project = [&g](Vec& v) { demean_flat(v, g); };
  Gcr gcr(ops.apply_A_map(), ops.precond_map(), accel.gcr_restart, project);
  gcr.set_weights(energy_weights(eb, ep, g));
  AndersonWorkspace aa(accel.anderson_depth, accel.anderson_beta);
  const StepOptions opt{cfg.omega_p, cfg.vcycles_per_step, true};
  auto G = [&](const Vec& xin) {
    StokesState s = StokesState::zeros(g);
    unflatten(xin, g, prob.bc, s);
    uzawa_step(s, prob.force, h, opt);
    return flatten(s, g);
  };
  if (accel.kind == AccelKind::Gcr) gcr.reset(x, b);

  SolveReport& rep = out.report;
  unflatten(x, g, prob.bc, out.state);
  rep.initial_residual = stokes_residual(out.state, prob.force, eb, ep, g).res_total;
  int breakdowns = 0;
  for (int c = 0; c < cfg.max_cycles; ++c) {
    const double t = cfg.theta_at(c);
    if (t != theta) {
      theta = t;
      std::tie(eb, ep) = blend_viscosity(prob.etab, prob.etap, theta, g);
      h.set_viscosity(eb, ep);
      if (accel.kind == AccelKind::Gcr) {
        gcr.set_weights(energy_weights(eb, ep, g));
        gcr.reset(x, b);
      }
      aa.clear();
    }
    if (accel.kind == AccelKind::Gcr) {
      try {
        gcr.iterate();
        breakdowns = 0;
      } catch (const GcrBreakdown& e) {
        if (++breakdowns > 2) throw;
        gcr.reset(e.x, b);
      }
      x = gcr.x();
    } else {
      x = aa.step(G, x);
      demean_flat(x, g);
    }
    unflatten(x, g, prob.bc, out.state);
    const ResidualNorms n = stokes_residual(out.state, prob.force, eb, ep, g);
    const CycleRecord rec{c + 1, theta, n.res_v, n.res_p, n.res_total};
    rep.cycles_used = c + 1;
    const bool done = theta == 1.0 && n.res_total <= cfg.tol;
    const bool bad = !std::isfinite(n.res_total) ||
                     (rep.initial_residual > 0.0 && n.res_total > cfg.divergence_factor * rep.initial_residual);
    if ((c + 1) % cfg.log_every == 0 || done || bad || c + 1 == cfg.max_cycles) rep.records.push_back(rec);
    if (observer) observer(rec, out.state);
    if (bad) throw DivergenceError("accelerated iteration diverged at cycle " + std::to_string(c + 1), rep);
    if (done) {
      rep.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace mic
