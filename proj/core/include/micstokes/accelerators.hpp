#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "micstokes/errors.hpp"
#include "micstokes/uzawa.hpp"

namespace mic {

using Vec = std::vector<double>;
using LinearMap = std::function<void(const Vec& in, Vec& out)>;
using Projection = std::function<void(Vec&)>;

double dot(const Vec& a, const Vec& b);
double norm2(const Vec& a);
// sum w_k a_k b_k; plain dot when w is empty.
double wdot(const Vec& a, const Vec& b, const Vec& w);

// Flat state order: vx unknowns (row-major), vy unknowns, physical pressure.
std::size_t state_size(const Grid& g);
Vec flatten(const StokesState& s, const Grid& g);
void unflatten(const Vec& v, const Grid& g, const BcSpec& bc, StokesState& s);
Vec flatten_force(const BodyForce& f, const Grid& g);
// Per-entry weights of the energy residual norm in flat order: 1/diag(-L)
// on velocity unknowns, the Schur surrogate on pressure.
Vec energy_weights(const Field2D& etab, const Field2D& etap, const Grid& g);

class GcrBreakdown : public NumericalBreakdown {
 public:
  GcrBreakdown(const std::string& what, Vec best) : NumericalBreakdown(what), x(std::move(best)) {}
  Vec x;
};

/// Flexible GCR(m) with modified Gram-Schmidt; holds at most m (z, w) pairs.
/// Residuals are minimised in the inner product weighted by `weights`
/// (Euclidean when empty).
class Gcr {
 public:
  Gcr(LinearMap apply_A, LinearMap precond, int restart_m, Projection project = {});

  // Stored directions are orthogonal in the old inner product, so the
  // history is dropped.
  void set_weights(Vec w) {
    weights_ = std::move(w);
    clear_history();
  }

  // Starts from x0 for right-hand side b.
  void reset(const Vec& x0, const Vec& b);
  // One inner iteration; throws GcrBreakdown when ||w|| <= 1e-14 ||r||.
  void iterate();
  void clear_history();

  [[nodiscard]] const Vec& x() const noexcept { return x_; }
  [[nodiscard]] const Vec& r() const noexcept { return r_; }
  [[nodiscard]] double residual_norm() const { return std::sqrt(wdot(r_, r_, weights_)); }
  [[nodiscard]] const std::deque<Vec>& w_history() const noexcept { return w_; }
  [[nodiscard]] std::size_t stored() const noexcept { return w_.size(); }

 private:
  LinearMap A_, P_;
  int m_;
  Projection project_;
  Vec weights_;
  Vec x_, r_;
  std::deque<Vec> z_, w_;
};

struct GcrResult {
  Vec x;
  std::vector<double> residuals;  // ||r|| before the first and after each iteration
  int iterations = 0;
  bool converged = false;
};

GcrResult gcr_solve(const LinearMap& apply_A, const LinearMap& precond, const Vec& b, const Vec& x0,
                    int restart_m, double tol, int max_iters);

/// Anderson acceleration over stored (x_i, G(x_i)) pairs.
class AndersonWorkspace {
 public:
  AndersonWorkspace(int depth_m, double beta);

  // Evaluates G at x_k, records the pair and returns the mixed update.
  Vec step(const std::function<Vec(const Vec&)>& G, const Vec& x_k);
  void clear();

  [[nodiscard]] int depth() const noexcept { return m_; }
  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] std::size_t stored() const noexcept { return xs_.size(); }
  [[nodiscard]] const std::vector<double>& last_alpha() const noexcept { return alpha_; }
  [[nodiscard]] bool last_fallback() const noexcept { return fallback_; }
  [[nodiscard]] bool last_truncated() const noexcept { return truncated_; }

 private:
  int m_;
  double beta_;
  std::deque<Vec> xs_, gs_;
  std::vector<double> alpha_;
  bool fallback_ = false, truncated_ = false;
};

// Coefficients minimising ||sum alpha_i f_i|| subject to sum alpha_i = 1.
// Sets `truncated` when small singular values were dropped; returns false
// when no usable direction exists.
bool anderson_coefficients(const std::vector<const Vec*>& f, std::vector<double>& alpha, bool& truncated);

/// Block operator and Uzawa preconditioner for one computational viscosity.
class UzawaOperators {
 public:
  UzawaOperators(const Grid& g, const BcSpec& bc, MgHierarchy& h, double omega_p);

  // [L v + G p; -div v]
  void apply_A(const Vec& x, Vec& out) const;
  // z_v = one V-cycle from zero on r_v; z_p = alpha eta (D z_v - r_p).
  void precond(const Vec& r, Vec& z) const;
  [[nodiscard]] LinearMap apply_A_map() const;
  [[nodiscard]] LinearMap precond_map() const;

 private:
  const Grid& g_;
  BcSpec bc_;
  MgHierarchy& h_;
  double omega_p_;
};

// Removes the pressure mean of a flat state.
void demean_flat(Vec& v, const Grid& g);

enum class AccelKind { None, Gcr, Anderson };
std::string to_string(AccelKind k);
AccelKind accel_from_string(const std::string& s);

struct AccelParams {
  AccelKind kind = AccelKind::None;
  int gcr_restart = 10;
  int anderson_depth = 5;
  double anderson_beta = 0.7;
};

SolveResult accelerated_solve(const StokesProblem& prob, const UzawaConfig& cfg, const MgSettings& mg,
                              const AccelParams& accel, const StokesState* initial = nullptr,
                              const CycleObserver& observer = {});

}  // namespace mic
