#pragma once

#include <utility>

#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"

namespace mic {

/// Right-hand side of the momentum equations. fx is kept for symmetry and is
/// zero for gravity-driven problems. y points down, so fy = -rho * g_y.
struct BodyForce {
  Field2D fx;
  Field2D fy;
};

BodyForce gravity_force(const Field2D& rho, double g_y, const Grid& g);

// L v + G p at vx unknowns (rows 1..ny, cols 1..nx-1). Entries outside the
// unknown window are left untouched. Pass p == nullptr for the velocity
// block alone.
void vx_momentum_apply(const Field2D& vx, const Field2D& vy, const Field2D* p, const Field2D& etab,
                       const Field2D& etap, const Grid& g, Field2D& out);
// Same at vy unknowns (rows 1..ny-1, cols 1..nx).
void vy_momentum_apply(const Field2D& vx, const Field2D& vy, const Field2D* p, const Field2D& etab,
                       const Field2D& etap, const Grid& g, Field2D& out);

Field2D vx_momentum_apply(const FieldSet& f, const Grid& g);
Field2D vy_momentum_apply(const FieldSet& f, const Grid& g);

// div v at physical pressure nodes.
void continuity_apply(const Field2D& vx, const Field2D& vy, const Grid& g, Field2D& out);
Field2D continuity_apply(const Field2D& vx, const Field2D& vy, const Grid& g);

// r = f - (L v + G p), unknowns only; zero elsewhere.
std::pair<Field2D, Field2D> momentum_residual(const FieldSet& f, const BodyForce& force, const Grid& g);

struct DiagMinusL {
  Field2D vx;
  Field2D vy;
};

// Negated centre coefficients of the momentum stencils.
DiagMinusL diag_minus_L(const Field2D& etab, const Field2D& etap, const Grid& g);

// eta / (2/dx^2 + 2/dy^2) at physical pressure nodes.
Field2D schur_diag_surrogate(const Field2D& etap, const Grid& g);

struct ResidualNorms {
  double res_v = 0.0;
  double res_p = 0.0;
  double res_total = 0.0;
};

// Weighted norm sum_k r_k^2 * w_k over a window, w = 1/diag when invert.
long double weighted_sq_norm(const Field2D& r, const Field2D& w, const IndexBox& box, bool invert);

// res_v, res_p are the un-normalised surrogate norms; res_total is the
// normalised combination. Throws InvalidArgument when the force norm is 0.
ResidualNorms energy_residual(const Field2D& r_vx, const Field2D& r_vy, const Field2D& r_p,
                              const DiagMinusL& diag, const Field2D& schur, const BodyForce& f,
                              const Grid& g);

// Removes the arithmetic mean over physical pressure nodes.
void pressure_demean(Field2D& p, const Grid& g);
double pressure_mean(const Field2D& p, const Grid& g);

}  // namespace mic
