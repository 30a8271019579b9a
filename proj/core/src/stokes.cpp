#include "micstokes/stokes.hpp"

#include <cmath>

#include "micstokes/errors.hpp"
#include "stencil.hpp"

namespace mic {

BodyForce gravity_force(const Field2D& rho, double g_y, const Grid& g) {
  BodyForce f{g.make_field(), g.make_field()};
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) f.fy(i, j) = -g_y * 0.5 * (rho(i, j - 1) + rho(i, j));
  return f;
}

void vx_momentum_apply(const Field2D& vx, const Field2D& vy, const Field2D* p, const Field2D& etab,
                       const Field2D& etap, const Grid& g, Field2D& out) {
  const detail::StencilConsts k(g);
  const double idx = 1.0 / g.dx;
  const int ny = g.ny, nx = g.nx;
#pragma omp parallel for schedule(static)
  for (int i = 1; i <= ny; ++i) {
    for (int j = 1; j <= nx - 1; ++j) {
      double c;
      double r = detail::vx_point(vx, vy, etab, etap, k, i, j, c);
      if (p) r += ((*p)(i, j) - (*p)(i, j + 1)) * idx;
      out(i, j) = r;
    }
  }
}

void vy_momentum_apply(const Field2D& vx, const Field2D& vy, const Field2D* p, const Field2D& etab,
                       const Field2D& etap, const Grid& g, Field2D& out) {
  const detail::StencilConsts k(g);
  const double idy = 1.0 / g.dy;
  const int ny = g.ny, nx = g.nx;
#pragma omp parallel for schedule(static)
  for (int i = 1; i <= ny - 1; ++i) {
    for (int j = 1; j <= nx; ++j) {
      double c;
      double r = detail::vy_point(vx, vy, etab, etap, k, i, j, c);
      if (p) r += ((*p)(i, j) - (*p)(i + 1, j)) * idy;
      out(i, j) = r;
    }
  }
}

Field2D vx_momentum_apply(const FieldSet& f, const Grid& g) {
  Field2D out = g.make_field();
  vx_momentum_apply(f.vx, f.vy, &f.p, f.etab, f.etap, g, out);
  return out;
}

Field2D vy_momentum_apply(const FieldSet& f, const Grid& g) {
  Field2D out = g.make_field();
  vy_momentum_apply(f.vx, f.vy, &f.p, f.etab, f.etap, g, out);
  return out;
}

void continuity_apply(const Field2D& vx, const Field2D& vy, const Grid& g, Field2D& out) {
  const double idx = 1.0 / g.dx, idy = 1.0 / g.dy;
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j)
      out(i, j) = (vx(i, j) - vx(i, j - 1)) * idx + (vy(i, j) - vy(i - 1, j)) * idy;
}

Field2D continuity_apply(const Field2D& vx, const Field2D& vy, const Grid& g) {
  Field2D out = g.make_field();
  continuity_apply(vx, vy, g, out);
  return out;
}

std::pair<Field2D, Field2D> momentum_residual(const FieldSet& f, const BodyForce& force, const Grid& g) {
  Field2D rx = g.make_field(), ry = g.make_field();
  vx_momentum_apply(f.vx, f.vy, &f.p, f.etab, f.etap, g, rx);
  vy_momentum_apply(f.vx, f.vy, &f.p, f.etab, f.etap, g, ry);
  const IndexBox bx = g.vx_unknowns(), by = g.vy_unknowns();
  for (long i = bx.i0; i <= bx.i1; ++i)
    for (long j = bx.j0; j <= bx.j1; ++j) rx(i, j) = force.fx(i, j) - rx(i, j);
  for (long i = by.i0; i <= by.i1; ++i)
    for (long j = by.j0; j <= by.j1; ++j) ry(i, j) = force.fy(i, j) - ry(i, j);
  return {std::move(rx), std::move(ry)};
}

DiagMinusL diag_minus_L(const Field2D& etab, const Field2D& etap, const Grid& g) {
  DiagMinusL d{g.make_field(), g.make_field()};
  const double idx2 = 1.0 / (g.dx * g.dx), idy2 = 1.0 / (g.dy * g.dy);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j)
      d.vx(i, j) = (etab(i - 1, j) + etab(i, j)) * idy2 + 2.0 * (etap(i, j) + etap(i, j + 1)) * idx2;
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j)
      d.vy(i, j) = (etab(i, j - 1) + etab(i, j)) * idx2 + 2.0 * (etap(i, j) + etap(i + 1, j)) * idy2;
  return d;
}

Field2D schur_diag_surrogate(const Field2D& etap, const Grid& g) {
  Field2D s = g.make_field();
  const double denom = 2.0 / (g.dx * g.dx) + 2.0 / (g.dy * g.dy);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) s(i, j) = etap(i, j) / denom;
  return s;
}

long double weighted_sq_norm(const Field2D& r, const Field2D& w, const IndexBox& box, bool invert) {
  long double acc = 0.0L;
  for (long i = box.i0; i <= box.i1; ++i) {
    for (long j = box.j0; j <= box.j1; ++j) {
      const long double v = r(i, j);
      acc += invert ? v * v / w(i, j) : v * v * w(i, j);
    }
  }
  return acc;
}

ResidualNorms energy_residual(const Field2D& r_vx, const Field2D& r_vy, const Field2D& r_p,
                              const DiagMinusL& diag, const Field2D& schur, const BodyForce& f,
                              const Grid& g) {
  const long double fv = weighted_sq_norm(f.fx, diag.vx, g.vx_unknowns(), true) +
                         weighted_sq_norm(f.fy, diag.vy, g.vy_unknowns(), true);
  if (!(fv > 0.0L)) throw InvalidArgument("energy residual undefined for zero body force");
  const long double rv = weighted_sq_norm(r_vx, diag.vx, g.vx_unknowns(), true) +
                         weighted_sq_norm(r_vy, diag.vy, g.vy_unknowns(), true);
  const long double rp = weighted_sq_norm(r_p, schur, g.p_physical(), false);
  ResidualNorms n;
  n.res_v = static_cast<double>(std::sqrt(rv));
  n.res_p = static_cast<double>(std::sqrt(rp));
  n.res_total = static_cast<double>(std::sqrt((rv + rp) / fv));
  return n;
}

double pressure_mean(const Field2D& p, const Grid& g) {
  long double acc = 0.0L;
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) acc += p(i, j);
  return static_cast<double>(acc / (static_cast<long double>(g.nx) * g.ny));
}

void pressure_demean(Field2D& p, const Grid& g) {
  const double m = pressure_mean(p, g);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx; ++j) p(i, j) -= m;
}

}  // namespace mic
