#pragma once

// Pointwise momentum stencils shared by the operators and the smoothers, so
// that every code path evaluates exactly the same floating-point expression.

#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"

namespace mic::detail {

struct StencilConsts {
  double idx2, idy2, idxy;
  explicit StencilConsts(const Grid& g)
      : idx2(1.0 / (g.dx * g.dx)), idy2(1.0 / (g.dy * g.dy)), idxy(1.0 / (g.dx * g.dy)) {}
};

// Velocity part of the vx equation at (i, j); vx/vy are read through an
// accessor so tiles with shifted local buffers can share the code.
template <class VX, class VY>
inline double vx_point(const VX& vx, const VY& vy, const Field2D& etab, const Field2D& etap,
                       const StencilConsts& k, long i, long j, double& centre) {
  const double etaA = etap(i, j), etaB = etap(i, j + 1);
  const double eta1 = etab(i - 1, j), eta2 = etab(i, j);
  const double vx1 = 2.0 * etaA * k.idx2;
  const double vx2 = eta1 * k.idy2;
  const double vx3 = -(eta1 + eta2) * k.idy2 - 2.0 * (etaA + etaB) * k.idx2;
  const double vx4 = eta2 * k.idy2;
  const double vx5 = 2.0 * etaB * k.idx2;
  const double vy1 = eta1 * k.idxy;
  const double vy2 = -eta2 * k.idxy;
  const double vy3 = -eta1 * k.idxy;
  const double vy4 = eta2 * k.idxy;
  centre = vx3;
  return vx1 * vx(i, j - 1) + vx2 * vx(i - 1, j) + vx3 * vx(i, j) + vx4 * vx(i + 1, j) +
         vx5 * vx(i, j + 1) + vy1 * vy(i - 1, j) + vy2 * vy(i, j) + vy3 * vy(i - 1, j + 1) +
         vy4 * vy(i, j + 1);
}

template <class VX, class VY>
inline double vy_point(const VX& vx, const VY& vy, const Field2D& etab, const Field2D& etap,
                       const StencilConsts& k, long i, long j, double& centre) {
  const double etaA = etap(i, j), etaB = etap(i + 1, j);
  const double eta1 = etab(i, j - 1), eta2 = etab(i, j);
  const double vy1 = 2.0 * etaA * k.idy2;
  const double vy2 = eta1 * k.idx2;
  const double vy3 = -(eta1 + eta2) * k.idx2 - 2.0 * (etaA + etaB) * k.idy2;
  const double vy4 = eta2 * k.idx2;
  const double vy5 = 2.0 * etaB * k.idy2;
  const double vx1 = eta1 * k.idxy;
  const double vx2 = -eta2 * k.idxy;
  const double vx3 = -eta1 * k.idxy;
  const double vx4 = eta2 * k.idxy;
  centre = vy3;
  return vy1 * vy(i - 1, j) + vy2 * vy(i, j - 1) + vy3 * vy(i, j) + vy4 * vy(i, j + 1) +
         vy5 * vy(i + 1, j) + vx1 * vx(i, j - 1) + vx2 * vx(i, j) + vx3 * vx(i + 1, j - 1) +
         vx4 * vx(i + 1, j);
}

}  // namespace mic::detail
