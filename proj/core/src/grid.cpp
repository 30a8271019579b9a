#include "micstokes/grid.hpp"

#include <cmath>

#include "micstokes/errors.hpp"

namespace mic {

std::string to_string(Stagger s) {
  switch (s) {
    case Stagger::Basic: return "basic";
    case Stagger::Pressure: return "pressure";
    case Stagger::Vx: return "vx";
    case Stagger::Vy: return "vy";
  }
  return "?";
}

Stagger stagger_from_string(const std::string& s) {
  if (s == "basic") return Stagger::Basic;
  if (s == "pressure" || s == "p") return Stagger::Pressure;
  if (s == "vx") return Stagger::Vx;
  if (s == "vy") return Stagger::Vy;
  throw InvalidArgument("unknown stagger role '" + s + "'");
}

double Grid::x_offset(Stagger s) const noexcept {
  return (s == Stagger::Vy || s == Stagger::Pressure) ? -0.5 * dx : 0.0;
}

double Grid::y_offset(Stagger s) const noexcept {
  return (s == Stagger::Vx || s == Stagger::Pressure) ? -0.5 * dy : 0.0;
}

std::vector<double> Grid::col_coords(Stagger s) const {
  std::vector<double> c(cols());
  for (std::size_t j = 0; j < c.size(); ++j) c[j] = node_x(s, static_cast<long>(j));
  return c;
}

std::vector<double> Grid::row_coords(Stagger s) const {
  std::vector<double> c(rows());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = node_y(s, static_cast<long>(i));
  return c;
}

IndexBox Grid::physical(Stagger s) const noexcept {
  switch (s) {
    case Stagger::Basic: return basic_physical();
    case Stagger::Pressure: return p_physical();
    case Stagger::Vx: return vx_unknowns();
    case Stagger::Vy: return vy_unknowns();
  }
  return {};
}

Grid make_uniform_grid(int nx, int ny, double xsize, double ysize, double x0, double y0) {
  if (nx < 2 || ny < 2) throw InvalidArgument("grid needs at least 2 cells per axis");
  if (!(xsize > 0.0) || !(ysize > 0.0)) throw InvalidArgument("grid extents must be positive");
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.xsize = xsize;
  g.ysize = ysize;
  g.dx = xsize / nx;
  g.dy = ysize / ny;
  g.x0 = x0;
  g.y0 = y0;
  g.x.resize(nx + 1);
  g.y.resize(ny + 1);
  for (int j = 0; j <= nx; ++j) g.x[j] = x0 + j * g.dx;
  for (int i = 0; i <= ny; ++i) g.y[i] = y0 + i * g.dy;
  g.x[nx] = x0 + xsize;
  g.y[ny] = y0 + ysize;
  return g;
}

std::string to_string(BcKind k) {
  switch (k) {
    case BcKind::NoSlip: return "no-slip";
    case BcKind::FreeSlip: return "free-slip";
    case BcKind::Periodic: return "periodic";
  }
  return "?";
}

BcKind bc_kind_from_string(const std::string& s) {
  if (s == "no-slip" || s == "noslip") return BcKind::NoSlip;
  if (s == "free-slip" || s == "freeslip") return BcKind::FreeSlip;
  if (s == "periodic") return BcKind::Periodic;
  throw InvalidArgument("unknown boundary condition '" + s + "'");
}

void BcSpec::validate() const {
  auto side_periodic = [](const SideBc& s, const char* name) {
    bool a = s.vx == BcKind::Periodic, b = s.vy == BcKind::Periodic;
    if (a != b) throw InvalidArgument(std::string("periodic tag on only one component at ") + name);
    return a;
  };
  bool w = side_periodic(west, "west"), e = side_periodic(east, "east");
  bool n = side_periodic(north, "north"), s = side_periodic(south, "south");
  if (w != e) throw InvalidArgument("periodic west/east tags must be paired");
  if (n != s) throw InvalidArgument("periodic north/south tags must be paired");
}

BcSpec BcSpec::all(BcKind k) {
  SideBc s{k, k};
  return {s, s, s, s};
}

FieldSet FieldSet::allocate(const Grid& g) {
  FieldSet f;
  f.vx = g.make_field();
  f.vy = g.make_field();
  f.p = g.make_field();
  f.etab = g.make_field(1.0);
  f.etap = g.make_field(1.0);
  f.rho = g.make_field();
  return f;
}

namespace {

double mirror_sign(BcKind k) { return k == BcKind::NoSlip ? -1.0 : 1.0; }

}  // namespace

void wrap_periodic(Field2D& a, const Grid& g, bool px, bool py) {
  const std::size_t nx = g.nx, ny = g.ny;
  if (px) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      a(i, 0) = a(i, nx);
      a(i, nx + 1) = a(i, 1);
    }
  }
  if (py) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      a(0, j) = a(ny, j);
      a(ny + 1, j) = a(1, j);
    }
  }
}

void apply_velocity_bc(Field2D& vx, Field2D& vy, const Grid& g, const BcSpec& bc) {
  const std::size_t nx = g.nx, ny = g.ny;
  const std::size_t R = g.rows(), C = g.cols();

  if (bc.periodic_x()) {
    wrap_periodic(vx, g, true, false);
    wrap_periodic(vy, g, true, false);
  } else {
    const double sw = mirror_sign(bc.west.vy), se = mirror_sign(bc.east.vy);
    for (std::size_t i = 0; i < R; ++i) {
      vx(i, 0) = 0.0;
      vx(i, nx) = 0.0;
      vy(i, 0) = sw * vy(i, 1);
      vy(i, nx + 1) = se * vy(i, nx);
    }
  }

  if (bc.periodic_y()) {
    wrap_periodic(vx, g, false, true);
    wrap_periodic(vy, g, false, true);
  } else {
    const double sn = mirror_sign(bc.north.vx), ss = mirror_sign(bc.south.vx);
    for (std::size_t j = 0; j < C; ++j) {
      vy(0, j) = 0.0;
      vy(ny, j) = 0.0;
      vx(0, j) = sn * vx(1, j);
      vx(ny + 1, j) = ss * vx(ny, j);
    }
  }
}

Scaling unit_scaling(double t0, double x0, double eta0) {
  if (!(t0 > 0.0) || !(x0 > 0.0) || !(eta0 > 0.0))
    throw InvalidArgument("scaling inputs must be positive");
  Scaling s;
  s.T0 = t0;
  s.L0 = x0;
  s.M0 = eta0 * x0 * t0;
  s.rho0 = s.M0 / (x0 * x0 * x0);
  s.g0 = x0 / (t0 * t0);
  return s;
}

}  // namespace mic
