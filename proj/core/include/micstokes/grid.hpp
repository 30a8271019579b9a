#pragma once

#include <array>
#include <string>
#include <vector>

#include "micstokes/field.hpp"

namespace mic {

// Staggered positions within a cell. Basic nodes sit on cell corners, vx
// nodes are shifted up by dy/2, vy nodes left by dx/2, pressure nodes both.
enum class Stagger { Basic, Pressure, Vx, Vy };

std::string to_string(Stagger s);
Stagger stagger_from_string(const std::string& s);

/// Uniform staggered grid. nx, ny count cells; every field array has
/// (ny + 2) x (nx + 2) entries so that each staggered quantity gets one
/// boundary/ghost layer on every side.
struct Grid {
  int nx = 0;
  int ny = 0;
  double xsize = 0.0;
  double ysize = 0.0;
  double dx = 0.0;
  double dy = 0.0;
  double x0 = 0.0;  // global position of basic column 0
  double y0 = 0.0;
  std::vector<double> x;  // basic node x, length nx + 1
  std::vector<double> y;  // basic node y, length ny + 1

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(ny) + 2; }
  [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(nx) + 2; }
  [[nodiscard]] Field2D make_field(double v = 0.0) const { return Field2D(rows(), cols(), v); }

  // Offset of column/row 0 of a staggered array relative to (x0, y0).
  [[nodiscard]] double x_offset(Stagger s) const noexcept;
  [[nodiscard]] double y_offset(Stagger s) const noexcept;
  [[nodiscard]] double node_x(Stagger s, long j) const noexcept { return x0 + x_offset(s) + j * dx; }
  [[nodiscard]] double node_y(Stagger s, long i) const noexcept { return y0 + y_offset(s) + i * dy; }

  // Coordinate vectors over the full padded array for a staggered role.
  [[nodiscard]] std::vector<double> col_coords(Stagger s) const;
  [[nodiscard]] std::vector<double> row_coords(Stagger s) const;

  // Index windows.
  [[nodiscard]] IndexBox vx_unknowns() const noexcept { return {1, ny, 1, nx - 1}; }
  [[nodiscard]] IndexBox vy_unknowns() const noexcept { return {1, ny - 1, 1, nx}; }
  [[nodiscard]] IndexBox p_physical() const noexcept { return {1, ny, 1, nx}; }
  [[nodiscard]] IndexBox basic_physical() const noexcept { return {0, ny, 0, nx}; }
  [[nodiscard]] IndexBox physical(Stagger s) const noexcept;
};

Grid make_uniform_grid(int nx, int ny, double xsize, double ysize, double x0 = 0.0, double y0 = 0.0);

enum class BcKind { NoSlip, FreeSlip, Periodic };

std::string to_string(BcKind k);
BcKind bc_kind_from_string(const std::string& s);

struct SideBc {
  BcKind vx = BcKind::FreeSlip;
  BcKind vy = BcKind::FreeSlip;
  friend bool operator==(const SideBc&, const SideBc&) = default;
};

struct BcSpec {
  SideBc west, east, north, south;

  [[nodiscard]] bool periodic_x() const noexcept { return west.vx == BcKind::Periodic; }
  [[nodiscard]] bool periodic_y() const noexcept { return north.vx == BcKind::Periodic; }
  [[nodiscard]] bool any_periodic() const noexcept { return periodic_x() || periodic_y(); }
  // Throws InvalidArgument when periodic tags are unpaired or mixed per side.
  void validate() const;

  static BcSpec all(BcKind k);
  friend bool operator==(const BcSpec&, const BcSpec&) = default;
};

struct FieldSet {
  Field2D vx, vy, p;
  Field2D etab, etap;
  Field2D rho;

  static FieldSet allocate(const Grid& g);
};

// Writes wall, mirror and periodic values into the boundary layers of vx and
// vy. Ghost layers (vx column nx+1, vy row ny+1) are written only by
// periodic wrap.
void apply_velocity_bc(Field2D& vx, Field2D& vy, const Grid& g, const BcSpec& bc);
inline void apply_velocity_bc(FieldSet& f, const Grid& g, const BcSpec& bc) {
  apply_velocity_bc(f.vx, f.vy, g, bc);
}

// Periodic copy of a scalar array (any stagger) across wrapped axes.
void wrap_periodic(Field2D& a, const Grid& g, bool px, bool py);

struct Scaling {
  double T0 = 1.0, L0 = 1.0, M0 = 1.0, rho0 = 1.0, g0 = 1.0;
  [[nodiscard]] double eta0() const noexcept { return M0 / (L0 * T0); }
};

Scaling unit_scaling(double t0, double x0, double eta0);

}  // namespace mic
