#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"

namespace mic {

struct BilinearWeights {
  double w00, w01, w10, w11;  // first index: row (y), second: column (x)
};

// Weights of the four nodes around an offset (rx, ry) inside a dx x dy cell.
// Throws InvalidArgument when the offset lies outside the cell.
BilinearWeights bilinear_weights(double rx, double ry, double dx, double dy);

/// Columnar marker storage. Coordinates are global.
class MarkerPool {
 public:
  std::vector<double> x, y;

  [[nodiscard]] std::size_t size() const noexcept { return x.size(); }
  [[nodiscard]] const std::vector<std::string>& property_names() const noexcept { return names_; }
  [[nodiscard]] bool has_property(const std::string& name) const;

  // Adds a property column filled with `value`; returns its column index.
  std::size_t add_property(const std::string& name, double value = 0.0);
  std::vector<double>& prop(const std::string& name);
  [[nodiscard]] const std::vector<double>& prop(const std::string& name) const;
  std::vector<double>& prop(std::size_t k) { return props_[k]; }
  [[nodiscard]] const std::vector<double>& prop(std::size_t k) const { return props_[k]; }
  [[nodiscard]] std::size_t property_count() const noexcept { return props_.size(); }
  [[nodiscard]] std::size_t property_index(const std::string& name) const;

  // Appends one marker; `values` holds one entry per property.
  void push_back(double xm, double ym, const double* values);
  void reserve(std::size_t n);
  void shrink_to_fit();
  // Keeps markers whose flag is nonzero, preserving order.
  void compact(const std::vector<std::uint8_t>& keep);
  void clear();
  // Empty pool with the same property columns.
  [[nodiscard]] MarkerPool empty_like() const;
  // Number of doubles per marker in packed form (x, y, properties).
  [[nodiscard]] std::size_t stride() const noexcept { return 2 + props_.size(); }
  void pack(std::size_t m, std::vector<double>& out) const;
  void unpack_append(const double* rec, std::size_t count);

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<double>> props_;
};

/// Maps global coordinates onto the node array of one staggered role.
/// Global node index (gi, gj) sits at (ox + gj*dx, oy + gi*dy) and lives at
/// array entry (gi - row_off, gj - col_off). Valid global indices are
/// [i_lo, i_hi] x [j_lo, j_hi].
struct NodeFrame {
  double ox = 0, oy = 0, dx = 1, dy = 1;
  long i_lo = 0, i_hi = 0, j_lo = 0, j_hi = 0;
  long row_off = 0, col_off = 0;
};

// Frame of a full single-domain array (boundary layers included, ghost
// layer excluded).
NodeFrame node_frame(const Grid& g, Stagger s);

struct CellLoc {
  long gi, gj;    // global index of the cell's top-left node
  double ry, rx;  // offsets inside the cell
};

// Cell containing (x, y). Returns false when outside the frame coverage.
bool locate(const NodeFrame& f, double x, double y, CellLoc& out);

struct GridInterp {
  Field2D value;
  Field2D weight;
  std::vector<std::uint8_t> empty;  // row-major, 1 where no marker contributed
  std::size_t empty_count = 0;
  [[nodiscard]] bool is_empty(std::size_t i, std::size_t j) const { return empty[i * value.cols() + j] != 0; }
};

// Weighted sums sum(w * phi) and sum(w) added into val / wt in marker order.
void accumulate_markers(const MarkerPool& pool, const std::vector<double>& phi, const NodeFrame& f,
                        Field2D& val, Field2D& wt);

// Divides val by wt inside the frame's valid window; builds the empty mask.
GridInterp normalize_accumulated(Field2D val, Field2D wt, const NodeFrame& f);

// Single-domain marker -> grid interpolation. Periodic axes fold the
// duplicated wrap columns/rows before normalising.
GridInterp markers_to_grid(const MarkerPool& pool, const std::string& prop, Stagger role, const Grid& g,
                           bool periodic_x = false, bool periodic_y = false);

// Four-term bilinear evaluation at every marker. Throws OutOfDomain with
// the marker index when a marker lies outside the frame coverage.
std::vector<double> grid_to_markers(const MarkerPool& pool, const Field2D& field, const NodeFrame& f);
std::vector<double> grid_to_markers(const MarkerPool& pool, const Field2D& field, Stagger role, const Grid& g);

struct TimeStepPolicy {
  double cfl_fraction = 0.5;
  double max_dt = 1e300;
  void validate() const;
};

double compute_timestep(const Field2D& vx, const Field2D& vy, const Grid& g, const TimeStepPolicy& policy);

/// Velocity field sampled by the integrators.
struct VelocityField {
  const Field2D* vx = nullptr;
  const Field2D* vy = nullptr;
  NodeFrame fvx, fvy;
  bool periodic_x = false, periodic_y = false;
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;  // global domain

  static VelocityField single(const Field2D& vx, const Field2D& vy, const Grid& g, bool px = false,
                              bool py = false);

  // Returns false when (x, y) lies outside the sampled coverage.
  bool sample(double x, double y, double& u, double& v) const;
  // Wraps (x, y) into the domain along periodic axes.
  void wrap(double& x, double& y) const;
  [[nodiscard]] bool inside(double x, double y) const;
};

enum class Integrator { Euler, Heun, Rk4, Lpi2, Lpi3 };
std::string to_string(Integrator k);
Integrator integrator_from_string(const std::string& s);

// One step for every marker. Properties are untouched. On non-periodic axes
// a marker (or intermediate stage) leaving the domain raises OutOfDomain
// unless allow_outbound is set, in which case the final position is kept.
void advect_euler(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound = false);
void advect_heun(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound = false);
void advect_rk4(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound = false);
// Local Taylor update with velocity derivatives from central differences.
void advect_lpi(MarkerPool& pool, const VelocityField& v, double dt, int order, bool allow_outbound = false);
void advect(MarkerPool& pool, const VelocityField& v, double dt, Integrator k, bool allow_outbound = false);

// m x m lattice per cell with optional uniform jitter (fraction of the sub-spacing).
MarkerPool seed_markers(const Grid& g, int per_cell, double jitter, std::uint64_t seed);

}  // namespace mic
