#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"
#include "micstokes/stokes.hpp"

namespace mic {

enum class SmootherKind { Jacobi, Rbgs, Ras, Mixed };

std::string to_string(SmootherKind k);
SmootherKind smoother_from_string(const std::string& s);

struct SmootherConfig {
  SmootherKind kind = SmootherKind::Jacobi;
  double omega_v = 0.3;
  int pre_iters = 5;
  int post_iters = 5;
  int ras_tile_i = 32;
  int ras_tile_j = 32;
  int ras_inner = 4;
  int ras_overlap = 1;
  std::uint64_t ras_seed = 12345;
  double coarsening_growth = 2.5;
  // Coarsest-level sweeps = max(coarse_multiplier * (pre + post), scaled count).
  int coarse_multiplier = 4;

  void validate() const;
};

struct MgLevel {
  Grid grid;
  Field2D etab, etap;
  DiagMinusL diag;
  Field2D vx, vy;
  Field2D rhs_x, rhs_y;
  Field2D res_x, res_y;
  Field2D tmp_x, tmp_y;

  void allocate(const Grid& g);
  void refresh_diag();
};

/// Smallest index i with x[i] >= xt; the last index when xt exceeds every
/// entry. Throws InvalidArgument on an empty vector.
std::size_t bisect_bound(std::span<const double> x, double xt);

// Node counts per axis for each level: round(nodes / factor^l).
std::vector<int> level_node_counts(int fine_nodes, int levels, double factor);
// Factor that brings the smaller axis to roughly 30 nodes at the coarsest level.
double auto_coarsening_factor(int fine_nodes, int levels, double target_nodes = 30.0);

/// Coordinate description of a staggered array window used by the transfers.
struct AxisWindow {
  std::vector<double> coords;  // coordinate per array index (full padded array)
  long lo = 0, hi = -1;        // window of valid indices, inclusive
};

struct TransferWindow {
  AxisWindow rows;
  AxisWindow cols;
};

TransferWindow transfer_window(const Grid& g, Stagger s, const IndexBox& box);

// Bilinear scatter of fine window values into coarse window nodes with weight
// normalisation. Each fine node belongs to exactly one coarse cell; cells are
// processed in four colour sweeps. Per-node sums use a fixed corner order so
// the result does not depend on the sweep order.
void restrict_field(const Field2D& fine, const TransferWindow& fw, Field2D& coarse,
                    const TransferWindow& cw);

// Bilinear interpolation of a coarse array (full padded coordinates) onto
// the fine window; adds into `fine` when accumulate is set.
void prolong_field(const Field2D& coarse, const TransferWindow& cw_full, Field2D& fine,
                   const TransferWindow& fw, bool accumulate);

// Smoothers operate on level.vx/vy against level.rhs_x/rhs_y and re-apply
// boundary conditions after every sweep.
void smooth_jacobi(MgLevel& lvl, const BcSpec& bc, int iters, double omega);
void smooth_rbgs(MgLevel& lvl, const BcSpec& bc, int iters, double omega);
// Runs ceil(n_max / ras_inner) outer iterations (padded to even), each with
// ras_inner local sweeps per tile.
void smooth_ras(MgLevel& lvl, const BcSpec& bc, int n_max, const SmootherConfig& cfg,
                std::mt19937_64& rng);
int ras_outer_count(int n_max, int inner);

// r = rhs - L v at unknowns of the level.
void level_residual(MgLevel& lvl);

class MgHierarchy {
 public:
  MgHierarchy() = default;
  // factor <= 0 selects the automatic factor.
  MgHierarchy(const Grid& fine, const Field2D& etab, const Field2D& etap, int levels, double factor,
              const BcSpec& bc, SmootherConfig cfg);

  [[nodiscard]] std::size_t size() const noexcept { return levels_.size(); }
  MgLevel& level(std::size_t l) { return levels_[l]; }
  [[nodiscard]] const MgLevel& level(std::size_t l) const { return levels_[l]; }
  MgLevel& finest() { return levels_.front(); }
  [[nodiscard]] const SmootherConfig& config() const noexcept { return cfg_; }
  [[nodiscard]] const BcSpec& bc() const noexcept { return bc_; }
  [[nodiscard]] double factor() const noexcept { return factor_; }

  // Replaces the finest viscosities and re-restricts them to every level.
  void set_viscosity(const Field2D& etab, const Field2D& etap);

  // One V-cycle on the finest level, improving finest().vx/vy for the rhs
  // stored in finest().rhs_x/rhs_y.
  void v_cycle();

  [[nodiscard]] int pre_iters(std::size_t l) const;
  [[nodiscard]] int post_iters(std::size_t l) const;
  [[nodiscard]] int coarse_iters() const;
  void reseed(std::uint64_t seed) { rng_.seed(seed); }

 private:
  void cycle(std::size_t l);
  void smooth(std::size_t l, int iters);

  std::vector<MgLevel> levels_;
  BcSpec bc_;
  SmootherConfig cfg_;
  double factor_ = 1.0;
  std::mt19937_64 rng_;
};

}  // namespace mic
