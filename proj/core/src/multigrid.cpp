#include "micstokes/multigrid.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "micstokes/errors.hpp"
#include "micstokes/markers.hpp"
#include "stencil.hpp"

namespace mic {

std::string to_string(SmootherKind k) {
  switch (k) {
    case SmootherKind::Jacobi: return "jacobi";
    case SmootherKind::Rbgs: return "rbgs";
    case SmootherKind::Ras: return "ras";
    case SmootherKind::Mixed: return "mixed";
  }
  return "?";
}

SmootherKind smoother_from_string(const std::string& s) {
  if (s == "jacobi") return SmootherKind::Jacobi;
  if (s == "rbgs") return SmootherKind::Rbgs;
  if (s == "ras") return SmootherKind::Ras;
  if (s == "mixed") return SmootherKind::Mixed;
  throw InvalidArgument("unknown smoother '" + s + "'");
}

void SmootherConfig::validate() const {
  if (!(omega_v > 0.0 && omega_v <= 1.0)) throw InvalidArgument("omega_v must lie in (0, 1]");
  if (pre_iters < 0 || post_iters < 0) throw InvalidArgument("smoothing counts must be >= 0");
  if (ras_inner < 2 || ras_inner % 2 != 0) throw InvalidArgument("ras_inner must be even and >= 2");
  if (ras_tile_i < 1 || ras_tile_j < 1) throw InvalidArgument("ras tile must be positive");
  if (ras_overlap < 0) throw InvalidArgument("ras overlap must be >= 0");
  if (!(coarsening_growth >= 1.0)) throw InvalidArgument("coarsening growth must be >= 1");
}

void MgLevel::allocate(const Grid& g) {
  grid = g;
  etab = g.make_field(1.0);
  etap = g.make_field(1.0);
  vx = g.make_field();
  vy = g.make_field();
  rhs_x = g.make_field();
  rhs_y = g.make_field();
  res_x = g.make_field();
  res_y = g.make_field();
  tmp_x = g.make_field();
  tmp_y = g.make_field();
  refresh_diag();
}

void MgLevel::refresh_diag() { diag = diag_minus_L(etab, etap, grid); }

std::size_t bisect_bound(std::span<const double> x, double xt) {
  if (x.empty()) throw InvalidArgument("bisect_bound on empty vector");
  std::size_t l = 0, r = x.size() - 1;
  while (l < r) {
    const std::size_t m = l + (r - l) / 2;
    if (x[m] >= xt)
      r = m;
    else
      l = m + 1;
  }
  return l;
}

std::vector<int> level_node_counts(int fine_nodes, int levels, double factor) {
  if (levels < 1) throw InvalidConfiguration("hierarchy needs at least one level");
  std::vector<int> n(levels);
  for (int l = 0; l < levels; ++l)
    n[l] = static_cast<int>(std::lround(fine_nodes / std::pow(factor, l)));
  return n;
}

double auto_coarsening_factor(int fine_nodes, int levels, double target_nodes) {
  if (levels <= 1) return 1.0;
  return std::max(1.5, std::pow(fine_nodes / target_nodes, 1.0 / (levels - 1)));
}

TransferWindow transfer_window(const Grid& g, Stagger s, const IndexBox& box) {
  TransferWindow w;
  w.rows.coords = g.row_coords(s);
  w.cols.coords = g.col_coords(s);
  w.rows.lo = box.i0;
  w.rows.hi = box.i1;
  w.cols.lo = box.j0;
  w.cols.hi = box.j1;
  return w;
}

namespace {

struct CellPos {
  long k;
  double r, h;
};

// Cell [c[k], c[k+1]) of the window containing xt, clamped to the window.
CellPos locate_in_window(const AxisWindow& a, double xt) {
  const auto& c = a.coords;
  std::span<const double> sub(c.data() + a.lo, static_cast<std::size_t>(a.hi - a.lo + 1));
  long b = a.lo + static_cast<long>(bisect_bound(sub, xt));
  long k = (c[b] == xt) ? b : b - 1;
  k = std::clamp(k, a.lo, a.hi - 1);
  const double h = c[k + 1] - c[k];
  const double r = std::clamp(xt - c[k], 0.0, h);
  return {k, r, h};
}

// Contiguous fine index range per coarse cell.
struct CellRanges {
  std::vector<CellPos> pos;          // per fine index in window
  std::vector<long> begin, end;      // per coarse cell k (offset by coarse lo)
};

CellRanges assign(const AxisWindow& fine, const AxisWindow& coarse) {
  CellRanges cr;
  const long ncell = coarse.hi - coarse.lo;
  cr.begin.assign(ncell, 0);
  cr.end.assign(ncell, 0);
  for (long f = fine.lo; f <= fine.hi; ++f) cr.pos.push_back(locate_in_window(coarse, fine.coords[f]));
  for (long k = 0; k < ncell; ++k) {
    cr.begin[k] = cr.end[k] = fine.lo;
  }
  // positions are monotone in f, so each cell owns a contiguous run
  std::vector<bool> seen(ncell, false);
  for (long f = fine.lo; f <= fine.hi; ++f) {
    const long k = cr.pos[f - fine.lo].k - coarse.lo;
    if (!seen[k]) {
      seen[k] = true;
      cr.begin[k] = f;
    }
    cr.end[k] = f + 1;
  }
  return cr;
}

}  // namespace

void restrict_field(const Field2D& fine, const TransferWindow& fw, Field2D& coarse,
                    const TransferWindow& cw) {
  if (cw.rows.hi <= cw.rows.lo || cw.cols.hi <= cw.cols.lo)
    throw InvalidArgument("coarse window needs at least two nodes per axis");
  const CellRanges rr = assign(fw.rows, cw.rows);
  const CellRanges cc = assign(fw.cols, cw.cols);
  const std::size_t R = coarse.rows(), C = coarse.cols();
  std::array<Field2D, 4> val, wt;
  for (int s = 0; s < 4; ++s) {
    val[s] = Field2D(R, C);
    wt[s] = Field2D(R, C);
  }
  const long nci = cw.rows.hi - cw.rows.lo, ncj = cw.cols.hi - cw.cols.lo;
  for (int cy = 0; cy < 2; ++cy) {
    for (int cx = 0; cx < 2; ++cx) {
#pragma omp parallel for schedule(static) collapse(2)
      for (long ki = cy; ki < nci; ki += 2) {
        for (long kj = cx; kj < ncj; kj += 2) {
          const long ic = cw.rows.lo + ki, jc = cw.cols.lo + kj;
          for (long fi = rr.begin[ki]; fi < rr.end[ki]; ++fi) {
            const CellPos& py = rr.pos[fi - fw.rows.lo];
            for (long fj = cc.begin[kj]; fj < cc.end[kj]; ++fj) {
              const CellPos& px = cc.pos[fj - fw.cols.lo];
              const BilinearWeights w = bilinear_weights(px.r, py.r, px.h, py.h);
              const double v = fine(fi, fj);
              val[0](ic, jc) += w.w00 * v;
              wt[0](ic, jc) += w.w00;
              val[1](ic, jc + 1) += w.w01 * v;
              wt[1](ic, jc + 1) += w.w01;
              val[2](ic + 1, jc) += w.w10 * v;
              wt[2](ic + 1, jc) += w.w10;
              val[3](ic + 1, jc + 1) += w.w11 * v;
              wt[3](ic + 1, jc + 1) += w.w11;
            }
          }
        }
      }
    }
  }
  for (long i = cw.rows.lo; i <= cw.rows.hi; ++i) {
    for (long j = cw.cols.lo; j <= cw.cols.hi; ++j) {
      const double W = ((wt[0](i, j) + wt[1](i, j)) + wt[2](i, j)) + wt[3](i, j);
      const double V = ((val[0](i, j) + val[1](i, j)) + val[2](i, j)) + val[3](i, j);
      coarse(i, j) = W > 0.0 ? V / W : 0.0;
    }
  }
}

void prolong_field(const Field2D& coarse, const TransferWindow& cw_full, Field2D& fine,
                   const TransferWindow& fw, bool accumulate) {
  std::vector<CellPos> py, px;
  for (long i = fw.rows.lo; i <= fw.rows.hi; ++i) py.push_back(locate_in_window(cw_full.rows, fw.rows.coords[i]));
  for (long j = fw.cols.lo; j <= fw.cols.hi; ++j) px.push_back(locate_in_window(cw_full.cols, fw.cols.coords[j]));
  for (long i = fw.rows.lo; i <= fw.rows.hi; ++i) {
    const CellPos& a = py[i - fw.rows.lo];
    for (long j = fw.cols.lo; j <= fw.cols.hi; ++j) {
      const CellPos& b = px[j - fw.cols.lo];
      const BilinearWeights w = bilinear_weights(b.r, a.r, b.h, a.h);
      const double v = w.w00 * coarse(a.k, b.k) + w.w01 * coarse(a.k, b.k + 1) +
                       w.w10 * coarse(a.k + 1, b.k) + w.w11 * coarse(a.k + 1, b.k + 1);
      if (accumulate)
        fine(i, j) += v;
      else
        fine(i, j) = v;
    }
  }
}

void level_residual(MgLevel& lvl) {
  const Grid& g = lvl.grid;
  vx_momentum_apply(lvl.vx, lvl.vy, nullptr, lvl.etab, lvl.etap, g, lvl.res_x);
  vy_momentum_apply(lvl.vx, lvl.vy, nullptr, lvl.etab, lvl.etap, g, lvl.res_y);
  for (int i = 1; i <= g.ny; ++i)
    for (int j = 1; j <= g.nx - 1; ++j) lvl.res_x(i, j) = lvl.rhs_x(i, j) - lvl.res_x(i, j);
  for (int i = 1; i <= g.ny - 1; ++i)
    for (int j = 1; j <= g.nx; ++j) lvl.res_y(i, j) = lvl.rhs_y(i, j) - lvl.res_y(i, j);
}

void smooth_jacobi(MgLevel& lvl, const BcSpec& bc, int iters, double omega) {
  const Grid& g = lvl.grid;
  const detail::StencilConsts k(g);
  const int ny = g.ny, nx = g.nx;
  for (int it = 0; it < iters; ++it) {
    const Field2D& vx = lvl.vx;
    const Field2D& vy = lvl.vy;
#pragma omp parallel for schedule(static)
    for (int i = 1; i <= ny; ++i) {
      for (int j = 1; j <= nx - 1; ++j) {
        double c;
        const double Lv = detail::vx_point(vx, vy, lvl.etab, lvl.etap, k, i, j, c);
        lvl.tmp_x(i, j) = vx(i, j) + omega * (lvl.rhs_x(i, j) - Lv) / c;
      }
    }
#pragma omp parallel for schedule(static)
    for (int i = 1; i <= ny - 1; ++i) {
      for (int j = 1; j <= nx; ++j) {
        double c;
        const double Lv = detail::vy_point(vx, vy, lvl.etab, lvl.etap, k, i, j, c);
        lvl.tmp_y(i, j) = vy(i, j) + omega * (lvl.rhs_y(i, j) - Lv) / c;
      }
    }
    std::swap(lvl.vx, lvl.tmp_x);
    std::swap(lvl.vy, lvl.tmp_y);
    apply_velocity_bc(lvl.vx, lvl.vy, g, bc);
  }
}

void smooth_rbgs(MgLevel& lvl, const BcSpec& bc, int iters, double omega) {
  const Grid& g = lvl.grid;
  const detail::StencilConsts k(g);
  const int ny = g.ny, nx = g.nx;
  for (int it = 0; it < iters; ++it) {
    for (int colour = 0; colour < 2; ++colour) {
#pragma omp parallel for schedule(static)
      for (int i = 1; i <= ny; ++i) {
        for (int j = 1 + ((i + 1 + colour) & 1); j <= nx - 1; j += 2) {
          double c;
          const double Lv = detail::vx_point(lvl.vx, lvl.vy, lvl.etab, lvl.etap, k, i, j, c);
          lvl.vx(i, j) += omega * (lvl.rhs_x(i, j) - Lv) / c;
        }
      }
      apply_velocity_bc(lvl.vx, lvl.vy, g, bc);
    }
    for (int colour = 0; colour < 2; ++colour) {
#pragma omp parallel for schedule(static)
      for (int i = 1; i <= ny - 1; ++i) {
        for (int j = 1 + ((i + 1 + colour) & 1); j <= nx; j += 2) {
          double c;
          const double Lv = detail::vy_point(lvl.vx, lvl.vy, lvl.etab, lvl.etap, k, i, j, c);
          lvl.vy(i, j) += omega * (lvl.rhs_y(i, j) - Lv) / c;
        }
      }
      apply_velocity_bc(lvl.vx, lvl.vy, g, bc);
    }
  }
}

int ras_outer_count(int n_max, int inner) {
  if (n_max <= 0) return 0;
  int n = (n_max + inner - 1) / inner;
  if (n % 2 != 0) ++n;
  return n;
}

namespace {

// Window into a global array with shifted indices.
struct LocalView {
  Field2D a;
  long i0 = 0, j0 = 0;
  double operator()(long i, long j) const { return a(i - i0, j - j0); }
  double& at(long i, long j) { return a(i - i0, j - j0); }
};

struct Span1 {
  long lo, hi;
};

// Blocks of length t covering [1, n], shifted by s.
std::vector<Span1> blocks(long n, long t, long s) {
  std::vector<Span1> b;
  if (t >= n) {
    b.push_back({1, n});
    return b;
  }
  for (long start = 1 + s - t; start <= n; start += t) {
    const long lo = std::max(1L, start), hi = std::min(n, start + t - 1);
    if (lo <= hi) b.push_back({lo, hi});
  }
  return b;
}

// Wall boundary values for the part of a tile window that touches the
// physical boundary, in the same order as apply_velocity_bc.
void local_wall_bc(LocalView& vx, LocalView& vy, const Grid& g, const BcSpec& bc, long r0, long r1,
                   long c0, long c1) {
  const long nx = g.nx, ny = g.ny;
  const double sw = bc.west.vy == BcKind::NoSlip ? -1.0 : 1.0;
  const double se = bc.east.vy == BcKind::NoSlip ? -1.0 : 1.0;
  const double sn = bc.north.vx == BcKind::NoSlip ? -1.0 : 1.0;
  const double ss = bc.south.vx == BcKind::NoSlip ? -1.0 : 1.0;
  for (long i = r0; i <= r1; ++i) {
    if (c0 <= 0 && c1 >= 1) {
      vx.at(i, 0) = 0.0;
      vy.at(i, 0) = sw * vy(i, 1);
    }
    if (c0 <= nx && c1 >= nx) vx.at(i, nx) = 0.0;
    if (c0 <= nx && c1 >= nx + 1) vy.at(i, nx + 1) = se * vy(i, nx);
  }
  for (long j = c0; j <= c1; ++j) {
    if (r0 <= 0 && r1 >= 1) {
      vy.at(0, j) = 0.0;
      vx.at(0, j) = sn * vx(1, j);
    }
    if (r0 <= ny && r1 >= ny) vy.at(ny, j) = 0.0;
    if (r0 <= ny && r1 >= ny + 1) vx.at(ny + 1, j) = ss * vx(ny, j);
  }
}

void copy_window(const Field2D& src, LocalView& dst, long r0, long r1, long c0, long c1) {
  dst.a = Field2D(static_cast<std::size_t>(r1 - r0 + 1), static_cast<std::size_t>(c1 - c0 + 1));
  dst.i0 = r0;
  dst.j0 = c0;
  for (long i = r0; i <= r1; ++i)
    for (long j = c0; j <= c1; ++j) dst.a(i - r0, j - c0) = src(i, j);
}

}  // namespace

void smooth_ras(MgLevel& lvl, const BcSpec& bc, int n_max, const SmootherConfig& cfg,
                std::mt19937_64& rng) {
  const Grid& g = lvl.grid;
  const detail::StencilConsts k(g);
  const long ny = g.ny, nx = g.nx;
  const long R = static_cast<long>(g.rows()), C = static_cast<long>(g.cols());
  const int outer = ras_outer_count(n_max, cfg.ras_inner);
  const long ov = cfg.ras_overlap;
  const double omega = cfg.omega_v;

  for (int o = 0; o < outer; ++o) {
    const long si = static_cast<long>(rng() % static_cast<std::uint64_t>(cfg.ras_tile_i));
    const long sj = static_cast<long>(rng() % static_cast<std::uint64_t>(cfg.ras_tile_j));
    const auto bi = blocks(ny, cfg.ras_tile_i, si);
    const auto bj = blocks(nx, cfg.ras_tile_j, sj);
    lvl.tmp_x = lvl.vx;
    lvl.tmp_y = lvl.vy;
    const Field2D& snap_x = lvl.vx;
    const Field2D& snap_y = lvl.vy;

#pragma omp parallel for schedule(dynamic) collapse(2)
    for (std::size_t ti = 0; ti < bi.size(); ++ti) {
      for (std::size_t tj = 0; tj < bj.size(); ++tj) {
        const Span1 B = bi[ti], Cc = bj[tj];
        // updated region (owned block plus overlap) and frozen stencil ring
        const long ui0 = std::max(1L, B.lo - ov), ui1 = std::min(ny, B.hi + ov);
        const long uj0 = std::max(1L, Cc.lo - ov), uj1 = std::min(nx, Cc.hi + ov);
        const long r0 = std::max(0L, ui0 - 1), r1 = std::min(R - 1, ui1 + 1);
        const long c0 = std::max(0L, uj0 - 1), c1 = std::min(C - 1, uj1 + 1);
        LocalView ax, ay, bx, by;
        copy_window(snap_x, ax, r0, r1, c0, c1);
        copy_window(snap_y, ay, r0, r1, c0, c1);
        const long vxi1 = std::min(ui1, ny), vxj1 = std::min(uj1, nx - 1);
        const long vyi1 = std::min(ui1, ny - 1), vyj1 = std::min(uj1, nx);
        for (int s = 0; s < cfg.ras_inner; ++s) {
          bx = ax;
          by = ay;
          for (long i = ui0; i <= vxi1; ++i) {
            for (long j = uj0; j <= vxj1; ++j) {
              double c;
              const double Lv = detail::vx_point(ax, ay, lvl.etab, lvl.etap, k, i, j, c);
              bx.at(i, j) = ax(i, j) + omega * (lvl.rhs_x(i, j) - Lv) / c;
            }
          }
          for (long i = ui0; i <= vyi1; ++i) {
            for (long j = uj0; j <= vyj1; ++j) {
              double c;
              const double Lv = detail::vy_point(ax, ay, lvl.etab, lvl.etap, k, i, j, c);
              by.at(i, j) = ay(i, j) + omega * (lvl.rhs_y(i, j) - Lv) / c;
            }
          }
          local_wall_bc(bx, by, g, bc, r0, r1, c0, c1);
          std::swap(ax, bx);
          std::swap(ay, by);
        }
        for (long i = B.lo; i <= std::min(B.hi, ny); ++i)
          for (long j = Cc.lo; j <= std::min(Cc.hi, nx - 1); ++j) lvl.tmp_x(i, j) = ax(i, j);
        for (long i = B.lo; i <= std::min(B.hi, ny - 1); ++i)
          for (long j = Cc.lo; j <= std::min(Cc.hi, nx); ++j) lvl.tmp_y(i, j) = ay(i, j);
      }
    }
    std::swap(lvl.vx, lvl.tmp_x);
    std::swap(lvl.vy, lvl.tmp_y);
    apply_velocity_bc(lvl.vx, lvl.vy, g, bc);
  }
}

MgHierarchy::MgHierarchy(const Grid& fine, const Field2D& etab, const Field2D& etap, int levels,
                         double factor, const BcSpec& bc, SmootherConfig cfg)
    : bc_(bc), cfg_(cfg), rng_(cfg.ras_seed) {
  cfg_.validate();
  bc_.validate();
  if (bc_.any_periodic()) throw InvalidConfiguration("multigrid supports wall boundaries only");
  if (levels < 1) throw InvalidConfiguration("hierarchy needs at least one level");
  const int nodes_x = fine.nx + 1, nodes_y = fine.ny + 1;
  factor_ = factor > 0.0 ? factor : auto_coarsening_factor(std::min(nodes_x, nodes_y), levels);
  if (levels > 1 && factor_ < 1.0) throw InvalidConfiguration("coarsening factor must be >= 1");
  const auto cx = level_node_counts(nodes_x, levels, factor_);
  const auto cy = level_node_counts(nodes_y, levels, factor_);
  if (cx.back() < 4 || cy.back() < 4)
    throw InvalidConfiguration("coarsest multigrid level below 4x4 nodes (" +
                               std::to_string(cx.back()) + "x" + std::to_string(cy.back()) + ")");
  levels_.resize(levels);
  for (int l = 0; l < levels; ++l) {
    if (l > 0 && (cx[l] >= cx[l - 1] || cy[l] >= cy[l - 1]))
      throw InvalidConfiguration("coarsening factor too small for the requested levels");
    Grid g = l == 0 ? fine : make_uniform_grid(cx[l] - 1, cy[l] - 1, fine.xsize, fine.ysize, fine.x0, fine.y0);
    levels_[l].allocate(g);
  }
  set_viscosity(etab, etap);
}

void MgHierarchy::set_viscosity(const Field2D& etab, const Field2D& etap) {
  levels_[0].etab = etab;
  levels_[0].etap = etap;
  levels_[0].refresh_diag();
  for (std::size_t l = 1; l < levels_.size(); ++l) {
    const Grid& gf = levels_[l - 1].grid;
    const Grid& gc = levels_[l].grid;
    restrict_field(levels_[l - 1].etab, transfer_window(gf, Stagger::Basic, gf.basic_physical()),
                   levels_[l].etab, transfer_window(gc, Stagger::Basic, gc.basic_physical()));
    restrict_field(levels_[l - 1].etap, transfer_window(gf, Stagger::Pressure, gf.p_physical()),
                   levels_[l].etap, transfer_window(gc, Stagger::Pressure, gc.p_physical()));
    levels_[l].refresh_diag();
  }
}

int MgHierarchy::pre_iters(std::size_t l) const {
  return static_cast<int>(std::lround(cfg_.pre_iters * std::pow(cfg_.coarsening_growth, static_cast<double>(l))));
}

int MgHierarchy::post_iters(std::size_t l) const {
  return static_cast<int>(std::lround(cfg_.post_iters * std::pow(cfg_.coarsening_growth, static_cast<double>(l))));
}

int MgHierarchy::coarse_iters() const {
  const std::size_t last = levels_.size() - 1;
  return std::max(cfg_.coarse_multiplier * (cfg_.pre_iters + cfg_.post_iters),
                  pre_iters(last) + post_iters(last));
}

void MgHierarchy::smooth(std::size_t l, int iters) {
  MgLevel& lvl = levels_[l];
  switch (cfg_.kind) {
    case SmootherKind::Jacobi: smooth_jacobi(lvl, bc_, iters, cfg_.omega_v); break;
    case SmootherKind::Rbgs: smooth_rbgs(lvl, bc_, iters, cfg_.omega_v); break;
    case SmootherKind::Ras: smooth_ras(lvl, bc_, iters, cfg_, rng_); break;
    case SmootherKind::Mixed:
      if (l == 0)
        smooth_jacobi(lvl, bc_, iters, cfg_.omega_v);
      else
        smooth_ras(lvl, bc_, iters, cfg_, rng_);
      break;
  }
}

void MgHierarchy::cycle(std::size_t l) {
  MgLevel& lvl = levels_[l];
  if (l + 1 == levels_.size()) {
    smooth_jacobi(lvl, bc_, coarse_iters(), cfg_.omega_v);
    return;
  }
  smooth(l, pre_iters(l));
  level_residual(lvl);
  MgLevel& nxt = levels_[l + 1];
  const Grid& gf = lvl.grid;
  const Grid& gc = nxt.grid;
  restrict_field(lvl.res_x, transfer_window(gf, Stagger::Vx, gf.vx_unknowns()), nxt.rhs_x,
                 transfer_window(gc, Stagger::Vx, gc.vx_unknowns()));
  restrict_field(lvl.res_y, transfer_window(gf, Stagger::Vy, gf.vy_unknowns()), nxt.rhs_y,
                 transfer_window(gc, Stagger::Vy, gc.vy_unknowns()));
  nxt.vx.fill(0.0);
  nxt.vy.fill(0.0);
  cycle(l + 1);
  apply_velocity_bc(nxt.vx, nxt.vy, gc, bc_);
  // coarse arrays including boundary layers but not the ghost layer
  const IndexBox vxc{0, gc.ny + 1, 0, gc.nx}, vyc{0, gc.ny, 0, gc.nx + 1};
  prolong_field(nxt.vx, transfer_window(gc, Stagger::Vx, vxc), lvl.vx,
                transfer_window(gf, Stagger::Vx, gf.vx_unknowns()), true);
  prolong_field(nxt.vy, transfer_window(gc, Stagger::Vy, vyc), lvl.vy,
                transfer_window(gf, Stagger::Vy, gf.vy_unknowns()), true);
  apply_velocity_bc(lvl.vx, lvl.vy, gf, bc_);
  smooth(l, post_iters(l));
}

void MgHierarchy::v_cycle() {
  apply_velocity_bc(levels_[0].vx, levels_[0].vy, levels_[0].grid, bc_);
  cycle(0);
}

}  // namespace mic
