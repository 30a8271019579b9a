#include "micstokes/markers.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "micstokes/errors.hpp"

namespace mic {

BilinearWeights bilinear_weights(double rx, double ry, double dx, double dy) {
  if (!(rx >= 0.0 && rx <= dx && ry >= 0.0 && ry <= dy))
    throw InvalidArgument("bilinear offset outside the cell");
  const double tx = rx / dx, ty = ry / dy;
  return {(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty};
}

bool MarkerPool::has_property(const std::string& name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

std::size_t MarkerPool::property_index(const std::string& name) const {
  auto it = std::find(names_.begin(), names_.end(), name);
  if (it == names_.end()) throw InvalidArgument("unknown marker property '" + name + "'");
  return static_cast<std::size_t>(it - names_.begin());
}

std::size_t MarkerPool::add_property(const std::string& name, double value) {
  if (has_property(name)) throw InvalidArgument("duplicate marker property '" + name + "'");
  names_.push_back(name);
  props_.emplace_back(size(), value);
  return props_.size() - 1;
}

std::vector<double>& MarkerPool::prop(const std::string& name) { return props_[property_index(name)]; }
const std::vector<double>& MarkerPool::prop(const std::string& name) const {
  return props_[property_index(name)];
}

void MarkerPool::push_back(double xm, double ym, const double* values) {
  x.push_back(xm);
  y.push_back(ym);
  for (std::size_t k = 0; k < props_.size(); ++k) props_[k].push_back(values ? values[k] : 0.0);
}

void MarkerPool::reserve(std::size_t n) {
  x.reserve(n);
  y.reserve(n);
  for (auto& p : props_) p.reserve(n);
}

void MarkerPool::shrink_to_fit() {
  x.shrink_to_fit();
  y.shrink_to_fit();
  for (auto& p : props_) p.shrink_to_fit();
}

void MarkerPool::compact(const std::vector<std::uint8_t>& keep) {
  std::size_t w = 0;
  for (std::size_t m = 0; m < size(); ++m) {
    if (!keep[m]) continue;
    x[w] = x[m];
    y[w] = y[m];
    for (auto& p : props_) p[w] = p[m];
    ++w;
  }
  x.resize(w);
  y.resize(w);
  for (auto& p : props_) p.resize(w);
}

void MarkerPool::clear() {
  x.clear();
  y.clear();
  for (auto& p : props_) p.clear();
}

MarkerPool MarkerPool::empty_like() const {
  MarkerPool p;
  for (const auto& n : names_) p.add_property(n);
  return p;
}

void MarkerPool::pack(std::size_t m, std::vector<double>& out) const {
  out.push_back(x[m]);
  out.push_back(y[m]);
  for (const auto& p : props_) out.push_back(p[m]);
}

void MarkerPool::unpack_append(const double* rec, std::size_t count) {
  const std::size_t s = stride();
  for (std::size_t r = 0; r < count; ++r) push_back(rec[r * s], rec[r * s + 1], rec + r * s + 2);
}

NodeFrame node_frame(const Grid& g, Stagger s) {
  NodeFrame f;
  f.ox = g.node_x(s, 0);
  f.oy = g.node_y(s, 0);
  f.dx = g.dx;
  f.dy = g.dy;
  f.i_lo = 0;
  f.j_lo = 0;
  f.i_hi = (s == Stagger::Vx || s == Stagger::Pressure) ? g.ny + 1 : g.ny;
  f.j_hi = (s == Stagger::Vy || s == Stagger::Pressure) ? g.nx + 1 : g.nx;
  return f;
}

bool locate(const NodeFrame& f, double x, double y, CellLoc& out) {
  const double sx = x - f.ox, sy = y - f.oy;
  if (!(sx >= f.j_lo * f.dx && sx <= f.j_hi * f.dx && sy >= f.i_lo * f.dy && sy <= f.i_hi * f.dy))
    return false;
  long gj = static_cast<long>(std::floor(sx / f.dx));
  long gi = static_cast<long>(std::floor(sy / f.dy));
  gj = std::clamp(gj, f.j_lo, f.j_hi - 1);
  gi = std::clamp(gi, f.i_lo, f.i_hi - 1);
  out.gj = gj;
  out.gi = gi;
  out.rx = std::clamp(sx - gj * f.dx, 0.0, f.dx);
  out.ry = std::clamp(sy - gi * f.dy, 0.0, f.dy);
  return true;
}

void accumulate_markers(const MarkerPool& pool, const std::vector<double>& phi, const NodeFrame& f,
                        Field2D& val, Field2D& wt) {
  for (std::size_t m = 0; m < pool.size(); ++m) {
    CellLoc c;
    if (!locate(f, pool.x[m], pool.y[m], c))
      throw OutOfDomain("marker " + std::to_string(m) + " outside interpolation coverage", m);
    const BilinearWeights w = bilinear_weights(c.rx, c.ry, f.dx, f.dy);
    const std::size_t i = static_cast<std::size_t>(c.gi - f.row_off);
    const std::size_t j = static_cast<std::size_t>(c.gj - f.col_off);
    const double v = phi[m];
    val(i, j) += w.w00 * v;
    wt(i, j) += w.w00;
    val(i, j + 1) += w.w01 * v;
    wt(i, j + 1) += w.w01;
    val(i + 1, j) += w.w10 * v;
    wt(i + 1, j) += w.w10;
    val(i + 1, j + 1) += w.w11 * v;
    wt(i + 1, j + 1) += w.w11;
  }
}

GridInterp normalize_accumulated(Field2D val, Field2D wt, const NodeFrame& f) {
  GridInterp out;
  out.empty.assign(val.size(), 1);
  for (long gi = f.i_lo; gi <= f.i_hi; ++gi) {
    for (long gj = f.j_lo; gj <= f.j_hi; ++gj) {
      const std::size_t i = gi - f.row_off, j = gj - f.col_off;
      if (wt(i, j) > 0.0) {
        val(i, j) /= wt(i, j);
        out.empty[i * val.cols() + j] = 0;
      } else {
        val(i, j) = 0.0;
      }
    }
  }
  for (auto e : out.empty) out.empty_count += e;
  // entries outside the frame window are not nodes of this role
  for (std::size_t i = 0; i < val.rows(); ++i)
    for (std::size_t j = 0; j < val.cols(); ++j) {
      const long gi = static_cast<long>(i) + f.row_off, gj = static_cast<long>(j) + f.col_off;
      if (gi < f.i_lo || gi > f.i_hi || gj < f.j_lo || gj > f.j_hi) {
        if (out.empty[i * val.cols() + j]) --out.empty_count;
        out.empty[i * val.cols() + j] = 0;
      }
    }
  out.value = std::move(val);
  out.weight = std::move(wt);
  return out;
}

namespace {

void fold_periodic(Field2D& a, const Grid& g, bool px, bool py) {
  const std::size_t nx = g.nx, ny = g.ny;
  if (px) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
      a(i, nx) += a(i, 0);
      a(i, 1) += a(i, nx + 1);
    }
  }
  if (py) {
    for (std::size_t j = 0; j < a.cols(); ++j) {
      a(ny, j) += a(0, j);
      a(1, j) += a(ny + 1, j);
    }
  }
}

}  // namespace

GridInterp markers_to_grid(const MarkerPool& pool, const std::string& prop, Stagger role, const Grid& g,
                           bool periodic_x, bool periodic_y) {
  NodeFrame f = node_frame(g, role);
  Field2D val = g.make_field(), wt = g.make_field();
  accumulate_markers(pool, pool.prop(prop), f, val, wt);
  if (periodic_x || periodic_y) {
    fold_periodic(val, g, periodic_x, periodic_y);
    fold_periodic(wt, g, periodic_x, periodic_y);
    wrap_periodic(val, g, periodic_x, periodic_y);
    wrap_periodic(wt, g, periodic_x, periodic_y);
    if (periodic_x) f.j_hi = g.nx + 1;
    if (periodic_y) f.i_hi = g.ny + 1;
  }
  return normalize_accumulated(std::move(val), std::move(wt), f);
}

namespace {

inline double eval_bilinear(const Field2D& a, const NodeFrame& f, const CellLoc& c) {
  const BilinearWeights w = bilinear_weights(c.rx, c.ry, f.dx, f.dy);
  const std::size_t i = static_cast<std::size_t>(c.gi - f.row_off);
  const std::size_t j = static_cast<std::size_t>(c.gj - f.col_off);
  return w.w00 * a(i, j) + w.w01 * a(i, j + 1) + w.w10 * a(i + 1, j) + w.w11 * a(i + 1, j + 1);
}

}  // namespace

std::vector<double> grid_to_markers(const MarkerPool& pool, const Field2D& field, const NodeFrame& f) {
  std::vector<double> out(pool.size());
  for (std::size_t m = 0; m < pool.size(); ++m) {
    CellLoc c;
    if (!locate(f, pool.x[m], pool.y[m], c))
      throw OutOfDomain("marker " + std::to_string(m) + " outside grid coverage", m);
    out[m] = eval_bilinear(field, f, c);
  }
  return out;
}

std::vector<double> grid_to_markers(const MarkerPool& pool, const Field2D& field, Stagger role, const Grid& g) {
  return grid_to_markers(pool, field, node_frame(g, role));
}

void TimeStepPolicy::validate() const {
  if (!(cfl_fraction > 0.0 && cfl_fraction < 1.0)) throw InvalidArgument("cfl fraction must lie in (0, 1)");
  if (!(max_dt > 0.0)) throw InvalidArgument("max_dt must be positive");
}

double compute_timestep(const Field2D& vx, const Field2D& vy, const Grid& g, const TimeStepPolicy& policy) {
  double mx = 0.0, my = 0.0;
  for (int i = 0; i <= g.ny + 1; ++i)
    for (int j = 0; j <= g.nx; ++j) mx = std::max(mx, std::abs(vx(i, j)));
  for (int i = 0; i <= g.ny; ++i)
    for (int j = 0; j <= g.nx + 1; ++j) my = std::max(my, std::abs(vy(i, j)));
  double limit = policy.max_dt;
  if (mx > 0.0) limit = std::min(limit, policy.cfl_fraction * g.dx / mx);
  if (my > 0.0) limit = std::min(limit, policy.cfl_fraction * g.dy / my);
  return limit;
}

VelocityField VelocityField::single(const Field2D& vx, const Field2D& vy, const Grid& g, bool px, bool py) {
  VelocityField v;
  v.vx = &vx;
  v.vy = &vy;
  v.fvx = node_frame(g, Stagger::Vx);
  v.fvy = node_frame(g, Stagger::Vy);
  v.periodic_x = px;
  v.periodic_y = py;
  v.xmin = g.x0;
  v.xmax = g.x0 + g.xsize;
  v.ymin = g.y0;
  v.ymax = g.y0 + g.ysize;
  return v;
}

bool VelocityField::sample(double x, double y, double& u, double& v) const {
  CellLoc a, b;
  if (!locate(fvx, x, y, a) || !locate(fvy, x, y, b)) return false;
  u = eval_bilinear(*vx, fvx, a);
  v = eval_bilinear(*vy, fvy, b);
  return true;
}

void VelocityField::wrap(double& x, double& y) const {
  if (periodic_x) {
    const double L = xmax - xmin;
    x = xmin + std::fmod(x - xmin, L);
    if (x < xmin) x += L;
    if (x >= xmax) x -= L;
  }
  if (periodic_y) {
    const double L = ymax - ymin;
    y = ymin + std::fmod(y - ymin, L);
    if (y < ymin) y += L;
    if (y >= ymax) y -= L;
  }
}

bool VelocityField::inside(double x, double y) const {
  return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
}

std::string to_string(Integrator k) {
  switch (k) {
    case Integrator::Euler: return "euler";
    case Integrator::Heun: return "heun";
    case Integrator::Rk4: return "rk4";
    case Integrator::Lpi2: return "lpi2";
    case Integrator::Lpi3: return "lpi3";
  }
  return "?";
}

Integrator integrator_from_string(const std::string& s) {
  if (s == "euler") return Integrator::Euler;
  if (s == "heun") return Integrator::Heun;
  if (s == "rk4") return Integrator::Rk4;
  if (s == "lpi2" || s == "lpi") return Integrator::Lpi2;
  if (s == "lpi3") return Integrator::Lpi3;
  throw InvalidArgument("unknown integrator '" + s + "'");
}

namespace {

// Velocity at a (possibly intermediate) position; wraps periodic axes and
// reports escapes from non-periodic ones.
void stage_velocity(const VelocityField& v, double x, double y, std::size_t m, double& u, double& w) {
  v.wrap(x, y);
  if (!v.sample(x, y, u, w))
    throw OutOfDomain("marker " + std::to_string(m) + " left the domain during a stage", m);
}

void finish(const VelocityField& v, MarkerPool& pool, std::size_t m, double x, double y, bool allow_outbound) {
  v.wrap(x, y);
  if (!allow_outbound && !v.inside(x, y))
    throw OutOfDomain("marker " + std::to_string(m) + " left the domain", m);
  pool.x[m] = x;
  pool.y[m] = y;
}

}  // namespace

void advect_euler(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound) {
  for (std::size_t m = 0; m < pool.size(); ++m) {
    double u, w;
    stage_velocity(v, pool.x[m], pool.y[m], m, u, w);
    finish(v, pool, m, pool.x[m] + dt * u, pool.y[m] + dt * w, allow_outbound);
  }
}

void advect_heun(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound) {
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const double x = pool.x[m], y = pool.y[m];
    double u1, w1, u2, w2;
    stage_velocity(v, x, y, m, u1, w1);
    stage_velocity(v, x + dt * u1, y + dt * w1, m, u2, w2);
    finish(v, pool, m, x + 0.5 * dt * (u1 + u2), y + 0.5 * dt * (w1 + w2), allow_outbound);
  }
}

void advect_rk4(MarkerPool& pool, const VelocityField& v, double dt, bool allow_outbound) {
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const double x = pool.x[m], y = pool.y[m];
    double u1, w1, u2, w2, u3, w3, u4, w4;
    stage_velocity(v, x, y, m, u1, w1);
    stage_velocity(v, x + 0.5 * dt * u1, y + 0.5 * dt * w1, m, u2, w2);
    stage_velocity(v, x + 0.5 * dt * u2, y + 0.5 * dt * w2, m, u3, w3);
    stage_velocity(v, x + dt * u3, y + dt * w3, m, u4, w4);
    finish(v, pool, m, x + dt / 6.0 * (u1 + 2.0 * u2 + 2.0 * u3 + u4),
           y + dt / 6.0 * (w1 + 2.0 * w2 + 2.0 * w3 + w4), allow_outbound);
  }
}

namespace {

// Central differences over the frame window (one-sided at its edges).
Field2D diff_x(const Field2D& a, const NodeFrame& f) {
  Field2D d(a.rows(), a.cols());
  const long j0 = f.j_lo - f.col_off, j1 = f.j_hi - f.col_off;
  for (long i = f.i_lo - f.row_off; i <= f.i_hi - f.row_off; ++i) {
    for (long j = j0; j <= j1; ++j) {
      const long l = std::max(j0, j - 1), r = std::min(j1, j + 1);
      d(i, j) = (a(i, r) - a(i, l)) / ((r - l) * f.dx);
    }
  }
  return d;
}

Field2D diff_y(const Field2D& a, const NodeFrame& f) {
  Field2D d(a.rows(), a.cols());
  const long i0 = f.i_lo - f.row_off, i1 = f.i_hi - f.row_off;
  for (long i = i0; i <= i1; ++i) {
    const long t = std::max(i0, i - 1), b = std::min(i1, i + 1);
    for (long j = f.j_lo - f.col_off; j <= f.j_hi - f.col_off; ++j)
      d(i, j) = (a(b, j) - a(t, j)) / ((b - t) * f.dy);
  }
  return d;
}

double eval_at(const Field2D& a, const NodeFrame& f, double x, double y) {
  CellLoc c;
  locate(f, x, y, c);
  return eval_bilinear(a, f, c);
}

}  // namespace

void advect_lpi(MarkerPool& pool, const VelocityField& v, double dt, int order, bool allow_outbound) {
  if (order != 2 && order != 3) throw InvalidArgument("LPI order must be 2 or 3");
  const Field2D ux = diff_x(*v.vx, v.fvx), uy = diff_y(*v.vx, v.fvx);
  const Field2D vxd = diff_x(*v.vy, v.fvy), vyd = diff_y(*v.vy, v.fvy);
  Field2D uxx, uxy, uyy, vxx, vxy, vyy;
  if (order == 3) {
    uxx = diff_x(ux, v.fvx);
    uxy = diff_y(ux, v.fvx);
    uyy = diff_y(uy, v.fvx);
    vxx = diff_x(vxd, v.fvy);
    vxy = diff_y(vxd, v.fvy);
    vyy = diff_y(vyd, v.fvy);
  }
  const double h2 = 0.5 * dt * dt, h3 = dt * dt * dt / 6.0;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    double x = pool.x[m], y = pool.y[m];
    double u, w;
    stage_velocity(v, x, y, m, u, w);
    v.wrap(x, y);
    const double a = eval_at(ux, v.fvx, x, y), b = eval_at(uy, v.fvx, x, y);
    const double c = eval_at(vxd, v.fvy, x, y), d = eval_at(vyd, v.fvy, x, y);
    double nx = pool.x[m] + dt * u + h2 * (a * u + b * w);
    double ny = pool.y[m] + dt * w + h2 * (c * u + d * w);
    if (order == 3) {
      const double hu = eval_at(uxx, v.fvx, x, y) * u * u + 2.0 * eval_at(uxy, v.fvx, x, y) * u * w +
                        eval_at(uyy, v.fvx, x, y) * w * w;
      const double hv = eval_at(vxx, v.fvy, x, y) * u * u + 2.0 * eval_at(vxy, v.fvy, x, y) * u * w +
                        eval_at(vyy, v.fvy, x, y) * w * w;
      nx += h3 * hu;
      ny += h3 * hv;
    }
    finish(v, pool, m, nx, ny, allow_outbound);
  }
}

void advect(MarkerPool& pool, const VelocityField& v, double dt, Integrator k, bool allow_outbound) {
  switch (k) {
    case Integrator::Euler: advect_euler(pool, v, dt, allow_outbound); break;
    case Integrator::Heun: advect_heun(pool, v, dt, allow_outbound); break;
    case Integrator::Rk4: advect_rk4(pool, v, dt, allow_outbound); break;
    case Integrator::Lpi2: advect_lpi(pool, v, dt, 2, allow_outbound); break;
    case Integrator::Lpi3: advect_lpi(pool, v, dt, 3, allow_outbound); break;
  }
}

MarkerPool seed_markers(const Grid& g, int per_cell, double jitter, std::uint64_t seed) {
  if (per_cell < 1) throw InvalidArgument("markers per cell must be >= 1");
  if (jitter < 0.0 || jitter >= 1.0) throw InvalidArgument("jitter must lie in [0, 1)");
  MarkerPool pool;
  const std::size_t n = static_cast<std::size_t>(g.nx) * g.ny * per_cell * per_cell;
  pool.reserve(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-0.5, 0.5);
  const double sx = g.dx / per_cell, sy = g.dy / per_cell;
  for (int ci = 0; ci < g.ny; ++ci)
    for (int a = 0; a < per_cell; ++a)
      for (int cj = 0; cj < g.nx; ++cj)
        for (int b = 0; b < per_cell; ++b) {
          double x = g.x0 + cj * g.dx + (b + 0.5) * sx;
          double y = g.y0 + ci * g.dy + (a + 0.5) * sy;
          if (jitter > 0.0) {
            x += jitter * U(rng) * sx;
            y += jitter * U(rng) * sy;
          }
          pool.push_back(x, y, nullptr);
        }
  return pool;
}

}  // namespace mic
