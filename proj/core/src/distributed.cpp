#include "micstokes/distributed.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <thread>

namespace mic {

namespace {

void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xffu));
}

std::uint64_t get_le(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(p[k]) << (8 * k);
  return v;
}

std::string edge(int src, int dst, std::uint32_t tag) {
  return "rank " + std::to_string(src) + " -> rank " + std::to_string(dst) + " (tag " + std::to_string(tag) + ")";
}

}  // namespace

std::vector<std::uint8_t> encode_envelope(std::uint32_t tag, std::span<const double> payload) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 8 * payload.size());
  put_le(out, tag, 4);
  put_le(out, payload.size(), 8);
  for (double d : payload) put_le(out, std::bit_cast<std::uint64_t>(d), 8);
  return out;
}

std::vector<double> decode_envelope(std::span<const std::uint8_t> bytes, std::uint32_t& tag) {
  if (bytes.size() < 12) throw CommunicationError("truncated envelope header");
  tag = static_cast<std::uint32_t>(get_le(bytes.data(), 4));
  const std::uint64_t n = get_le(bytes.data() + 4, 8);
  if (bytes.size() != 12 + 8 * n)
    throw CommunicationError("envelope length " + std::to_string(bytes.size()) + " does not match count " +
                             std::to_string(n));
  std::vector<double> out(n);
  for (std::uint64_t k = 0; k < n; ++k) out[k] = std::bit_cast<double>(get_le(bytes.data() + 12 + 8 * k, 8));
  return out;
}

Transport::Transport(int nranks, std::chrono::milliseconds timeout)
    : n_(nranks), timeout_(timeout), stats_(static_cast<std::size_t>(std::max(nranks, 0))) {
  if (nranks <= 0) throw InvalidConfiguration("transport needs at least one rank");
  for (int r = 0; r < nranks; ++r) boxes_.push_back(std::make_unique<Box>());
}

void Transport::send(int src, int dst, std::uint32_t tag, std::span<const double> payload) {
  if (dst < 0 || dst >= n_ || src < 0 || src >= n_) throw CommunicationError("bad endpoint " + edge(src, dst, tag));
  if (aborted_) throw CommunicationError("transport aborted on send " + edge(src, dst, tag));
  auto bytes = encode_envelope(tag, payload);
  {
    std::lock_guard lk(stats_mu_);
    auto& s = stats_[src];
    ++s.messages;
    s.bytes += bytes.size();
    if (tag == tags::markers) ++s.marker_messages;
    if (tag == tags::counts) ++s.count_messages;
  }
  Box& b = *boxes_[dst];
  {
    std::lock_guard lk(b.mu);
    b.q[{src, tag}].push_back(std::move(bytes));
  }
  b.cv.notify_all();
}

std::vector<double> Transport::recv(int dst, int src, std::uint32_t tag) {
  Box& b = *boxes_[dst];
  std::unique_lock lk(b.mu);
  const auto key = std::make_pair(src, tag);
  const bool ok = b.cv.wait_for(lk, timeout_, [&] {
    if (aborted_) return true;
    auto it = b.q.find(key);
    return it != b.q.end() && !it->second.empty();
  });
  if (aborted_) throw CommunicationError("transport aborted while waiting on " + edge(src, dst, tag));
  if (!ok) throw CommunicationError("timed out waiting on " + edge(src, dst, tag));
  auto& dq = b.q[key];
  auto bytes = std::move(dq.front());
  dq.pop_front();
  lk.unlock();
  std::uint32_t got = 0;
  auto out = decode_envelope(bytes, got);
  if (got != tag) throw CommunicationError("tag mismatch on " + edge(src, dst, tag));
  return out;
}

std::vector<std::uint64_t> Transport::alltoall_counts(int rank, const std::vector<std::uint64_t>& counts) {
  if (static_cast<int>(counts.size()) != n_) throw InvalidArgument("alltoall_counts needs one count per rank");
  for (int d = 0; d < n_; ++d) {
    const double v = static_cast<double>(counts[d]);
    send(rank, d, tags::counts, std::span<const double>(&v, 1));
  }
  std::vector<std::uint64_t> in(n_);
  for (int s = 0; s < n_; ++s) {
    auto m = recv(rank, s, tags::counts);
    if (m.size() != 1) throw CommunicationError("malformed count message " + edge(s, rank, tags::counts));
    in[s] = static_cast<std::uint64_t>(m[0]);
  }
  return in;
}

void Transport::abort() {
  aborted_ = true;
  for (auto& b : boxes_) {
    std::lock_guard lk(b->mu);
    b->cv.notify_all();
  }
}

TransportStats Transport::stats(int rank) const {
  std::lock_guard lk(stats_mu_);
  return stats_.at(rank);
}

void Transport::reset_stats() {
  std::lock_guard lk(stats_mu_);
  std::fill(stats_.begin(), stats_.end(), TransportStats{});
}

const char* dir_name(int d) {
  static const char* names[8] = {"N", "S", "E", "W", "NE", "NW", "SE", "SW"};
  return (d >= 0 && d < 8) ? names[d] : "?";
}

std::vector<RankTopology> build_topology(int px, int py, bool periodic_x, bool periodic_y, int nranks) {
  if (px <= 0 || py <= 0) throw InvalidConfiguration("rank grid extents must be positive");
  if (px * py != nranks)
    throw InvalidConfiguration("rank grid " + std::to_string(px) + "x" + std::to_string(py) +
                               " does not match " + std::to_string(nranks) + " ranks");
  std::vector<RankTopology> out;
  out.reserve(nranks);
  for (int cy = 0; cy < py; ++cy) {
    for (int cx = 0; cx < px; ++cx) {
      RankTopology t;
      t.px = px;
      t.py = py;
      t.periodic_x = periodic_x;
      t.periodic_y = periodic_y;
      t.cx = cx;
      t.cy = cy;
      t.rank = t.rank_of(cx, cy);
      for (int d = 0; d < 8; ++d) {
        int nxc = cx + kDirDx[d], nyc = cy + kDirDy[d];
        if (periodic_x) nxc = (nxc % px + px) % px;
        if (periodic_y) nyc = (nyc % py + py) % py;
        t.neighbor[d] = (nxc < 0 || nxc >= px || nyc < 0 || nyc >= py) ? -1 : t.rank_of(nxc, nyc);
      }
      out.push_back(t);
    }
  }
  return out;
}

long wrap_index(long k, long n) { return ((k - 1) % n + n) % n + 1; }

namespace {

struct AxisSlice {
  long g0, g1, l0, l1;
  double m0, m1;
};

AxisSlice slice_axis(int n, int p, int c, bool periodic, double origin, double h, const char* axis) {
  if (n % p != 0)
    throw InvalidConfiguration(std::string(axis) + " cell count " + std::to_string(n) + " is not divisible by " +
                               std::to_string(p) + " ranks");
  const long nl = n / p;
  if (nl < kHalo)
    throw InvalidConfiguration(std::string(axis) + " slices of " + std::to_string(nl) +
                               " cells are thinner than the halo");
  AxisSlice a{};
  if (periodic) {
    a.g0 = c * nl + 1;
    a.g1 = (c + 1) * nl;
    a.l0 = a.g0 - kHalo;
    a.l1 = a.g1 + kHalo;
    a.m0 = origin + c * nl * h;
    a.m1 = origin + (c + 1) * nl * h;
  } else {
    a.g0 = c * nl;
    a.g1 = (c == p - 1) ? n + 1 : (c + 1) * nl - 1;
    a.l0 = (c == 0) ? 0 : a.g0 - kHalo;
    a.l1 = (c == p - 1) ? n + 1 : a.g1 + kHalo;
    a.m0 = (c == 0) ? origin : origin + (c * nl - 1) * h;
    a.m1 = (c == p - 1) ? origin + n * h : origin + ((c + 1) * nl - 1) * h;
  }
  return a;
}

}  // namespace

NodeFrame Subdomain::frame(const Grid& g, Stagger s, bool periodic_x, bool periodic_y) const {
  NodeFrame base = node_frame(g, s);
  NodeFrame f = base;
  f.row_off = li0;
  f.col_off = lj0;
  f.i_lo = periodic_y ? li0 : std::max(li0, base.i_lo);
  f.i_hi = periodic_y ? li1 : std::min(li1, base.i_hi);
  f.j_lo = periodic_x ? lj0 : std::max(lj0, base.j_lo);
  f.j_hi = periodic_x ? lj1 : std::min(lj1, base.j_hi);
  return f;
}

std::vector<Subdomain> decompose(const Grid& g, const std::vector<RankTopology>& topo) {
  std::vector<Subdomain> out;
  out.reserve(topo.size());
  for (const auto& t : topo) {
    const AxisSlice ax = slice_axis(g.nx, t.px, t.cx, t.periodic_x, g.x0, g.dx, "x");
    const AxisSlice ay = slice_axis(g.ny, t.py, t.cy, t.periodic_y, g.y0, g.dy, "y");
    Subdomain s;
    s.rank = t.rank;
    s.gj0 = ax.g0;
    s.gj1 = ax.g1;
    s.lj0 = ax.l0;
    s.lj1 = ax.l1;
    s.gi0 = ay.g0;
    s.gi1 = ay.g1;
    s.li0 = ay.l0;
    s.li1 = ay.l1;
    s.nl_x = g.nx / t.px;
    s.nl_y = g.ny / t.py;
    s.xmin = ax.m0;
    s.xmax = ax.m1;
    s.ymin = ay.m0;
    s.ymax = ay.m1;
    out.push_back(s);
  }
  return out;
}

Field2D scatter_local(const Field2D& global, const Subdomain& sd, const Grid& g, bool px, bool py) {
  Field2D out = sd.make_local();
  for (long gi = sd.li0; gi <= sd.li1; ++gi) {
    const long si = py ? wrap_index(gi, g.ny) : gi;
    for (long gj = sd.lj0; gj <= sd.lj1; ++gj) {
      const long sj = px ? wrap_index(gj, g.nx) : gj;
      sd.at(out, gi, gj) = global(si, sj);
    }
  }
  return out;
}

namespace {

int owner_axis(double pos, double origin, double h, int n, int p, bool periodic) {
  const double nl = static_cast<double>(n / p);
  const double s = periodic ? pos - origin : pos - origin + h;
  const long c = static_cast<long>(std::floor(s / (nl * h)));
  return static_cast<int>(std::clamp<long>(c, 0, p - 1));
}

std::vector<double> pack_block(const Field2D& a, const Subdomain& sd, long i0, long i1, long j0, long j1) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>((i1 - i0 + 1) * (j1 - j0 + 1)));
  for (long i = i0; i <= i1; ++i)
    for (long j = j0; j <= j1; ++j) out.push_back(sd.at(a, i, j));
  return out;
}

template <class Op>
void unpack_block(Field2D& a, const Subdomain& sd, long i0, long i1, long j0, long j1,
                  const std::vector<double>& buf, Op op) {
  const std::size_t need = static_cast<std::size_t>((i1 - i0 + 1) * (j1 - j0 + 1));
  if (buf.size() != need)
    throw CommunicationError("halo block size " + std::to_string(buf.size()) + " != " + std::to_string(need));
  std::size_t k = 0;
  for (long i = i0; i <= i1; ++i)
    for (long j = j0; j <= j1; ++j) op(sd.at(a, i, j), buf[k++]);
}

const auto replace_op = [](double& dst, double v) { dst = v; };
const auto add_op = [](double& dst, double v) { dst += v; };

}  // namespace

int marker_owner(double x, double y, const Grid& g, const RankTopology& t) {
  const int cx = owner_axis(x, g.x0, g.dx, g.nx, t.px, t.periodic_x);
  const int cy = owner_axis(y, g.y0, g.dy, g.ny, t.py, t.periodic_y);
  return t.rank_of(cx, cy);
}

void halo_exchange(Field2D& a, const Subdomain& sd, const RankTopology& t, Transport& tr) {
  const long H = kHalo;
  // x phase over owned rows
  if (t.has(E)) tr.send(t.rank, t.neighbor[E], tags::halo_x + E, pack_block(a, sd, sd.gi0, sd.gi1, sd.gj1 - H + 1, sd.gj1));
  if (t.has(W)) tr.send(t.rank, t.neighbor[W], tags::halo_x + W, pack_block(a, sd, sd.gi0, sd.gi1, sd.gj0, sd.gj0 + H - 1));
  if (t.has(W))
    unpack_block(a, sd, sd.gi0, sd.gi1, sd.gj0 - H, sd.gj0 - 1, tr.recv(t.rank, t.neighbor[W], tags::halo_x + E),
                 replace_op);
  if (t.has(E))
    unpack_block(a, sd, sd.gi0, sd.gi1, sd.gj1 + 1, sd.gj1 + H, tr.recv(t.rank, t.neighbor[E], tags::halo_x + W),
                 replace_op);
  // y phase over the full local width, which carries the corners
  if (t.has(S)) tr.send(t.rank, t.neighbor[S], tags::halo_y + S, pack_block(a, sd, sd.gi1 - H + 1, sd.gi1, sd.lj0, sd.lj1));
  if (t.has(N)) tr.send(t.rank, t.neighbor[N], tags::halo_y + N, pack_block(a, sd, sd.gi0, sd.gi0 + H - 1, sd.lj0, sd.lj1));
  if (t.has(N))
    unpack_block(a, sd, sd.gi0 - H, sd.gi0 - 1, sd.lj0, sd.lj1, tr.recv(t.rank, t.neighbor[N], tags::halo_y + S),
                 replace_op);
  if (t.has(S))
    unpack_block(a, sd, sd.gi1 + 1, sd.gi1 + H, sd.lj0, sd.lj1, tr.recv(t.rank, t.neighbor[S], tags::halo_y + N),
                 replace_op);
}

void halo_reduce(Field2D& a, const Subdomain& sd, const RankTopology& t, Transport& tr) {
  const long H = kHalo;
  // x phase over all local rows, so corner sums reach the row owner next
  if (t.has(E)) tr.send(t.rank, t.neighbor[E], tags::reduce_x + E, pack_block(a, sd, sd.li0, sd.li1, sd.gj1 + 1, sd.gj1 + H));
  if (t.has(W)) tr.send(t.rank, t.neighbor[W], tags::reduce_x + W, pack_block(a, sd, sd.li0, sd.li1, sd.gj0 - H, sd.gj0 - 1));
  if (t.has(W))
    unpack_block(a, sd, sd.li0, sd.li1, sd.gj0, sd.gj0 + H - 1, tr.recv(t.rank, t.neighbor[W], tags::reduce_x + E),
                 add_op);
  if (t.has(E))
    unpack_block(a, sd, sd.li0, sd.li1, sd.gj1 - H + 1, sd.gj1, tr.recv(t.rank, t.neighbor[E], tags::reduce_x + W),
                 add_op);
  // y phase over owned columns
  if (t.has(S)) tr.send(t.rank, t.neighbor[S], tags::reduce_y + S, pack_block(a, sd, sd.gi1 + 1, sd.gi1 + H, sd.gj0, sd.gj1));
  if (t.has(N)) tr.send(t.rank, t.neighbor[N], tags::reduce_y + N, pack_block(a, sd, sd.gi0 - H, sd.gi0 - 1, sd.gj0, sd.gj1));
  if (t.has(N))
    unpack_block(a, sd, sd.gi0, sd.gi0 + H - 1, sd.gj0, sd.gj1, tr.recv(t.rank, t.neighbor[N], tags::reduce_y + S),
                 add_op);
  if (t.has(S))
    unpack_block(a, sd, sd.gi1 - H + 1, sd.gi1, sd.gj0, sd.gj1, tr.recv(t.rank, t.neighbor[S], tags::reduce_y + N),
                 add_op);
}

GridInterp distributed_markers_to_grid(const MarkerPool& pool, const std::string& prop, Stagger role,
                                       const Grid& g, const Subdomain& sd, const RankTopology& t,
                                       Transport& tr) {
  const NodeFrame f = sd.frame(g, role, t.periodic_x, t.periodic_y);
  Field2D val = sd.make_local(), wt = sd.make_local();
  accumulate_markers(pool, pool.prop(prop), f, val, wt);
  halo_reduce(val, sd, t, tr);
  halo_reduce(wt, sd, t, tr);
  // owners now hold complete sums; refresh halos before normalising
  halo_exchange(val, sd, t, tr);
  halo_exchange(wt, sd, t, tr);
  return normalize_accumulated(std::move(val), std::move(wt), f);
}

namespace {

int step_toward(int from, int to, int p, bool periodic) {
  int d = to - from;
  if (periodic && p > 1) {
    d = ((d % p) + p) % p;
    if (d == p - 1) d = -1;
  }
  return d;
}

}  // namespace

MigrationStats migrate_markers(MarkerPool& pool, const Grid& g, const Subdomain& /*sd*/, const RankTopology& t,
                               Transport& tr, const MigrationPolicy& policy) {
  if (policy.growth < 1.0) throw InvalidArgument("migration growth factor must be >= 1");
  const int nr = t.px * t.py;
  const double X0 = g.x0, X1 = g.x0 + g.xsize, Y0 = g.y0, Y1 = g.y0 + g.ysize;
  std::vector<std::uint8_t> keep(pool.size(), 1);
  std::vector<std::vector<double>> out(nr);
  std::vector<std::uint64_t> counts(nr, 0);
  MigrationStats st;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const double x = pool.x[m], y = pool.y[m];
    if ((!t.periodic_x && (x < X0 || x > X1)) || (!t.periodic_y && (y < Y0 || y > Y1)))
      throw OutOfDomain("marker " + std::to_string(m) + " on rank " + std::to_string(t.rank) + " left the domain", m);
    const int o = marker_owner(x, y, g, t);
    if (o == t.rank) continue;
    const int ox = o % t.px, oy = o / t.px;
    const int ddx = step_toward(t.cx, ox, t.px, t.periodic_x);
    const int ddy = step_toward(t.cy, oy, t.py, t.periodic_y);
    if (std::abs(ddx) > 1 || std::abs(ddy) > 1)
      throw ConstraintViolation("marker " + std::to_string(m) + " on rank " + std::to_string(t.rank) +
                                " moved by (" + std::to_string(ddx) + ", " + std::to_string(ddy) +
                                ") ranks; markers may only cross into adjacent subdomains");
    pool.pack(m, out[o]);
    ++counts[o];
    keep[m] = 0;
    ++st.sent;
  }
  const auto incoming = tr.alltoall_counts(t.rank, counts);
  for (int d = 0; d < nr; ++d) {
    if (counts[d] == 0) continue;
    tr.send(t.rank, d, tags::markers, out[d]);
    ++st.payload_messages;
  }
  pool.compact(keep);
  std::size_t total_in = 0;
  for (auto c : incoming) total_in += c;
  const std::size_t final_size = pool.size() + total_in;
  pool.reserve(static_cast<std::size_t>(std::ceil(final_size * policy.growth)));
  const std::size_t stride = pool.stride();
  for (int s = 0; s < nr; ++s) {
    if (incoming[s] == 0) continue;
    auto buf = tr.recv(t.rank, s, tags::markers);
    if (buf.size() != incoming[s] * stride)
      throw CommunicationError("marker payload from rank " + std::to_string(s) + " to rank " +
                               std::to_string(t.rank) + " has " + std::to_string(buf.size()) +
                               " values, expected " + std::to_string(incoming[s] * stride));
    pool.unpack_append(buf.data(), incoming[s]);
    st.received += incoming[s];
  }
  if (policy.growth == 1.0) pool.shrink_to_fit();
  return st;
}

MigrationStats distributed_advect_step(MarkerPool& pool, const RankVelocity& v, double dt, const Grid& g,
                                       const Subdomain& sd, const RankTopology& t, Transport& tr,
                                       const MigrationPolicy& policy) {
  VelocityField vf;
  vf.vx = &v.vx;
  vf.vy = &v.vy;
  vf.fvx = sd.frame(g, Stagger::Vx, t.periodic_x, t.periodic_y);
  vf.fvy = sd.frame(g, Stagger::Vy, t.periodic_x, t.periodic_y);
  vf.periodic_x = t.periodic_x;
  vf.periodic_y = t.periodic_y;
  vf.xmin = g.x0;
  vf.xmax = g.x0 + g.xsize;
  vf.ymin = g.y0;
  vf.ymax = g.y0 + g.ysize;
  advect_euler(pool, vf, dt, true);
  return migrate_markers(pool, g, sd, t, tr, policy);
}

std::vector<MarkerPool> distribute_markers(const MarkerPool& pool, const Grid& g,
                                           const std::vector<RankTopology>& topo) {
  std::vector<MarkerPool> out(topo.size(), pool.empty_like());
  std::vector<double> rec;
  for (std::size_t m = 0; m < pool.size(); ++m) {
    const int o = marker_owner(pool.x[m], pool.y[m], g, topo.front());
    rec.clear();
    pool.pack(m, rec);
    out[o].unpack_append(rec.data(), 1);
  }
  return out;
}

void run_world(const Grid& g, int px, int py, bool periodic_x, bool periodic_y,
               const std::function<void(RankContext&)>& fn, Transport* transport) {
  const int nr = px * py;
  const auto topo = build_topology(px, py, periodic_x, periodic_y, nr);
  const auto subs = decompose(g, topo);
  std::unique_ptr<Transport> own;
  if (!transport) {
    own = std::make_unique<Transport>(nr);
    transport = own.get();
  } else if (transport->size() != nr) {
    throw InvalidConfiguration("transport size does not match the rank grid");
  }
  std::vector<std::exception_ptr> errs(nr);
  std::vector<std::thread> workers;
  workers.reserve(nr);
  for (int r = 0; r < nr; ++r) {
    workers.emplace_back([&, r] {
      try {
        RankContext ctx{r, topo[r], subs[r], *transport};
        fn(ctx);
      } catch (...) {
        errs[r] = std::current_exception();
        transport->abort();
      }
    });
  }
  for (auto& w : workers) w.join();
  // prefer the root cause over the aborts it triggered on other ranks
  std::exception_ptr first_comm;
  for (auto& e : errs) {
    if (!e) continue;
    try {
      std::rethrow_exception(e);
    } catch (const CommunicationError&) {
      if (!first_comm) first_comm = e;
    } catch (...) {
      throw;
    }
  }
  if (first_comm) std::rethrow_exception(first_comm);
}

}  // namespace mic
