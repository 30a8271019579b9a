#include "micstokes/run.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "micstokes/accelerators.hpp"
#include "micstokes/distributed.hpp"
#include "micstokes/scenarios.hpp"
#include "micstokes/uzawa.hpp"

namespace fs = std::filesystem;

namespace mic {

void write_file_atomic(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + " for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    if (!f) throw std::runtime_error("short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void append_le64(std::string& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xffu));
}

}  // namespace

void write_field_snapshot(const std::string& stem, const Field2D& a, Stagger s, const Grid& g, long step,
                          std::uint64_t seed) {
  std::string raw;
  raw.reserve(a.size() * 8);
  for (double v : a.flat()) append_le64(raw, std::bit_cast<std::uint64_t>(v));
  std::ostringstream h;
  h << "rows = " << a.rows() << "\n"
    << "cols = " << a.cols() << "\n"
    << "dtype = f64-le\n"
    << "stagger = " << to_string(s) << "\n"
    << "x_origin = " << g17(g.node_x(s, 0)) << "\n"
    << "y_origin = " << g17(g.node_y(s, 0)) << "\n"
    << "dx = " << g17(g.dx) << "\n"
    << "dy = " << g17(g.dy) << "\n"
    << "xsize = " << g17(g.xsize) << "\n"
    << "ysize = " << g17(g.ysize) << "\n"
    << "step = " << step << "\n"
    << "seed = " << seed << "\n";
  // data first: a visible header always refers to complete data
  write_file_atomic(stem + ".f64", raw);
  write_file_atomic(stem + ".hdr", h.str());
}

Field2D read_field_snapshot(const std::string& stem, SnapshotHeader* header) {
  const KeyValues kv = parse_config_file(stem + ".hdr");
  auto get = [&](const char* k) -> const std::string& {
    auto it = kv.find(k);
    if (it == kv.end()) throw ConfigError(stem + ".hdr", std::string("missing '") + k + "'");
    return it->second.value;
  };
  SnapshotHeader h;
  h.rows = std::stoul(get("rows"));
  h.cols = std::stoul(get("cols"));
  h.dtype = get("dtype");
  if (h.dtype != "f64-le") throw ConfigError(stem + ".hdr", "unsupported dtype " + h.dtype);
  h.stagger = stagger_from_string(get("stagger"));
  h.x_origin = std::stod(get("x_origin"));
  h.y_origin = std::stod(get("y_origin"));
  h.dx = std::stod(get("dx"));
  h.dy = std::stod(get("dy"));
  h.xsize = std::stod(get("xsize"));
  h.ysize = std::stod(get("ysize"));
  h.step = std::stol(get("step"));
  h.seed = std::stoull(get("seed"));
  std::ifstream f(stem + ".f64", std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + stem + ".f64");
  std::string raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (raw.size() != h.rows * h.cols * 8) throw std::runtime_error(stem + ".f64 size does not match its header");
  Field2D a(h.rows, h.cols);
  auto* out = a.data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    std::uint64_t v = 0;
    for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(raw[8 * k + b])) << (8 * b);
    out[k] = std::bit_cast<double>(v);
  }
  if (header) *header = h;
  return a;
}

std::string markers_csv(const MarkerPool& pool) {
  std::string out = "x,y";
  for (const auto& n : pool.property_names()) out += "," + n;
  out += "\n";
  for (std::size_t m = 0; m < pool.size(); ++m) {
    out += g17(pool.x[m]) + "," + g17(pool.y[m]);
    for (std::size_t k = 0; k < pool.property_count(); ++k) out += "," + g17(pool.prop(k)[m]);
    out += "\n";
  }
  return out;
}

std::uint64_t marker_multiset_hash(const MarkerPool& pool) {
  const std::size_t s = pool.stride();
  std::vector<std::vector<std::uint64_t>> recs(pool.size(), std::vector<std::uint64_t>(s));
  for (std::size_t m = 0; m < pool.size(); ++m) {
    recs[m][0] = std::bit_cast<std::uint64_t>(pool.x[m]);
    recs[m][1] = std::bit_cast<std::uint64_t>(pool.y[m]);
    for (std::size_t k = 0; k < pool.property_count(); ++k) recs[m][2 + k] = std::bit_cast<std::uint64_t>(pool.prop(k)[m]);
  }
  std::sort(recs.begin(), recs.end());
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& r : recs)
    for (std::uint64_t v : r)
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xffu;
        h *= 1099511628211ull;
      }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string step_tag(long step) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06ld", step);
  return buf;
}

std::uint64_t run_seed(const RunConfig& c) {
  return c.scenario == ScenarioKind::RotatingSlab ? c.slab.seed : c.sinker.seed;
}

void write_summary(const RunConfig& c, const RunSummary& s) {
  nlohmann::ordered_json j;
  j["status"] = s.status;
  j["scenario"] = to_string(c.scenario);
  j["mode"] = to_string(c.mode);
  j["seeds"] = {{"markers", run_seed(c)}, {"smoother", c.mg.smoother.ras_seed}};
  j["ranks"] = {c.px, c.py};
  j["steps_done"] = s.steps_done;
  j["cycles_total"] = s.cycles_total;
  j["last_cycles"] = s.last_cycles;
  j["converged"] = s.converged;
  j["initial_residual"] = s.initial_residual;
  if (s.final_record) {
    const auto& r = *s.final_record;
    j["final"] = {{"cycle", r.cycle}, {"theta", r.theta}, {"res_v", r.res_v}, {"res_p", r.res_p},
                  {"res_total", r.res_total}};
  } else {
    j["final"] = nullptr;
  }
  j["residual_log"] = s.residual_log;
  j["marker_count"] = s.marker_count;
  j["marker_hash"] = hex64(s.marker_hash);
  j["empty_nodes"] = s.empty_nodes;
  j["wall_time_s"] = s.wall_time;
  j["snapshots"] = s.snapshots;
  j["config"] = nlohmann::ordered_json::parse(config_to_json(c));
  write_file_atomic((fs::path(c.out_dir) / "summary.json").string(), j.dump(2) + "\n");
}

bool snapshot_due(const RunConfig& c, int step, int last) {
  if (c.snapshot_every <= 0) return step == last;
  return step % c.snapshot_every == 0 || step == last;
}

void snapshot_fields(const RunConfig& c, RunSummary& s, const Grid& g, int step,
                     const std::vector<std::pair<std::string, std::pair<const Field2D*, Stagger>>>& fields) {
  for (const auto& [name, fa] : fields) {
    const std::string stem = "step" + step_tag(step) + "_" + name;
    write_field_snapshot((fs::path(c.out_dir) / stem).string(), *fa.first, fa.second, g, step, run_seed(c));
    if (c.field_csv) {
      std::string csv;
      for (std::size_t i = 0; i < fa.first->rows(); ++i) {
        for (std::size_t j = 0; j < fa.first->cols(); ++j) {
          if (j) csv += ',';
          csv += g17((*fa.first)(i, j));
        }
        csv += '\n';
      }
      write_file_atomic((fs::path(c.out_dir) / (stem + ".csv")).string(), csv);
    }
    s.snapshots.push_back(stem);
  }
}

// One distributed Euler step for a global pool; returns the gathered pool
// in rank order.
MarkerPool distributed_step(const MarkerPool& pool, const Field2D& vx, const Field2D& vy, double dt, const Grid& g,
                            const RunConfig& c, const std::string& interp_prop, std::size_t* empty) {
  const auto topo = build_topology(c.px, c.py, false, false, c.px * c.py);
  auto pools = distribute_markers(pool, g, topo);
  std::vector<std::size_t> empties(pools.size(), 0);
  MigrationPolicy pol;
  pol.growth = c.migration_growth;
  run_world(g, c.px, c.py, false, false, [&](RankContext& ctx) {
    RankVelocity v{scatter_local(vx, ctx.sub, g, false, false), scatter_local(vy, ctx.sub, g, false, false)};
    halo_exchange(v.vx, ctx.sub, ctx.topo, ctx.transport);
    halo_exchange(v.vy, ctx.sub, ctx.topo, ctx.transport);
    auto& mine = pools[ctx.rank];
    if (!interp_prop.empty()) {
      const auto gi = distributed_markers_to_grid(mine, interp_prop, Stagger::Basic, g, ctx.sub, ctx.topo,
                                                  ctx.transport);
      std::size_t e = 0;
      for (long i = ctx.sub.gi0; i <= std::min<long>(ctx.sub.gi1, g.ny); ++i)
        for (long j = ctx.sub.gj0; j <= std::min<long>(ctx.sub.gj1, g.nx); ++j)
          e += gi.is_empty(i - ctx.sub.li0, j - ctx.sub.lj0);
      empties[ctx.rank] = e;
    }
    distributed_advect_step(mine, v, dt, g, ctx.sub, ctx.topo, ctx.transport, pol);
  });
  MarkerPool out = pool.empty_like();
  std::vector<double> rec;
  for (const auto& p : pools)
    for (std::size_t m = 0; m < p.size(); ++m) {
      rec.clear();
      p.pack(m, rec);
      out.unpack_append(rec.data(), 1);
    }
  if (empty) {
    *empty = 0;
    for (auto e : empties) *empty += e;
  }
  return out;
}

void finish_markers(const RunConfig& c, RunSummary& s, const MarkerPool& pool) {
  s.marker_count = pool.size();
  s.marker_hash = marker_multiset_hash(pool);
  if (c.marker_csv) {
    write_file_atomic((fs::path(c.out_dir) / "markers_final.csv").string(), markers_csv(pool));
    s.snapshots.push_back("markers_final.csv");
  }
}

void run_slab(const RunConfig& c, RunSummary& s, std::ostream& log) {
  SlabScenario sc = build_rotating_slab(c.slab);
  const Grid& g = sc.grid;
  const double dt = compute_timestep(sc.vx, sc.vy, g, c.timestep);
  log << "rotating slab " << g.nx << "x" << g.ny << ", " << sc.markers.size() << " markers, dt = " << g17(dt)
      << ", ranks " << c.px << "x" << c.py << "\n";
  const bool distributed = c.px * c.py > 1;
  if (distributed && c.integrator != Integrator::Euler)
    throw ConfigError("advect.integrator", "distributed advection supports euler only");
  snapshot_fields(c, s, g, 0, {{"vx", {&sc.vx, Stagger::Vx}}, {"vy", {&sc.vy, Stagger::Vy}}});
  const VelocityField vf = VelocityField::single(sc.vx, sc.vy, g);
  for (int step = 1; step <= c.steps; ++step) {
    if (distributed) {
      sc.markers = distributed_step(sc.markers, sc.vx, sc.vy, dt, g, c, "eta", &s.empty_nodes);
    } else {
      const auto gi = markers_to_grid(sc.markers, "eta", Stagger::Basic, g);
      s.empty_nodes = gi.empty_count;
      advect(sc.markers, vf, dt, c.integrator);
    }
    s.steps_done = step;
    if (snapshot_due(c, step, c.steps)) {
      const auto gi = markers_to_grid(sc.markers, "eta", Stagger::Basic, g);
      snapshot_fields(c, s, g, step, {{"eta", {&gi.value, Stagger::Basic}}});
    }
  }
  finish_markers(c, s, sc.markers);
}

void run_stokes(const RunConfig& c, RunSummary& s, std::ostream& log) {
  Scenario sc = build_sinker(c.sinker);
  StokesProblem& prob = sc.problem;
  const Grid& g = prob.grid;
  log << to_string(c.scenario) << " " << g.nx << "x" << g.ny << ", " << sc.markers.size() << " markers, mode "
      << to_string(c.mode) << "\n";
  if (c.px * c.py > 1 && c.integrator != Integrator::Euler && c.mode == RunMode::Full)
    throw ConfigError("advect.integrator", "distributed advection supports euler only");
  const int steps = c.mode == RunMode::Solve ? 1 : std::max(c.steps, 1);
  std::optional<StokesState> prev;
  for (int step = 1; step <= steps; ++step) {
    if (step > 1) markers_to_problem(sc.markers, prob);
    const std::string logname = c.mode == RunMode::Solve ? "residuals.csv" : "residuals_step" + step_tag(step) + ".csv";
    const std::string logpath = (fs::path(c.out_dir) / logname).string();
    s.residual_log = logname;
    SolveResult res;
    try {
      res = c.accel.kind == AccelKind::None ? solve(prob, c.uzawa, c.mg, prev ? &*prev : nullptr)
                                            : accelerated_solve(prob, c.uzawa, c.mg, c.accel, prev ? &*prev : nullptr);
    } catch (const DivergenceError& e) {
      write_file_atomic(logpath, e.report.csv());
      s.status = "diverged";
      s.last_cycles = e.report.cycles_used;
      s.cycles_total += e.report.cycles_used;
      s.initial_residual = e.report.initial_residual;
      if (!e.report.records.empty()) s.final_record = e.report.records.back();
      throw;
    }
    write_file_atomic(logpath, res.report.csv());
    s.cycles_total += res.report.cycles_used;
    s.last_cycles = res.report.cycles_used;
    s.converged = res.report.converged;
    s.initial_residual = res.report.initial_residual;
    s.final_record = res.report.records.empty() ? std::nullopt : std::optional(res.report.records.back());
    if (s.final_record)
      log << "step " << step << ": " << res.report.cycles_used << " cycles, res_total "
          << g17(s.final_record->res_total) << (res.report.converged ? " (converged)" : "") << "\n";
    if (snapshot_due(c, step, steps))
      snapshot_fields(c, s, g, step,
                      {{"vx", {&res.state.vx, Stagger::Vx}},
                       {"vy", {&res.state.vy, Stagger::Vy}},
                       {"p", {&res.state.p, Stagger::Pressure}},
                       {"etap", {&prob.etap, Stagger::Pressure}}});
    if (c.mode == RunMode::Full) {
      const double dt = compute_timestep(res.state.vx, res.state.vy, g, c.timestep);
      if (c.px * c.py > 1) {
        sc.markers = distributed_step(sc.markers, res.state.vx, res.state.vy, dt, g, c, "", nullptr);
      } else {
        advect(sc.markers, VelocityField::single(res.state.vx, res.state.vy, g), dt, c.integrator);
      }
    }
    prev = std::move(res.state);
    s.steps_done = step;
  }
  finish_markers(c, s, sc.markers);
}

}  // namespace

RunSummary run(const RunConfig& c, std::ostream& log) {
  fs::create_directories(c.out_dir);
  const auto t0 = std::chrono::steady_clock::now();
  RunSummary s;
  s.status = "ok";
  auto stamp = [&] { s.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    if (c.scenario == ScenarioKind::RotatingSlab)
      run_slab(c, s, log);
    else
      run_stokes(c, s, log);
  } catch (const DivergenceError&) {
    stamp();
    write_summary(c, s);
    throw;
  }
  stamp();
  write_summary(c, s);
  return s;
}

std::pair<int, int> parse_ranks(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) throw InvalidArgument("");
    std::size_t u1 = 0, u2 = 0;
    const int px = std::stoi(s.substr(0, x), &u1);
    const int py = std::stoi(s.substr(x + 1), &u2);
    if (u1 != x || u2 != s.size() - x - 1 || px < 1 || py < 1) throw InvalidArgument("");
    return {px, py};
  } catch (const std::exception&) {
    throw ConfigError("--ranks", "expected PXxPY with positive extents, got '" + s + "'");
  }
}

int run_from_file(const std::string& path, const CliOverrides& o, std::ostream& log, std::ostream& err) {
  RunConfig cfg;
  try {
    KeyValues kv = parse_config_file(path);
    for (const auto& a : o.set) apply_override(kv, a);
    if (o.mode) kv["run.mode"] = {*o.mode, 0};
    if (o.ranks) {
      kv["distributed.px"] = {std::to_string(o.ranks->first), 0};
      kv["distributed.py"] = {std::to_string(o.ranks->second), 0};
    }
    if (o.out) kv["output.dir"] = {*o.out, 0};
    if (o.seed) {
      const auto sc = kv.find("scenario");
      const bool slab = sc != kv.end() && sc->second.value == "rotating-slab";
      kv[slab ? "slab.seed" : "markers.seed"] = {std::to_string(*o.seed), 0};
    }
    cfg = run_config_from(kv);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_code::config;
  }
  try {
    const RunSummary s = run(cfg, log);
    log << "done: " << s.steps_done << " step(s), " << s.cycles_total << " cycle(s), " << g17(s.wall_time)
        << " s\n";
    return exit_code::ok;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_code::config;
  } catch (const InvalidConfiguration& e) {
    err << "config error: " << e.what() << "\n";
    return exit_code::config;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << "\n";
    return exit_code::divergence;
  } catch (const CommunicationError& e) {
    err << "communication error: " << e.what() << "\n";
    return exit_code::communication;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code::failure;
  }
}

}  // namespace mic
