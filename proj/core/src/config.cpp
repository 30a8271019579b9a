#include "micstokes/config.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

namespace mic {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

KeyValues parse_config_text(const std::string& text, const std::string& source) {
  KeyValues kv;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    const std::string where = source + ":" + std::to_string(line);
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string val = trim(s.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where, "malformed key '" + key + "'");
    if (val.empty()) throw ConfigError(where, "empty value for '" + key + "'");
    if (kv.count(key))
      throw ConfigError(where, "duplicate key '" + key + "' (first set on line " + std::to_string(kv[key].line) + ")");
    kv[key] = {val, line};
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path, "cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

void apply_override(KeyValues& kv, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--set " + assignment, "expected key=value");
  const std::string key = trim(assignment.substr(0, eq));
  const std::string val = trim(assignment.substr(eq + 1));
  if (!valid_key(key)) throw ConfigError("--set " + assignment, "malformed key '" + key + "'");
  if (val.empty()) throw ConfigError("--set " + assignment, "empty value");
  kv[key] = {val, 0};
}

std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Sinker: return "sinker";
    case ScenarioKind::RotatingSlab: return "rotating-slab";
    case ScenarioKind::Custom: return "custom";
  }
  return "?";
}

std::string to_string(RunMode m) {
  switch (m) {
    case RunMode::Full: return "full";
    case RunMode::Solve: return "solve";
    case RunMode::Advect: return "advect";
  }
  return "?";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "full") return RunMode::Full;
  if (s == "solve") return RunMode::Solve;
  if (s == "advect") return RunMode::Advect;
  throw InvalidArgument("unknown mode '" + s + "' (expected full, solve or advect)");
}

std::string theta_schedule_to_string(const std::vector<ThetaStage>& s) {
  std::string out;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (k) out += ',';
    out += std::to_string(s[k].start_cycle) + ":" + fmt_double(s[k].theta);
  }
  return out;
}

std::vector<ThetaStage> theta_schedule_from_string(const std::string& s) {
  std::vector<ThetaStage> out;
  std::istringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    const auto c = item.find(':');
    if (c == std::string::npos) throw InvalidArgument("schedule entry '" + item + "' is not cycle:theta");
    ThetaStage st;
    try {
      std::size_t used = 0;
      st.start_cycle = std::stoi(item.substr(0, c), &used);
      if (used != c) throw InvalidArgument("");
      const std::string t = item.substr(c + 1);
      st.theta = std::stod(t, &used);
      if (used != t.size()) throw InvalidArgument("");
    } catch (const std::exception&) {
      throw InvalidArgument("schedule entry '" + item + "' is not cycle:theta");
    }
    out.push_back(st);
  }
  if (out.empty()) throw InvalidArgument("empty theta schedule");
  return out;
}

namespace {

struct Ctx {
  RunConfig& c;
  std::string where;
  const std::string& key;
};

int as_int(const Ctx& x, const std::string& v) {
  int out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw ConfigError(x.where, "'" + x.key + "' expects an integer, got '" + v + "'");
  return out;
}

std::uint64_t as_u64(const Ctx& x, const std::string& v) {
  std::uint64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc{} || r.ptr != v.data() + v.size())
    throw ConfigError(x.where, "'" + x.key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

double as_double(const Ctx& x, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError(x.where, "'" + x.key + "' expects a number, got '" + v + "'");
}

bool as_bool(const Ctx& x, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(x.where, "'" + x.key + "' expects true or false, got '" + v + "'");
}

template <class F>
auto guarded(const Ctx& x, F&& f) {
  try {
    return f();
  } catch (const InvalidArgument& e) {
    throw ConfigError(x.where, "'" + x.key + "': " + e.what());
  }
}

enum Applies : unsigned { kSinker = 1, kSlab = 2, kCustom = 4, kAll = 7, kCircle = kSinker | kCustom };

unsigned scenario_bit(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Sinker: return kSinker;
    case ScenarioKind::RotatingSlab: return kSlab;
    case ScenarioKind::Custom: return kCustom;
  }
  return 0;
}

struct KeyDef {
  const char* key;
  unsigned applies;
  unsigned required;  // scenarios for which the key must be present
  std::function<void(const Ctx&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

bool is_slab(const RunConfig& c) { return c.scenario == ScenarioKind::RotatingSlab; }

#define MIC_INT(expr) \
  [](const Ctx& x, const std::string& v) { auto& c = x.c; (void)c; expr = as_int(x, v); }, \
  [](const RunConfig& c) { return std::to_string(expr); }
#define MIC_DBL(expr) \
  [](const Ctx& x, const std::string& v) { auto& c = x.c; (void)c; expr = as_double(x, v); }, \
  [](const RunConfig& c) { return fmt_double(expr); }
#define MIC_U64(expr) \
  [](const Ctx& x, const std::string& v) { auto& c = x.c; (void)c; expr = as_u64(x, v); }, \
  [](const RunConfig& c) { return std::to_string(expr); }
#define MIC_BOOL(expr) \
  [](const Ctx& x, const std::string& v) { auto& c = x.c; (void)c; expr = as_bool(x, v); }, \
  [](const RunConfig& c) { return std::string((expr) ? "true" : "false"); }

const std::vector<KeyDef>& registry() {
  static const std::vector<KeyDef> defs = {
      {"run.mode", kAll, 0,
       [](const Ctx& x, const std::string& v) { x.c.mode = guarded(x, [&] { return run_mode_from_string(v); }); },
       [](const RunConfig& c) { return to_string(c.mode); }},
      {"run.steps", kAll, 0, MIC_INT(c.steps)},
      {"grid.nx", kCircle, kCircle, MIC_INT(c.sinker.nx)},
      {"grid.ny", kCircle, kCircle, MIC_INT(c.sinker.ny)},
      {"grid.xsize", kCircle, kCustom, MIC_DBL(c.sinker.xsize)},
      {"grid.ysize", kCircle, kCustom, MIC_DBL(c.sinker.ysize)},
      {"physics.eta_host", kCircle, kCustom, MIC_DBL(c.sinker.eta_host)},
      {"physics.eta_inclusion", kCircle, kCustom, MIC_DBL(c.sinker.eta_inclusion)},
      {"physics.rho_host", kCircle, kCustom, MIC_DBL(c.sinker.rho_host)},
      {"physics.rho_inclusion", kCircle, kCustom, MIC_DBL(c.sinker.rho_inclusion)},
      {"physics.radius", kCircle, kCustom, MIC_DBL(c.sinker.radius)},
      {"physics.g_y", kCircle, kCustom, MIC_DBL(c.sinker.g_y)},
      {"scaling.t0", kCircle, 0, MIC_DBL(c.sinker.t0)},
      {"scaling.x0", kCircle, 0, MIC_DBL(c.sinker.x0)},
      {"scaling.eta0", kCircle, 0, MIC_DBL(c.sinker.eta0)},
      {"markers.per_cell", kCircle, 0, MIC_INT(c.sinker.markers_per_cell)},
      {"markers.jitter", kCircle, 0, MIC_DBL(c.sinker.jitter)},
      {"markers.seed", kCircle, 0, MIC_U64(c.sinker.seed)},
      // rotating slab keeps its own geometry block
      {"slab.nx", kSlab, kSlab, MIC_INT(c.slab.nx)},
      {"slab.ny", kSlab, kSlab, MIC_INT(c.slab.ny)},
      {"slab.xsize", kSlab, 0, MIC_DBL(c.slab.xsize)},
      {"slab.ysize", kSlab, 0, MIC_DBL(c.slab.ysize)},
      {"slab.omega", kSlab, 0, MIC_DBL(c.slab.omega)},
      {"slab.eta_host", kSlab, 0, MIC_DBL(c.slab.eta_host)},
      {"slab.eta_slab", kSlab, 0, MIC_DBL(c.slab.eta_slab)},
      {"slab.x0", kSlab, 0, MIC_DBL(c.slab.slab_x0)},
      {"slab.x1", kSlab, 0, MIC_DBL(c.slab.slab_x1)},
      {"slab.y0", kSlab, 0, MIC_DBL(c.slab.slab_y0)},
      {"slab.y1", kSlab, 0, MIC_DBL(c.slab.slab_y1)},
      {"slab.markers_per_cell", kSlab, 0, MIC_INT(c.slab.markers_per_cell)},
      {"slab.jitter", kSlab, 0, MIC_DBL(c.slab.jitter)},
      {"slab.seed", kSlab, 0, MIC_U64(c.slab.seed)},
      {"solver.omega_p", kCircle, 0, MIC_DBL(c.uzawa.omega_p)},
      {"solver.max_cycles", kCircle, 0, MIC_INT(c.uzawa.max_cycles)},
      {"solver.vcycles", kCircle, 0, MIC_INT(c.uzawa.vcycles_per_step)},
      {"solver.tol", kCircle, 0, MIC_DBL(c.uzawa.tol)},
      {"solver.schedule", kCircle, 0,
       [](const Ctx& x, const std::string& v) {
         x.c.uzawa.schedule = guarded(x, [&] { return theta_schedule_from_string(v); });
       },
       [](const RunConfig& c) { return theta_schedule_to_string(c.uzawa.schedule); }},
      {"solver.log_every", kCircle, 0, MIC_INT(c.uzawa.log_every)},
      {"solver.divergence_factor", kCircle, 0, MIC_DBL(c.uzawa.divergence_factor)},
      {"mg.levels", kCircle, 0, MIC_INT(c.mg.levels)},
      {"mg.factor", kCircle, 0,
       [](const Ctx& x, const std::string& v) { x.c.mg.factor = (v == "auto") ? 0.0 : as_double(x, v); },
       [](const RunConfig& c) { return c.mg.factor <= 0 ? std::string("auto") : fmt_double(c.mg.factor); }},
      {"smoother.kind", kCircle, 0,
       [](const Ctx& x, const std::string& v) {
         x.c.mg.smoother.kind = guarded(x, [&] { return smoother_from_string(v); });
       },
       [](const RunConfig& c) { return to_string(c.mg.smoother.kind); }},
      {"smoother.omega_v", kCircle, 0, MIC_DBL(c.mg.smoother.omega_v)},
      {"smoother.pre", kCircle, 0, MIC_INT(c.mg.smoother.pre_iters)},
      {"smoother.post", kCircle, 0, MIC_INT(c.mg.smoother.post_iters)},
      {"smoother.tile_i", kCircle, 0, MIC_INT(c.mg.smoother.ras_tile_i)},
      {"smoother.tile_j", kCircle, 0, MIC_INT(c.mg.smoother.ras_tile_j)},
      {"smoother.ras_inner", kCircle, 0, MIC_INT(c.mg.smoother.ras_inner)},
      {"smoother.overlap", kCircle, 0, MIC_INT(c.mg.smoother.ras_overlap)},
      {"smoother.seed", kCircle, 0, MIC_U64(c.mg.smoother.ras_seed)},
      {"smoother.growth", kCircle, 0, MIC_DBL(c.mg.smoother.coarsening_growth)},
      {"smoother.coarse_multiplier", kCircle, 0, MIC_INT(c.mg.smoother.coarse_multiplier)},
      {"accel.kind", kCircle, 0,
       [](const Ctx& x, const std::string& v) { x.c.accel.kind = guarded(x, [&] { return accel_from_string(v); }); },
       [](const RunConfig& c) { return to_string(c.accel.kind); }},
      {"accel.gcr_restart", kCircle, 0, MIC_INT(c.accel.gcr_restart)},
      {"accel.anderson_depth", kCircle, 0, MIC_INT(c.accel.anderson_depth)},
      {"accel.anderson_beta", kCircle, 0, MIC_DBL(c.accel.anderson_beta)},
      {"advect.integrator", kAll, 0,
       [](const Ctx& x, const std::string& v) { x.c.integrator = guarded(x, [&] { return integrator_from_string(v); }); },
       [](const RunConfig& c) { return to_string(c.integrator); }},
      {"advect.cfl", kAll, 0, MIC_DBL(c.timestep.cfl_fraction)},
      {"advect.max_dt", kAll, 0, MIC_DBL(c.timestep.max_dt)},
      {"distributed.px", kAll, 0, MIC_INT(c.px)},
      {"distributed.py", kAll, 0, MIC_INT(c.py)},
      {"distributed.growth", kAll, 0, MIC_DBL(c.migration_growth)},
      {"output.dir", kAll, 0, [](const Ctx& x, const std::string& v) { x.c.out_dir = v; },
       [](const RunConfig& c) { return c.out_dir; }},
      {"output.snapshot_every", kAll, 0, MIC_INT(c.snapshot_every)},
      {"output.marker_csv", kAll, 0, MIC_BOOL(c.marker_csv)},
      {"output.field_csv", kAll, 0, MIC_BOOL(c.field_csv)},
  };
  return defs;
}

#undef MIC_INT
#undef MIC_DBL
#undef MIC_U64
#undef MIC_BOOL

std::string where_of(const std::string& key, const ConfigEntry& e) {
  return e.line > 0 ? "line " + std::to_string(e.line) + " (" + key + ")" : "override (" + key + ")";
}

void check(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key, msg);
}

}  // namespace

RunConfig run_config_from(const KeyValues& kv) {
  RunConfig c;
  const auto sc = kv.find("scenario");
  if (sc == kv.end()) throw ConfigError("scenario", "missing required key 'scenario'");
  const std::string& s = sc->second.value;
  if (s == "sinker") c.scenario = ScenarioKind::Sinker;
  else if (s == "rotating-slab") c.scenario = ScenarioKind::RotatingSlab;
  else if (s == "custom") c.scenario = ScenarioKind::Custom;
  else
    throw ConfigError(where_of("scenario", sc->second),
                      "unknown scenario '" + s + "' (expected sinker, rotating-slab or custom)");
  if (is_slab(c)) {
    c.mode = RunMode::Advect;
    c.integrator = Integrator::Euler;
  }
  const unsigned bit = scenario_bit(c.scenario);

  std::map<std::string, const KeyDef*> by_key;
  for (const auto& d : registry()) by_key[d.key] = &d;
  for (const auto& [key, e] : kv) {
    if (key == "scenario") continue;
    const auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(where_of(key, e), "unknown key '" + key + "'");
    if (!(it->second->applies & bit))
      throw ConfigError(where_of(key, e), "key '" + key + "' does not apply to scenario " + s);
    it->second->set(Ctx{c, where_of(key, e), key}, e.value);
  }
  for (const auto& d : registry())
    if ((d.required & bit) && !kv.count(d.key))
      throw ConfigError(d.key, std::string("missing required key '") + d.key + "' for scenario " + s);

  // semantic checks, reported against the key that carries the value
  const int nx = is_slab(c) ? c.slab.nx : c.sinker.nx;
  const int ny = is_slab(c) ? c.slab.ny : c.sinker.ny;
  const std::string gk = is_slab(c) ? "slab" : "grid";
  check(nx >= 2, gk + ".nx", "must be at least 2");
  check(ny >= 2, gk + ".ny", "must be at least 2");
  check(c.steps >= 0, "run.steps", "must be non-negative");
  check(c.px >= 1, "distributed.px", "must be positive");
  check(c.py >= 1, "distributed.py", "must be positive");
  check(c.migration_growth >= 1.0, "distributed.growth", "must be >= 1");
  check(c.snapshot_every >= 0, "output.snapshot_every", "must be non-negative");
  check(c.timestep.cfl_fraction > 0 && c.timestep.cfl_fraction <= 1, "advect.cfl", "must be in (0, 1]");
  check(c.timestep.max_dt > 0, "advect.max_dt", "must be positive");
  if (is_slab(c)) {
    check(c.mode == RunMode::Advect || c.mode == RunMode::Full, "run.mode",
          "rotating-slab has a prescribed velocity; use advect");
    check(c.slab.markers_per_cell >= 1, "slab.markers_per_cell", "must be positive");
  } else {
    check(c.mode != RunMode::Advect, "run.mode", "advect-only mode needs a prescribed velocity (rotating-slab)");
    check(c.sinker.markers_per_cell >= 1, "markers.per_cell", "must be positive");
    check(c.sinker.xsize > 0 && c.sinker.ysize > 0, "grid.xsize", "domain extents must be positive");
    check(c.sinker.eta_host > 0 && c.sinker.eta_inclusion > 0, "physics.eta_host", "viscosities must be positive");
    check(c.sinker.t0 > 0 && c.sinker.x0 > 0 && c.sinker.eta0 > 0, "scaling.t0", "scales must be positive");
    check(c.mg.levels >= 1, "mg.levels", "must be positive");
    check(c.mg.factor <= 0 || c.mg.factor > 1, "mg.factor", "must exceed 1 or be 'auto'");
    try {
      c.uzawa.validate();
    } catch (const std::exception& e) {
      throw ConfigError("solver", e.what());
    }
    try {
      c.mg.smoother.validate();
    } catch (const std::exception& e) {
      throw ConfigError("smoother", e.what());
    }
    check(c.accel.gcr_restart >= 1, "accel.gcr_restart", "must be positive");
    check(c.accel.anderson_depth >= 1, "accel.anderson_depth", "must be positive");
    check(c.accel.anderson_beta > 0 && c.accel.anderson_beta <= 1, "accel.anderson_beta", "must be in (0, 1]");
  }
  return c;
}

std::string config_to_text(const RunConfig& c) {
  std::string out = "scenario = " + to_string(c.scenario) + "\n";
  const unsigned bit = scenario_bit(c.scenario);
  for (const auto& d : registry())
    if (d.applies & bit) out += std::string(d.key) + " = " + d.get(c) + "\n";
  return out;
}

namespace {

nlohmann::ordered_json json_value(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  long long i = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), i);
  if (r.ec == std::errc{} && r.ptr == v.data() + v.size()) return i;
  double d = 0;
  r = std::from_chars(v.data(), v.data() + v.size(), d);
  if (r.ec == std::errc{} && r.ptr == v.data() + v.size()) return d;
  return v;
}

}  // namespace

std::string config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(c.scenario);
  const unsigned bit = scenario_bit(c.scenario);
  for (const auto& d : registry()) {
    if (!(d.applies & bit)) continue;
    const std::string key = d.key;
    const auto dot = key.find('.');
    j[key.substr(0, dot)][key.substr(dot + 1)] = json_value(d.get(c));
  }
  return j.dump(2);
}

}  // namespace mic
