#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "micstokes/accelerators.hpp"
#include "micstokes/markers.hpp"
#include "micstokes/multigrid.hpp"
#include "micstokes/scenarios.hpp"
#include "micstokes/uzawa.hpp"

namespace mic {

/// Parse or validation failure. `where` names the offending line or key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& where, const std::string& msg)
      : std::runtime_error(where + ": " + msg), location(where) {}
  std::string location;
};

struct ConfigEntry {
  std::string value;
  int line = 0;  // 0 for overrides
};

// Flat `key = value` text. Keys use dotted sections (grid.nx); '#' starts a
// comment. Duplicate keys are an error.
using KeyValues = std::map<std::string, ConfigEntry>;

KeyValues parse_config_text(const std::string& text, const std::string& source = "<config>");
KeyValues parse_config_file(const std::string& path);
// `key=value` override; replaces or adds the key.
void apply_override(KeyValues& kv, const std::string& assignment);

enum class ScenarioKind { Sinker, RotatingSlab, Custom };
enum class RunMode { Full, Solve, Advect };

std::string to_string(ScenarioKind k);
std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::Sinker;
  RunMode mode = RunMode::Full;
  SinkerParams sinker;     // sinker and custom
  RotatingSlabParams slab;  // rotating-slab
  UzawaConfig uzawa;
  MgSettings mg;
  AccelParams accel;
  Integrator integrator = Integrator::Rk4;
  TimeStepPolicy timestep;
  int steps = 1;
  int px = 1, py = 1;
  double migration_growth = 1.0;
  std::string out_dir = "out";
  int snapshot_every = 1;
  bool marker_csv = true;
  bool field_csv = false;
};

// Builds a RunConfig; unknown keys, missing required keys and malformed
// values raise ConfigError naming the key and its line.
RunConfig run_config_from(const KeyValues& kv);

std::string theta_schedule_to_string(const std::vector<ThetaStage>& s);
std::vector<ThetaStage> theta_schedule_from_string(const std::string& s);

// JSON mirror of the resolved configuration.
std::string config_to_json(const RunConfig& c);
// Flat text form that parses back to the same configuration.
std::string config_to_text(const RunConfig& c);

}  // namespace mic
