#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "micstokes/config.hpp"
#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"
#include "micstokes/markers.hpp"

namespace mic {

namespace exit_code {
constexpr int ok = 0;
constexpr int failure = 1;
constexpr int config = 2;
constexpr int divergence = 3;
constexpr int communication = 4;
}  // namespace exit_code

// Writes `bytes` to `path` through a temporary file and a rename, so a
// partially written file never appears under the final name.
void write_file_atomic(const std::string& path, const std::string& bytes);

struct SnapshotHeader {
  std::size_t rows = 0, cols = 0;
  std::string dtype = "f64-le";
  Stagger stagger = Stagger::Basic;
  double x_origin = 0, y_origin = 0;  // position of array entry (0, 0)
  double dx = 0, dy = 0;
  double xsize = 0, ysize = 0;
  long step = 0;
  std::uint64_t seed = 0;
};

// <stem>.f64 (raw little-endian doubles, row-major) and <stem>.hdr.
void write_field_snapshot(const std::string& stem, const Field2D& a, Stagger s, const Grid& g, long step,
                          std::uint64_t seed);
Field2D read_field_snapshot(const std::string& stem, SnapshotHeader* header = nullptr);

// CSV with a `x,y,<properties>` header line.
std::string markers_csv(const MarkerPool& pool);

// Order-independent FNV-1a digest of the marker records (x, y, properties)
// taken over their sorted bit patterns.
std::uint64_t marker_multiset_hash(const MarkerPool& pool);
std::string hex64(std::uint64_t v);

struct RunSummary {
  std::string status;  // "ok" or "diverged"
  int steps_done = 0;
  int cycles_total = 0;
  int last_cycles = 0;
  bool converged = false;
  double initial_residual = 0;
  std::optional<CycleRecord> final_record;
  std::string residual_log;
  std::size_t marker_count = 0;
  std::uint64_t marker_hash = 0;
  std::size_t empty_nodes = 0;  // last marker -> grid pass
  double wall_time = 0;
  std::vector<std::string> snapshots;
};

/// Executes a configuration and writes its artifacts into c.out_dir.
/// Throws on failure; DivergenceError is raised after the report and the
/// summary have been flushed.
RunSummary run(const RunConfig& c, std::ostream& log);

struct CliOverrides {
  std::vector<std::string> set;
  std::optional<std::string> mode;
  std::optional<std::pair<int, int>> ranks;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
};

// "PXxPY" -> (px, py).
std::pair<int, int> parse_ranks(const std::string& s);

// Parses the file, applies overrides, runs, and maps failures to exit codes.
int run_from_file(const std::string& path, const CliOverrides& o, std::ostream& log, std::ostream& err);

}  // namespace mic
