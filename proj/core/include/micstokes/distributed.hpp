#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "micstokes/errors.hpp"
#include "micstokes/field.hpp"
#include "micstokes/grid.hpp"
#include "micstokes/markers.hpp"

namespace mic {

// ---- message transport -----------------------------------------------------

// Wire format: tag (u32 LE), count (u64 LE), count x f64 LE.
std::vector<std::uint8_t> encode_envelope(std::uint32_t tag, std::span<const double> payload);
// Throws CommunicationError when the byte length disagrees with the count.
std::vector<double> decode_envelope(std::span<const std::uint8_t> bytes, std::uint32_t& tag);

namespace tags {
constexpr std::uint32_t halo_x = 0x100;
constexpr std::uint32_t halo_y = 0x200;
constexpr std::uint32_t reduce_x = 0x300;
constexpr std::uint32_t reduce_y = 0x400;
constexpr std::uint32_t counts = 0x500;
constexpr std::uint32_t markers = 0x600;
}  // namespace tags

struct TransportStats {
  std::uint64_t messages = 0;
  std::uint64_t bytes = 0;
  std::uint64_t marker_messages = 0;
  std::uint64_t count_messages = 0;
};

/// In-process mailbox transport shared by all ranks of a world. Messages
/// between an ordered pair with the same tag arrive in send order.
class Transport {
 public:
  explicit Transport(int nranks, std::chrono::milliseconds timeout = std::chrono::seconds(120));

  [[nodiscard]] int size() const noexcept { return n_; }
  void send(int src, int dst, std::uint32_t tag, std::span<const double> payload);
  std::vector<double> recv(int dst, int src, std::uint32_t tag);
  // counts[d] = values this rank sends to rank d; returns the counts every
  // rank sends to this one.
  std::vector<std::uint64_t> alltoall_counts(int rank, const std::vector<std::uint64_t>& counts);

  // Wakes blocked receivers, which then throw CommunicationError.
  void abort();
  [[nodiscard]] bool aborted() const noexcept { return aborted_.load(); }

  [[nodiscard]] TransportStats stats(int rank) const;
  void reset_stats();

 private:
  struct Box {
    std::mutex mu;
    std::condition_variable cv;
    std::map<std::pair<int, std::uint32_t>, std::deque<std::vector<std::uint8_t>>> q;
  };
  int n_;
  std::chrono::milliseconds timeout_;
  std::vector<std::unique_ptr<Box>> boxes_;
  mutable std::mutex stats_mu_;
  std::vector<TransportStats> stats_;
  std::atomic<bool> aborted_{false};
};

// ---- topology ---------------------------------------------------------------

enum Dir : int { N = 0, S, E, W, NE, NW, SE, SW };
constexpr std::array<int, 8> kDirDx{0, 0, 1, -1, 1, -1, 1, -1};
constexpr std::array<int, 8> kDirDy{-1, 1, 0, 0, -1, -1, 1, 1};  // north = smaller row index
const char* dir_name(int d);

struct RankTopology {
  int px = 1, py = 1;
  bool periodic_x = false, periodic_y = false;
  int rank = 0;
  int cx = 0, cy = 0;
  std::array<int, 8> neighbor{};  // -1 when absent

  [[nodiscard]] int rank_of(int x, int y) const noexcept { return y * px + x; }
  [[nodiscard]] bool has(int d) const noexcept { return neighbor[d] >= 0; }
};

// One entry per rank. Throws InvalidConfiguration when px * py != nranks.
std::vector<RankTopology> build_topology(int px, int py, bool periodic_x, bool periodic_y, int nranks);

// ---- decomposition ----------------------------------------------------------

constexpr long kHalo = 2;

/// A rank's slice in global index space. Owned indices [gi0, gi1] x
/// [gj0, gj1]; the local array spans [li0, li1] x [lj0, lj1] (owned plus
/// halo, clipped at non-periodic walls).
struct Subdomain {
  int rank = 0;
  long gi0 = 0, gi1 = -1, gj0 = 0, gj1 = -1;
  long li0 = 0, li1 = -1, lj0 = 0, lj1 = -1;
  long nl_x = 0, nl_y = 0;  // cells per rank along each axis
  // Owned marker region [xmin, xmax) x [ymin, ymax). On walled axes it is
  // shifted one cell left/up from the owned basic nodes and the outer
  // ranks extend to the domain edge.
  double xmin = 0, xmax = 0, ymin = 0, ymax = 0;

  [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(li1 - li0 + 1); }
  [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(lj1 - lj0 + 1); }
  [[nodiscard]] Field2D make_local(double v = 0.0) const { return Field2D(rows(), cols(), v); }
  double& at(Field2D& a, long gi, long gj) const { return a(gi - li0, gj - lj0); }
  [[nodiscard]] double at(const Field2D& a, long gi, long gj) const { return a(gi - li0, gj - lj0); }
  // Frame for a staggered role over the local window.
  [[nodiscard]] NodeFrame frame(const Grid& global, Stagger s, bool periodic_x, bool periodic_y) const;
};

std::vector<Subdomain> decompose(const Grid& global, const std::vector<RankTopology>& topo);

// Global index wrapped into the canonical periodic range [1, n].
long wrap_index(long k, long n);

// Copies the rank's local window out of a global array (periodic axes wrap).
Field2D scatter_local(const Field2D& global, const Subdomain& sd, const Grid& g, bool px, bool py);

// Rank owning a global marker position.
int marker_owner(double x, double y, const Grid& g, const RankTopology& t);

// Replace exchange: every halo entry receives the owner's value. Two
// phases (x then y) so corners propagate.
void halo_exchange(Field2D& local, const Subdomain& sd, const RankTopology& t, Transport& tr);
// Reduction exchange: halo accumulations are added into the owner's entries.
void halo_reduce(Field2D& local, const Subdomain& sd, const RankTopology& t, Transport& tr);

// Two-stage marker -> grid interpolation over the rank's local window.
GridInterp distributed_markers_to_grid(const MarkerPool& pool, const std::string& prop, Stagger role,
                                       const Grid& g, const Subdomain& sd, const RankTopology& t,
                                       Transport& tr);

struct MigrationPolicy {
  double growth = 1.0;  // 1 = exact reallocation; > 1 reserves extra capacity
};

struct MigrationStats {
  std::size_t sent = 0, received = 0;
  int payload_messages = 0;
};

// Moves markers that left this rank's region to the owning neighbour.
// Throws ConstraintViolation when a marker jumped beyond adjacent ranks.
MigrationStats migrate_markers(MarkerPool& pool, const Grid& g, const Subdomain& sd, const RankTopology& t,
                               Transport& tr, const MigrationPolicy& policy = {});

// Local velocity fields (with fresh halos) for advection.
struct RankVelocity {
  Field2D vx, vy;
};

// grid_to_markers (local) -> Euler step -> wrap periodic -> migrate.
MigrationStats distributed_advect_step(MarkerPool& pool, const RankVelocity& v, double dt, const Grid& g,
                                       const Subdomain& sd, const RankTopology& t, Transport& tr,
                                       const MigrationPolicy& policy = {});

// Splits a global pool by owner.
std::vector<MarkerPool> distribute_markers(const MarkerPool& pool, const Grid& g,
                                           const std::vector<RankTopology>& topo);

struct RankContext {
  int rank;
  const RankTopology& topo;
  const Subdomain& sub;
  Transport& transport;
};

/// Runs fn on one worker thread per rank. The first exception thrown by
/// any rank aborts the transport and is rethrown after all workers join.
void run_world(const Grid& g, int px, int py, bool periodic_x, bool periodic_y,
               const std::function<void(RankContext&)>& fn, Transport* transport = nullptr);

}  // namespace mic
