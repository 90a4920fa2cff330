#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <optional>
#include <utility>

#include "mpfetch/estimators.hpp"
#include "mpfetch/types.hpp"

namespace mpfetch {

enum class SchedulerPolicy { Ratio, Ewma, Harmonic };

const char* to_string(SchedulerPolicy p);
std::optional<SchedulerPolicy> policy_from_string(const std::string& s);

struct SchedulerConfig {
  SchedulerPolicy policy = SchedulerPolicy::Harmonic;
  Bytes base_chunk = 256 * kKiB;
  Bytes min_chunk = 16 * kKiB;
  Bytes max_chunk = 8 * kMiB;
  double delta = 0.05;       // throughput-variation band for size adjustment
  double ewma_alpha = 0.9;

  void validate() const;  // throws std::invalid_argument
};

/// Chunk-size update for one path, run at each of its chunk completions.
///
/// No estimate yet: start at the base chunk size. Slow path (own estimate
/// below the peer's, ties resolved so path 0 counts as slow): double when the
/// current sample beats the estimate by more than delta, halve (floored at
/// min_chunk) when it falls short by more than delta, otherwise keep the
/// size. Fast path: ceil(est_self / est_other) times the peer's current
/// chunk. The result is clamped to [min_chunk, max_chunk].
///
/// When the peer has no estimate yet (it is still in connection setup), the
/// slow-path rule is applied against the path's own estimate.
Bytes adjust_chunk_size(int path_id, std::optional<double> est_self,
                        std::optional<double> est_other,
                        double sample_throughput, const SchedulerConfig& cfg,
                        Bytes cur_self, Bytes cur_other);

/// Ratio baseline: slow path gets the base chunk, fast path gets
/// round(w_fast / w_slow * base) to the nearest KiB, clamped to max_chunk.
/// Requires 0 < w_slow <= w_fast.
std::pair<Bytes, Bytes> ratio_sizes(double w_slow, double w_fast,
                                    const SchedulerConfig& cfg);

struct ChunkAssignment {
  int path_id = 0;
  int source_id = 0;  // index into the path's server list
  Bytes range_start = 0;
  Bytes range_len = 0;
  std::uint64_t sequence = 0;  // in-file chunk ordinal
};

/// In-order release tracking. Completed chunks are either released
/// immediately (contiguous with everything already released) or parked;
/// at most one parked chunk may exist at any time, by construction here and
/// by the scheduler's assignment rule.
class ReassemblyState {
 public:
  /// Returns the number of bytes released in order by this completion
  /// (0 when the chunk parks). Throws std::runtime_error on a duplicate
  /// completion and std::logic_error if a second chunk would park.
  Bytes complete(const ChunkAssignment& assignment);

  Bytes next_in_order() const { return next_in_order_; }
  bool has_parked() const { return parked_.has_value(); }
  const std::optional<ChunkAssignment>& parked() const { return parked_; }

 private:
  Bytes next_in_order_ = 0;
  std::optional<ChunkAssignment> parked_;
};

enum class FetchGate { FetchAllowed, FetchPaused };

struct PathState {
  int path_id = 0;
  Bytes chunk_size = 0;  // S_i, current request size
  BandwidthEstimator estimator;
  Bytes bytes_delivered = 0;
  bool busy = false;
  std::optional<TimeMs> available_since;  // set once connection setup is done
  int source_id = 0;
  std::optional<ChunkAssignment> in_flight;

  PathState(int id, const SchedulerConfig& cfg);
};

/// Per-round decision point: which byte range each path fetches next and how
/// large each path's chunks are. All completion events and assignment
/// requests must be serialized through one instance (the engines do this).
class ChunkScheduler {
 public:
  ChunkScheduler(const SchedulerConfig& cfg, Bytes object_size);

  /// Next range for an idle path, or nullopt to defer. Defers when the gate
  /// is paused, when a parked chunk exists (a new chunk could become a
  /// second one), or when the whole object has been assigned. A pending
  /// failover reissue is handed out first and ignores the gate.
  std::optional<ChunkAssignment> next_assignment(int path_id, FetchGate gate);

  /// Feeds the estimator, re-sizes chunks per the active policy, and runs
  /// reassembly. Returns the bytes released in order (0 if parked).
  Bytes on_chunk_complete(const ChunkAssignment& assignment,
                          const ThroughputSample& sample);

  /// The fetch failed; the range is queued for reissue (same range, next
  /// server or surviving path — the caller picks the target path).
  void mark_failed(const ChunkAssignment& assignment);

  bool reissue_pending() const { return !pending_reissues_.empty(); }

  void set_path_available(int path_id, TimeMs now);

  PathState& path(int path_id) { return paths_.at(path_id); }
  const PathState& path(int path_id) const { return paths_.at(path_id); }
  const ReassemblyState& reassembly() const { return reassembly_; }
  Bytes object_size() const { return object_size_; }
  Bytes next_unassigned() const { return next_unassigned_; }
  bool fully_assigned() const { return next_unassigned_ >= object_size_; }
  bool fully_released() const {
    return reassembly_.next_in_order() >= object_size_;
  }

 private:
  void resize_after_completion(const ChunkAssignment& assignment,
                               const ThroughputSample& sample);

  SchedulerConfig cfg_;
  Bytes object_size_;
  Bytes next_unassigned_ = 0;
  std::uint64_t next_sequence_ = 0;
  std::array<PathState, 2> paths_;
  ReassemblyState reassembly_;
  std::deque<ChunkAssignment> pending_reissues_;
};

}  // namespace mpfetch
