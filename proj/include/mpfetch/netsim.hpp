#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "mpfetch/session.hpp"
#include "mpfetch/types.hpp"

namespace mpfetch {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Piecewise-constant bandwidth: `bytes_per_ms` applies from `start_ms` until
/// the next segment starts.
struct TraceSegment {
  TimeMs start_ms = 0.0;
  double bytes_per_ms = 0.0;
};

struct PathModel {
  double rtt_ms = 0.0;
  double delta1_ms = 0.0;  // server key-verification delay
  double delta2_ms = 0.0;  // key-exchange completion delay
  std::vector<TraceSegment> bandwidth_trace;
  // Last segment extends forever unless an explicit end is given; draining
  // past the end is a simulation error.
  std::optional<TimeMs> trace_end_ms;
  bool enabled = true;
};

/// Connection-setup milestones for one path, all measured from session start:
/// secure connection up after 4R + D1 + D2, object metadata in hand after
/// 6R + D1 + D2, and the first payload byte roughly one further setup later.
struct SetupTiming {
  double secure_connect_ms = 0.0;
  double metadata_ms = 0.0;
  double first_payload_ms = 0.0;
};

SetupTiming setup_time(const PathModel& path);

/// Completion time of a range request issued at `start_ms`: one RTT of
/// request latency, then the payload drains through the bandwidth trace.
/// Throws SimError if the trace ends before the payload completes.
TimeMs chunk_transfer_time(const PathModel& path, Bytes range_len,
                           TimeMs start_ms);

struct SimConfig {
  std::array<PathModel, 2> paths;
  Bytes object_size = 0;
  SchedulerConfig scheduler;
  BufferConfig buffer;
  std::uint64_t rng_seed = 0;
  // Multiplies each trace segment by a seeded uniform factor in [0.9, 1.1].
  bool trace_jitter = false;
  TimeMs time_limit_ms = 86'400'000.0;

  void validate() const;
};

struct SimSummary {
  double prebuffer_download_ms = 0.0;
  double download_done_ms = 0.0;
  std::vector<double> rebuffer_cycle_ms;
  double mean_rebuffer_ms = 0.0;
  double frac_path0_prebuffer = 0.0;
  double frac_path0_rebuffer = 0.0;
  double stall_ms = 0.0;
  std::array<Bytes, 2> path_bytes{0, 0};
  TimeMs end_ms = 0.0;
  bool truncated = false;  // hit time_limit_ms before the media finished
};

struct SimResult {
  std::vector<EventRecord> log;
  SimSummary summary;
};

/// Runs one full session against the modeled paths: per-path setup head
/// start, scheduler-driven fetching, playout consumption and ON/OFF cycles,
/// to media end. Deterministic given the config (including rng_seed).
SimResult run_simulation(const SimConfig& config);

}  // namespace mpfetch
