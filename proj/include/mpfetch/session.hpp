#pragma once

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include "mpfetch/playout.hpp"
#include "mpfetch/scheduler.hpp"
#include "mpfetch/types.hpp"

namespace mpfetch {

struct EventRecord {
  enum class Kind { PathReady, Assign, Complete, Fail, Phase };

  TimeMs t = 0.0;
  Kind kind = Kind::PathReady;
  int path = -1;
  int source = -1;
  Bytes range_start = 0;
  Bytes range_len = 0;
  Bytes released = 0;           // Complete records
  Bytes chunk_size = 0;         // path's chunk size after the event
  double buffer_s = 0.0;
  PlayoutPhase phase = PlayoutPhase::PreBuffering;     // phase after the event
  PlayoutPhase phase_from = PlayoutPhase::PreBuffering;  // Phase records
};

const char* to_string(EventRecord::Kind k);

struct SessionMetrics {
  std::optional<TimeMs> prebuffer_done_ms;  // first PreBuffering -> Steady
  std::optional<TimeMs> download_done_ms;   // all bytes released in order
  std::vector<double> rebuffer_cycle_ms;    // ReBuffering entry -> Steady
  std::array<Bytes, 2> prebuffer_bytes{0, 0};
  std::array<Bytes, 2> rebuffer_bytes{0, 0};
  double stall_ms = 0.0;

  double mean_rebuffer_ms() const;
  // Fraction of payload bytes carried by path 0, per phase. NaN when the
  // phase saw no traffic.
  double frac_path0_prebuffer() const;
  double frac_path0_rebuffer() const;
};

/// Serialized decision core shared by the simulator and the live transport:
/// owns the chunk scheduler and the playout buffer, applies every event in
/// order, and keeps the session metrics. Callers provide the clock (virtual
/// or wall) and must serialize all calls.
class SessionEngine {
 public:
  SessionEngine(const SchedulerConfig& sched, const BufferConfig& buffer,
                Bytes object_size);

  void set_event_sink(std::function<void(const EventRecord&)> sink);

  /// Play back wall time up to `now`. Run before handling any event at `now`.
  void advance_to(TimeMs now);

  void on_path_ready(int path_id, TimeMs now);

  /// Returns the bytes released in order by this completion.
  Bytes on_chunk_complete(const ChunkAssignment& assignment,
                          const ThroughputSample& sample, TimeMs now);

  void on_chunk_failed(const ChunkAssignment& assignment, TimeMs now);

  /// Next range for an idle, ready path; nullopt defers.
  std::optional<ChunkAssignment> poll_assignment(int path_id, TimeMs now);

  bool path_ready(int path_id) const;
  bool download_complete() const { return scheduler_.fully_released(); }
  bool media_finished() const {
    return playout_.phase() == PlayoutPhase::Finished;
  }
  std::optional<double> ms_until_phase_boundary() const {
    return playout_.ms_until_phase_boundary();
  }

  ChunkScheduler& scheduler() { return scheduler_; }
  const ChunkScheduler& scheduler() const { return scheduler_; }
  PlayoutBuffer& playout() { return playout_; }
  const PlayoutBuffer& playout() const { return playout_; }
  SessionMetrics metrics() const;
  TimeMs now() const { return now_; }

 private:
  template <typename Fn>
  void with_phase_tracking(TimeMs now, Fn&& fn);
  void emit(EventRecord rec);
  EventRecord base_record(TimeMs now, EventRecord::Kind kind) const;

  ChunkScheduler scheduler_;
  PlayoutBuffer playout_;
  SessionMetrics metrics_;
  std::optional<TimeMs> rebuffer_entered_ms_;
  std::function<void(const EventRecord&)> sink_;
  TimeMs now_ = 0.0;
};

}  // namespace mpfetch
