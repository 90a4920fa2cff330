#pragma once

#include <optional>

#include "mpfetch/scheduler.hpp"
#include "mpfetch/types.hpp"

namespace mpfetch {

struct BufferConfig {
  double bitrate = 0.0;  // media bytes per second, constant-bitrate model
  double prebuffer_target_s = 40.0;
  double low_watermark_s = 10.0;
  double refill_target_s = 20.0;

  void validate() const;  // throws std::invalid_argument
};

enum class PlayoutPhase { PreBuffering, Steady, ReBuffering, Drained, Finished };

const char* to_string(PlayoutPhase p);

/// Just-in-time playout buffer.
///
/// Phase graph:
///   PreBuffering -> Steady        buffered > prebuffer_target, or all media
///                                 ingested (a file shorter than the target
///                                 must still start playing)
///   Steady       -> ReBuffering   buffered < low_watermark
///   ReBuffering  -> Steady        buffered >= refill_target
///   Steady       -> Drained       buffered hits 0 before media end
///   ReBuffering  -> Drained       buffered hits 0 before media end
///   Drained      -> Steady        buffered >= refill_target
///   any          -> Finished      all media ingested and consumed
///
/// Playback happens only in Steady and ReBuffering; in PreBuffering and
/// Drained wall time accrues as stall time instead.
class PlayoutBuffer {
 public:
  PlayoutBuffer(const BufferConfig& cfg, Bytes media_total_bytes);

  /// In-order bytes arrived from the scheduler.
  void ingest(Bytes released_bytes);

  /// Wall-clock time passed; play back media or accrue stall.
  void consume(double elapsed_ms);

  /// Paused exactly while the buffer sits between refill target and low
  /// watermark (Steady); in-flight chunks still complete.
  FetchGate fetch_gate() const;

  PlayoutPhase phase() const { return phase_; }
  double buffered_s() const;
  double stall_ms() const { return stall_ms_; }
  double clock_ms() const { return clock_ms_; }
  Bytes ingested_bytes() const { return ingested_bytes_; }
  double consumed_s() const { return consumed_s_; }
  bool media_fully_ingested() const { return ingested_bytes_ >= total_bytes_; }
  const BufferConfig& config() const { return cfg_; }

  /// Time until the next consumption-driven phase change, if one would occur
  /// with no further ingest. Used by the engines to schedule wakeups.
  std::optional<double> ms_until_phase_boundary() const;

 private:
  void maybe_finish();

  BufferConfig cfg_;
  Bytes total_bytes_;
  Bytes ingested_bytes_ = 0;
  double consumed_s_ = 0.0;
  double clock_ms_ = 0.0;
  double stall_ms_ = 0.0;
  PlayoutPhase phase_ = PlayoutPhase::PreBuffering;
};

}  // namespace mpfetch
