#include "mpfetch/playout.hpp"

#include <algorithm>
#include <stdexcept>

namespace mpfetch {

namespace {
constexpr double kMediaEpsS = 1e-9;   // one nanosecond of media
constexpr double kStallEpsMs = 1e-6;  // ignore float dust when accruing stall
}  // namespace

const char* to_string(PlayoutPhase p) {
  switch (p) {
    case PlayoutPhase::PreBuffering: return "prebuffering";
    case PlayoutPhase::Steady: return "steady";
    case PlayoutPhase::ReBuffering: return "rebuffering";
    case PlayoutPhase::Drained: return "drained";
    case PlayoutPhase::Finished: return "finished";
  }
  return "?";
}

void BufferConfig::validate() const {
  if (!(bitrate > 0.0)) {
    throw std::invalid_argument("bitrate must be positive");
  }
  if (low_watermark_s < 0.0 || !(low_watermark_s < refill_target_s) ||
      !(refill_target_s <= prebuffer_target_s)) {
    throw std::invalid_argument(
        "watermarks must satisfy 0 <= low < refill <= prebuffer");
  }
}

PlayoutBuffer::PlayoutBuffer(const BufferConfig& cfg, Bytes media_total_bytes)
    : cfg_(cfg), total_bytes_(media_total_bytes) {
  cfg_.validate();
  if (total_bytes_ == 0) phase_ = PlayoutPhase::Finished;
}

double PlayoutBuffer::buffered_s() const {
  return static_cast<double>(ingested_bytes_) / cfg_.bitrate - consumed_s_;
}

void PlayoutBuffer::ingest(Bytes released_bytes) {
  if (phase_ == PlayoutPhase::Finished) return;
  if (ingested_bytes_ + released_bytes > total_bytes_) {
    throw std::logic_error("ingested past the end of the media object");
  }
  ingested_bytes_ += released_bytes;
  switch (phase_) {
    case PlayoutPhase::PreBuffering:
      if (buffered_s() > cfg_.prebuffer_target_s || media_fully_ingested()) {
        phase_ = PlayoutPhase::Steady;
      }
      break;
    case PlayoutPhase::ReBuffering:
      if (buffered_s() >= cfg_.refill_target_s) phase_ = PlayoutPhase::Steady;
      break;
    case PlayoutPhase::Drained:
      if (buffered_s() >= cfg_.refill_target_s || media_fully_ingested()) {
        phase_ = PlayoutPhase::Steady;
      }
      break;
    case PlayoutPhase::Steady:
    case PlayoutPhase::Finished:
      break;
  }
}

void PlayoutBuffer::consume(double elapsed_ms) {
  if (elapsed_ms < 0.0) throw std::invalid_argument("time cannot run backwards");
  if (elapsed_ms == 0.0) return;
  clock_ms_ += elapsed_ms;
  switch (phase_) {
    case PlayoutPhase::Finished:
      return;
    case PlayoutPhase::PreBuffering:
    case PlayoutPhase::Drained:
      stall_ms_ += elapsed_ms;
      return;
    case PlayoutPhase::Steady:
    case PlayoutPhase::ReBuffering:
      break;
  }

  const double want_s = elapsed_ms / 1000.0;
  const double avail_s = buffered_s();
  if (want_s >= avail_s - kMediaEpsS) {
    // Buffer empties within this slice; snap to exactly empty.
    consumed_s_ = static_cast<double>(ingested_bytes_) / cfg_.bitrate;
    const double leftover_ms = elapsed_ms - avail_s * 1000.0;
    if (media_fully_ingested()) {
      phase_ = PlayoutPhase::Finished;
    } else {
      phase_ = PlayoutPhase::Drained;
      if (leftover_ms > kStallEpsMs) stall_ms_ += leftover_ms;
    }
    return;
  }
  consumed_s_ += want_s;
  if (phase_ == PlayoutPhase::Steady && buffered_s() < cfg_.low_watermark_s) {
    phase_ = PlayoutPhase::ReBuffering;
  }
}

FetchGate PlayoutBuffer::fetch_gate() const {
  switch (phase_) {
    case PlayoutPhase::PreBuffering:
    case PlayoutPhase::ReBuffering:
    case PlayoutPhase::Drained:
      return FetchGate::FetchAllowed;
    case PlayoutPhase::Steady:
    case PlayoutPhase::Finished:
      return FetchGate::FetchPaused;
  }
  return FetchGate::FetchPaused;
}

std::optional<double> PlayoutBuffer::ms_until_phase_boundary() const {
  switch (phase_) {
    case PlayoutPhase::Steady: {
      const double b = buffered_s();
      if (cfg_.low_watermark_s > 0.0) {
        // The low-watermark crossing is strict, so aim just past it.
        return (b - cfg_.low_watermark_s) * 1000.0 + 1e-6;
      }
      return b * 1000.0;
    }
    case PlayoutPhase::ReBuffering:
      return buffered_s() * 1000.0;
    default:
      return std::nullopt;
  }
}

}  // namespace mpfetch
