#include "mpfetch/session.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace mpfetch {

const char* to_string(EventRecord::Kind k) {
  switch (k) {
    case EventRecord::Kind::PathReady: return "path_ready";
    case EventRecord::Kind::Assign: return "assign";
    case EventRecord::Kind::Complete: return "complete";
    case EventRecord::Kind::Fail: return "fail";
    case EventRecord::Kind::Phase: return "phase";
  }
  return "?";
}

double SessionMetrics::mean_rebuffer_ms() const {
  if (rebuffer_cycle_ms.empty()) return 0.0;
  const double sum = std::accumulate(rebuffer_cycle_ms.begin(),
                                     rebuffer_cycle_ms.end(), 0.0);
  return sum / static_cast<double>(rebuffer_cycle_ms.size());
}

namespace {
double fraction(Bytes a, Bytes b) {
  const Bytes total = a + b;
  if (total == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(a) / static_cast<double>(total);
}
}  // namespace

double SessionMetrics::frac_path0_prebuffer() const {
  return fraction(prebuffer_bytes[0], prebuffer_bytes[1]);
}

double SessionMetrics::frac_path0_rebuffer() const {
  return fraction(rebuffer_bytes[0], rebuffer_bytes[1]);
}

SessionEngine::SessionEngine(const SchedulerConfig& sched,
                             const BufferConfig& buffer, Bytes object_size)
    : scheduler_(sched, object_size), playout_(buffer, object_size) {}

void SessionEngine::set_event_sink(
    std::function<void(const EventRecord&)> sink) {
  sink_ = std::move(sink);
}

void SessionEngine::emit(EventRecord rec) {
  if (sink_) sink_(rec);
}

EventRecord SessionEngine::base_record(TimeMs now,
                                       EventRecord::Kind kind) const {
  EventRecord rec;
  rec.t = now;
  rec.kind = kind;
  rec.buffer_s = playout_.buffered_s();
  rec.phase = playout_.phase();
  return rec;
}

template <typename Fn>
void SessionEngine::with_phase_tracking(TimeMs now, Fn&& fn) {
  const PlayoutPhase before = playout_.phase();
  fn();
  const PlayoutPhase after = playout_.phase();
  if (after == before) return;

  if (before == PlayoutPhase::PreBuffering && after == PlayoutPhase::Steady &&
      !metrics_.prebuffer_done_ms) {
    metrics_.prebuffer_done_ms = now;
  }
  if (after == PlayoutPhase::ReBuffering && !rebuffer_entered_ms_) {
    rebuffer_entered_ms_ = now;
  }
  if (after == PlayoutPhase::Steady && rebuffer_entered_ms_) {
    metrics_.rebuffer_cycle_ms.push_back(now - *rebuffer_entered_ms_);
    rebuffer_entered_ms_.reset();
  }

  EventRecord rec = base_record(now, EventRecord::Kind::Phase);
  rec.phase_from = before;
  emit(rec);
}

void SessionEngine::advance_to(TimeMs now) {
  const double dt = now - now_;
  if (dt < -1e-6) {
    throw std::logic_error("session clock moved backwards");
  }
  now_ = std::max(now_, now);
  if (dt <= 0.0) return;
  with_phase_tracking(now, [&] { playout_.consume(dt); });
}

void SessionEngine::on_path_ready(int path_id, TimeMs now) {
  scheduler_.set_path_available(path_id, now);
  EventRecord rec = base_record(now, EventRecord::Kind::PathReady);
  rec.path = path_id;
  rec.chunk_size = scheduler_.path(path_id).chunk_size;
  emit(rec);
}

bool SessionEngine::path_ready(int path_id) const {
  return scheduler_.path(path_id).available_since.has_value();
}

Bytes SessionEngine::on_chunk_complete(const ChunkAssignment& assignment,
                                       const ThroughputSample& sample,
                                       TimeMs now) {
  // Attribute payload to the phase the session is in when the bytes land;
  // the pre-buffering bucket closes at the first transition to Steady.
  auto& bucket = metrics_.prebuffer_done_ms ? metrics_.rebuffer_bytes
                                            : metrics_.prebuffer_bytes;
  bucket[assignment.path_id] += assignment.range_len;

  const Bytes released = scheduler_.on_chunk_complete(assignment, sample);
  with_phase_tracking(now, [&] { playout_.ingest(released); });

  if (scheduler_.fully_released() && !metrics_.download_done_ms) {
    metrics_.download_done_ms = now;
  }

  EventRecord rec = base_record(now, EventRecord::Kind::Complete);
  rec.path = assignment.path_id;
  rec.source = assignment.source_id;
  rec.range_start = assignment.range_start;
  rec.range_len = assignment.range_len;
  rec.released = released;
  rec.chunk_size = scheduler_.path(assignment.path_id).chunk_size;
  emit(rec);
  return released;
}

void SessionEngine::on_chunk_failed(const ChunkAssignment& assignment,
                                    TimeMs now) {
  scheduler_.mark_failed(assignment);
  EventRecord rec = base_record(now, EventRecord::Kind::Fail);
  rec.path = assignment.path_id;
  rec.source = assignment.source_id;
  rec.range_start = assignment.range_start;
  rec.range_len = assignment.range_len;
  emit(rec);
}

std::optional<ChunkAssignment> SessionEngine::poll_assignment(int path_id,
                                                              TimeMs now) {
  if (!path_ready(path_id) || scheduler_.path(path_id).busy) {
    return std::nullopt;
  }
  auto a = scheduler_.next_assignment(path_id, playout_.fetch_gate());
  if (a) {
    EventRecord rec = base_record(now, EventRecord::Kind::Assign);
    rec.path = a->path_id;
    rec.source = a->source_id;
    rec.range_start = a->range_start;
    rec.range_len = a->range_len;
    rec.chunk_size = scheduler_.path(path_id).chunk_size;
    emit(rec);
  }
  return a;
}

SessionMetrics SessionEngine::metrics() const {
  SessionMetrics m = metrics_;
  m.stall_ms = playout_.stall_ms();
  return m;
}

}  // namespace mpfetch
