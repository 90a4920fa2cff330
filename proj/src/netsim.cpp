#include "mpfetch/netsim.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <random>

namespace mpfetch {

SetupTiming setup_time(const PathModel& path) {
  const double handshakes = path.delta1_ms + path.delta2_ms;
  SetupTiming t;
  t.secure_connect_ms = 4.0 * path.rtt_ms + handshakes;
  t.metadata_ms = 6.0 * path.rtt_ms + handshakes;
  t.first_payload_ms = t.metadata_ms + t.secure_connect_ms;
  return t;
}

namespace {

void validate_trace(const PathModel& m) {
  if (m.bandwidth_trace.empty()) {
    throw SimError("path has an empty bandwidth trace");
  }
  TimeMs prev = -std::numeric_limits<TimeMs>::infinity();
  for (const auto& seg : m.bandwidth_trace) {
    if (seg.start_ms <= prev) {
      throw SimError("trace segments must be strictly ordered");
    }
    if (!(seg.bytes_per_ms > 0.0)) {
      throw SimError("trace rates must be positive");
    }
    prev = seg.start_ms;
  }
  if (m.trace_end_ms && *m.trace_end_ms <= prev) {
    throw SimError("trace end precedes the last segment");
  }
}

}  // namespace

TimeMs chunk_transfer_time(const PathModel& path, Bytes range_len,
                           TimeMs start_ms) {
  validate_trace(path);
  const auto& trace = path.bandwidth_trace;
  TimeMs t = start_ms + path.rtt_ms;
  if (t < trace.front().start_ms) {
    throw SimError("transfer starts before trace coverage");
  }
  if (range_len == 0) return t;

  std::size_t i = trace.size() - 1;
  while (trace[i].start_ms > t) --i;

  double remaining = static_cast<double>(range_len);
  const TimeMs inf = std::numeric_limits<TimeMs>::infinity();
  while (true) {
    const TimeMs seg_end = i + 1 < trace.size()
                               ? trace[i + 1].start_ms
                               : path.trace_end_ms.value_or(inf);
    const double rate = trace[i].bytes_per_ms;
    const double capacity = (seg_end - t) * rate;
    if (capacity >= remaining) {
      return t + remaining / rate;
    }
    if (i + 1 >= trace.size()) {
      throw SimError("bandwidth trace exhausted before transfer completed");
    }
    remaining -= capacity;
    t = seg_end;
    ++i;
  }
}

void SimConfig::validate() const {
  if (object_size == 0) throw SimError("object_size must be positive");
  scheduler.validate();
  buffer.validate();
  bool any_enabled = false;
  for (const auto& p : paths) {
    if (!p.enabled) continue;
    any_enabled = true;
    if (!(p.rtt_ms > 0.0)) throw SimError("path rtt must be positive");
    validate_trace(p);
  }
  if (!any_enabled) throw SimError("at least one path must be enabled");
}

namespace {

struct QueuedEvent {
  enum class Kind { PathReady, ChunkDone, Boundary };
  TimeMs t = 0.0;
  std::uint64_t seq = 0;  // insertion order breaks timestamp ties
  Kind kind = Kind::PathReady;
  int path = -1;
  ChunkAssignment assignment;
  TimeMs issued_at = 0.0;
  std::uint64_t boundary_version = 0;
};

struct LaterEvent {
  bool operator()(const QueuedEvent& a, const QueuedEvent& b) const {
    if (a.t != b.t) return a.t > b.t;
    return a.seq > b.seq;
  }
};

std::array<PathModel, 2> jittered_paths(const SimConfig& cfg) {
  std::array<PathModel, 2> models = cfg.paths;
  if (!cfg.trace_jitter) return models;
  std::mt19937_64 rng(cfg.rng_seed);
  std::uniform_real_distribution<double> factor(0.9, 1.1);
  for (auto& m : models) {
    for (auto& seg : m.bandwidth_trace) {
      seg.bytes_per_ms *= factor(rng);
    }
  }
  return models;
}

}  // namespace

SimResult run_simulation(const SimConfig& config) {
  config.validate();
  const std::array<PathModel, 2> models = jittered_paths(config);

  SimResult result;
  SessionEngine engine(config.scheduler, config.buffer, config.object_size);
  engine.set_event_sink(
      [&](const EventRecord& rec) { result.log.push_back(rec); });

  std::priority_queue<QueuedEvent, std::vector<QueuedEvent>, LaterEvent> queue;
  std::uint64_t next_seq = 0;
  std::uint64_t boundary_version = 0;
  auto push = [&](QueuedEvent ev) {
    ev.seq = next_seq++;
    queue.push(ev);
  };

  for (int p = 0; p < 2; ++p) {
    if (!models[p].enabled) continue;
    QueuedEvent ev;
    ev.t = setup_time(models[p]).first_payload_ms;
    ev.kind = QueuedEvent::Kind::PathReady;
    ev.path = p;
    push(ev);
  }

  bool truncated = false;
  TimeMs end_ms = 0.0;
  while (!queue.empty()) {
    const QueuedEvent ev = queue.top();
    queue.pop();
    if (ev.kind == QueuedEvent::Kind::Boundary &&
        ev.boundary_version != boundary_version) {
      continue;  // superseded by a later state change
    }
    if (ev.t > config.time_limit_ms) {
      truncated = true;
      break;
    }
    end_ms = ev.t;
    engine.advance_to(ev.t);

    switch (ev.kind) {
      case QueuedEvent::Kind::PathReady:
        engine.on_path_ready(ev.path, ev.t);
        break;
      case QueuedEvent::Kind::ChunkDone: {
        ThroughputSample sample;
        sample.path_id = ev.path;
        sample.bytes = ev.assignment.range_len;
        sample.duration_ms = ev.t - ev.issued_at;
        engine.on_chunk_complete(ev.assignment, sample, ev.t);
        break;
      }
      case QueuedEvent::Kind::Boundary:
        break;  // advance_to already applied the transition
    }

    for (int p = 0; p < 2; ++p) {
      if (!models[p].enabled) continue;
      if (auto a = engine.poll_assignment(p, ev.t)) {
        QueuedEvent done;
        done.t = chunk_transfer_time(models[p], a->range_len, ev.t);
        done.kind = QueuedEvent::Kind::ChunkDone;
        done.path = p;
        done.assignment = *a;
        done.issued_at = ev.t;
        push(done);
      }
    }

    if (engine.media_finished()) break;

    ++boundary_version;
    if (auto boundary = engine.ms_until_phase_boundary()) {
      QueuedEvent b;
      b.t = ev.t + *boundary;
      b.kind = QueuedEvent::Kind::Boundary;
      b.boundary_version = boundary_version;
      push(b);
    }
  }

  if (!truncated && !engine.media_finished()) {
    throw SimError("simulation stalled before the media finished");
  }

  const SessionMetrics metrics = engine.metrics();
  SimSummary& s = result.summary;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.prebuffer_download_ms = metrics.prebuffer_done_ms.value_or(nan);
  s.download_done_ms = metrics.download_done_ms.value_or(nan);
  s.rebuffer_cycle_ms = metrics.rebuffer_cycle_ms;
  s.mean_rebuffer_ms = metrics.mean_rebuffer_ms();
  s.frac_path0_prebuffer = metrics.frac_path0_prebuffer();
  s.frac_path0_rebuffer = metrics.frac_path0_rebuffer();
  s.stall_ms = metrics.stall_ms;
  s.path_bytes = {engine.scheduler().path(0).bytes_delivered,
                  engine.scheduler().path(1).bytes_delivered};
  s.end_ms = end_ms;
  s.truncated = truncated;
  return result;
}

}  // namespace mpfetch
