#include "mpfetch/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mpfetch {

const char* to_string(SchedulerPolicy p) {
  switch (p) {
    case SchedulerPolicy::Ratio: return "ratio";
    case SchedulerPolicy::Ewma: return "ewma";
    case SchedulerPolicy::Harmonic: return "harmonic";
  }
  return "?";
}

std::optional<SchedulerPolicy> policy_from_string(const std::string& s) {
  if (s == "ratio") return SchedulerPolicy::Ratio;
  if (s == "ewma") return SchedulerPolicy::Ewma;
  if (s == "harmonic") return SchedulerPolicy::Harmonic;
  return std::nullopt;
}

void SchedulerConfig::validate() const {
  if (min_chunk == 0 || min_chunk > base_chunk || base_chunk > max_chunk) {
    throw std::invalid_argument(
        "chunk sizes must satisfy 0 < min_chunk <= base_chunk <= max_chunk");
  }
  if (!(delta > 0.0) || !(delta < 1.0)) {
    throw std::invalid_argument("delta must be in (0, 1)");
  }
  if (!(ewma_alpha >= 0.0) || !(ewma_alpha <= 1.0)) {
    throw std::invalid_argument("ewma_alpha must be in [0, 1]");
  }
}

namespace {

Bytes clamp_chunk(Bytes s, const SchedulerConfig& cfg) {
  return std::clamp(s, cfg.min_chunk, cfg.max_chunk);
}

// Double / halve / hold against the path's own estimate.
Bytes slow_path_rule(double sample, double estimate, Bytes cur,
                     const SchedulerConfig& cfg) {
  if (sample > (1.0 + cfg.delta) * estimate) {
    return cur * 2;
  }
  if (sample < (1.0 - cfg.delta) * estimate) {
    return std::max<Bytes>((cur + 1) / 2, cfg.min_chunk);
  }
  return cur;
}

BandwidthEstimator make_estimator(const SchedulerConfig& cfg) {
  switch (cfg.policy) {
    case SchedulerPolicy::Ewma:
      return BandwidthEstimator(EwmaState{std::nullopt, cfg.ewma_alpha});
    case SchedulerPolicy::Harmonic:
      return BandwidthEstimator(HarmonicState{});
    case SchedulerPolicy::Ratio:
      break;
  }
  return BandwidthEstimator(LastSampleState{});
}

}  // namespace

Bytes adjust_chunk_size(int path_id, std::optional<double> est_self,
                        std::optional<double> est_other,
                        double sample_throughput, const SchedulerConfig& cfg,
                        Bytes cur_self, Bytes cur_other) {
  if (!est_self) {
    return clamp_chunk(cfg.base_chunk, cfg);
  }
  if (!est_other) {
    // Peer still in setup; only the self-relative rule is applicable.
    return clamp_chunk(slow_path_rule(sample_throughput, *est_self, cur_self, cfg),
                       cfg);
  }
  // Equal estimates: exactly one side must fall through to the fast-path
  // branch; pin path 0 as the slow one.
  const bool self_slow =
      *est_self < *est_other || (*est_self == *est_other && path_id == 0);
  if (self_slow) {
    return clamp_chunk(slow_path_rule(sample_throughput, *est_self, cur_self, cfg),
                       cfg);
  }
  const double gamma = std::ceil(*est_self / *est_other);
  const double scaled = gamma * static_cast<double>(cur_other);
  if (scaled >= static_cast<double>(cfg.max_chunk)) {
    return cfg.max_chunk;
  }
  return clamp_chunk(static_cast<Bytes>(scaled), cfg);
}

std::pair<Bytes, Bytes> ratio_sizes(double w_slow, double w_fast,
                                    const SchedulerConfig& cfg) {
  if (!(w_slow > 0.0) || !(w_fast > 0.0) || w_slow > w_fast) {
    throw std::invalid_argument("ratio_sizes requires 0 < w_slow <= w_fast");
  }
  const double raw = w_fast / w_slow * static_cast<double>(cfg.base_chunk);
  // Byte-granularity ranges are legal, but 1 KiB rounding keeps sizes stable.
  double rounded = std::round(raw / 1024.0) * 1024.0;
  Bytes fast = rounded >= static_cast<double>(cfg.max_chunk)
                   ? cfg.max_chunk
                   : static_cast<Bytes>(rounded);
  return {cfg.base_chunk, std::max(fast, cfg.min_chunk)};
}

Bytes ReassemblyState::complete(const ChunkAssignment& assignment) {
  const Bytes start = assignment.range_start;
  if (start < next_in_order_ ||
      (parked_ && parked_->range_start == start)) {
    throw std::runtime_error(
        "duplicate completion for range starting at byte " +
        std::to_string(start));
  }
  if (start == next_in_order_) {
    Bytes released = assignment.range_len;
    next_in_order_ += assignment.range_len;
    if (parked_ && parked_->range_start == next_in_order_) {
      released += parked_->range_len;
      next_in_order_ += parked_->range_len;
      parked_.reset();
    }
    return released;
  }
  if (parked_) {
    throw std::logic_error("second out-of-order chunk would park");
  }
  parked_ = assignment;
  return 0;
}

PathState::PathState(int id, const SchedulerConfig& cfg)
    : path_id(id), chunk_size(cfg.base_chunk), estimator(make_estimator(cfg)) {}

ChunkScheduler::ChunkScheduler(const SchedulerConfig& cfg, Bytes object_size)
    : cfg_(cfg),
      object_size_(object_size),
      paths_{PathState(0, cfg), PathState(1, cfg)} {
  cfg_.validate();
}

void ChunkScheduler::set_path_available(int path_id, TimeMs now) {
  paths_.at(path_id).available_since = now;
}

std::optional<ChunkAssignment> ChunkScheduler::next_assignment(int path_id,
                                                               FetchGate gate) {
  PathState& p = paths_.at(path_id);
  if (p.busy) {
    throw std::logic_error("next_assignment called for a busy path");
  }
  if (!pending_reissues_.empty()) {
    ChunkAssignment reissue = pending_reissues_.front();
    pending_reissues_.pop_front();
    reissue.path_id = path_id;
    reissue.source_id = p.source_id;
    p.busy = true;
    p.in_flight = reissue;
    return reissue;
  }
  if (gate == FetchGate::FetchPaused) return std::nullopt;
  if (reassembly_.has_parked()) return std::nullopt;
  if (fully_assigned()) return std::nullopt;

  ChunkAssignment a;
  a.path_id = path_id;
  a.source_id = p.source_id;
  a.range_start = next_unassigned_;
  a.range_len = std::min<Bytes>(p.chunk_size, object_size_ - next_unassigned_);
  a.sequence = next_sequence_++;
  next_unassigned_ += a.range_len;
  p.busy = true;
  p.in_flight = a;
  return a;
}

void ChunkScheduler::resize_after_completion(const ChunkAssignment& assignment,
                                             const ThroughputSample& sample) {
  PathState& self = paths_.at(assignment.path_id);
  PathState& other = paths_.at(1 - assignment.path_id);

  if (cfg_.policy == SchedulerPolicy::Ratio) {
    self.estimator.update(sample);
    const auto w_self = self.estimator.estimate();
    const auto w_other = other.estimator.estimate();
    if (!w_self || !w_other) return;  // both paths must have a sample first
    PathState* slow = &self;
    PathState* fast = &other;
    if (*w_other < *w_self || (*w_other == *w_self && other.path_id == 0)) {
      std::swap(slow, fast);
    }
    const double w_slow = *slow->estimator.estimate();
    const double w_fast = *fast->estimator.estimate();
    auto [s_slow, s_fast] = ratio_sizes(w_slow, w_fast, cfg_);
    slow->chunk_size = s_slow;
    fast->chunk_size = s_fast;
    return;
  }

  // Size decision compares the fresh sample against the estimate formed from
  // past completions only, then the estimator absorbs the sample.
  self.chunk_size = adjust_chunk_size(
      assignment.path_id, self.estimator.estimate(), other.estimator.estimate(),
      sample.throughput(), cfg_, self.chunk_size, other.chunk_size);
  self.estimator.update(sample);
}

Bytes ChunkScheduler::on_chunk_complete(const ChunkAssignment& assignment,
                                        const ThroughputSample& sample) {
  PathState& p = paths_.at(assignment.path_id);
  if (!p.in_flight || p.in_flight->range_start != assignment.range_start ||
      p.in_flight->range_len != assignment.range_len) {
    throw std::runtime_error(
        "completion does not match the in-flight assignment on path " +
        std::to_string(assignment.path_id));
  }
  p.busy = false;
  p.in_flight.reset();
  p.bytes_delivered += assignment.range_len;
  resize_after_completion(assignment, sample);
  return reassembly_.complete(assignment);
}

void ChunkScheduler::mark_failed(const ChunkAssignment& assignment) {
  PathState& p = paths_.at(assignment.path_id);
  if (!p.in_flight || p.in_flight->range_start != assignment.range_start) {
    throw std::runtime_error("failure reported for a range not in flight");
  }
  p.busy = false;
  p.in_flight.reset();
  pending_reissues_.push_back(assignment);
}

}  // namespace mpfetch
