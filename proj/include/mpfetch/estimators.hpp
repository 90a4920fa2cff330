#pragma once

#include <optional>
#include <variant>

#include "mpfetch/types.hpp"

namespace mpfetch {

/// One completed range request as seen by the bandwidth estimators.
/// `duration_ms` runs from request issuance to the last payload byte, so one
/// round trip of request latency is part of every sample.
struct ThroughputSample {
  int path_id = 0;
  Bytes bytes = 0;
  double duration_ms = 0.0;

  /// Bytes per millisecond.
  double throughput() const { return static_cast<double>(bytes) / duration_ms; }
};

/// Exponential weighted moving average. `estimate` stays unset until the
/// first sample seeds it.
struct EwmaState {
  std::optional<double> estimate;
  double alpha = 0.9;
};

/// Harmonic mean maintained in constant space: only the running mean and the
/// sample count are kept, never the sample history.
struct HarmonicState {
  std::optional<double> estimate;
  std::uint64_t count = 0;
};

/// Most recent sample only (Ratio baseline).
struct LastSampleState {
  std::optional<double> estimate;
};

/// new = alpha * old + (1 - alpha) * sample; first sample seeds the estimate.
/// Throws std::invalid_argument on a non-positive or non-finite sample.
EwmaState ewma_update(const EwmaState& state, const ThroughputSample& sample);

/// Incremental harmonic mean:
///   new = (n + 1) / (n / old + 1 / sample), count -> n + 1.
/// Equals the batch harmonic mean of all samples seen so far.
HarmonicState harmonic_update(const HarmonicState& state,
                              const ThroughputSample& sample);

LastSampleState last_sample_update(const LastSampleState& state,
                                   const ThroughputSample& sample);

/// Per-path estimator state behind one interface, so the scheduler does not
/// care which estimator the active policy uses.
class BandwidthEstimator {
 public:
  explicit BandwidthEstimator(EwmaState s) : state_(s) {}
  explicit BandwidthEstimator(HarmonicState s) : state_(s) {}
  explicit BandwidthEstimator(LastSampleState s) : state_(s) {}

  void update(const ThroughputSample& sample);
  std::optional<double> estimate() const;

  /// Throughput of the most recent sample fed to update(), regardless of the
  /// estimator type. Unset until the first update.
  std::optional<double> last_sample() const { return last_sample_; }

 private:
  std::variant<EwmaState, HarmonicState, LastSampleState> state_;
  std::optional<double> last_sample_;
};

}  // namespace mpfetch
