#include "mpfetch/estimators.hpp"

#include <cmath>
#include <stdexcept>

namespace mpfetch {

namespace {

double checked_throughput(const ThroughputSample& sample) {
  const double w = sample.throughput();
  if (!(w > 0.0) || !std::isfinite(w)) {
    throw std::invalid_argument(
        "throughput sample must be positive and finite; "
        "a bad sample means the transport measured something wrong");
  }
  return w;
}

}  // namespace

EwmaState ewma_update(const EwmaState& state, const ThroughputSample& sample) {
  const double w = checked_throughput(sample);
  EwmaState next = state;
  if (!state.estimate) {
    next.estimate = w;
  } else {
    next.estimate = state.alpha * *state.estimate + (1.0 - state.alpha) * w;
  }
  return next;
}

HarmonicState harmonic_update(const HarmonicState& state,
                              const ThroughputSample& sample) {
  const double w = checked_throughput(sample);
  HarmonicState next;
  if (!state.estimate) {
    next.estimate = w;
    next.count = 1;
  } else {
    const double n = static_cast<double>(state.count);
    next.estimate = (n + 1.0) / (n / *state.estimate + 1.0 / w);
    next.count = state.count + 1;
  }
  return next;
}

LastSampleState last_sample_update(const LastSampleState& /*state*/,
                                   const ThroughputSample& sample) {
  return LastSampleState{checked_throughput(sample)};
}

void BandwidthEstimator::update(const ThroughputSample& sample) {
  const double w = checked_throughput(sample);
  if (auto* e = std::get_if<EwmaState>(&state_)) {
    *e = ewma_update(*e, sample);
  } else if (auto* h = std::get_if<HarmonicState>(&state_)) {
    *h = harmonic_update(*h, sample);
  } else {
    auto& l = std::get<LastSampleState>(state_);
    l = last_sample_update(l, sample);
  }
  last_sample_ = w;
}

std::optional<double> BandwidthEstimator::estimate() const {
  if (auto* e = std::get_if<EwmaState>(&state_)) return e->estimate;
  if (auto* h = std::get_if<HarmonicState>(&state_)) return h->estimate;
  return std::get<LastSampleState>(state_).estimate;
}

}  // namespace mpfetch
