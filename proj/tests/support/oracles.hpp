#pragma once

// Independent reference computations used to derive expected values.
// Nothing here calls into the code under test.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace edgetag::testkit {

// Frequency of the largest magnitude bin (parabolic-interpolated) of a
// Hann-windowed full-length FFT.
double fft_peak_hz(std::span<const float> samples, int sample_rate_hz);

// Power of `samples` at `hz` relative to a full-scale sine, in dB (single-bin DFT).
double tone_level_db(std::span<const float> samples, int sample_rate_hz, double hz);

// Slaney-scale band edges (n_mels + 2 values in Hz), written from the
// textbook definition: linear below 1 kHz at 200/3 Hz per mel, logarithmic above.
std::vector<double> slaney_edges_reference(int n_mels, double fmin_hz, double fmax_hz);

// Band index maximizing sum_b w_m(b) * P(b) for an on-bin tone with a
// periodic-Hann analysis window (P(k) = 1, P(k +/- 1) = 1/4).
int tone_band_reference(double tone_hz, int sample_rate_hz, int n_fft, int n_mels, double fmin_hz,
                        double fmax_hz);

struct QueueSimResult {
  int served = 0;
  int dropped = 0;
  std::vector<int> served_indices;
};

// Discrete-event model of a single server fed by a drop-oldest queue holding
// at most `capacity` pending items (the in-service item is not counted).
// Arrival k happens at first_arrival + k * interarrival; every service takes
// `service` time units. At equal times arrivals are processed first.
QueueSimResult simulate_drop_oldest(int arrivals, double first_arrival, double interarrival, double service,
                                    int capacity);

struct RefSample {
  std::int64_t t_ns = 0;
  std::string group;
  std::optional<double> temp;
  std::optional<double> latency;
};

struct RefStats {
  double mean = 0.0, min = 0.0, max = 0.0, p95 = 0.0;
};

struct RefBucket {
  std::int64_t start_ns = 0;
  std::string group;
  std::size_t count = 0;
  std::optional<RefStats> temp;
  std::optional<RefStats> latency;
};

// Brute-force bucketing: for every (start, group) pair present, rescans the
// whole input. Mean sums in input order; p95 is the nearest-rank element of a
// sorted copy. Result ordered by (start, group).
std::vector<RefBucket> brute_force_buckets(std::span<const RefSample> samples, std::int64_t bucket_ns);

}  // namespace edgetag::testkit
