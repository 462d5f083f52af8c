#include "edgetag/audio/resampler.hpp"

#include "edgetag/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace edgetag::audio {
namespace {

constexpr double kStopbandDb = 70.0;
constexpr double kRolloff = 0.95;
constexpr std::int64_t kMaxTabulatedPhases = 4096;

void check_rates(int src, int dst) {
  if (src <= 0 || dst <= 0) throw Error(Errc::config, "resample rates must be positive");
}

float dot(const float* x, const float* w, int n) {
  float acc = 0.0f;
  for (int t = 0; t < n; ++t) acc += x[t] * w[t];
  return acc;
}

// Output sample j interpolates input around j * down / up.
float interpolate(const ResampleKernel& kernel, std::span<const float> input, std::int64_t offset,
                  std::int64_t j, std::vector<float>& scratch) {
  const std::int64_t pos = j * kernel.down();
  const std::int64_t base = pos / kernel.up();
  const std::int64_t phase = pos % kernel.up();
  const int taps = kernel.taps();
  const float* w = kernel.table_row(phase);
  if (!w) {
    scratch.resize(static_cast<std::size_t>(taps));
    kernel.weights(phase, scratch);
    w = scratch.data();
  }
  const std::int64_t first = base - kernel.half_width() + 1 - offset;
  const std::int64_t n = static_cast<std::int64_t>(input.size());
  if (first >= 0 && first + taps <= n) return dot(input.data() + first, w, taps);
  float acc = 0.0f;
  for (int t = 0; t < taps; ++t) {
    const std::int64_t k = first + t;
    if (k >= 0 && k < n) acc += input[static_cast<std::size_t>(k)] * w[t];
  }
  return acc;
}

// Modified Bessel function of the first kind, order 0 (power series).
double bessel_i0(double x) {
  const double q = 0.25 * x * x;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < 200 && term > sum * 1e-17; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
  }
  return sum;
}

}  // namespace

ResampleKernel::ResampleKernel(int src_rate_hz, int dst_rate_hz) {
  check_rates(src_rate_hz, dst_rate_hz);
  const int g = std::gcd(src_rate_hz, dst_rate_hz);
  up_ = dst_rate_hz / g;
  down_ = src_rate_hz / g;

  const double ratio = std::min(1.0, static_cast<double>(up_) / down_);
  cutoff_ = 0.5 * ratio * kRolloff;
  // Kaiser design: transition (1 - rolloff) * ratio cycles/sample wide.
  const double transition = (1.0 - kRolloff) * ratio;
  const double length = (kStopbandDb - 8.0) / (2.285 * 2.0 * std::numbers::pi * transition);
  half_width_ = std::max(2, static_cast<int>(std::ceil(length / 2.0)));
  beta_ = 0.1102 * (kStopbandDb - 8.7);
  i0_beta_ = bessel_i0(beta_);

  if (up_ <= kMaxTabulatedPhases) {
    table_.resize(static_cast<std::size_t>(up_) * taps());
    for (std::int64_t p = 0; p < up_; ++p)
      weights(p, std::span<float>(table_.data() + p * taps(), static_cast<std::size_t>(taps())));
  }
}

double ResampleKernel::tap_value(double distance) const {
  const double x = distance / half_width_;
  if (std::abs(x) >= 1.0) return 0.0;
  const double window = bessel_i0(beta_ * std::sqrt(1.0 - x * x)) / i0_beta_;
  const double arg = 2.0 * cutoff_ * distance;
  const double sinc = arg == 0.0 ? 1.0 : std::sin(std::numbers::pi * arg) / (std::numbers::pi * arg);
  return 2.0 * cutoff_ * sinc * window;
}

void ResampleKernel::weights(std::int64_t phase, std::span<float> out) const {
  const double frac = static_cast<double>(phase) / up_;
  for (int t = 0; t < taps(); ++t)
    out[static_cast<std::size_t>(t)] = static_cast<float>(tap_value(frac + half_width_ - 1 - t));
}

const float* ResampleKernel::table_row(std::int64_t phase) const {
  if (table_.empty()) return nullptr;
  return table_.data() + phase * taps();
}

std::size_t resampled_length(std::size_t input_length, int src_rate_hz, int dst_rate_hz) {
  check_rates(src_rate_hz, dst_rate_hz);
  const int g = std::gcd(src_rate_hz, dst_rate_hz);
  const auto up = static_cast<std::uint64_t>(dst_rate_hz / g);
  const auto down = static_cast<std::uint64_t>(src_rate_hz / g);
  // round half up of n * up / down
  return static_cast<std::size_t>((2 * input_length * up + down) / (2 * down));
}

std::vector<float> resample(std::span<const float> input, int src_rate_hz, int dst_rate_hz) {
  check_rates(src_rate_hz, dst_rate_hz);
  if (input.empty()) throw Error(Errc::config, "resample input is empty");
  if (src_rate_hz == dst_rate_hz) return {input.begin(), input.end()};

  const ResampleKernel kernel(src_rate_hz, dst_rate_hz);
  const std::size_t n_out = resampled_length(input.size(), src_rate_hz, dst_rate_hz);
  std::vector<float> out(n_out);
  std::vector<float> scratch;
  for (std::size_t j = 0; j < n_out; ++j)
    out[j] = interpolate(kernel, input, 0, static_cast<std::int64_t>(j), scratch);
  return out;
}

StreamingResampler::StreamingResampler(int src_rate_hz, int dst_rate_hz)
    : src_(src_rate_hz), dst_(dst_rate_hz) {
  check_rates(src_rate_hz, dst_rate_hz);
  if (src_ != dst_) kernel_ = std::make_shared<const ResampleKernel>(src_, dst_);
}

void StreamingResampler::reset() {
  history_.clear();
  history_start_ = 0;
  total_in_ = 0;
  next_out_ = 0;
}

void StreamingResampler::emit_ready(std::int64_t limit_in, std::vector<float>& out) {
  const ResampleKernel& k = *kernel_;
  while (true) {
    const std::int64_t base = next_out_ * k.down() / k.up();
    // the last tap reads input base + half_width
    if (base + k.half_width() >= limit_in) break;
    out.push_back(interpolate(k, history_, history_start_, next_out_, scratch_));
    ++next_out_;
  }
  const std::int64_t keep_from = next_out_ * k.down() / k.up() - k.half_width() + 1;
  if (keep_from > history_start_) {
    const auto drop = std::min<std::int64_t>(keep_from - history_start_,
                                             static_cast<std::int64_t>(history_.size()));
    history_.erase(history_.begin(), history_.begin() + drop);
    history_start_ += drop;
  }
}

void StreamingResampler::process(std::span<const float> input, std::vector<float>& out) {
  if (input.empty()) return;
  if (!kernel_) {
    out.insert(out.end(), input.begin(), input.end());
    total_in_ += static_cast<std::int64_t>(input.size());
    next_out_ = total_in_;
    return;
  }
  history_.insert(history_.end(), input.begin(), input.end());
  total_in_ += static_cast<std::int64_t>(input.size());
  emit_ready(total_in_, out);
}

void StreamingResampler::flush(std::vector<float>& out) {
  if (!kernel_ || total_in_ == 0) return;
  const auto target = static_cast<std::int64_t>(
      resampled_length(static_cast<std::size_t>(total_in_), src_, dst_));
  while (next_out_ < target) {
    out.push_back(interpolate(*kernel_, history_, history_start_, next_out_, scratch_));
    ++next_out_;
  }
}

}  // namespace edgetag::audio
