#include "edgetag/dsp/mel.hpp"

#include "edgetag/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace edgetag::dsp {
namespace {

// FFTW planning is not thread-safe; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

constexpr double kSlaneyHzPerMel = 200.0 / 3.0;
constexpr double kSlaneyLogHz = 1000.0;
constexpr double kSlaneyLogMel = kSlaneyLogHz / kSlaneyHzPerMel;

double slaney_log_step() { return std::log(6.4) / 27.0; }

struct FftwBuffer {
  explicit FftwBuffer(std::size_t bytes) : ptr(fftw_malloc(bytes)) {
    if (!ptr) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(ptr); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
  void* ptr;
};

}  // namespace

std::size_t MelConfig::n_frames(std::size_t samples) const {
  const auto hop = static_cast<std::size_t>(hop_length);
  if (center_padding) return 1 + samples / hop;
  const auto fft = static_cast<std::size_t>(n_fft);
  return samples < fft ? 0 : 1 + (samples - fft) / hop;
}

void MelConfig::validate(int sample_rate_hz) const {
  auto fail = [this](const std::string& what) {
    throw Error(Errc::config, "mel config '" + name + "': " + what);
  };
  if (n_fft <= 0 || win_length <= 0 || win_length > n_fft) fail("requires 0 < win_length <= n_fft");
  if (hop_length <= 0) fail("requires hop_length > 0");
  if (n_mels <= 0) fail("requires n_mels > 0");
  if (sample_rate_hz <= 0) fail("sample rate must be positive");
  if (!(fmin_hz >= 0.0 && fmin_hz < fmax_hz && fmax_hz <= sample_rate_hz / 2.0))
    fail("requires 0 <= fmin_hz < fmax_hz <= sample_rate/2");
  if (!(power > 0.0)) fail("requires power > 0");
  if (!(log_floor > 0.0)) fail("requires log_floor > 0");
}

double MelConfig::floor_db() const { return 10.0 * std::log10(log_floor); }

MelConfig mel_preset(const std::string& name) {
  MelConfig cfg;
  if (name == "panns-64") return cfg;
  if (name == "mels-256") {
    cfg.name = name;
    cfg.n_fft = 2048;
    cfg.win_length = 2048;
    cfg.hop_length = 320;
    cfg.n_mels = 256;
    cfg.fmin_hz = 0.0;
    cfg.fmax_hz = 16000.0;
    return cfg;
  }
  throw Error(Errc::config, "unknown mel preset '" + name + "'");
}

std::vector<std::string> mel_preset_names() { return {"panns-64", "mels-256"}; }

double hz_to_mel(double hz, MelScale scale) {
  if (scale == MelScale::htk) return 2595.0 * std::log10(1.0 + hz / 700.0);
  if (hz >= kSlaneyLogHz) return kSlaneyLogMel + std::log(hz / kSlaneyLogHz) / slaney_log_step();
  return hz / kSlaneyHzPerMel;
}

double mel_to_hz(double mel, MelScale scale) {
  if (scale == MelScale::htk) return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
  if (mel >= kSlaneyLogMel) return kSlaneyLogHz * std::exp(slaney_log_step() * (mel - kSlaneyLogMel));
  return kSlaneyHzPerMel * mel;
}

std::vector<double> mel_band_edges(const MelConfig& cfg) {
  const std::size_t count = static_cast<std::size_t>(cfg.n_mels) + 2;
  const double lo = hz_to_mel(cfg.fmin_hz, cfg.scale);
  const double hi = hz_to_mel(cfg.fmax_hz, cfg.scale);
  const double step = (hi - lo) / static_cast<double>(count - 1);
  std::vector<double> edges(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double mel = i + 1 == count ? hi : lo + static_cast<double>(i) * step;
    edges[i] = mel_to_hz(mel, cfg.scale);
  }
  return edges;
}

double MelFilterbank::row_sum(std::size_t mel) const {
  double sum = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) sum += at(mel, b);
  return sum;
}

MelFilterbank mel_filterbank(const MelConfig& cfg, int sample_rate_hz) {
  cfg.validate(sample_rate_hz);
  MelFilterbank fb;
  fb.n_mels = static_cast<std::size_t>(cfg.n_mels);
  fb.n_bins = cfg.n_bins();
  fb.weights.assign(fb.n_mels * fb.n_bins, 0.0);

  const double bin_hz = 1.0 / (cfg.n_fft * (1.0 / sample_rate_hz));
  const std::vector<double> edges = mel_band_edges(cfg);
  for (std::size_t m = 0; m < fb.n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double norm = cfg.slaney_norm ? 2.0 / (right - left) : 1.0;
    bool any = false;
    for (std::size_t b = 0; b < fb.n_bins; ++b) {
      const double f = static_cast<double>(b) * bin_hz;
      const double rising = (f - left) / (center - left);
      const double falling = (right - f) / (right - center);
      const double w = std::max(0.0, std::min(rising, falling));
      if (w > 0.0) any = true;
      fb.weights[m * fb.n_bins + b] = w * norm;
    }
    if (!any)
      throw Error(Errc::config, "mel config '" + cfg.name + "': band " + std::to_string(m) +
                                    " catches no FFT bin (n_mels too large for the fmin/fmax span)");
  }
  return fb;
}

struct LogMelExtractor::Impl {
  MelConfig cfg;
  int rate = 0;
  MelFilterbank fb;
  std::vector<double> window;                         // n_fft long, zero-padded Hann
  std::vector<std::pair<std::size_t, std::size_t>> support;  // non-zero bin range per band
  fftw_plan plan = nullptr;

  ~Impl() {
    if (plan) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan);
    }
  }
};

LogMelExtractor::LogMelExtractor(MelConfig cfg, int sample_rate_hz) : impl_(std::make_unique<Impl>()) {
  impl_->fb = mel_filterbank(cfg, sample_rate_hz);
  impl_->cfg = std::move(cfg);
  impl_->rate = sample_rate_hz;

  const auto n_fft = static_cast<std::size_t>(impl_->cfg.n_fft);
  const auto win = static_cast<std::size_t>(impl_->cfg.win_length);
  impl_->window.assign(n_fft, 0.0);
  const std::size_t offset = (n_fft - win) / 2;
  for (std::size_t n = 0; n < win; ++n)
    impl_->window[offset + n] =
        0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(win));

  for (std::size_t m = 0; m < impl_->fb.n_mels; ++m) {
    std::size_t first = impl_->fb.n_bins, last = 0;
    for (std::size_t b = 0; b < impl_->fb.n_bins; ++b) {
      if (impl_->fb.at(m, b) != 0.0) {
        first = std::min(first, b);
        last = b + 1;
      }
    }
    impl_->support.emplace_back(first, last);
  }

  FftwBuffer in(sizeof(double) * n_fft);
  FftwBuffer out(sizeof(fftw_complex) * impl_->cfg.n_bins());
  std::lock_guard lock(planner_mutex());
  impl_->plan = fftw_plan_dft_r2c_1d(static_cast<int>(n_fft), static_cast<double*>(in.ptr),
                                     static_cast<fftw_complex*>(out.ptr), FFTW_ESTIMATE);
  if (!impl_->plan) throw Error(Errc::config, "FFT planning failed");
}

LogMelExtractor::~LogMelExtractor() = default;
LogMelExtractor::LogMelExtractor(LogMelExtractor&&) noexcept = default;
LogMelExtractor& LogMelExtractor::operator=(LogMelExtractor&&) noexcept = default;

const MelConfig& LogMelExtractor::config() const { return impl_->cfg; }
int LogMelExtractor::sample_rate_hz() const { return impl_->rate; }
const MelFilterbank& LogMelExtractor::filterbank() const { return impl_->fb; }

MelFrame LogMelExtractor::compute(std::span<const float> samples) const {
  const MelConfig& cfg = impl_->cfg;
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  const auto hop = static_cast<std::size_t>(cfg.hop_length);
  const std::size_t pad = cfg.center_padding ? n_fft / 2 : 0;
  const std::size_t len = samples.size();
  if (cfg.center_padding ? len <= pad : len < n_fft)
    throw Error(Errc::window_mismatch, "window of " + std::to_string(len) + " samples is too short for n_fft " +
                                           std::to_string(n_fft));

  // reflect padding (edge sample not repeated)
  auto sample_at = [&](std::size_t padded_index) -> double {
    const auto i = static_cast<std::int64_t>(padded_index) - static_cast<std::int64_t>(pad);
    const auto n = static_cast<std::int64_t>(len);
    std::int64_t k = i;
    if (k < 0) k = -k;
    if (k >= n) k = 2 * (n - 1) - k;
    return samples[static_cast<std::size_t>(k)];
  };

  MelFrame frame;
  frame.n_mels = impl_->fb.n_mels;
  frame.n_frames = cfg.n_frames(len);
  frame.config_id = cfg.name;
  frame.values.resize(frame.n_mels * frame.n_frames);

  const std::size_t bins = cfg.n_bins();
  FftwBuffer in_buf(sizeof(double) * n_fft);
  FftwBuffer out_buf(sizeof(fftw_complex) * bins);
  auto* in = static_cast<double*>(in_buf.ptr);
  auto* out = static_cast<fftw_complex*>(out_buf.ptr);
  std::vector<double> power(bins);
  const double floor = cfg.log_floor;

  for (std::size_t t = 0; t < frame.n_frames; ++t) {
    const std::size_t start = t * hop;
    const bool interior = start >= pad && start + n_fft <= pad + len;
    for (std::size_t n = 0; n < n_fft; ++n) {
      const double x = interior ? samples[start - pad + n] : sample_at(start + n);
      in[n] = x * impl_->window[n];
    }
    fftw_execute_dft_r2c(impl_->plan, in, out);
    for (std::size_t b = 0; b < bins; ++b) {
      const double mag2 = out[b][0] * out[b][0] + out[b][1] * out[b][1];
      power[b] = cfg.power == 2.0 ? mag2 : std::pow(std::sqrt(mag2), cfg.power);
    }
    for (std::size_t m = 0; m < frame.n_mels; ++m) {
      const auto [first, last] = impl_->support[m];
      const double* w = impl_->fb.weights.data() + m * bins;
      double acc = 0.0;
      for (std::size_t b = first; b < last; ++b) acc += w[b] * power[b];
      frame.values[m * frame.n_frames + t] = static_cast<float>(10.0 * std::log10(std::max(acc, floor)));
    }
  }
  return frame;
}

MelFrame log_mel(std::span<const float> window, int sample_rate_hz, const MelConfig& cfg,
                 std::size_t expected_samples) {
  if (expected_samples != 0 && window.size() != expected_samples)
    throw Error(Errc::window_mismatch, "window has " + std::to_string(window.size()) + " samples, expected " +
                                           std::to_string(expected_samples));
  return LogMelExtractor(cfg, sample_rate_hz).compute(window);
}

}  // namespace edgetag::dsp
