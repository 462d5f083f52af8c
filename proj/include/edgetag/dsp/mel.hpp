#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace edgetag::dsp {

enum class MelScale { slaney, htk };

/// STFT + mel filterbank parameters. Defaults follow the "panns-64" preset.
struct MelConfig {
  std::string name = "panns-64";
  int n_fft = 1024;
  int win_length = 1024;
  int hop_length = 320;
  int n_mels = 64;
  double fmin_hz = 50.0;
  double fmax_hz = 14000.0;
  double power = 2.0;
  double log_floor = 1e-10;
  bool center_padding = true;  // reflect-pad n_fft/2 on both sides
  MelScale scale = MelScale::slaney;
  bool slaney_norm = true;

  std::size_t n_bins() const { return static_cast<std::size_t>(n_fft / 2 + 1); }
  std::size_t n_frames(std::size_t samples) const;
  // Throws Error(Errc::config) on a violated invariant.
  void validate(int sample_rate_hz) const;
  // The value every cell takes for silent input: 10*log10(log_floor).
  double floor_db() const;
};

// Named presets: "panns-64" and "mels-256".
MelConfig mel_preset(const std::string& name);
std::vector<std::string> mel_preset_names();

double hz_to_mel(double hz, MelScale scale);
double mel_to_hz(double mel, MelScale scale);
// n_mels + 2 band edges, evenly spaced on the mel scale, in Hz.
std::vector<double> mel_band_edges(const MelConfig& cfg);

/// Row-major (n_mels x n_bins) triangular filterbank.
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> weights;

  double at(std::size_t mel, std::size_t bin) const { return weights[mel * n_bins + bin]; }
  double row_sum(std::size_t mel) const;
};

// Throws Error(Errc::config) when a band catches no FFT bin.
MelFilterbank mel_filterbank(const MelConfig& cfg, int sample_rate_hz);

/// Log-power mel spectrogram, row-major (n_mels x n_frames).
struct MelFrame {
  std::size_t n_mels = 0;
  std::size_t n_frames = 0;
  std::vector<float> values;
  std::string config_id;

  float at(std::size_t mel, std::size_t frame) const { return values[mel * n_frames + frame]; }
};

/// Reusable extractor: owns the filterbank, window and FFT plan. compute()
/// is const and safe to call concurrently.
class LogMelExtractor {
 public:
  LogMelExtractor(MelConfig cfg, int sample_rate_hz);
  ~LogMelExtractor();
  LogMelExtractor(LogMelExtractor&&) noexcept;
  LogMelExtractor& operator=(LogMelExtractor&&) noexcept;

  // Throws Error(Errc::window_mismatch) for input too short to frame.
  MelFrame compute(std::span<const float> samples) const;

  const MelConfig& config() const;
  int sample_rate_hz() const;
  const MelFilterbank& filterbank() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One-shot convenience; `sample_rate_hz` is the window's rate. A non-zero
// `expected_samples` must equal the window length (Errc::window_mismatch).
MelFrame log_mel(std::span<const float> window, int sample_rate_hz, const MelConfig& cfg,
                 std::size_t expected_samples = 0);

}  // namespace edgetag::dsp
