#include "edgetag/audio/wav.hpp"

#include "edgetag/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace edgetag::audio {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
void put_u16(std::ostream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void write_header(std::ostream& out, std::uint16_t format, std::uint16_t bits, std::uint32_t frames,
                  int rate) {
  const std::uint32_t data_bytes = frames * (bits / 8);
  const bool with_fact = format == kFormatFloat;
  const std::uint32_t fmt_size = with_fact ? 18 : 16;
  const std::uint32_t riff_size = 4 + (8 + fmt_size) + (with_fact ? 12 : 0) + (8 + data_bytes);
  out.write("RIFF", 4);
  put_u32(out, riff_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(out, fmt_size);
  put_u16(out, format);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(rate));
  put_u32(out, static_cast<std::uint32_t>(rate) * (bits / 8));
  put_u16(out, static_cast<std::uint16_t>(bits / 8));
  put_u16(out, bits);
  if (with_fact) {
    put_u16(out, 0);
    out.write("fact", 4);
    put_u32(out, 4);
    put_u32(out, frames);
  }
  out.write("data", 4);
  put_u32(out, data_bytes);
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::file_missing, "cannot open WAV " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(Errc::io, path.string() + ": not a RIFF/WAVE file");

  WavData wav;
  std::uint16_t format = 0;
  const unsigned char* data = nullptr;
  std::size_t data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::size_t len = u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min(len, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw Error(Errc::io, path.string() + ": truncated fmt chunk");
      format = u16(chunk + 8);
      wav.channels = u16(chunk + 10);
      wav.sample_rate_hz = static_cast<int>(u32(chunk + 12));
      wav.bits_per_sample = u16(chunk + 22);
      if (format == kFormatExtensible && avail >= 26) format = u16(chunk + 8 + 24);
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = chunk + 8;
      data_len = avail;
    }
    pos = body + len + (len & 1);
  }
  if (!data || wav.channels <= 0 || wav.sample_rate_hz <= 0)
    throw Error(Errc::io, path.string() + ": missing fmt or data chunk");

  const bool pcm16 = format == kFormatPcm && wav.bits_per_sample == 16;
  const bool f32 = format == kFormatFloat && wav.bits_per_sample == 32;
  if (!pcm16 && !f32)
    throw Error(Errc::io, path.string() + ": only 16-bit PCM and 32-bit float WAV are supported");
  wav.is_float = f32;

  const std::size_t bytes_per_sample = wav.bits_per_sample / 8;
  const std::size_t frame_bytes = bytes_per_sample * static_cast<std::size_t>(wav.channels);
  const std::size_t frames = data_len / frame_bytes;
  wav.samples.resize(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* p = data + i * frame_bytes;
    if (pcm16) {
      wav.samples[i] = static_cast<float>(static_cast<std::int16_t>(u16(p))) / 32768.0f;
    } else {
      const std::uint32_t bits = u32(p);
      float v;
      std::memcpy(&v, &bits, sizeof v);
      wav.samples[i] = v;
    }
  }
  return wav;
}

void write_wav_float(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  write_header(out, kFormatFloat, 32, static_cast<std::uint32_t>(samples.size()), sample_rate_hz);
  for (float s : samples) {
    std::uint32_t bits;
    std::memcpy(&bits, &s, sizeof bits);
    put_u32(out, bits);
  }
  out.flush();
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

void write_wav_pcm16(const std::filesystem::path& path, std::span<const float> samples, int sample_rate_hz) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot create " + path.string());
  write_header(out, kFormatPcm, 16, static_cast<std::uint32_t>(samples.size()), sample_rate_hz);
  for (float s : samples) {
    const float scaled = std::round(std::clamp(s, -1.0f, 1.0f) * 32767.0f);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  out.flush();
  if (!out) throw Error(Errc::io, "write failed for " + path.string());
}

}  // namespace edgetag::audio
