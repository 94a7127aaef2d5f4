#include "spkid/audio_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "spkid/error.hpp"

namespace spkid {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<unsigned char>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

SampleBuffer decode_wav(std::span<const unsigned char> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(ErrorCode::kCorruptHeader, "missing RIFF/WAVE signature");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::span<const unsigned char> payload;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    const std::uint32_t size = read_u32(hdr + 4);
    const std::size_t body = pos + 8;
    if (size > bytes.size() - body)
      throw Error(ErrorCode::kCorruptHeader, "chunk extends past end of file");
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (size < 16) throw Error(ErrorCode::kCorruptHeader, "short fmt chunk");
      const unsigned char* f = bytes.data() + body;
      std::uint16_t format = read_u16(f);
      channels = read_u16(f + 2);
      rate = read_u32(f + 4);
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40)
          throw Error(ErrorCode::kCorruptHeader, "short extensible fmt chunk");
        format = read_u16(f + 24);  // first two bytes of the subformat GUID
      }
      if (format != kFormatPcm)
        throw Error(ErrorCode::kUnsupportedFormat,
                    "audio format " + std::to_string(format) + " is not PCM");
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      payload = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }

  if (!have_fmt) throw Error(ErrorCode::kCorruptHeader, "no fmt chunk");
  if (!have_data) throw Error(ErrorCode::kCorruptHeader, "no data chunk");
  if (bits != 16)
    throw Error(ErrorCode::kUnsupportedFormat,
                "bit depth " + std::to_string(bits) + " (need 16)");
  if (channels == 0 || rate == 0)
    throw Error(ErrorCode::kCorruptHeader, "zero channels or sample rate");

  const std::size_t frame_bytes = 2u * channels;
  const std::size_t n = payload.size() / frame_bytes;
  SampleBuffer out;
  out.sample_rate_hz = static_cast<int>(rate);
  out.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < channels; ++c) {
      const auto raw = static_cast<std::int16_t>(
          read_u16(payload.data() + i * frame_bytes + 2 * c));
      acc += static_cast<double>(raw) / 32768.0;
    }
    out.samples[i] = acc / channels;
  }
  return out;
}

SampleBuffer load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<unsigned char> encode_wav(const SampleBuffer& buf) {
  const auto data_bytes = static_cast<std::uint32_t>(buf.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(buf.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : buf.samples) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const SampleBuffer& buf) {
  const auto bytes = encode_wav(buf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoFailure, "short write " + path.string());
}

SampleBuffer pre_emphasize(const SampleBuffer& buf, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0))
    throw Error(ErrorCode::kConfigInvalid, "pre-emphasis must be in [0, 1)");
  SampleBuffer out{std::vector<double>(buf.samples.size()), buf.sample_rate_hz};
  for (std::size_t n = 0; n < buf.samples.size(); ++n)
    out.samples[n] =
        n == 0 ? buf.samples[0] : buf.samples[n] - alpha * buf.samples[n - 1];
  return out;
}

FrameMatrix frame_signal(const SampleBuffer& buf, double window_ms,
                         double hop_ms) {
  if (!(hop_ms > 0.0 && window_ms >= hop_ms))
    throw Error(ErrorCode::kConfigInvalid, "need window_ms >= hop_ms > 0");
  if (buf.sample_rate_hz <= 0)
    throw Error(ErrorCode::kConfigInvalid, "sample rate must be positive");
  const auto window = static_cast<std::size_t>(
      std::lround(window_ms * buf.sample_rate_hz / 1000.0));
  const auto hop = static_cast<std::size_t>(
      std::lround(hop_ms * buf.sample_rate_hz / 1000.0));
  if (hop == 0 || window == 0)
    throw Error(ErrorCode::kConfigInvalid, "window or hop rounds to 0 samples");

  const std::size_t n = buf.samples.size();
  const std::size_t count = n >= window ? (n - window) / hop + 1 : 0;
  FrameMatrix out{Matrix(count, window), window, hop, buf.sample_rate_hz};
  for (std::size_t f = 0; f < count; ++f) {
    auto dst = out.frames.row(f);
    std::copy_n(buf.samples.begin() + static_cast<std::ptrdiff_t>(f * hop),
                window, dst.begin());
  }
  return out;
}

std::vector<double> hamming_window(std::size_t length) {
  if (length == 0)
    throw Error(ErrorCode::kConfigInvalid, "Hamming window needs length >= 1");
  if (length == 1) return {1.0};
  std::vector<double> w(length);
  const double denom = static_cast<double>(length - 1);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / denom);
  return w;
}

FrameMatrix apply_hamming(const FrameMatrix& frames) {
  const auto w = hamming_window(frames.window_len_samples);
  FrameMatrix out = frames;
  for (std::size_t f = 0; f < out.frames.rows(); ++f) {
    auto row = out.frames.row(f);
    for (std::size_t n = 0; n < row.size(); ++n) row[n] *= w[n];
  }
  return out;
}

FrameMatrix drop_low_energy(const FrameMatrix& frames, double threshold_db) {
  const std::size_t count = frames.frame_count();
  std::vector<double> energy_db(count);
  double loudest = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < count; ++f) {
    double e = 0.0;
    for (double s : frames.frames.row(f)) e += s * s;
    energy_db[f] = 10.0 * std::log10(std::max(e, 1e-20));
    loudest = std::max(loudest, energy_db[f]);
  }
  FrameMatrix out{Matrix(), frames.window_len_samples, frames.hop_len_samples,
                  frames.sample_rate_hz};
  for (std::size_t f = 0; f < count; ++f)
    if (energy_db[f] >= loudest + threshold_db)
      out.frames.append_row(frames.frames.row(f));
  if (out.frames.empty()) out.frames = Matrix(0, frames.window_len_samples);
  return out;
}

FrameMatrix analysis_frames(const SampleBuffer& buf, const FramingConfig& cfg) {
  FrameMatrix frames =
      frame_signal(pre_emphasize(buf, cfg.pre_emphasis), cfg.window_ms,
                   cfg.hop_ms);
  if (cfg.drop_low_energy_frames)
    frames = drop_low_energy(frames, cfg.low_energy_threshold_db);
  return apply_hamming(frames);
}

}  // namespace spkid
