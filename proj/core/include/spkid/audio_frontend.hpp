#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "spkid/matrix.hpp"

namespace spkid {

// Mono audio with amplitudes in [-1, 1].
struct SampleBuffer {
  std::vector<double> samples;
  int sample_rate_hz = 16000;
};

// Fixed-length analysis windows cut from a SampleBuffer. Row r of `frames`
// starts at sample r * hop_len_samples.
struct FrameMatrix {
  Matrix frames;
  std::size_t window_len_samples = 0;
  std::size_t hop_len_samples = 0;
  int sample_rate_hz = 16000;

  std::size_t frame_count() const { return frames.rows(); }
};

struct FramingConfig {
  double window_ms = 16.0;
  double hop_ms = 8.0;
  double pre_emphasis = 0.97;
  // Energy-based frame dropping. Kept as a hook; disabled by default.
  bool drop_low_energy_frames = false;
  double low_energy_threshold_db = -60.0;
};

// Reads a RIFF/WAVE file with 16-bit PCM samples. Multi-channel audio is
// mixed down by averaging the channels.
SampleBuffer load_wav(const std::filesystem::path& path);

// Writes 16-bit mono PCM. Samples are scaled by 32768 and clamped to the
// int16 range.
void write_wav(const std::filesystem::path& path, const SampleBuffer& buf);

// Parses an in-memory WAVE image; `load_wav` is a thin wrapper over this.
SampleBuffer decode_wav(std::span<const unsigned char> bytes);
std::vector<unsigned char> encode_wav(const SampleBuffer& buf);

// y[0] = x[0]; y[n] = x[n] - alpha * x[n-1].
SampleBuffer pre_emphasize(const SampleBuffer& buf, double alpha);

// Partial trailing frames are discarded.
FrameMatrix frame_signal(const SampleBuffer& buf, double window_ms,
                         double hop_ms);

std::vector<double> hamming_window(std::size_t length);
FrameMatrix apply_hamming(const FrameMatrix& frames);

// Removes frames whose energy is more than `threshold_db` below the
// loudest frame.
FrameMatrix drop_low_energy(const FrameMatrix& frames, double threshold_db);

// Pre-emphasis, framing, optional energy gating and Hamming windowing.
FrameMatrix analysis_frames(const SampleBuffer& buf, const FramingConfig& cfg);

}  // namespace spkid
