#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spkid/audio_frontend.hpp"
#include "spkid/matrix.hpp"

namespace spkid {

enum class FeatureKind : std::uint32_t {
  kMfcc12 = 1,
  kRastaPlp13 = 2,
  kMfcc12Dd = 3,
  kRastaPlp13Dd = 4,
};

std::size_t dims_of(FeatureKind kind);
std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> feature_kind_from_string(std::string_view name);

// The five feature sets of the evaluation grid. F5 is not a frame-level
// stream: it is the concatenation of the F1 and F2 supervectors.
enum class FeatureSet { kF1 = 1, kF2, kF3, kF4, kF5 };

std::string_view to_string(FeatureSet set);
std::optional<FeatureSet> feature_set_from_string(std::string_view name);

// Frame-level stream backing F1..F4. Throws for F5.
FeatureKind kind_of(FeatureSet set);

// Base coefficient family (MFCC or RASTA-PLP) a feature set is built on.
enum class FeatureFamily { kMfcc, kRastaPlp };
FeatureFamily family_of(FeatureKind kind);
std::string_view to_string(FeatureFamily family);

struct FeatureMatrix {
  Matrix vectors;  // frames x dims
  FeatureKind kind = FeatureKind::kMfcc12;

  std::size_t frames() const { return vectors.rows(); }
  std::size_t dims() const { return vectors.cols(); }
};

// Checks the dims/kind contract and finiteness; throws DimensionMismatch or
// NonFiniteFeature.
void validate(const FeatureMatrix& feat);

struct FrontendConfig {
  FramingConfig framing;
  int n_mel_filters = 26;
  int fft_size = 512;
  double mel_low_hz = 300.0;
  double mel_high_hz = 8000.0;  // clamped to Nyquist
  int plp_model_order = 12;
  double rasta_pole = 0.98;
  int n_bark_bands = 0;  // 0 = ceil(bark(Nyquist)) + 1, i.e. 21 at 16 kHz
  int delta_width = 2;
  double log_floor = 1e-10;

  // Throws ConfigInvalid. `window_len` is checked against fft_size when > 0.
  void validate(std::size_t window_len = 0) const;
  std::uint64_t hash() const;
};

// 12 cepstra c1..c12 of the log mel filterbank (c0 dropped).
FeatureMatrix mfcc(const FrameMatrix& frames, const FrontendConfig& cfg);

// 13 cepstra c0..c12 from an order-12 RASTA-PLP analysis.
FeatureMatrix rasta_plp(const FrameMatrix& frames, const FrontendConfig& cfg);

// Band-pass RASTA filter over one log-energy trajectory. The first four
// outputs are zero while the FIR history fills.
std::vector<double> rasta_filter(std::span<const double> trajectory,
                                 double pole);

// Regression deltas with edge replication.
FeatureMatrix deltas(const FeatureMatrix& feat, int width);

// Builds F1..F4 from windowed frames.
FeatureMatrix assemble_feature_set(FeatureSet set, const FrameMatrix& frames,
                                   const FrontendConfig& cfg);

// Builds F1..F4 from an already computed base stream (MFCC12 for F1/F3,
// RASTAPLP13 for F2/F4).
FeatureMatrix assemble_from_base(FeatureSet set, const FeatureMatrix& base,
                                 int delta_width);

// Binary feature archive:
//   magic "SPKFEAT1" | u32 kind | u32 dims | u64 frames | u64 config_hash |
//   frames*dims float32, row-major; all little-endian.
struct FeatureArchive {
  FeatureMatrix features;
  std::uint64_t config_hash = 0;
};

void write_feature_archive(const std::filesystem::path& path,
                           const FeatureMatrix& feat,
                           std::uint64_t config_hash);
FeatureArchive read_feature_archive(const std::filesystem::path& path);

}  // namespace spkid
