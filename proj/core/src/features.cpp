#include "spkid/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "spkid/error.hpp"

namespace spkid {
namespace {

constexpr int kNumMfcc = 12;

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

// filters x (fft_size/2 + 1) triangular weights.
Matrix mel_filterbank(const FrontendConfig& cfg, int sample_rate_hz) {
  const std::size_t n_bins = static_cast<std::size_t>(cfg.fft_size) / 2 + 1;
  const double high = std::min(cfg.mel_high_hz, sample_rate_hz / 2.0);
  const double mel_lo = hz_to_mel(cfg.mel_low_hz);
  const double mel_hi = hz_to_mel(high);
  const int nf = cfg.n_mel_filters;

  std::vector<double> edges(static_cast<std::size_t>(nf) + 2);
  for (std::size_t j = 0; j < edges.size(); ++j)
    edges[j] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(j) /
                                      (nf + 1));

  Matrix bank(static_cast<std::size_t>(nf), n_bins);
  for (std::size_t i = 0; i < static_cast<std::size_t>(nf); ++i) {
    const double left = edges[i], center = edges[i + 1], right = edges[i + 2];
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double f =
          static_cast<double>(k) * sample_rate_hz / cfg.fft_size;
      double w = 0.0;
      if (f > left && f <= center)
        w = (f - left) / (center - left);
      else if (f > center && f < right)
        w = (right - f) / (right - center);
      bank(i, k) = w;
    }
  }
  return bank;
}

double hz_to_bark(double hz) { return 6.0 * std::asinh(hz / 600.0); }
double bark_to_hz(double bark) { return 600.0 * std::sinh(bark / 6.0); }

int bark_band_count(const FrontendConfig& cfg, int sample_rate_hz) {
  if (cfg.n_bark_bands > 0) return cfg.n_bark_bands;
  return static_cast<int>(std::ceil(hz_to_bark(sample_rate_hz / 2.0))) + 1;
}

// Critical-band integration weights, one-Bark wide trapezoids on a Bark
// axis spanning 0..Nyquist.
Matrix bark_filterbank(int n_bands, int fft_size, int sample_rate_hz) {
  const std::size_t n_bins = static_cast<std::size_t>(fft_size) / 2 + 1;
  const double nyq_bark = hz_to_bark(sample_rate_hz / 2.0);
  const double step = nyq_bark / (n_bands - 1);
  Matrix bank(static_cast<std::size_t>(n_bands), n_bins);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n_bands); ++i) {
    const double mid = step * static_cast<double>(i);
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double bin_bark = hz_to_bark(static_cast<double>(k) *
                                         sample_rate_hz / fft_size);
      const double lof = bin_bark - mid - 0.5;
      const double hif = bin_bark - mid + 0.5;
      bank(i, k) = std::pow(10.0, std::min(0.0, std::min(hif, -2.5 * lof)));
    }
  }
  return bank;
}

// Equal-loudness weights at the Bark band centres.
std::vector<double> equal_loudness(int n_bands, int sample_rate_hz) {
  const double nyq_bark = hz_to_bark(sample_rate_hz / 2.0);
  std::vector<double> eql(static_cast<std::size_t>(n_bands));
  for (std::size_t i = 0; i < eql.size(); ++i) {
    const double fc = bark_to_hz(nyq_bark * static_cast<double>(i) /
                                 (n_bands - 1));
    const double fsq = fc * fc;
    const double ftmp = fsq + 1.6e5;
    eql[i] = (fsq / ftmp) * (fsq / ftmp) * ((fsq + 1.44e6) / (fsq + 9.61e6));
  }
  return eql;
}

// Returns prediction coefficients a[0..order] (a[0] = 1) and sets `error`.
std::vector<double> levinson_durbin(std::span<const double> r, int order,
                                    double& error) {
  std::vector<double> a(static_cast<std::size_t>(order) + 1, 0.0);
  a[0] = 1.0;
  error = r[0];
  if (!(error > 0.0) || !std::isfinite(error))
    throw Error(ErrorCode::kNumericalFailure,
                "zero-lag autocorrelation is not positive");
  std::vector<double> prev(a.size());
  for (int i = 1; i <= order; ++i) {
    double acc = r[static_cast<std::size_t>(i)];
    for (int j = 1; j < i; ++j)
      acc += a[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(i - j)];
    const double k = -acc / error;
    prev = a;
    for (int j = 1; j < i; ++j)
      a[static_cast<std::size_t>(j)] =
          prev[static_cast<std::size_t>(j)] +
          k * prev[static_cast<std::size_t>(i - j)];
    a[static_cast<std::size_t>(i)] = k;
    error *= 1.0 - k * k;
    if (!(error > 0.0) || !std::isfinite(error))
      throw Error(ErrorCode::kNumericalFailure,
                  "non-positive prediction error at order " + std::to_string(i));
  }
  return a;
}

// Cepstra c[0..n_out) of the all-pole model gain / A(z).
std::vector<double> lpc_to_cepstrum(std::span<const double> a, double gain,
                                    std::size_t n_out) {
  std::vector<double> c(n_out, 0.0);
  c[0] = std::log(gain);
  for (std::size_t n = 1; n < n_out; ++n) {
    double sum = 0.0;
    for (std::size_t m = 1; m < n; ++m)
      sum += static_cast<double>(n - m) * a[m] * c[n - m];
    const double an = n < a.size() ? a[n] : 0.0;
    c[n] = -(an + sum / static_cast<double>(n));
  }
  return c;
}

void check_fft(const FrameMatrix& frames, const FrontendConfig& cfg) {
  cfg.validate(frames.window_len_samples);
  if (frames.sample_rate_hz <= 0)
    throw Error(ErrorCode::kConfigInvalid, "sample rate must be positive");
}

}  // namespace

std::size_t dims_of(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc12: return 12;
    case FeatureKind::kRastaPlp13: return 13;
    case FeatureKind::kMfcc12Dd: return 36;
    case FeatureKind::kRastaPlp13Dd: return 39;
  }
  return 0;
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc12: return "MFCC12";
    case FeatureKind::kRastaPlp13: return "RASTAPLP13";
    case FeatureKind::kMfcc12Dd: return "MFCC12_DD";
    case FeatureKind::kRastaPlp13Dd: return "RASTAPLP13_DD";
  }
  return "?";
}

std::optional<FeatureKind> feature_kind_from_string(std::string_view name) {
  for (auto k : {FeatureKind::kMfcc12, FeatureKind::kRastaPlp13,
                 FeatureKind::kMfcc12Dd, FeatureKind::kRastaPlp13Dd})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

std::string_view to_string(FeatureSet set) {
  switch (set) {
    case FeatureSet::kF1: return "F1";
    case FeatureSet::kF2: return "F2";
    case FeatureSet::kF3: return "F3";
    case FeatureSet::kF4: return "F4";
    case FeatureSet::kF5: return "F5";
  }
  return "?";
}

std::optional<FeatureSet> feature_set_from_string(std::string_view name) {
  for (auto s : {FeatureSet::kF1, FeatureSet::kF2, FeatureSet::kF3,
                 FeatureSet::kF4, FeatureSet::kF5})
    if (to_string(s) == name) return s;
  return std::nullopt;
}

FeatureKind kind_of(FeatureSet set) {
  switch (set) {
    case FeatureSet::kF1: return FeatureKind::kMfcc12;
    case FeatureSet::kF2: return FeatureKind::kRastaPlp13;
    case FeatureSet::kF3: return FeatureKind::kMfcc12Dd;
    case FeatureSet::kF4: return FeatureKind::kRastaPlp13Dd;
    case FeatureSet::kF5: break;
  }
  throw Error(ErrorCode::kConfigInvalid,
              "F5 is a supervector fusion, not a frame-level stream");
}

FeatureFamily family_of(FeatureKind kind) {
  return kind == FeatureKind::kMfcc12 || kind == FeatureKind::kMfcc12Dd
             ? FeatureFamily::kMfcc
             : FeatureFamily::kRastaPlp;
}

std::string_view to_string(FeatureFamily family) {
  return family == FeatureFamily::kMfcc ? "mfcc" : "rasta_plp";
}

void validate(const FeatureMatrix& feat) {
  if (feat.dims() != dims_of(feat.kind))
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(to_string(feat.kind)) + " expects " +
                    std::to_string(dims_of(feat.kind)) + " dims, got " +
                    std::to_string(feat.dims()));
  for (double v : feat.vectors.data())
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFiniteFeature,
                  std::string(to_string(feat.kind)) + " contains non-finite values");
}

FeatureMatrix mfcc(const FrameMatrix& frames, const FrontendConfig& cfg) {
  check_fft(frames, cfg);
  const Matrix bank = mel_filterbank(cfg, frames.sample_rate_hz);
  const std::size_t nf = bank.rows();
  const std::size_t n_bins = bank.cols();

  // DCT-II basis rows 1..12 with orthonormal scaling.
  Matrix dct(kNumMfcc, nf);
  const double scale = std::sqrt(2.0 / static_cast<double>(nf));
  for (std::size_t k = 1; k <= kNumMfcc; ++k)
    for (std::size_t m = 0; m < nf; ++m)
      dct(k - 1, m) = scale * std::cos(std::numbers::pi * static_cast<double>(k) *
                                       (static_cast<double>(m) + 0.5) /
                                       static_cast<double>(nf));

  FeatureMatrix out{Matrix(frames.frame_count(), kNumMfcc),
                    FeatureKind::kMfcc12};
  std::vector<double> log_energy(nf);
  for (std::size_t f = 0; f < frames.frame_count(); ++f) {
    auto power = detail::power_spectrum(frames.frames.row(f),
                                        static_cast<std::size_t>(cfg.fft_size));
    for (auto& p : power) p = std::sqrt(p);
    for (std::size_t i = 0; i < nf; ++i) {
      double e = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) e += bank(i, k) * power[k];
      log_energy[i] = std::log(std::max(e, cfg.log_floor));
    }
    auto dst = out.vectors.row(f);
    for (std::size_t k = 0; k < kNumMfcc; ++k) {
      double acc = 0.0;
      for (std::size_t m = 0; m < nf; ++m) acc += dct(k, m) * log_energy[m];
      dst[k] = acc;
    }
  }
  return out;
}

std::vector<double> rasta_filter(std::span<const double> x, double pole) {
  // Numerator [0.2, 0.1, 0, -0.1, -0.2], applied as paired differences so a
  // constant trajectory gives exactly zero.
  std::vector<double> y(x.size(), 0.0);
  double prev = 0.0;
  for (std::size_t t = 4; t < x.size(); ++t) {
    const double acc = 0.2 * (x[t] - x[t - 4]) + 0.1 * (x[t - 1] - x[t - 3]);
    prev = acc + pole * prev;
    y[t] = prev;
  }
  return y;
}

FeatureMatrix rasta_plp(const FrameMatrix& frames, const FrontendConfig& cfg) {
  check_fft(frames, cfg);
  const int rate = frames.sample_rate_hz;
  const int n_bands = bark_band_count(cfg, rate);
  if (n_bands < 3)
    throw Error(ErrorCode::kConfigInvalid, "need at least 3 Bark bands");
  const Matrix bank = bark_filterbank(n_bands, cfg.fft_size, rate);
  const auto eql = equal_loudness(n_bands, rate);
  const std::size_t nb = static_cast<std::size_t>(n_bands);
  const std::size_t n_frames = frames.frame_count();

  // Log critical-band energies, band-major so each band is one trajectory.
  Matrix log_bands(nb, n_frames);
  for (std::size_t f = 0; f < n_frames; ++f) {
    const auto power = detail::power_spectrum(
        frames.frames.row(f), static_cast<std::size_t>(cfg.fft_size));
    for (std::size_t b = 0; b < nb; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < power.size(); ++k) e += bank(b, k) * power[k];
      log_bands(b, f) = std::log(std::max(e, cfg.log_floor));
    }
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const auto filtered = rasta_filter(log_bands.row(b), cfg.rasta_pole);
    std::copy(filtered.begin(), filtered.end(), log_bands.row(b).begin());
  }

  const std::size_t order = static_cast<std::size_t>(cfg.plp_model_order);
  const std::size_t n_ceps = order + 1;
  // Autocorrelation from the even-symmetric extension of the auditory
  // spectrum (length 2 * (nb - 1)) via an inverse cosine transform.
  const std::size_t n_sym = 2 * (nb - 1);
  Matrix idft(order + 1, n_sym);
  for (std::size_t k = 0; k <= order; ++k)
    for (std::size_t n = 0; n < n_sym; ++n)
      idft(k, n) = std::cos(2.0 * std::numbers::pi * static_cast<double>(k * n) /
                            static_cast<double>(n_sym)) /
                   static_cast<double>(n_sym);

  FeatureMatrix out{Matrix(n_frames, n_ceps), FeatureKind::kRastaPlp13};
  std::vector<double> aud(nb), sym(n_sym), r(order + 1);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t b = 0; b < nb; ++b)
      aud[b] = std::cbrt(eql[b] * std::exp(log_bands(b, f)));
    aud[0] = aud[1];
    aud[nb - 1] = aud[nb - 2];
    for (std::size_t n = 0; n < nb; ++n) sym[n] = aud[n];
    for (std::size_t n = nb; n < n_sym; ++n) sym[n] = aud[n_sym - n];
    for (std::size_t k = 0; k <= order; ++k) {
      double acc = 0.0;
      for (std::size_t n = 0; n < n_sym; ++n) acc += idft(k, n) * sym[n];
      r[k] = acc;
    }
    double error = 0.0;
    const auto a = levinson_durbin(r, cfg.plp_model_order, error);
    const auto c = lpc_to_cepstrum(a, error, n_ceps);
    std::copy(c.begin(), c.end(), out.vectors.row(f).begin());
  }
  return out;
}

FeatureMatrix deltas(const FeatureMatrix& feat, int width) {
  if (width < 1) throw Error(ErrorCode::kConfigInvalid, "delta width must be >= 1");
  const std::size_t n = feat.frames();
  const std::size_t d = feat.dims();
  double denom = 0.0;
  for (int th = 1; th <= width; ++th) denom += th * th;
  denom *= 2.0;

  FeatureMatrix out{Matrix(n, d), feat.kind};
  if (n == 0) return out;
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  for (std::size_t t = 0; t < n; ++t) {
    auto dst = out.vectors.row(t);
    for (int th = 1; th <= width; ++th) {
      const auto ti = static_cast<std::ptrdiff_t>(t);
      const auto fwd = static_cast<std::size_t>(std::min(ti + th, last));
      const auto back = static_cast<std::size_t>(std::max<std::ptrdiff_t>(ti - th, 0));
      const auto a = feat.vectors.row(fwd);
      const auto b = feat.vectors.row(back);
      for (std::size_t j = 0; j < d; ++j) dst[j] += th * (a[j] - b[j]);
    }
    for (auto& v : dst) v /= denom;
  }
  return out;
}

FeatureMatrix assemble_from_base(FeatureSet set, const FeatureMatrix& base,
                                 int delta_width) {
  const FeatureKind target = kind_of(set);
  const FeatureKind base_kind = family_of(target) == FeatureFamily::kMfcc
                                    ? FeatureKind::kMfcc12
                                    : FeatureKind::kRastaPlp13;
  if (base.kind != base_kind || base.dims() != dims_of(base_kind))
    throw Error(ErrorCode::kDimensionMismatch,
                std::string(to_string(set)) + " needs a " +
                    std::string(to_string(base_kind)) + " base stream");
  if (target == base_kind) return base;

  const FeatureMatrix d1 = deltas(base, delta_width);
  const FeatureMatrix d2 = deltas(d1, delta_width);
  const Matrix* parts[] = {&base.vectors, &d1.vectors, &d2.vectors};
  FeatureMatrix out{hstack(parts), target};
  validate(out);
  return out;
}

FeatureMatrix assemble_feature_set(FeatureSet set, const FrameMatrix& frames,
                                   const FrontendConfig& cfg) {
  const FeatureKind target = kind_of(set);
  const FeatureMatrix base = family_of(target) == FeatureFamily::kMfcc
                                 ? mfcc(frames, cfg)
                                 : rasta_plp(frames, cfg);
  return assemble_from_base(set, base, cfg.delta_width);
}

}  // namespace spkid
