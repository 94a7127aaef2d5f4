#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {
namespace {

constexpr long double kPi = 3.141592653589793238462643383279502884L;

long double normal_pdf(long double x, long double mean, long double var) {
  const long double z = x - mean;
  return std::exp(-z * z / (2.0L * var)) / std::sqrt(2.0L * kPi * var);
}

long double component_pdf(const spkid::GmmModel& m, std::size_t i, std::span<const double> x) {
  long double p = 1.0L;
  for (std::size_t j = 0; j < x.size(); ++j) p *= normal_pdf(x[j], m.means(i, j), m.variances(i, j));
  return p;
}

// |X_k|^2 for k = 0..n/2 of the zero-padded frame, by the definition.
std::vector<long double> dft_power(std::span<const double> frame, int n) {
  std::vector<long double> out(static_cast<std::size_t>(n / 2 + 1));
  for (int k = 0; k <= n / 2; ++k) {
    long double re = 0.0L, im = 0.0L;
    for (std::size_t t = 0; t < frame.size(); ++t) {
      const long double ang = -2.0L * kPi * k * static_cast<long double>(t) / n;
      re += frame[t] * std::cos(ang);
      im += frame[t] * std::sin(ang);
    }
    out[static_cast<std::size_t>(k)] = re * re + im * im;
  }
  return out;
}

long double mel(long double hz) { return 2595.0L * std::log10(1.0L + hz / 700.0L); }
long double inv_mel(long double m) { return 700.0L * (std::pow(10.0L, m / 2595.0L) - 1.0L); }

long double bark(long double hz) { return 6.0L * std::asinh(hz / 600.0L); }

// Solves the p x p system A a = rhs by Gaussian elimination with partial
// pivoting.
std::vector<long double> solve(std::vector<std::vector<long double>> a,
                               std::vector<long double> rhs) {
  const std::size_t n = rhs.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const long double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<long double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    long double acc = rhs[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return x;
}

}  // namespace

long double gmm_density(const spkid::GmmModel& model, std::span<const double> x) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < model.components(); ++i)
    total += model.weights[i] * component_pdf(model, i, x);
  return std::log(total);
}

std::vector<double> mfcc_frame(std::span<const double> frame, int sample_rate, int fft_size,
                               int n_filters, double low_hz, double high_hz) {
  const auto power = dft_power(frame, fft_size);
  const long double top = std::min<long double>(high_hz, sample_rate / 2.0L);
  const long double step = (mel(top) - mel(low_hz)) / (n_filters + 1);

  std::vector<long double> log_e(static_cast<std::size_t>(n_filters));
  for (int i = 0; i < n_filters; ++i) {
    const long double l = inv_mel(mel(low_hz) + step * i);
    const long double c = inv_mel(mel(low_hz) + step * (i + 1));
    const long double r = inv_mel(mel(low_hz) + step * (i + 2));
    long double e = 0.0L;
    for (std::size_t k = 0; k < power.size(); ++k) {
      const long double f = static_cast<long double>(k) * sample_rate / fft_size;
      const long double w = std::max(0.0L, std::min((f - l) / (c - l), (r - f) / (r - c)));
      e += w * std::sqrt(power[k]);
    }
    log_e[static_cast<std::size_t>(i)] = std::log(std::max(e, 1e-10L));
  }
  std::vector<double> out(12);
  for (int k = 1; k <= 12; ++k) {
    long double acc = 0.0L;
    for (int m = 0; m < n_filters; ++m)
      acc += log_e[static_cast<std::size_t>(m)] * std::cos(kPi * k * (m + 0.5L) / n_filters);
    out[static_cast<std::size_t>(k - 1)] =
        static_cast<double>(acc * std::sqrt(2.0L / n_filters));
  }
  return out;
}

spkid::Matrix rasta_plp(const spkid::Matrix& frames, int sample_rate, int fft_size,
                        double pole) {
  const long double nyq = bark(sample_rate / 2.0L);
  const int nb = static_cast<int>(std::ceil(static_cast<double>(nyq))) + 1;
  const std::size_t n_frames = frames.rows();
  const std::size_t n_bins = static_cast<std::size_t>(fft_size / 2 + 1);

  // log band energies, frame-major
  std::vector<std::vector<long double>> logb(n_frames, std::vector<long double>(nb));
  for (std::size_t t = 0; t < n_frames; ++t) {
    const auto power = dft_power(frames.row(t), fft_size);
    for (int b = 0; b < nb; ++b) {
      const long double centre = nyq * b / (nb - 1);
      long double e = 0.0L;
      for (std::size_t k = 0; k < n_bins; ++k) {
        const long double d =
            bark(static_cast<long double>(k) * sample_rate / fft_size) - centre;
        long double w = 1.0L;
        if (d < -0.5L) w = std::pow(10.0L, d + 0.5L);
        else if (d > 0.5L) w = std::pow(10.0L, -2.5L * (d - 0.5L));
        e += w * power[k];
      }
      logb[t][static_cast<std::size_t>(b)] = std::log(std::max(e, 1e-10L));
    }
  }

  // RASTA band-pass, written as the difference equation per band.
  std::vector<std::vector<long double>> filt(n_frames, std::vector<long double>(nb, 0.0L));
  for (int b = 0; b < nb; ++b) {
    const auto bi = static_cast<std::size_t>(b);
    for (std::size_t t = 4; t < n_frames; ++t) {
      const long double prev = t > 4 ? filt[t - 1][bi] : 0.0L;
      filt[t][bi] = pole * prev + 0.2L * logb[t][bi] + 0.1L * logb[t - 1][bi] -
                    0.1L * logb[t - 3][bi] - 0.2L * logb[t - 4][bi];
    }
  }

  spkid::Matrix out(n_frames, 13);
  const int p = 12;
  for (std::size_t t = 0; t < n_frames; ++t) {
    std::vector<long double> aud(static_cast<std::size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      const long double fc = 600.0L * std::sinh(nyq * b / (nb - 1) / 6.0L);
      const long double f2 = fc * fc;
      const long double eql = std::pow(f2 / (f2 + 1.6e5L), 2) * (f2 + 1.44e6L) / (f2 + 9.61e6L);
      aud[static_cast<std::size_t>(b)] =
          std::cbrt(eql * std::exp(filt[t][static_cast<std::size_t>(b)]));
    }
    aud[0] = aud[1];
    aud[static_cast<std::size_t>(nb - 1)] = aud[static_cast<std::size_t>(nb - 2)];

    // Real inverse DFT of the even extension, folded to a cosine series.
    const int ns = 2 * (nb - 1);
    std::vector<long double> r(static_cast<std::size_t>(p + 1));
    for (int k = 0; k <= p; ++k) {
      long double acc = aud[0] + (k % 2 ? -1.0L : 1.0L) * aud[static_cast<std::size_t>(nb - 1)];
      for (int n = 1; n < nb - 1; ++n)
        acc += 2.0L * aud[static_cast<std::size_t>(n)] * std::cos(kPi * k * n / (nb - 1));
      r[static_cast<std::size_t>(k)] = acc / ns;
    }

    // Normal equations sum_j a_j r|i-j| = -r_i.
    std::vector<std::vector<long double>> toeplitz(p, std::vector<long double>(p));
    std::vector<long double> rhs(p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) toeplitz[i][j] = r[static_cast<std::size_t>(std::abs(i - j))];
      rhs[i] = -r[static_cast<std::size_t>(i + 1)];
    }
    const auto sol = solve(toeplitz, rhs);
    std::vector<long double> a(static_cast<std::size_t>(p + 1), 0.0L);
    a[0] = 1.0L;
    long double gain = r[0];
    for (int j = 1; j <= p; ++j) {
      a[static_cast<std::size_t>(j)] = sol[static_cast<std::size_t>(j - 1)];
      gain += a[static_cast<std::size_t>(j)] * r[static_cast<std::size_t>(j)];
    }

    std::vector<long double> c(13, 0.0L);
    c[0] = std::log(gain);
    for (int n = 1; n <= 12; ++n) {
      long double acc = -a[static_cast<std::size_t>(n)];
      for (int k = 1; k < n; ++k)
        acc -= (static_cast<long double>(k) / n) * c[static_cast<std::size_t>(k)] *
               a[static_cast<std::size_t>(n - k)];
      c[static_cast<std::size_t>(n)] = acc;
    }
    for (std::size_t j = 0; j < 13; ++j) out(t, j) = static_cast<double>(c[j]);
  }
  return out;
}

spkid::Matrix map_means(const spkid::GmmModel& ubm, const spkid::Matrix& data, double relevance) {
  const std::size_t m = ubm.components();
  const std::size_t d = ubm.dim();
  std::vector<long double> n(m, 0.0L);
  std::vector<std::vector<long double>> f(m, std::vector<long double>(d, 0.0L));
  for (std::size_t t = 0; t < data.rows(); ++t) {
    const auto x = data.row(t);
    std::vector<long double> p(m);
    long double total = 0.0L;
    for (std::size_t i = 0; i < m; ++i) total += p[i] = ubm.weights[i] * component_pdf(ubm, i, x);
    for (std::size_t i = 0; i < m; ++i) {
      const long double g = p[i] / total;
      n[i] += g;
      for (std::size_t j = 0; j < d; ++j) f[i][j] += g * x[j];
    }
  }
  spkid::Matrix out(m, d);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j)
      out(i, j) = static_cast<double>((f[i][j] + relevance * ubm.means(i, j)) / (n[i] + relevance));
  return out;
}

bool hard_margin_2d(const spkid::Matrix& x, std::span<const int> y, Hyperplane* out) {
  const std::size_t n = x.rows();
  double best = std::numeric_limits<double>::infinity();
  auto consider = [&](const Hyperplane& h) {
    for (std::size_t i = 0; i < n; ++i)
      if (y[i] * h(x(i, 0), x(i, 1)) < 1.0 - 1e-9) return;
    const double norm = h.w0 * h.w0 + h.w1 * h.w1;
    if (norm < best) {
      best = norm;
      *out = h;
    }
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (y[i] != 1 || y[j] != -1) continue;
      // Two support vectors: the perpendicular bisector.
      const double dx = x(i, 0) - x(j, 0), dy = x(i, 1) - x(j, 1);
      const double len2 = dx * dx + dy * dy;
      Hyperplane h{2.0 * dx / len2, 2.0 * dy / len2, 0.0};
      h.b = 1.0 - (h.w0 * x(i, 0) + h.w1 * x(i, 1));
      consider(h);
    }
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (y[a] != y[b]) continue;
      // Two same-class support vectors fix the normal direction.
      const double n0 = -(x(b, 1) - x(a, 1)), n1 = x(b, 0) - x(a, 0);
      for (std::size_t c = 0; c < n; ++c) {
        if (y[c] == y[a]) continue;
        const double den = n0 * (x(a, 0) - x(c, 0)) + n1 * (x(a, 1) - x(c, 1));
        if (std::abs(den) < 1e-12) continue;
        const double s = y[a];
        const double t = 2.0 * s / den;
        Hyperplane h{t * n0, t * n1, 0.0};
        h.b = s - (h.w0 * x(a, 0) + h.w1 * x(a, 1));
        consider(h);
      }
    }
  }
  return std::isfinite(best);
}

std::size_t nb_argmax(const spkid::NbModel& model, std::span<const double> x) {
  std::size_t best = 0;
  long double best_p = -1.0L;
  for (std::size_t c = 0; c < model.classes.size(); ++c) {
    long double p = model.priors[c];
    for (std::size_t j = 0; j < x.size(); ++j)
      p *= normal_pdf(x[j], model.means(c, j), model.variances(c, j));
    if (p > best_p) {
      best_p = p;
      best = c;
    }
  }
  return best;
}

}  // namespace oracle
