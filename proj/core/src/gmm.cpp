#include "spkid/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "parallel.hpp"
#include "spkid/error.hpp"
#include "spkid/rng.hpp"

namespace spkid {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t kChunkFrames = 1024;
constexpr double kMinOccupancy = 1e-6;
constexpr double kAbsoluteVarianceFloor = 1e-10;

// Sufficient statistics accumulated over one block of frames.
struct Stats {
  double log_likelihood = 0.0;
  std::vector<double> occupancy;  // M
  Matrix first;                   // M x d
  Matrix second;                  // M x d

  Stats(std::size_t m, std::size_t d)
      : occupancy(m, 0.0), first(m, d), second(m, d) {}

  void add(const Stats& o) {
    log_likelihood += o.log_likelihood;
    for (std::size_t i = 0; i < occupancy.size(); ++i) occupancy[i] += o.occupancy[i];
    auto f = first.data();
    auto of = o.first.data();
    for (std::size_t i = 0; i < f.size(); ++i) f[i] += of[i];
    auto s = second.data();
    auto os = o.second.data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += os[i];
  }
};

// Frames are split into fixed-size chunks; each chunk is accumulated on its
// own and the chunks are summed in index order, so the result is the same
// for any number of worker threads.
Stats accumulate(const GmmModel& model, const Matrix& data, bool second_order) {
  const std::size_t m = model.components();
  const std::size_t d = model.dim();
  const GmmEvaluator eval(model);
  const std::size_t n_chunks = (data.rows() + kChunkFrames - 1) / kChunkFrames;
  const std::size_t batch = std::max<std::size_t>(1, 4 * detail::worker_count(n_chunks));

  Stats total(m, d);
  for (std::size_t first_chunk = 0; first_chunk < n_chunks; first_chunk += batch) {
    const std::size_t count = std::min(batch, n_chunks - first_chunk);
    std::vector<Stats> partial(count, Stats(m, d));
    detail::parallel_for(count, [&](std::size_t c) {
      Stats& st = partial[c];
      std::vector<double> post(m);
      const std::size_t begin = (first_chunk + c) * kChunkFrames;
      const std::size_t end = std::min(begin + kChunkFrames, data.rows());
      for (std::size_t t = begin; t < end; ++t) {
        const auto x = data.row(t);
        st.log_likelihood += eval.responsibilities(x, post);
        for (std::size_t i = 0; i < m; ++i) {
          const double g = post[i];
          if (g == 0.0) continue;
          st.occupancy[i] += g;
          auto f = st.first.row(i);
          for (std::size_t j = 0; j < d; ++j) f[j] += g * x[j];
          if (second_order) {
            auto s = st.second.row(i);
            for (std::size_t j = 0; j < d; ++j) s[j] += g * x[j] * x[j];
          }
        }
      }
    });
    for (const Stats& st : partial) total.add(st);
  }
  return total;
}

void check_data(const Matrix& data, std::size_t d_expected) {
  if (d_expected != 0 && data.cols() != d_expected)
    throw Error(ErrorCode::kDimensionMismatch,
                "data has " + std::to_string(data.cols()) + " dims, model has " +
                    std::to_string(d_expected));
  for (double v : data.data())
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFiniteFeature, "training data contains non-finite values");
}

std::vector<std::size_t> kmeans_plus_plus(const Matrix& data, std::size_t m,
                                          Rng& rng) {
  const std::size_t n = data.rows();
  std::vector<std::size_t> centers;
  centers.reserve(m);
  centers.push_back(rng.index(n));
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (centers.size() < m) {
    const auto c = data.row(centers.back());
    double total = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const auto x = data.row(t);
      double d2 = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) d2 += (x[j] - c[j]) * (x[j] - c[j]);
      dist[t] = std::min(dist[t], d2);
      total += dist[t];
    }
    if (!(total > 0.0)) {
      centers.push_back(rng.index(n));
      continue;
    }
    const double target = rng.uniform() * total;
    double cum = 0.0;
    std::size_t pick = n - 1;
    for (std::size_t t = 0; t < n; ++t) {
      cum += dist[t];
      if (cum > target && dist[t] > 0.0) {
        pick = t;
        break;
      }
    }
    centers.push_back(pick);
  }
  return centers;
}

}  // namespace

void validate(const GmmModel& model) {
  const std::size_t m = model.components();
  if (m == 0) throw Error(ErrorCode::kConfigInvalid, "GMM has no components");
  if (model.means.rows() != m || model.variances.rows() != m ||
      model.variances.cols() != model.means.cols() || model.dim() == 0)
    throw Error(ErrorCode::kDimensionMismatch, "GMM parameter shapes disagree");
  double sum = 0.0;
  for (double w : model.weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw Error(ErrorCode::kConfigInvalid, "GMM weight negative or non-finite");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw Error(ErrorCode::kConfigInvalid, "GMM weights do not sum to 1");
  for (double v : model.means.data())
    if (!std::isfinite(v)) throw Error(ErrorCode::kConfigInvalid, "GMM mean non-finite");
  for (double v : model.variances.data())
    if (!(v > 0.0) || !std::isfinite(v))
      throw Error(ErrorCode::kConfigInvalid, "GMM variance not positive");
}

double log_sum_exp(std::span<const double> values) {
  double hi = kNegInf;
  for (double v : values) hi = std::max(hi, v);
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - hi);
  return hi + std::log(acc);
}

GmmEvaluator::GmmEvaluator(const GmmModel& model)
    : model_(&model),
      log_const_(model.components()),
      inv_var_(model.components(), model.dim()) {
  const std::size_t d = model.dim();
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  for (std::size_t i = 0; i < model.components(); ++i) {
    double log_det = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      log_det += std::log(model.variances(i, j));
      inv_var_(i, j) = 1.0 / model.variances(i, j);
    }
    const double w = model.weights[i];
    log_const_[i] = (w > 0.0 ? std::log(w) : kNegInf) -
                    0.5 * (static_cast<double>(d) * log_2pi + log_det);
  }
}

void GmmEvaluator::component_log_densities(std::span<const double> x,
                                           std::span<double> out) const {
  const std::size_t d = model_->dim();
  if (x.size() != d)
    throw Error(ErrorCode::kDimensionMismatch,
                "vector has " + std::to_string(x.size()) + " dims, model has " +
                    std::to_string(d));
  for (std::size_t i = 0; i < log_const_.size(); ++i) {
    const auto mu = model_->means.row(i);
    const auto iv = inv_var_.row(i);
    double q = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = x[j] - mu[j];
      q += diff * diff * iv[j];
    }
    out[i] = log_const_[i] - 0.5 * q;
  }
}

double GmmEvaluator::log_density(std::span<const double> x) const {
  std::vector<double> comp(log_const_.size());
  component_log_densities(x, comp);
  return log_sum_exp(comp);
}

double GmmEvaluator::responsibilities(std::span<const double> x,
                                      std::span<double> post) const {
  component_log_densities(x, post);
  const double total = log_sum_exp(post);
  for (auto& p : post) p = std::exp(p - total);
  return total;
}

double gmm_log_density(const GmmModel& model, std::span<const double> x) {
  return GmmEvaluator(model).log_density(x);
}

void EmConfig::validate() const {
  if (components < 1) throw Error(ErrorCode::kConfigInvalid, "EM needs components >= 1");
  if (max_iterations < 1)
    throw Error(ErrorCode::kConfigInvalid, "EM needs max_iterations >= 1");
  if (!(log_likelihood_rel_tol > 0.0))
    throw Error(ErrorCode::kConfigInvalid, "EM tolerance must be positive");
  if (!(variance_floor_factor > 0.0))
    throw Error(ErrorCode::kConfigInvalid, "variance floor factor must be positive");
}

GmmModel em_fit(const Matrix& data, const EmConfig& cfg, EmReport* report) {
  cfg.validate();
  const std::size_t m = static_cast<std::size_t>(cfg.components);
  const std::size_t n = data.rows();
  const std::size_t d = data.cols();
  if (d == 0) throw Error(ErrorCode::kInsufficientData, "data has zero dimensions");
  if (n < m)
    throw Error(ErrorCode::kInsufficientData,
                std::to_string(n) + " frames for " + std::to_string(m) + " components");
  check_data(data, 0);

  // Global statistics give the initial variances and the floor.
  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data(t, j);
  for (auto& v : mean) v /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = data(t, j) - mean[j];
      var[j] += diff * diff;
    }
  std::vector<double> floor(d);
  for (std::size_t j = 0; j < d; ++j) {
    var[j] /= static_cast<double>(n);
    floor[j] = std::max(cfg.variance_floor_factor * var[j], kAbsoluteVarianceFloor);
  }

  Rng rng(cfg.rng_seed);
  std::vector<std::size_t> seeds;
  if (cfg.init_method == EmInit::kKmeansPlusPlus) {
    seeds = kmeans_plus_plus(data, m, rng);
  } else {
    for (std::size_t i = 0; i < m; ++i) seeds.push_back(rng.index(n));
  }

  GmmModel model{std::vector<double>(m, 1.0 / static_cast<double>(m)),
                 Matrix(m, d), Matrix(m, d)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      model.means(i, j) = data(seeds[i], j);
      model.variances(i, j) = std::max(var[j], floor[j]);
    }

  EmReport local;
  EmReport& rep = report ? *report : local;
  rep = EmReport{};
  std::vector<bool> flagged(m, false);

  double prev_ll = kNegInf;
  for (int it = 0;; ++it) {
    const Stats st = accumulate(model, data, /*second_order=*/true);
    rep.log_likelihood.push_back(st.log_likelihood);
    if (!std::isfinite(st.log_likelihood))
      throw Error(ErrorCode::kNumericalFailure, "EM log-likelihood is not finite");
    if (it > 0 &&
        (st.log_likelihood - prev_ll) / std::abs(prev_ll) < cfg.log_likelihood_rel_tol) {
      rep.converged = true;
      break;
    }
    if (it == cfg.max_iterations) break;
    prev_ll = st.log_likelihood;

    // M-step. Components without support keep their parameters and weight;
    // the remaining mass is shared in proportion to occupancy.
    double kept_weight = 0.0;
    double live_occupancy = 0.0;
    std::vector<bool> degenerate(m, false);
    for (std::size_t i = 0; i < m; ++i) {
      if (st.occupancy[i] < kMinOccupancy) {
        degenerate[i] = true;
        kept_weight += model.weights[i];
        if (!flagged[i]) {
          flagged[i] = true;
          rep.degenerate_components.push_back(i);
        }
      } else {
        live_occupancy += st.occupancy[i];
      }
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (degenerate[i]) continue;
      const double occ = st.occupancy[i];
      model.weights[i] = (1.0 - kept_weight) * occ / live_occupancy;
      for (std::size_t j = 0; j < d; ++j) {
        const double mu = st.first(i, j) / occ;
        const double v = st.second(i, j) / occ - mu * mu;
        model.means(i, j) = mu;
        model.variances(i, j) = std::max(v, floor[j]);
      }
    }
    rep.iterations = it + 1;
  }
  validate(model);
  return model;
}

void MapConfig::validate() const {
  if (!(relevance_factor > 0.0) || !std::isfinite(relevance_factor))
    throw Error(ErrorCode::kConfigInvalid, "relevance factor must be positive");
}

GmmModel map_adapt_means(const GmmModel& ubm, const Matrix& data,
                         const MapConfig& cfg) {
  cfg.validate();
  check_data(data, ubm.dim());
  if (data.rows() == 0) return ubm;  // no evidence: alpha = 0 everywhere
  const Stats st = accumulate(ubm, data, /*second_order=*/false);
  const double r = cfg.relevance_factor;

  GmmModel out = ubm;
  for (std::size_t i = 0; i < ubm.components(); ++i) {
    const double n = st.occupancy[i];
    // alpha E + (1 - alpha) mu with alpha = n / (n + r), written so that
    // n = 0 falls back to the prior mean without a division by zero.
    for (std::size_t j = 0; j < ubm.dim(); ++j)
      out.means(i, j) = (st.first(i, j) + r * ubm.means(i, j)) / (n + r);
  }
  return out;
}

Supervector extract_supervector(const GmmModel& model, SupervectorOptions opts) {
  Supervector sv;
  sv.components = model.components();
  sv.dim = model.dim();
  sv.values.reserve(sv.components * sv.dim);
  for (std::size_t i = 0; i < sv.components; ++i)
    for (std::size_t j = 0; j < sv.dim; ++j) {
      double v = model.means(i, j);
      if (opts.kl_scaling)
        v *= std::sqrt(model.weights[i]) / std::sqrt(model.variances(i, j));
      sv.values.push_back(v);
    }
  return sv;
}

Matrix split_supervector(const Supervector& sv) {
  if (sv.values.size() != sv.components * sv.dim)
    throw Error(ErrorCode::kDimensionMismatch, "supervector length is not M * d");
  Matrix out(sv.components, sv.dim);
  std::copy(sv.values.begin(), sv.values.end(), out.data().begin());
  return out;
}

}  // namespace spkid
