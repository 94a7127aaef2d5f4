#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "spkid/classifiers.hpp"
#include "spkid/error.hpp"

namespace spkid {

void NbConfig::validate() const {
  if (!(epsilon_factor > 0.0))
    throw Error(ErrorCode::kConfigInvalid, "NB epsilon_factor must be positive");
}

NbModel nb_train(const Matrix& x, std::span<const std::string> labels,
                 const NbConfig& cfg) {
  cfg.validate();
  if (labels.size() != x.rows())
    throw Error(ErrorCode::kDimensionMismatch, "label count mismatch");
  if (x.empty()) throw Error(ErrorCode::kEmptyClass, "no training vectors");
  for (double v : x.data())
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFiniteFeature, "training vector contains non-finite values");

  NbModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < model.classes.size(); ++c) index[model.classes[c]] = c;

  const std::size_t k = model.classes.size();
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  std::vector<double> counts(k, 0.0);
  model.means = Matrix(k, d);
  model.variances = Matrix(k, d);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = index[labels[r]];
    counts[c] += 1.0;
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) model.means(c, j) += row[j];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0.0) throw Error(ErrorCode::kEmptyClass, model.classes[c]);
    for (std::size_t j = 0; j < d; ++j) model.means(c, j) /= counts[c];
  }
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t c = index[labels[r]];
    const auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = row[j] - model.means(c, j);
      model.variances(c, j) += diff * diff;
    }
  }

  // Smoothing term: epsilon_factor x the largest per-dimension variance of
  // the pooled data.
  double largest = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += x(r, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) var += (x(r, j) - mean) * (x(r, j) - mean);
    largest = std::max(largest, var / static_cast<double>(n));
  }
  double smoothing = cfg.epsilon_factor * largest;
  if (!(smoothing > 0.0)) smoothing = cfg.epsilon_factor;

  model.priors.resize(k);
  for (std::size_t c = 0; c < k; ++c) {
    model.priors[c] = counts[c] / static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j)
      model.variances(c, j) = model.variances(c, j) / counts[c] + smoothing;
  }
  return model;
}

std::vector<double> nb_log_joint(const NbModel& model, std::span<const double> x) {
  if (x.size() != model.means.cols())
    throw Error(ErrorCode::kDimensionMismatch, "NB input dimension mismatch");
  const double log_2pi = std::log(2.0 * std::numbers::pi);
  std::vector<double> out(model.classes.size());
  for (std::size_t c = 0; c < out.size(); ++c) {
    double acc = std::log(model.priors[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = model.variances(c, j);
      const double diff = x[j] - model.means(c, j);
      acc -= 0.5 * (log_2pi + std::log(var) + diff * diff / var);
    }
    out[c] = acc;
  }
  return out;
}

ScoreVector nb_score(const NbModel& model, std::span<const double> x) {
  const auto joint = nb_log_joint(model, x);
  const double hi = *std::max_element(joint.begin(), joint.end());
  ScoreVector out{model.classes, std::vector<double>(joint.size()), {}};
  double total = 0.0;
  for (std::size_t c = 0; c < joint.size(); ++c) {
    out.scores[c] = std::exp(joint[c] - hi);
    total += out.scores[c];
  }
  for (auto& s : out.scores) s /= total;
  return out;
}

}  // namespace spkid
