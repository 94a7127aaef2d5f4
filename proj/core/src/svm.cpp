#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "spkid/classifiers.hpp"
#include "spkid/error.hpp"
#include "spkid/rng.hpp"

namespace spkid {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_finite(const Matrix& x) {
  for (double v : x.data())
    if (!std::isfinite(v))
      throw Error(ErrorCode::kNonFiniteFeature, "training vector contains non-finite values");
}

}  // namespace

void check_normalized(const ScoreVector& s, double tol) {
  if (s.scores.size() != s.speakers.size())
    throw Error(ErrorCode::kNotNormalized, "score/speaker count mismatch");
  double sum = 0.0;
  for (double v : s.scores) {
    if (!(v >= 0.0))
      throw Error(ErrorCode::kNotNormalized, "negative or NaN score");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorCode::kNotNormalized, "scores sum to " + std::to_string(sum));
}

MinMaxScaler fit_minmax(const Matrix& train) {
  if (train.empty())
    throw Error(ErrorCode::kEmptyTrainingSet, "cannot fit a scaler on no vectors");
  MinMaxScaler s;
  const auto first = train.row(0);
  s.min.assign(first.begin(), first.end());
  s.max = s.min;
  for (std::size_t r = 1; r < train.rows(); ++r) {
    const auto row = train.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) {
      s.min[j] = std::min(s.min[j], row[j]);
      s.max[j] = std::max(s.max[j], row[j]);
    }
  }
  return s;
}

std::vector<double> apply_minmax(const MinMaxScaler& scaler,
                                 std::span<const double> x) {
  if (x.size() != scaler.min.size())
    throw Error(ErrorCode::kDimensionMismatch, "scaler dimension mismatch");
  std::vector<double> out(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double range = scaler.max[j] - scaler.min[j];
    out[j] = range > 0.0 ? std::clamp((x[j] - scaler.min[j]) / range, 0.0, 1.0)
                         : 0.5;
  }
  return out;
}

Matrix apply_minmax(const MinMaxScaler& scaler, const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto scaled = apply_minmax(scaler, x.row(r));
    std::copy(scaled.begin(), scaled.end(), out.row(r).begin());
  }
  return out;
}

void SvmConfig::validate() const {
  if (!(c > 0.0)) throw Error(ErrorCode::kConfigInvalid, "SVM C must be positive");
  if (!(tol > 0.0)) throw Error(ErrorCode::kConfigInvalid, "SVM tol must be positive");
  if (max_passes < 1 || max_sweeps < 1)
    throw Error(ErrorCode::kConfigInvalid, "SVM max_passes/max_sweeps must be >= 1");
}

double BinarySvm::decision(std::span<const double> x) const {
  if (x.size() != weights.size())
    throw Error(ErrorCode::kDimensionMismatch, "SVM input dimension mismatch");
  return dot(weights, x) + bias;
}

BinarySvm smo_train(const Matrix& x, std::span<const int> y,
                    const SvmConfig& cfg, SmoReport* report) {
  cfg.validate();
  const std::size_t m = x.rows();
  if (y.size() != m) throw Error(ErrorCode::kDimensionMismatch, "label count mismatch");
  bool has_pos = false, has_neg = false;
  for (int label : y) {
    if (label == 1) has_pos = true;
    else if (label == -1) has_neg = true;
    else throw Error(ErrorCode::kConfigInvalid, "SVM labels must be +1 or -1");
  }
  if (!has_pos || !has_neg)
    throw Error(ErrorCode::kSingleClassInput, "SVM training needs both labels");
  check_finite(x);

  Matrix gram(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) gram(i, j) = gram(j, i) = dot(x.row(i), x.row(j));

  const double c = cfg.c;
  std::vector<double> alpha(m, 0.0);
  double b = 0.0;
  auto f = [&](std::size_t i) {
    double acc = b;
    for (std::size_t k = 0; k < m; ++k)
      if (alpha[k] != 0.0) acc += alpha[k] * y[k] * gram(k, i);
    return acc;
  };

  Rng rng(cfg.seed);
  int passes = 0;
  int sweeps = 0;
  while (passes < cfg.max_passes && sweeps < cfg.max_sweeps) {
    int changed = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double yi = y[i];
      const double ei = f(i) - yi;
      if (!((yi * ei < -cfg.tol && alpha[i] < c) || (yi * ei > cfg.tol && alpha[i] > 0.0)))
        continue;
      std::size_t j = rng.index(m - 1);
      if (j >= i) ++j;
      const double yj = y[j];
      const double ej = f(j) - yj;
      const double ai_old = alpha[i];
      const double aj_old = alpha[j];
      double lo, hi;
      if (y[i] != y[j]) {
        lo = std::max(0.0, aj_old - ai_old);
        hi = std::min(c, c + aj_old - ai_old);
      } else {
        lo = std::max(0.0, ai_old + aj_old - c);
        hi = std::min(c, ai_old + aj_old);
      }
      if (lo >= hi) continue;
      const double eta = 2.0 * gram(i, j) - gram(i, i) - gram(j, j);
      if (eta >= 0.0) continue;
      double aj = std::clamp(aj_old - yj * (ei - ej) / eta, lo, hi);
      if (std::abs(aj - aj_old) < 1e-5) continue;
      double ai = std::clamp(ai_old + yi * yj * (aj_old - aj), 0.0, c);
      alpha[i] = ai;
      alpha[j] = aj;
      const double b1 = b - ei - yi * (ai - ai_old) * gram(i, i) -
                        yj * (aj - aj_old) * gram(i, j);
      const double b2 = b - ej - yi * (ai - ai_old) * gram(i, j) -
                        yj * (aj - aj_old) * gram(j, j);
      if (ai > 0.0 && ai < c) b = b1;
      else if (aj > 0.0 && aj < c) b = b2;
      else b = 0.5 * (b1 + b2);
      ++changed;
    }
    ++sweeps;
    passes = changed == 0 ? passes + 1 : 0;
  }

  BinarySvm svm;
  svm.bias = b;
  svm.weights.assign(x.cols(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] <= 0.0) continue;
    svm.support_vectors.append_row(x.row(i));
    svm.alphas.push_back(alpha[i]);
    svm.coefficients.push_back(alpha[i] * y[i]);
    const auto row = x.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) svm.weights[j] += alpha[i] * y[i] * row[j];
  }
  if (svm.support_vectors.empty()) svm.support_vectors = Matrix(0, x.cols());

  if (report) {
    report->sweeps = sweeps;
    report->converged = passes >= cfg.max_passes;
    report->alphas = alpha;
    report->training_errors = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double fi = svm.decision(x.row(i));
      if ((fi >= 0.0 ? 1 : -1) != y[i]) ++report->training_errors;
    }
  }
  return svm;
}

OvoSvmModel ovo_train(const Matrix& x, std::span<const std::string> labels,
                      const SvmConfig& cfg) {
  if (labels.size() != x.rows())
    throw Error(ErrorCode::kDimensionMismatch, "label count mismatch");
  OvoSvmModel model;
  model.classes.assign(labels.begin(), labels.end());
  std::sort(model.classes.begin(), model.classes.end());
  model.classes.erase(std::unique(model.classes.begin(), model.classes.end()),
                      model.classes.end());
  if (model.classes.size() < 2)
    throw Error(ErrorCode::kSingleClassInput, "one-vs-one needs at least 2 classes");

  std::map<std::string, std::size_t> index;
  for (std::size_t k = 0; k < model.classes.size(); ++k) index[model.classes[k]] = k;
  std::vector<std::vector<std::size_t>> members(model.classes.size());
  for (std::size_t r = 0; r < labels.size(); ++r) members[index[labels[r]]].push_back(r);

  model.scaler = fit_minmax(x);
  const Matrix scaled = apply_minmax(model.scaler, x);

  const std::size_t k = model.classes.size();
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = a + 1; b < k; ++b) {
      Matrix sub;
      std::vector<int> y;
      for (std::size_t r : members[a]) {
        sub.append_row(scaled.row(r));
        y.push_back(1);
      }
      for (std::size_t r : members[b]) {
        sub.append_row(scaled.row(r));
        y.push_back(-1);
      }
      SvmConfig pair_cfg = cfg;
      pair_cfg.seed = cfg.seed + 7919 * model.machines.size();
      model.machines.push_back({a, b, smo_train(sub, y, pair_cfg)});
    }
  }
  return model;
}

ScoreVector ovo_score(const OvoSvmModel& model, std::span<const double> x) {
  const auto scaled = apply_minmax(model.scaler, x);
  const std::size_t k = model.classes.size();
  std::vector<double> votes(k, 0.0);
  std::vector<double> margins(k, 0.0);
  for (const auto& machine : model.machines) {
    const double f = machine.svm.decision(scaled);
    votes[f >= 0.0 ? machine.positive : machine.negative] += 1.0;
    margins[machine.positive] += f;
    margins[machine.negative] -= f;
  }
  ScoreVector out{model.classes, std::vector<double>(k), margins};
  const double total = static_cast<double>(model.machines.size());
  for (std::size_t c = 0; c < k; ++c) out.scores[c] = votes[c] / total;
  return out;
}

}  // namespace spkid
