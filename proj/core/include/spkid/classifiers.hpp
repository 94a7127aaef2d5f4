#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spkid/matrix.hpp"

namespace spkid {

// Per-speaker scores from one back-end, normalised to sum to one.
struct ScoreVector {
  std::vector<std::string> speakers;
  std::vector<double> scores;
  // Secondary key for breaking ties in `scores` (one-vs-one margin sums).
  // Empty when the producer has none.
  std::vector<double> tiebreak;

  std::size_t size() const { return speakers.size(); }
};

// Throws NotNormalized unless all scores are >= 0 and sum to 1 within tol.
void check_normalized(const ScoreVector& s, double tol = 1e-9);

struct MinMaxScaler {
  std::vector<double> min;
  std::vector<double> max;
};

MinMaxScaler fit_minmax(const Matrix& train);

// (x - min) / (max - min), clipped to [0, 1]; constant dimensions map to 0.5.
std::vector<double> apply_minmax(const MinMaxScaler& scaler,
                                 std::span<const double> x);
Matrix apply_minmax(const MinMaxScaler& scaler, const Matrix& x);

struct SvmConfig {
  double c = 1.0;
  double tol = 1e-3;
  int max_passes = 10;
  std::uint64_t seed = 1;
  // Hard cap on sweeps over the training set.
  int max_sweeps = 100000;

  void validate() const;
};

// Linear-kernel binary SVM, f(x) = sum_i coef_i (x . v_i) + b with
// coef_i = alpha_i y_i.
struct BinarySvm {
  Matrix support_vectors;
  std::vector<double> coefficients;
  std::vector<double> alphas;  // alpha_i of each support vector, in [0, C]
  double bias = 0.0;
  std::vector<double> weights;  // sum_i coef_i v_i

  double decision(std::span<const double> x) const;
};

struct SmoReport {
  int sweeps = 0;
  bool converged = false;
  std::size_t training_errors = 0;
  // Full multiplier vector over the training set, in input order.
  std::vector<double> alphas;
};

// Simplified SMO on labels in {-1, +1}.
BinarySvm smo_train(const Matrix& x, std::span<const int> y,
                    const SvmConfig& cfg, SmoReport* report = nullptr);

struct OvoMachine {
  std::size_t positive = 0;  // class index voted for when f(x) >= 0
  std::size_t negative = 0;
  BinarySvm svm;
};

struct OvoSvmModel {
  std::vector<std::string> classes;  // sorted speaker ids
  MinMaxScaler scaler;
  std::vector<OvoMachine> machines;  // k (k - 1) / 2, pairs (a, b) with a < b
};

OvoSvmModel ovo_train(const Matrix& x, std::span<const std::string> labels,
                      const SvmConfig& cfg);

// Vote fractions per class, with per-class summed signed margins as the
// tie-break key.
ScoreVector ovo_score(const OvoSvmModel& model, std::span<const double> x);

struct NbConfig {
  double epsilon_factor = 1e-9;

  void validate() const;
};

// Gaussian naive Bayes over (unscaled) supervectors.
struct NbModel {
  std::vector<std::string> classes;  // sorted speaker ids
  std::vector<double> priors;
  Matrix means;      // k x d
  Matrix variances;  // k x d
};

NbModel nb_train(const Matrix& x, std::span<const std::string> labels,
                 const NbConfig& cfg);

// log p(c) + sum_i log N(x_i; mean_ci, var_ci) for each class.
std::vector<double> nb_log_joint(const NbModel& model, std::span<const double> x);

// Softmax of the log joints.
ScoreVector nb_score(const NbModel& model, std::span<const double> x);

nlohmann::json svm_to_json(const OvoSvmModel& model, std::uint64_t config_hash);
OvoSvmModel svm_from_json(const nlohmann::json& doc);
nlohmann::json nb_to_json(const NbModel& model, std::uint64_t config_hash);
NbModel nb_from_json(const nlohmann::json& doc);

void write_classifier(const std::filesystem::path& path, const nlohmann::json& doc);
nlohmann::json read_classifier(const std::filesystem::path& path);

}  // namespace spkid
