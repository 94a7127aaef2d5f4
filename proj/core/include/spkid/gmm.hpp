#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spkid/features.hpp"
#include "spkid/matrix.hpp"

namespace spkid {

// Diagonal-covariance Gaussian mixture.
//   p(x) = sum_i w_i N(x; mu_i, diag(var_i)),  sum_i w_i = 1.
struct GmmModel {
  std::vector<double> weights;  // M
  Matrix means;                 // M x d
  Matrix variances;             // M x d, strictly positive

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return means.cols(); }

  friend bool operator==(const GmmModel&, const GmmModel&) = default;
};

// Throws ConfigInvalid when the weights do not sum to one (1e-9), a weight
// is negative, a variance is not positive, or any entry is non-finite.
void validate(const GmmModel& model);

// Per-component constants cached for repeated density evaluation.
class GmmEvaluator {
 public:
  explicit GmmEvaluator(const GmmModel& model);

  // log(w_i) + log N(x; mu_i, var_i) for every component, written to `out`.
  void component_log_densities(std::span<const double> x,
                               std::span<double> out) const;

  // log p(x) via log-sum-exp over components.
  double log_density(std::span<const double> x) const;

  // Posterior responsibilities Pr(i | x); returns log p(x).
  double responsibilities(std::span<const double> x,
                          std::span<double> post) const;

  const GmmModel& model() const { return *model_; }

 private:
  const GmmModel* model_;
  std::vector<double> log_const_;  // log w_i - 0.5 (d log 2pi + sum log var)
  Matrix inv_var_;
};

double gmm_log_density(const GmmModel& model, std::span<const double> x);

// log(sum exp(values)), safe when all values are -inf.
double log_sum_exp(std::span<const double> values);

enum class EmInit { kKmeansPlusPlus, kRandomFrames };

struct EmConfig {
  int components = 128;
  int max_iterations = 50;
  double log_likelihood_rel_tol = 1e-4;
  double variance_floor_factor = 0.01;
  std::uint64_t rng_seed = 1;
  EmInit init_method = EmInit::kKmeansPlusPlus;

  void validate() const;
};

struct EmReport {
  // Total data log-likelihood before each M-step, plus the final model's.
  std::vector<double> log_likelihood;
  int iterations = 0;
  bool converged = false;
  // Components that received (near) zero occupancy in some iteration and
  // kept their previous parameters.
  std::vector<std::size_t> degenerate_components;
};

// EM training of a diagonal GMM. `data` is frames x d.
GmmModel em_fit(const Matrix& data, const EmConfig& cfg,
                EmReport* report = nullptr);

struct MapConfig {
  double relevance_factor = 16.0;

  void validate() const;
};

// Mean-only MAP adaptation: mu'_i = alpha_i E_i + (1 - alpha_i) mu_i with
// alpha_i = n_i / (n_i + r). Weights and variances are copied from `ubm`.
GmmModel map_adapt_means(const GmmModel& ubm, const Matrix& data,
                         const MapConfig& cfg);

struct Supervector {
  std::vector<double> values;  // M * d
  FeatureKind kind = FeatureKind::kMfcc12;
  std::string utterance_id;
  std::size_t components = 0;
  std::size_t dim = 0;
};

struct SupervectorOptions {
  // Scales block i by sqrt(w_i) / sigma_i (KL-divergence kernel layout).
  bool kl_scaling = false;
};

Supervector extract_supervector(const GmmModel& model,
                                SupervectorOptions opts = {});

// Inverse of plain extraction: M x d matrix of the stacked mean blocks.
Matrix split_supervector(const Supervector& sv);

// Versioned JSON documents. Doubles are written in shortest round-trip form.
nlohmann::json gmm_to_json(const GmmModel& model, FeatureKind kind,
                           std::uint64_t config_hash);
GmmModel gmm_from_json(const nlohmann::json& doc, FeatureKind* kind = nullptr,
                       std::uint64_t* config_hash = nullptr);

void write_gmm(const std::filesystem::path& path, const GmmModel& model,
               FeatureKind kind, std::uint64_t config_hash);
GmmModel read_gmm(const std::filesystem::path& path,
                  FeatureKind* kind = nullptr,
                  std::uint64_t* config_hash = nullptr);

}  // namespace spkid
