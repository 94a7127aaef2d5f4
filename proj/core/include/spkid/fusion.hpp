#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spkid/classifiers.hpp"
#include "spkid/gmm.hpp"

namespace spkid {

struct SupervectorBlock {
  std::size_t offset = 0;
  std::size_t length = 0;
  FeatureKind kind = FeatureKind::kMfcc12;
  std::size_t components = 0;
  std::size_t dim = 0;
};

// Concatenation of per-stream supervectors of one utterance, with the
// layout needed to split it again.
struct FusedSupervector {
  std::vector<double> values;
  std::string utterance_id;
  std::vector<SupervectorBlock> layout;
};

FusedSupervector concat_supervectors(const Supervector& a, const Supervector& b);

// Recovers the source supervector stored in block `index`.
Supervector split_fused(const FusedSupervector& fused, std::size_t index);

enum class FusionRule { kSum, kProduct, kMax };

std::string_view to_string(FusionRule rule);
std::optional<FusionRule> fusion_rule_from_string(std::string_view name);

struct FusionWeights {
  double svm = 0.5;
  double nb = 0.5;

  // Throws ConfigInvalid unless both are >= 0 and they sum to 1.
  void validate() const;
};

// Sum rule: w_svm s_svm + w_nb s_nb. The product and max rules apply the
// weights as exponents / multipliers and renormalise. The SVM tie-break
// metadata is carried into the result.
ScoreVector fuse_scores(const ScoreVector& svm, const ScoreVector& nb,
                        const FusionWeights& w,
                        FusionRule rule = FusionRule::kSum);

struct Decision {
  std::size_t index = 0;
  std::string speaker;
};

// argmax; ties go to the larger tie-break value, then the lower index.
Decision decide(const ScoreVector& s);

}  // namespace spkid
