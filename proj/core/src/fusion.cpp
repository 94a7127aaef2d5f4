#include "spkid/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "spkid/error.hpp"

namespace spkid {

FusedSupervector concat_supervectors(const Supervector& a, const Supervector& b) {
  if (a.utterance_id != b.utterance_id)
    throw Error(ErrorCode::kUtteranceMismatch,
                "'" + a.utterance_id + "' vs '" + b.utterance_id + "'");
  if (a.components != b.components)
    throw Error(ErrorCode::kComponentCountMismatch,
                std::to_string(a.components) + " vs " + std::to_string(b.components));
  FusedSupervector out;
  out.utterance_id = a.utterance_id;
  out.values.reserve(a.values.size() + b.values.size());
  for (const Supervector* sv : {&a, &b}) {
    out.layout.push_back({out.values.size(), sv->values.size(), sv->kind,
                          sv->components, sv->dim});
    out.values.insert(out.values.end(), sv->values.begin(), sv->values.end());
  }
  return out;
}

Supervector split_fused(const FusedSupervector& fused, std::size_t index) {
  if (index >= fused.layout.size())
    throw Error(ErrorCode::kDimensionMismatch, "no such supervector block");
  const auto& blk = fused.layout[index];
  if (blk.offset + blk.length > fused.values.size())
    throw Error(ErrorCode::kDimensionMismatch, "layout exceeds fused vector");
  Supervector sv;
  const auto begin = fused.values.begin() + static_cast<std::ptrdiff_t>(blk.offset);
  sv.values.assign(begin, begin + static_cast<std::ptrdiff_t>(blk.length));
  sv.kind = blk.kind;
  sv.utterance_id = fused.utterance_id;
  sv.components = blk.components;
  sv.dim = blk.dim;
  return sv;
}

std::string_view to_string(FusionRule rule) {
  switch (rule) {
    case FusionRule::kSum: return "sum";
    case FusionRule::kProduct: return "product";
    case FusionRule::kMax: return "max";
  }
  return "?";
}

std::optional<FusionRule> fusion_rule_from_string(std::string_view name) {
  for (auto r : {FusionRule::kSum, FusionRule::kProduct, FusionRule::kMax})
    if (to_string(r) == name) return r;
  return std::nullopt;
}

void FusionWeights::validate() const {
  if (!(svm >= 0.0) || !(nb >= 0.0) || std::abs(svm + nb - 1.0) > 1e-9)
    throw Error(ErrorCode::kConfigInvalid, "fusion weights must be >= 0 and sum to 1");
}

ScoreVector fuse_scores(const ScoreVector& svm, const ScoreVector& nb,
                        const FusionWeights& w, FusionRule rule) {
  w.validate();
  if (svm.speakers != nb.speakers)
    throw Error(ErrorCode::kSpeakerSetMismatch, "score vectors cover different speakers");
  check_normalized(svm);
  check_normalized(nb);

  ScoreVector out{svm.speakers, std::vector<double>(svm.size()), svm.tiebreak};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double a = svm.scores[i], b = nb.scores[i];
    switch (rule) {
      case FusionRule::kSum: out.scores[i] = w.svm * a + w.nb * b; break;
      case FusionRule::kProduct:
        out.scores[i] = std::pow(a, w.svm) * std::pow(b, w.nb);
        break;
      case FusionRule::kMax: out.scores[i] = std::max(w.svm * a, w.nb * b); break;
    }
  }
  if (rule != FusionRule::kSum) {
    double total = 0.0;
    for (double v : out.scores) total += v;
    // All-zero products (complete disagreement) fall back to the sum rule.
    if (!(total > 0.0)) return fuse_scores(svm, nb, w, FusionRule::kSum);
    for (auto& v : out.scores) v /= total;
  }
  return out;
}

Decision decide(const ScoreVector& s) {
  if (s.size() == 0 || s.scores.size() != s.size())
    throw Error(ErrorCode::kEmptyScores, "nothing to decide between");
  const bool has_tiebreak = s.tiebreak.size() == s.size();
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s.scores[i] > s.scores[best] ||
        (s.scores[i] == s.scores[best] && has_tiebreak &&
         s.tiebreak[i] > s.tiebreak[best]))
      best = i;
  }
  return {best, s.speakers[best]};
}

}  // namespace spkid
