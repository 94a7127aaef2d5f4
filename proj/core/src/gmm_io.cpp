#include <fstream>

#include "spkid/error.hpp"
#include "spkid/gmm.hpp"
#include "spkid/hash.hpp"
#include "json_util.hpp"

namespace spkid {

nlohmann::json gmm_to_json(const GmmModel& model, FeatureKind kind,
                           std::uint64_t config_hash) {
  return {{"version", 1},
          {"M", model.components()},
          {"d", model.dim()},
          {"weights", model.weights},
          {"means", detail::matrix_to_json(model.means)},
          {"variances", detail::matrix_to_json(model.variances)},
          {"feature_kind", to_string(kind)},
          {"config_hash", hash_to_hex(config_hash)}};
}

GmmModel gmm_from_json(const nlohmann::json& doc, FeatureKind* kind,
                       std::uint64_t* config_hash) {
  try {
    if (doc.at("version").get<int>() != 1)
      throw Error(ErrorCode::kUnsupportedFormat, "unknown GMM document version");
    GmmModel model;
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.means = detail::matrix_from_json(doc.at("means"));
    model.variances = detail::matrix_from_json(doc.at("variances"));
    if (model.components() != doc.at("M").get<std::size_t>() ||
        model.dim() != doc.at("d").get<std::size_t>())
      throw Error(ErrorCode::kCorruptHeader, "GMM M/d disagree with parameters");
    validate(model);
    if (kind) {
      const auto k = feature_kind_from_string(doc.at("feature_kind").get<std::string>());
      if (!k) throw Error(ErrorCode::kCorruptHeader, "unknown feature kind");
      *kind = *k;
    }
    if (config_hash) *config_hash = detail::hex_to_hash(doc.at("config_hash"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("GMM document: ") + e.what());
  }
}

void write_gmm(const std::filesystem::path& path, const GmmModel& model,
               FeatureKind kind, std::uint64_t config_hash) {
  detail::write_text_atomic(path, gmm_to_json(model, kind, config_hash).dump() + "\n");
}

GmmModel read_gmm(const std::filesystem::path& path, FeatureKind* kind,
                  std::uint64_t* config_hash) {
  return gmm_from_json(detail::read_json(path), kind, config_hash);
}

}  // namespace spkid
