#include "spkid/classifiers.hpp"
#include "spkid/error.hpp"
#include "spkid/hash.hpp"
#include "json_util.hpp"

namespace spkid {
namespace {

using nlohmann::json;

template <typename Fn>
auto guarded(const char* what, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string(what) + ": " + e.what());
  }
}

void expect_kind(const json& doc, const char* kind) {
  if (doc.at("version").get<int>() != 1)
    throw Error(ErrorCode::kUnsupportedFormat, "unknown classifier document version");
  if (doc.at("kind").get<std::string>() != kind)
    throw Error(ErrorCode::kUnsupportedFormat,
                "expected a '" + std::string(kind) + "' classifier document");
}

}  // namespace

json svm_to_json(const OvoSvmModel& model, std::uint64_t config_hash) {
  json machines = json::array();
  for (const auto& m : model.machines)
    machines.push_back({{"positive", m.positive},
                        {"negative", m.negative},
                        {"bias", m.svm.bias},
                        {"alphas", m.svm.alphas},
                        {"coefficients", m.svm.coefficients},
                        {"support_vectors", detail::matrix_to_json(m.svm.support_vectors)}});
  return {{"version", 1},
          {"kind", "svm"},
          {"classes", model.classes},
          {"scaler", {{"min", model.scaler.min}, {"max", model.scaler.max}}},
          {"machines", machines},
          {"config_hash", hash_to_hex(config_hash)}};
}

OvoSvmModel svm_from_json(const json& doc) {
  return guarded("SVM document", [&] {
    expect_kind(doc, "svm");
    OvoSvmModel model;
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    model.scaler.min = doc.at("scaler").at("min").get<std::vector<double>>();
    model.scaler.max = doc.at("scaler").at("max").get<std::vector<double>>();
    const std::size_t dim = model.scaler.min.size();
    for (const auto& m : doc.at("machines")) {
      OvoMachine machine;
      machine.positive = m.at("positive").get<std::size_t>();
      machine.negative = m.at("negative").get<std::size_t>();
      machine.svm.bias = m.at("bias").get<double>();
      machine.svm.alphas = m.at("alphas").get<std::vector<double>>();
      machine.svm.coefficients = m.at("coefficients").get<std::vector<double>>();
      machine.svm.support_vectors = detail::matrix_from_json(m.at("support_vectors"));
      if (machine.svm.support_vectors.empty())
        machine.svm.support_vectors = Matrix(0, dim);
      if (machine.svm.support_vectors.cols() != dim ||
          machine.svm.coefficients.size() != machine.svm.support_vectors.rows())
        throw Error(ErrorCode::kCorruptHeader, "SVM machine shape mismatch");
      machine.svm.weights.assign(dim, 0.0);
      for (std::size_t i = 0; i < machine.svm.coefficients.size(); ++i) {
        const auto sv = machine.svm.support_vectors.row(i);
        for (std::size_t j = 0; j < dim; ++j)
          machine.svm.weights[j] += machine.svm.coefficients[i] * sv[j];
      }
      model.machines.push_back(std::move(machine));
    }
    const std::size_t k = model.classes.size();
    if (model.machines.size() != k * (k - 1) / 2)
      throw Error(ErrorCode::kCorruptHeader, "SVM machine count is not k(k-1)/2");
    return model;
  });
}

json nb_to_json(const NbModel& model, std::uint64_t config_hash) {
  return {{"version", 1},
          {"kind", "nb"},
          {"classes", model.classes},
          {"nb_params",
           {{"priors", model.priors},
            {"means", detail::matrix_to_json(model.means)},
            {"variances", detail::matrix_to_json(model.variances)}}},
          {"config_hash", hash_to_hex(config_hash)}};
}

NbModel nb_from_json(const json& doc) {
  return guarded("NB document", [&] {
    expect_kind(doc, "nb");
    NbModel model;
    model.classes = doc.at("classes").get<std::vector<std::string>>();
    const auto& p = doc.at("nb_params");
    model.priors = p.at("priors").get<std::vector<double>>();
    model.means = detail::matrix_from_json(p.at("means"));
    model.variances = detail::matrix_from_json(p.at("variances"));
    if (model.priors.size() != model.classes.size() ||
        model.means.rows() != model.classes.size() ||
        model.variances.rows() != model.classes.size())
      throw Error(ErrorCode::kCorruptHeader, "NB parameter shape mismatch");
    return model;
  });
}

void write_classifier(const std::filesystem::path& path, const json& doc) {
  detail::write_text_atomic(path, doc.dump() + "\n");
}

json read_classifier(const std::filesystem::path& path) {
  return detail::read_json(path);
}

}  // namespace spkid
