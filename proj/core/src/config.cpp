#include "spkid/config.hpp"

#include <set>

#include "json_util.hpp"
#include "spkid/error.hpp"
#include "spkid/hash.hpp"

namespace spkid {
namespace {

using nlohmann::json;

// Copies known keys from `src` into the fields bound in `fields`, rejecting
// anything unrecognised.
class Reader {
 public:
  Reader(const json& src, std::string section) : src_(src), section_(std::move(section)) {
    if (!src_.is_object())
      throw Error(ErrorCode::kConfigInvalid, section_ + " must be an object");
  }

  template <typename T>
  Reader& field(const char* key, T& dst) {
    seen_.insert(key);
    if (auto it = src_.find(key); it != src_.end()) {
      try {
        dst = it->get<T>();
      } catch (const json::exception& e) {
        throw Error(ErrorCode::kConfigInvalid, section_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = src_.find(key);
    return it == src_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, _] : src_.items())
      if (!seen_.count(key))
        throw Error(ErrorCode::kConfigInvalid, "unknown key " + section_ + "." + key);
  }

 private:
  const json& src_;
  std::string section_;
  std::set<std::string> seen_;
};

std::string_view init_name(EmInit init) {
  return init == EmInit::kKmeansPlusPlus ? "kmeans++" : "random";
}

}  // namespace

json to_json(const FrontendConfig& c) {
  return {{"window_ms", c.framing.window_ms},
          {"hop_ms", c.framing.hop_ms},
          {"pre_emphasis", c.framing.pre_emphasis},
          {"drop_low_energy_frames", c.framing.drop_low_energy_frames},
          {"low_energy_threshold_db", c.framing.low_energy_threshold_db},
          {"n_mel_filters", c.n_mel_filters},
          {"fft_size", c.fft_size},
          {"mel_low_hz", c.mel_low_hz},
          {"mel_high_hz", c.mel_high_hz},
          {"plp_model_order", c.plp_model_order},
          {"rasta_pole", c.rasta_pole},
          {"n_bark_bands", c.n_bark_bands},
          {"delta_width", c.delta_width},
          {"log_floor", c.log_floor}};
}

json to_json(const EmConfig& c) {
  return {{"components", c.components},
          {"max_iterations", c.max_iterations},
          {"log_likelihood_rel_tol", c.log_likelihood_rel_tol},
          {"variance_floor_factor", c.variance_floor_factor},
          {"rng_seed", c.rng_seed},
          {"init_method", init_name(c.init_method)}};
}

json to_json(const ToolkitConfig& c) {
  return {{"frontend", to_json(c.frontend)},
          {"em", to_json(c.em)},
          {"map", {{"relevance_factor", c.map.relevance_factor}}},
          {"supervector", {{"kl_scaling", c.supervector.kl_scaling}}},
          {"svm",
           {{"c", c.svm.c},
            {"tol", c.svm.tol},
            {"max_passes", c.svm.max_passes},
            {"seed", c.svm.seed},
            {"max_sweeps", c.svm.max_sweeps}}},
          {"nb", {{"epsilon_factor", c.nb.epsilon_factor}}},
          {"fusion",
           {{"w_svm", c.fusion.svm}, {"w_nb", c.fusion.nb}, {"rule", to_string(c.fusion_rule)}}},
          {"split",
           {{"n_train", c.split.n_train},
            {"n_test", c.split.n_test},
            {"seed", c.split.seed},
            {"exclude_shared_from_test", c.split.exclude_shared_from_test}}},
          {"cache_dir", c.cache_dir.string()}};
}

ToolkitConfig config_from_json(const json& doc) {
  ToolkitConfig c;
  Reader root(doc, "config");
  if (const json* s = root.child("frontend")) {
    Reader r(*s, "frontend");
    r.field("window_ms", c.frontend.framing.window_ms)
        .field("hop_ms", c.frontend.framing.hop_ms)
        .field("pre_emphasis", c.frontend.framing.pre_emphasis)
        .field("drop_low_energy_frames", c.frontend.framing.drop_low_energy_frames)
        .field("low_energy_threshold_db", c.frontend.framing.low_energy_threshold_db)
        .field("n_mel_filters", c.frontend.n_mel_filters)
        .field("fft_size", c.frontend.fft_size)
        .field("mel_low_hz", c.frontend.mel_low_hz)
        .field("mel_high_hz", c.frontend.mel_high_hz)
        .field("plp_model_order", c.frontend.plp_model_order)
        .field("rasta_pole", c.frontend.rasta_pole)
        .field("n_bark_bands", c.frontend.n_bark_bands)
        .field("delta_width", c.frontend.delta_width)
        .field("log_floor", c.frontend.log_floor)
        .finish();
  }
  if (const json* s = root.child("em")) {
    Reader r(*s, "em");
    std::string init(init_name(c.em.init_method));
    r.field("components", c.em.components)
        .field("max_iterations", c.em.max_iterations)
        .field("log_likelihood_rel_tol", c.em.log_likelihood_rel_tol)
        .field("variance_floor_factor", c.em.variance_floor_factor)
        .field("rng_seed", c.em.rng_seed)
        .field("init_method", init)
        .finish();
    if (init == "kmeans++") c.em.init_method = EmInit::kKmeansPlusPlus;
    else if (init == "random") c.em.init_method = EmInit::kRandomFrames;
    else throw Error(ErrorCode::kConfigInvalid, "em.init_method: " + init);
  }
  if (const json* s = root.child("map")) {
    Reader(*s, "map").field("relevance_factor", c.map.relevance_factor).finish();
  }
  if (const json* s = root.child("supervector")) {
    Reader(*s, "supervector").field("kl_scaling", c.supervector.kl_scaling).finish();
  }
  if (const json* s = root.child("svm")) {
    Reader(*s, "svm")
        .field("c", c.svm.c)
        .field("tol", c.svm.tol)
        .field("max_passes", c.svm.max_passes)
        .field("seed", c.svm.seed)
        .field("max_sweeps", c.svm.max_sweeps)
        .finish();
  }
  if (const json* s = root.child("nb")) {
    Reader(*s, "nb").field("epsilon_factor", c.nb.epsilon_factor).finish();
  }
  if (const json* s = root.child("fusion")) {
    std::string rule(to_string(c.fusion_rule));
    Reader(*s, "fusion")
        .field("w_svm", c.fusion.svm)
        .field("w_nb", c.fusion.nb)
        .field("rule", rule)
        .finish();
    const auto parsed = fusion_rule_from_string(rule);
    if (!parsed) throw Error(ErrorCode::kConfigInvalid, "fusion.rule: " + rule);
    c.fusion_rule = *parsed;
  }
  if (const json* s = root.child("split")) {
    Reader(*s, "split")
        .field("n_train", c.split.n_train)
        .field("n_test", c.split.n_test)
        .field("seed", c.split.seed)
        .field("exclude_shared_from_test", c.split.exclude_shared_from_test)
        .finish();
  }
  std::string cache = c.cache_dir.string();
  root.field("cache_dir", cache);
  c.cache_dir = cache;
  root.finish();
  c.validate();
  return c;
}

ToolkitConfig load_config(const std::filesystem::path& path) {
  try {
    return config_from_json(detail::read_json(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParseError)
      throw Error(ErrorCode::kConfigInvalid, e.what());
    throw;
  }
}

void FrontendConfig::validate(std::size_t window_len) const {
  if (fft_size <= 0 || (fft_size & (fft_size - 1)) != 0)
    throw Error(ErrorCode::kConfigInvalid, "fft_size must be a power of two");
  if (window_len > 0 && static_cast<std::size_t>(fft_size) < window_len)
    throw Error(ErrorCode::kConfigInvalid,
                "fft_size " + std::to_string(fft_size) + " < window length " +
                    std::to_string(window_len));
  if (n_mel_filters < 2) throw Error(ErrorCode::kConfigInvalid, "need >= 2 mel filters");
  if (!(mel_low_hz >= 0.0 && mel_high_hz > mel_low_hz))
    throw Error(ErrorCode::kConfigInvalid, "need 0 <= mel_low_hz < mel_high_hz");
  if (plp_model_order != 12)
    throw Error(ErrorCode::kConfigInvalid, "plp_model_order must be 12 (13 cepstra)");
  if (!(rasta_pole > 0.0 && rasta_pole < 1.0))
    throw Error(ErrorCode::kConfigInvalid, "rasta_pole must be in (0, 1)");
  if (n_bark_bands != 0 && n_bark_bands < 3)
    throw Error(ErrorCode::kConfigInvalid, "n_bark_bands must be 0 (auto) or >= 3");
  if (delta_width < 1) throw Error(ErrorCode::kConfigInvalid, "delta_width must be >= 1");
  if (!(log_floor > 0.0)) throw Error(ErrorCode::kConfigInvalid, "log_floor must be > 0");
  if (!(framing.hop_ms > 0.0 && framing.window_ms >= framing.hop_ms))
    throw Error(ErrorCode::kConfigInvalid, "need window_ms >= hop_ms > 0");
  if (!(framing.pre_emphasis >= 0.0 && framing.pre_emphasis < 1.0))
    throw Error(ErrorCode::kConfigInvalid, "pre_emphasis must be in [0, 1)");
}

std::uint64_t FrontendConfig::hash() const { return fnv1a64(to_json(*this).dump()); }

void ToolkitConfig::validate() const {
  frontend.validate();
  em.validate();
  map.validate();
  svm.validate();
  nb.validate();
  fusion.validate();
  if (split.n_train < 1 || split.n_test < 1)
    throw Error(ErrorCode::kConfigInvalid, "split.n_train and split.n_test must be >= 1");
}

void ToolkitConfig::apply_seed(std::uint64_t seed) {
  em.rng_seed = seed;
  svm.seed = seed;
  split.seed = seed;
}

std::uint64_t hash_of(const EmConfig& cfg) { return fnv1a64(to_json(cfg).dump()); }

std::uint64_t hash_of(const MapConfig& cfg, const SupervectorOptions& opts) {
  return fnv1a64(json{{"r", cfg.relevance_factor}, {"kl", opts.kl_scaling}}.dump());
}

std::uint64_t hash_of(const ToolkitConfig& cfg) {
  json j = to_json(cfg);
  j.erase("cache_dir");
  return fnv1a64(j.dump());
}

}  // namespace spkid
