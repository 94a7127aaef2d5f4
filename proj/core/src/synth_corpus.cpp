#include "spkid/synth_corpus.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "spkid/error.hpp"
#include "spkid/hash.hpp"
#include "spkid/rng.hpp"

namespace spkid {
namespace {

struct SpeakerModel {
  std::vector<double> cumulative_weights;
  Matrix means;    // components x latent
  Matrix stddevs;  // components x latent
};

SpeakerModel random_speaker(const SynthCorpusConfig& cfg, const Matrix& tmpl, Rng& rng) {
  const std::size_t k = tmpl.rows();
  const std::size_t d = tmpl.cols();
  SpeakerModel s{std::vector<double>(k), Matrix(k, d), Matrix(k, d)};
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    total += rng.uniform(0.5, 1.5);
    s.cumulative_weights[i] = total;
    for (std::size_t j = 0; j < d; ++j) {
      s.means(i, j) = tmpl(i, j) + rng.normal(0.0, cfg.speaker_spread);
      s.stddevs(i, j) = std::sqrt(rng.uniform(0.5, 1.5));
    }
  }
  for (auto& w : s.cumulative_weights) w /= total;
  return s;
}

std::size_t pick_component(const SpeakerModel& s, double u) {
  for (std::size_t i = 0; i < s.cumulative_weights.size(); ++i)
    if (u < s.cumulative_weights[i]) return i;
  return s.cumulative_weights.size() - 1;
}

}  // namespace

ExperimentManifest synthesize_corpus(const std::filesystem::path& out_dir,
                                     const SynthCorpusConfig& cfg,
                                     const SplitConfig& split) {
  if (cfg.latent_dim != 12)
    throw Error(ErrorCode::kConfigInvalid, "the MFCC12 analog needs latent_dim = 12");
  if (cfg.speakers < 2 || cfg.utterances_per_speaker < 1 || cfg.frames_per_utterance < 1 ||
      cfg.components < 1)
    throw Error(ErrorCode::kConfigInvalid, "synthetic corpus sizes must be positive");

  const auto d = static_cast<std::size_t>(cfg.latent_dim);
  const std::size_t d_rasta = dims_of(FeatureKind::kRastaPlp13);
  const std::uint64_t config_hash = fnv1a64(
      nlohmann::json{{"speakers", cfg.speakers},
                     {"utterances", cfg.utterances_per_speaker},
                     {"frames", cfg.frames_per_utterance},
                     {"components", cfg.components},
                     {"speaker_spread", cfg.speaker_spread},
                     {"component_spread", cfg.component_spread},
                     {"channel_sd", cfg.channel_sd},
                     {"noise_sd", cfg.noise_sd},
                     {"seed", cfg.seed}}
          .dump());

  Rng rng(cfg.seed);
  Matrix projection(d_rasta, d);
  for (double& v : projection.data()) v = rng.normal(0.0, 1.0 / std::sqrt(static_cast<double>(d)));

  Matrix tmpl(static_cast<std::size_t>(cfg.components), d);
  for (double& v : tmpl.data()) v = rng.normal(0.0, cfg.component_spread);

  std::vector<SpeakerModel> speakers;
  for (int s = 0; s < cfg.speakers; ++s) speakers.push_back(random_speaker(cfg, tmpl, rng));

  const auto feat_dir = out_dir / "features";
  std::filesystem::create_directories(feat_dir);

  ExperimentManifest manifest;
  manifest.corpus_name = "synthetic";
  std::vector<double> latent(d);
  for (int s = 0; s < cfg.speakers; ++s) {
    char speaker_id[32];
    std::snprintf(speaker_id, sizeof speaker_id, "spk%02d", s);
    for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
      char utt_id[48];
      std::snprintf(utt_id, sizeof utt_id, "%s_utt%02d", speaker_id, u);
      std::vector<double> channel(d);
      for (auto& c : channel) c = rng.normal(0.0, cfg.channel_sd);

      const auto n = static_cast<std::size_t>(cfg.frames_per_utterance);
      FeatureMatrix mfcc_view{Matrix(n, d), FeatureKind::kMfcc12};
      FeatureMatrix rasta_view{Matrix(n, d_rasta), FeatureKind::kRastaPlp13};
      for (std::size_t t = 0; t < n; ++t) {
        const auto& spk = speakers[static_cast<std::size_t>(s)];
        const std::size_t k = pick_component(spk, rng.uniform());
        for (std::size_t j = 0; j < d; ++j)
          latent[j] = spk.means(k, j) + spk.stddevs(k, j) * rng.normal() + channel[j];
        for (std::size_t j = 0; j < d; ++j)
          mfcc_view.vectors(t, j) = latent[j] + rng.normal(0.0, cfg.noise_sd);
        for (std::size_t i = 0; i < d_rasta; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < d; ++j) acc += projection(i, j) * latent[j];
          rasta_view.vectors(t, i) = acc + rng.normal(0.0, cfg.noise_sd);
        }
      }

      ManifestEntry e;
      e.speaker_id = speaker_id;
      e.utterance_id = utt_id;
      e.features[FeatureFamily::kMfcc] = feat_dir / (std::string(utt_id) + ".mfcc.feat");
      e.features[FeatureFamily::kRastaPlp] = feat_dir / (std::string(utt_id) + ".rasta_plp.feat");
      write_feature_archive(e.features[FeatureFamily::kMfcc], mfcc_view, config_hash);
      write_feature_archive(e.features[FeatureFamily::kRastaPlp], rasta_view, config_hash);
      manifest.entries.push_back(std::move(e));
    }
  }

  manifest = auto_split(manifest, split);
  write_manifest(out_dir / "manifest.jsonl", manifest);
  return manifest;
}

}  // namespace spkid
