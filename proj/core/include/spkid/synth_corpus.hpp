#pragma once

#include <cstdint>
#include <filesystem>

#include "spkid/config.hpp"
#include "spkid/experiment.hpp"

namespace spkid {

// Artificial corpus that skips the audio front-end. Each speaker is a random
// mixture over a latent space whose components perturb a template shared by
// all speakers (so a UBM sees the same regions for everyone); an utterance draws latent frames from it,
// adds a per-utterance channel offset, and exposes two noisy views written
// as base-stream archives: an MFCC12 analog (latent + noise) and a
// RASTAPLP13 analog (fixed 13 x latent projection + noise).
struct SynthCorpusConfig {
  int speakers = 10;
  int utterances_per_speaker = 10;
  int frames_per_utterance = 600;
  int latent_dim = 12;
  int components = 4;
  double component_spread = 3.0;   // sd of the shared template means
  double speaker_spread = 1.5;     // sd of each speaker's per-component shift
  double channel_sd = 0.05;        // sd of the per-utterance offset
  double noise_sd = 0.25;          // sd of view-specific noise
  std::uint64_t seed = 20130101;
};

// Writes archives under `out_dir`/features and a split manifest to
// `out_dir`/manifest.jsonl; returns the manifest.
ExperimentManifest synthesize_corpus(const std::filesystem::path& out_dir,
                                     const SynthCorpusConfig& cfg,
                                     const SplitConfig& split);

}  // namespace spkid
