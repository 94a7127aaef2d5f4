#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spkid/classifiers.hpp"
#include "spkid/config.hpp"
#include "spkid/features.hpp"
#include "spkid/fusion.hpp"
#include "spkid/gmm.hpp"

namespace spkid {

enum class Split { kUnset, kTrain, kTest };
std::string_view to_string(Split split);

// One utterance. Audio is decoded on demand; `features` may instead point
// at precomputed base-stream archives (MFCC12 / RASTAPLP13), which take
// precedence over audio.
struct ManifestEntry {
  std::string speaker_id;
  std::string utterance_id;
  std::filesystem::path audio;
  std::map<FeatureFamily, std::filesystem::path> features;
  Split split = Split::kUnset;
  bool shared_text = false;
  std::size_t line = 0;

  // Canonical identity of the underlying recording: the resolved audio path
  // or feature archive paths. Two entries with the same key are the same
  // data under different names.
  std::string source_key() const;
};

struct ExperimentManifest {
  std::string corpus_name;
  int sample_rate_hz = 16000;
  std::vector<ManifestEntry> entries;

  std::vector<const ManifestEntry*> with_split(Split split) const;
  std::uint64_t hash() const;
};

// JSON-lines manifest. An optional first line {"corpus": {...}} carries
// metadata; every other line is one entry:
//   {"speaker_id": "...", "utterance_id": "...", "audio": "a.wav",
//    "split": "train"|"test", "shared_text": false,
//    "features": {"mfcc": "a.mfcc.feat", "rasta_plp": "a.plp.feat"}}
// Relative paths resolve against the manifest's directory.
ExperimentManifest load_manifest(const std::filesystem::path& path);
ExperimentManifest parse_manifest(std::istream& in,
                                  const std::filesystem::path& base_dir,
                                  bool check_files = true);
void write_manifest(const std::filesystem::path& path,
                    const ExperimentManifest& manifest);

// Per speaker, fills unset splits: utterances sorted by id, a seeded
// shuffle picks the test items, the rest (up to n_train) become training.
// Entries that already carry a split are left untouched.
ExperimentManifest auto_split(const ExperimentManifest& manifest,
                              const SplitConfig& cfg);

struct IdentificationRate {
  std::size_t correct = 0;
  std::size_t total = 0;

  double rate() const;  // percent, full precision
  // Percent truncated to two decimals, matching how the published tables
  // print rates (e.g. 24/56 -> "42.85").
  std::string formatted() const;
};

IdentificationRate identification_rate(
    std::span<const std::pair<std::string, std::string>> decisions);

enum class System { kSvm = 1, kNb = 2, kFused = 3 };
std::string_view to_string(System system);
std::optional<System> system_from_string(std::string_view name);

// Utterance ids that fed each training stage of one feature set, recorded
// as the pipeline consumes them.
struct StageInputs {
  std::set<std::string> ubm;
  std::set<std::string> enrollment;
  std::set<std::string> scaler;
  std::set<std::string> classifier;
  std::size_t adapted_models = 0;
};

// Throws Leakage when any test utterance (matched by id or by source key)
// appears among `inputs`.
void check_no_leakage(const ExperimentManifest& manifest, const StageInputs& inputs,
                      std::string_view context);

// Loads or computes the feature stream of an entry for F1..F4.
FeatureMatrix load_features(const ManifestEntry& entry, FeatureSet set,
                            const FrontendConfig& cfg);

// Frames of all `entries` stacked, for UBM training.
Matrix stack_features(std::span<const FeatureMatrix> features);

struct SupervectorRecord {
  std::string utterance_id;
  std::string speaker_id;
  Split split = Split::kUnset;
  std::vector<double> values;
};

// Supervectors of one feature set for a whole corpus.
struct SupervectorStore {
  FeatureSet set = FeatureSet::kF1;
  std::vector<SupervectorBlock> layout;  // one block, two for F5
  std::uint64_t config_hash = 0;
  std::vector<SupervectorRecord> records;

  std::size_t dim() const;
  // Training (or test) rows as a matrix plus labels and ids.
  Matrix matrix(Split split, std::vector<std::string>* speakers = nullptr,
                std::vector<std::string>* ids = nullptr) const;
};

void write_supervector_store(const std::filesystem::path& path,
                             const SupervectorStore& store);
SupervectorStore read_supervector_store(const std::filesystem::path& path);

// F5: per-utterance concatenation of the F1 and F2 stores.
SupervectorStore fuse_stores(const SupervectorStore& mfcc,
                             const SupervectorStore& rasta);

struct TrialScores {
  Decision decision;
  ScoreVector scores;
};

struct TrialRecord {
  FeatureSet feature = FeatureSet::kF1;
  std::string utterance_id;
  std::string truth;
  std::map<System, TrialScores> systems;
};

struct GridCell {
  FeatureSet feature = FeatureSet::kF1;
  System system = System::kSvm;
  std::optional<IdentificationRate> ir;
  std::string error;  // set when the cell failed
};

struct ResultsGrid {
  std::vector<FeatureSet> features;
  std::vector<System> systems;
  std::vector<GridCell> cells;  // features-major
  std::vector<TrialRecord> trials;
  std::map<FeatureSet, StageInputs> audit;

  const GridCell& cell(FeatureSet f, System s) const;
};

struct GridOptions {
  std::vector<FeatureSet> features = {FeatureSet::kF1, FeatureSet::kF2,
                                      FeatureSet::kF3, FeatureSet::kF4,
                                      FeatureSet::kF5};
  std::vector<System> systems = {System::kSvm, System::kNb, System::kFused};
};

// Scores every test supervector of `store` with the trained back-ends.
std::vector<TrialRecord> score_trials(const SupervectorStore& store,
                                      const OvoSvmModel* svm, const NbModel* nb,
                                      const ToolkitConfig& cfg);

// Runs the feature x system evaluation. Per-cell failures are recorded in
// the cell; a leakage violation aborts the whole run.
ResultsGrid run_grid(const ExperimentManifest& manifest, const GridOptions& options,
                     const ToolkitConfig& cfg);

// Builds the supervector store of one frame-level feature set (F1..F4):
// UBM on all training utterances, then one MAP-adapted model per utterance.
SupervectorStore build_supervectors(const ExperimentManifest& manifest,
                                    FeatureSet set, const ToolkitConfig& cfg,
                                    StageInputs* audit = nullptr,
                                    GmmModel* ubm_out = nullptr);

enum class TableFormat { kText, kCsv, kJson };
std::optional<TableFormat> table_format_from_string(std::string_view name);

std::string emit_tables(const ResultsGrid& grid, TableFormat format);

// One JSON object per trial with every system's full score vector.
std::string emit_trials(const ResultsGrid& grid);

}  // namespace spkid
