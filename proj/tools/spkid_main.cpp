// spkid: command-line front end for the speaker-identification toolkit.
//
// Staged workflow (all artefacts live under --out DIR):
//   extract    manifest audio/base streams -> features/<utt>.<F>.feat
//   train-ubm  training features           -> ubm/<F>.json
//   adapt      UBM + features              -> supervectors/<F>.json
//   train      supervectors                -> models/<F>.<svm|nb>.json
//   evaluate   models + test supervectors  -> identification rate
// plus run-grid (everything in memory) and synth-corpus.
//
// Exit codes: 0 success, 2 invalid config/manifest, 3 training failure,
// 4 I/O failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spkid/config.hpp"
#include "spkid/error.hpp"
#include "spkid/experiment.hpp"
#include "spkid/hash.hpp"
#include "spkid/synth_corpus.hpp"

namespace fs = std::filesystem;
using namespace spkid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitTraining = 3;
constexpr int kExitIo = 4;

struct CommonFlags {
  std::string manifest;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::string format = "text";
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_manifest = true) {
  auto* m = cmd->add_option("--manifest", f.manifest, "JSON-lines corpus manifest");
  if (needs_manifest) m->required();
  cmd->add_option("--seed", f.seed, "Master seed for EM, SVM and splitting");
  cmd->add_option("--config", f.config, "JSON config file");
  cmd->add_option("--out", f.out, "Output/work directory");
  cmd->add_option("--format", f.format, "Output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
}

ToolkitConfig resolve_config(const CommonFlags& f) {
  ToolkitConfig cfg = f.config.empty() ? ToolkitConfig{} : load_config(f.config);
  if (f.seed) cfg.apply_seed(*f.seed);
  cfg.validate();
  return cfg;
}

ExperimentManifest resolve_manifest(const CommonFlags& f, const ToolkitConfig& cfg) {
  ExperimentManifest m = load_manifest(f.manifest);
  for (const auto& e : m.entries)
    if (e.split == Split::kUnset) return auto_split(m, cfg.split);
  return m;
}

fs::path work_dir(const CommonFlags& f) {
  if (f.out.empty()) throw Error(ErrorCode::kConfigInvalid, "--out DIR is required");
  return f.out;
}

std::string safe_name(std::string id) {
  for (char& c : id)
    if (c == '/' || c == '\\' || c == ':') c = '_';
  return id;
}

fs::path feature_path(const fs::path& dir, const ManifestEntry& e, FeatureSet set) {
  return dir / "features" / (safe_name(e.utterance_id) + "." + std::string(to_string(set)) + ".feat");
}

FeatureSet parse_set(const std::string& s, bool allow_f5) {
  const auto set = feature_set_from_string(s);
  if (!set || (!allow_f5 && *set == FeatureSet::kF5))
    throw Error(ErrorCode::kConfigInvalid, "bad feature set '" + s + "'");
  return *set;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path.string());
}

// --- subcommands ------------------------------------------------------------

int cmd_extract(const CommonFlags& f, const std::vector<std::string>& sets) {
  const auto cfg = resolve_config(f);
  const auto manifest = resolve_manifest(f, cfg);
  const auto dir = work_dir(f);
  fs::create_directories(dir / "features");
  const auto hash = cfg.frontend.hash();
  for (const auto& name : sets) {
    const FeatureSet set = parse_set(name, false);
    for (const auto& e : manifest.entries) {
      if (e.split == Split::kUnset) continue;
      const FeatureMatrix feat = load_features(e, set, cfg.frontend);
      write_feature_archive(feature_path(dir, e, set), feat, hash);
    }
    std::cout << "extracted " << name << " for " << manifest.entries.size() << " utterances\n";
  }
  return kExitOk;
}

FeatureMatrix read_extracted(const fs::path& dir, const ManifestEntry& e, FeatureSet set,
                             const ToolkitConfig& cfg) {
  const auto archive = read_feature_archive(feature_path(dir, e, set));
  if (archive.config_hash != cfg.frontend.hash())
    throw Error(ErrorCode::kConfigInvalid,
                "feature archive for '" + e.utterance_id + "' was extracted with a different "
                "front-end config (hash " + hash_to_hex(archive.config_hash) + ")");
  if (archive.features.kind != kind_of(set))
    throw Error(ErrorCode::kCorruptHeader, "archive kind mismatch for '" + e.utterance_id + "'");
  return archive.features;
}

int cmd_train_ubm(const CommonFlags& f, const std::string& set_name) {
  const auto cfg = resolve_config(f);
  const auto manifest = resolve_manifest(f, cfg);
  const auto dir = work_dir(f);
  const FeatureSet set = parse_set(set_name, false);
  StageInputs inputs;
  std::vector<FeatureMatrix> feats;
  for (const auto* e : manifest.with_split(Split::kTrain)) {
    feats.push_back(read_extracted(dir, *e, set, cfg));
    inputs.ubm.insert(e->utterance_id);
  }
  check_no_leakage(manifest, inputs, "train-ubm");
  EmReport report;
  const GmmModel ubm = em_fit(stack_features(feats), cfg.em, &report);
  write_gmm(dir / "ubm" / (set_name + ".json"), ubm, kind_of(set), hash_of(cfg.em));
  std::cout << "UBM " << set_name << ": M=" << ubm.components() << " d=" << ubm.dim()
            << " iterations=" << report.iterations
            << (report.converged ? " (converged)" : " (iteration cap)") << "\n";
  return kExitOk;
}

int cmd_adapt(const CommonFlags& f, const std::string& set_name) {
  const auto cfg = resolve_config(f);
  const auto manifest = resolve_manifest(f, cfg);
  const auto dir = work_dir(f);
  const FeatureSet set = parse_set(set_name, true);
  SupervectorStore store;
  if (set == FeatureSet::kF5) {
    store = fuse_stores(read_supervector_store(dir / "supervectors" / "F1.json"),
                        read_supervector_store(dir / "supervectors" / "F2.json"));
  } else {
    FeatureKind kind;
    std::uint64_t em_hash = 0;
    const GmmModel ubm = read_gmm(dir / "ubm" / (set_name + ".json"), &kind, &em_hash);
    store.set = set;
    store.config_hash = fnv1a64(hash_to_hex(hash_of(cfg.map, cfg.supervector)), em_hash);
    store.layout.push_back({0, ubm.components() * ubm.dim(), kind, ubm.components(), ubm.dim()});
    for (const auto& e : manifest.entries) {
      if (e.split == Split::kUnset) continue;
      const FeatureMatrix feat = read_extracted(dir, e, set, cfg);
      Supervector sv =
          extract_supervector(map_adapt_means(ubm, feat.vectors, cfg.map), cfg.supervector);
      store.records.push_back({e.utterance_id, e.speaker_id, e.split, std::move(sv.values)});
    }
  }
  write_supervector_store(dir / "supervectors" / (set_name + ".json"), store);
  std::cout << "supervectors " << set_name << ": " << store.records.size() << " x "
            << store.dim() << "\n";
  return kExitOk;
}

int cmd_train(const CommonFlags& f, const std::string& set_name, const std::string& system) {
  const auto cfg = resolve_config(f);
  const auto manifest = resolve_manifest(f, cfg);
  const auto dir = work_dir(f);
  parse_set(set_name, true);
  const auto store = read_supervector_store(dir / "supervectors" / (set_name + ".json"));
  std::vector<std::string> speakers, ids;
  const Matrix x = store.matrix(Split::kTrain, &speakers, &ids);
  StageInputs inputs;
  inputs.classifier.insert(ids.begin(), ids.end());
  if (system == "svm") inputs.scaler = inputs.classifier;
  check_no_leakage(manifest, inputs, "train");
  const auto path = dir / "models" / (set_name + "." + system + ".json");
  if (system == "svm")
    write_classifier(path, svm_to_json(ovo_train(x, speakers, cfg.svm), hash_of(cfg)));
  else
    write_classifier(path, nb_to_json(nb_train(x, speakers, cfg.nb), hash_of(cfg)));
  std::cout << "trained " << system << " on " << x.rows() << " " << set_name
            << " supervectors\n";
  return kExitOk;
}

int cmd_evaluate(const CommonFlags& f, const std::string& set_name, const std::string& sys) {
  const auto cfg = resolve_config(f);
  const auto dir = work_dir(f);
  const FeatureSet set = parse_set(set_name, true);
  const auto system = system_from_string(sys);
  if (!system) throw Error(ErrorCode::kConfigInvalid, "bad system '" + sys + "'");
  const auto store = read_supervector_store(dir / "supervectors" / (set_name + ".json"));

  std::optional<OvoSvmModel> svm;
  std::optional<NbModel> nb;
  if (*system != System::kNb)
    svm = svm_from_json(read_classifier(dir / "models" / (set_name + ".svm.json")));
  if (*system != System::kSvm)
    nb = nb_from_json(read_classifier(dir / "models" / (set_name + ".nb.json")));

  ResultsGrid grid;
  grid.features = {set};
  grid.systems = {*system};
  grid.trials = score_trials(store, svm ? &*svm : nullptr, nb ? &*nb : nullptr, cfg);
  std::vector<std::pair<std::string, std::string>> decisions;
  for (const auto& t : grid.trials)
    decisions.emplace_back(t.systems.at(*system).decision.speaker, t.truth);
  grid.cells.push_back({set, *system, identification_rate(decisions), {}});
  std::cout << emit_tables(grid, *table_format_from_string(f.format));
  write_file(dir / ("decisions." + set_name + "." + std::string(to_string(*system)) + ".jsonl"),
             emit_trials(grid));
  return kExitOk;
}

int cmd_run_grid(const CommonFlags& f, const std::vector<std::string>& sets,
                 const std::vector<std::string>& systems) {
  const auto cfg = resolve_config(f);
  const auto manifest = resolve_manifest(f, cfg);
  GridOptions opts;
  opts.features.clear();
  for (const auto& s : sets) opts.features.push_back(parse_set(s, true));
  opts.systems.clear();
  for (const auto& s : systems) {
    const auto sys = system_from_string(s);
    if (!sys) throw Error(ErrorCode::kConfigInvalid, "bad system '" + s + "'");
    opts.systems.push_back(*sys);
  }
  const ResultsGrid grid = run_grid(manifest, opts, cfg);
  const auto format = *table_format_from_string(f.format);
  std::cout << emit_tables(grid, format);
  if (!f.out.empty()) {
    const fs::path dir = f.out;
    write_file(dir / "results.txt", emit_tables(grid, TableFormat::kText));
    write_file(dir / "results.csv", emit_tables(grid, TableFormat::kCsv));
    write_file(dir / "results.json", emit_tables(grid, TableFormat::kJson));
    write_file(dir / "decisions.jsonl", emit_trials(grid));
  }
  for (const auto& c : grid.cells)
    if (!c.ir) return kExitTraining;
  return kExitOk;
}

int cmd_synth(const CommonFlags& f, SynthCorpusConfig synth) {
  ToolkitConfig cfg = f.config.empty() ? ToolkitConfig{} : load_config(f.config);
  if (f.seed) {
    synth.seed = *f.seed;
    cfg.split.seed = *f.seed;
  }
  const auto dir = work_dir(f);
  const auto m = synthesize_corpus(dir, synth, cfg.split);
  std::cout << "wrote " << m.entries.size() << " utterances to " << (dir / "manifest.jsonl")
            << "\n";
  return kExitOk;
}

int exit_code_for(const Error& e) {
  switch (category_of(e.code())) {
    case ErrorCategory::kInput: return kExitInput;
    case ErrorCategory::kTraining: return kExitTraining;
    case ErrorCategory::kIo: return kExitIo;
  }
  return kExitTraining;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Text-independent speaker identification with GMM supervectors"};
  app.require_subcommand(1);
  CommonFlags flags;

  std::vector<std::string> extract_sets = {"F1", "F2", "F3", "F4"};
  auto* extract = app.add_subcommand("extract", "Compute feature archives");
  add_common(extract, flags);
  extract->add_option("--feature", extract_sets, "Feature sets (F1..F4)");

  std::string ubm_set = "F1";
  auto* train_ubm = app.add_subcommand("train-ubm", "Train a UBM on training features");
  add_common(train_ubm, flags);
  train_ubm->add_option("--feature", ubm_set, "Feature set (F1..F4)");

  std::string adapt_set = "F1";
  auto* adapt = app.add_subcommand("adapt", "MAP-adapt every utterance, store supervectors");
  add_common(adapt, flags);
  adapt->add_option("--feature", adapt_set, "Feature set (F1..F5)");

  std::string train_set = "F1";
  std::string train_system = "svm";
  auto* train = app.add_subcommand("train", "Train a supervector classifier");
  add_common(train, flags);
  train->add_option("--feature", train_set, "Feature set (F1..F5)");
  train->add_option("--system", train_system, "Back-end")->check(CLI::IsMember({"svm", "nb"}));

  std::string eval_set = "F1";
  std::string eval_system = "3";
  auto* evaluate = app.add_subcommand("evaluate", "Score test supervectors");
  add_common(evaluate, flags, false);
  evaluate->add_option("--feature", eval_set, "Feature set (F1..F5)");
  evaluate->add_option("--system", eval_system, "1 = SVM, 2 = NB, 3 = fused")
      ->check(CLI::IsMember({"1", "2", "3"}));

  std::vector<std::string> grid_sets = {"F1", "F2", "F3", "F4", "F5"};
  std::vector<std::string> grid_systems = {"1", "2", "3"};
  auto* grid = app.add_subcommand("run-grid", "Evaluate the feature x system grid");
  add_common(grid, flags);
  grid->add_option("--features", grid_sets, "Feature sets")->delimiter(',');
  grid->add_option("--systems", grid_systems, "Systems")->delimiter(',');

  SynthCorpusConfig synth;
  auto* synth_cmd = app.add_subcommand("synth-corpus", "Generate the synthetic test corpus");
  add_common(synth_cmd, flags, false);
  synth_cmd->add_option("--speakers", synth.speakers, "Number of speakers")->capture_default_str();
  synth_cmd->add_option("--utterances", synth.utterances_per_speaker, "Utterances per speaker")->capture_default_str();
  synth_cmd->add_option("--frames", synth.frames_per_utterance, "Frames per utterance")->capture_default_str();
  synth_cmd->add_option("--speaker-spread", synth.speaker_spread, "Sd of speaker shifts around the shared template")->capture_default_str();
  synth_cmd->add_option("--channel-sd", synth.channel_sd, "Sd of the per-utterance offset")->capture_default_str();
  synth_cmd->add_option("--noise-sd", synth.noise_sd, "Sd of view-specific frame noise")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*extract) return cmd_extract(flags, extract_sets);
    if (*train_ubm) return cmd_train_ubm(flags, ubm_set);
    if (*adapt) return cmd_adapt(flags, adapt_set);
    if (*train) return cmd_train(flags, train_set, train_system);
    if (*evaluate) return cmd_evaluate(flags, eval_set, eval_system);
    if (*grid) return cmd_run_grid(flags, grid_sets, grid_systems);
    if (*synth_cmd) return cmd_synth(flags, synth);
  } catch (const Error& e) {
    std::cerr << "spkid: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "spkid: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "spkid: " << e.what() << "\n";
    return kExitTraining;
  }
  return kExitInput;
}
