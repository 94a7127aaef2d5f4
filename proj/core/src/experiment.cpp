#include "spkid/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>

#include "json_util.hpp"
#include "parallel.hpp"
#include "spkid/audio_frontend.hpp"
#include "spkid/error.hpp"
#include "spkid/hash.hpp"

namespace spkid {
namespace {

using nlohmann::json;

std::vector<const ManifestEntry*> entries_with(const ExperimentManifest& m,
                                               std::initializer_list<Split> splits) {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : m.entries)
    if (std::find(splits.begin(), splits.end(), e.split) != splits.end())
      out.push_back(&e);
  return out;
}

std::uint64_t ubm_cache_key(const ExperimentManifest& m, FeatureSet set,
                            const ToolkitConfig& cfg) {
  std::uint64_t h = fnv1a64(std::string(to_string(set)));
  for (const auto* e : m.with_split(Split::kTrain))
    h = fnv1a64(e->utterance_id + "\x1f" + e->source_key() + "\x1e", h);
  h = fnv1a64(hash_to_hex(cfg.frontend.hash()), h);
  return fnv1a64(hash_to_hex(hash_of(cfg.em)), h);
}

std::filesystem::path cache_path(const ToolkitConfig& cfg, const std::string& stem,
                                 std::uint64_t key) {
  return cfg.cache_dir / (stem + "-" + hash_to_hex(key) + ".json");
}

json store_to_json(const SupervectorStore& s) {
  json layout = json::array();
  for (const auto& b : s.layout)
    layout.push_back({{"offset", b.offset},
                      {"length", b.length},
                      {"feature_kind", to_string(b.kind)},
                      {"M", b.components},
                      {"d", b.dim}});
  json records = json::array();
  for (const auto& r : s.records)
    records.push_back({{"utterance_id", r.utterance_id},
                       {"speaker_id", r.speaker_id},
                       {"split", to_string(r.split)},
                       {"values", r.values}});
  return {{"version", 1},
          {"feature_set", to_string(s.set)},
          {"layout", layout},
          {"config_hash", hash_to_hex(s.config_hash)},
          {"records", records}};
}

SupervectorStore store_from_json(const json& doc) {
  try {
    if (doc.at("version").get<int>() != 1)
      throw Error(ErrorCode::kUnsupportedFormat, "unknown supervector store version");
    SupervectorStore s;
    const auto set = feature_set_from_string(doc.at("feature_set").get<std::string>());
    if (!set) throw Error(ErrorCode::kCorruptHeader, "bad feature_set");
    s.set = *set;
    for (const auto& b : doc.at("layout")) {
      const auto kind = feature_kind_from_string(b.at("feature_kind").get<std::string>());
      if (!kind) throw Error(ErrorCode::kCorruptHeader, "bad feature_kind");
      s.layout.push_back({b.at("offset").get<std::size_t>(), b.at("length").get<std::size_t>(),
                          *kind, b.at("M").get<std::size_t>(), b.at("d").get<std::size_t>()});
    }
    s.config_hash = detail::hex_to_hash(doc.at("config_hash"));
    for (const auto& r : doc.at("records")) {
      SupervectorRecord rec;
      rec.utterance_id = r.at("utterance_id").get<std::string>();
      rec.speaker_id = r.at("speaker_id").get<std::string>();
      const auto split = r.at("split").get<std::string>();
      rec.split = split == "train" ? Split::kTrain
                  : split == "test" ? Split::kTest
                                    : Split::kUnset;
      rec.values = r.at("values").get<std::vector<double>>();
      if (rec.values.size() != s.dim())
        throw Error(ErrorCode::kCorruptHeader, "record length disagrees with layout");
      s.records.push_back(std::move(rec));
    }
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptHeader, std::string("supervector store: ") + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Identification rate

double IdentificationRate::rate() const {
  return total == 0 ? 0.0
                    : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

std::string IdentificationRate::formatted() const {
  // Exact integer truncation: floor(10000 * correct / total) hundredths.
  const unsigned long long hundredths =
      total == 0 ? 0ull
                 : static_cast<unsigned long long>(correct) * 10000ull /
                       static_cast<unsigned long long>(total);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llu.%02llu", hundredths / 100, hundredths % 100);
  return buf;
}

IdentificationRate identification_rate(
    std::span<const std::pair<std::string, std::string>> decisions) {
  if (decisions.empty()) throw Error(ErrorCode::kEmptyDecisions, "no trials");
  IdentificationRate ir;
  ir.total = decisions.size();
  for (const auto& [predicted, truth] : decisions)
    if (predicted == truth) ++ir.correct;
  return ir;
}

std::string_view to_string(System system) {
  switch (system) {
    case System::kSvm: return "System1";
    case System::kNb: return "System2";
    case System::kFused: return "System3";
  }
  return "?";
}

std::optional<System> system_from_string(std::string_view name) {
  if (name == "1" || name == "svm" || name == "System1") return System::kSvm;
  if (name == "2" || name == "nb" || name == "System2") return System::kNb;
  if (name == "3" || name == "fused" || name == "System3") return System::kFused;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Leakage guard

void check_no_leakage(const ExperimentManifest& manifest, const StageInputs& inputs,
                      std::string_view context) {
  std::map<std::string, const ManifestEntry*> by_id;
  for (const auto& e : manifest.entries) by_id[e.utterance_id] = &e;

  const std::pair<const char*, const std::set<std::string>*> stages[] = {
      {"UBM", &inputs.ubm},
      {"enrollment", &inputs.enrollment},
      {"scaler", &inputs.scaler},
      {"classifier", &inputs.classifier}};
  for (const auto& [stage, ids] : stages) {
    std::set<std::string> keys;
    for (const auto& id : *ids)
      if (auto it = by_id.find(id); it != by_id.end()) keys.insert(it->second->source_key());
    for (const auto* test : manifest.with_split(Split::kTest)) {
      if (ids->count(test->utterance_id) || keys.count(test->source_key()))
        throw Error(ErrorCode::kLeakage,
                    std::string(context) + ": test utterance '" + test->utterance_id +
                        "' reached " + stage + " training inputs");
    }
  }
}

// ---------------------------------------------------------------------------
// Pipeline stages

FeatureMatrix load_features(const ManifestEntry& entry, FeatureSet set,
                            const FrontendConfig& cfg) {
  const FeatureKind kind = kind_of(set);
  const FeatureFamily family = family_of(kind);
  if (auto it = entry.features.find(family); it != entry.features.end()) {
    const auto archive = read_feature_archive(it->second);
    return assemble_from_base(set, archive.features, cfg.delta_width);
  }
  if (!entry.features.empty() || entry.audio.empty())
    throw Error(ErrorCode::kNotFound, "utterance '" + entry.utterance_id + "' has no " +
                                          std::string(to_string(family)) + " stream");
  const SampleBuffer audio = load_wav(entry.audio);
  const FrameMatrix frames = analysis_frames(audio, cfg.framing);
  FeatureMatrix feat = assemble_feature_set(set, frames, cfg);
  validate(feat);
  return feat;
}

Matrix stack_features(std::span<const FeatureMatrix> features) {
  std::vector<const Matrix*> parts;
  for (const auto& f : features) parts.push_back(&f.vectors);
  return vstack(parts);
}

std::size_t SupervectorStore::dim() const {
  std::size_t d = 0;
  for (const auto& b : layout) d += b.length;
  return d;
}

Matrix SupervectorStore::matrix(Split split, std::vector<std::string>* speakers,
                                std::vector<std::string>* ids) const {
  Matrix out(0, dim());
  for (const auto& r : records) {
    if (r.split != split) continue;
    out.append_row(r.values);
    if (speakers) speakers->push_back(r.speaker_id);
    if (ids) ids->push_back(r.utterance_id);
  }
  return out;
}

void write_supervector_store(const std::filesystem::path& path,
                             const SupervectorStore& store) {
  detail::write_text_atomic(path, store_to_json(store).dump() + "\n");
}

SupervectorStore read_supervector_store(const std::filesystem::path& path) {
  return store_from_json(detail::read_json(path));
}

SupervectorStore fuse_stores(const SupervectorStore& mfcc, const SupervectorStore& rasta) {
  if (mfcc.layout.size() != 1 || rasta.layout.size() != 1)
    throw Error(ErrorCode::kDimensionMismatch, "F5 fuses two single-stream stores");
  std::map<std::string, const SupervectorRecord*> rasta_by_id;
  for (const auto& r : rasta.records) rasta_by_id[r.utterance_id] = &r;

  SupervectorStore out;
  out.set = FeatureSet::kF5;
  out.config_hash = fnv1a64(hash_to_hex(rasta.config_hash), mfcc.config_hash);
  const auto& la = mfcc.layout[0];
  const auto& lb = rasta.layout[0];
  for (const auto& a : mfcc.records) {
    auto it = rasta_by_id.find(a.utterance_id);
    if (it == rasta_by_id.end())
      throw Error(ErrorCode::kUtteranceMismatch,
                  "no RASTA-PLP supervector for '" + a.utterance_id + "'");
    const Supervector sa{a.values, la.kind, a.utterance_id, la.components, la.dim};
    const Supervector sb{it->second->values, lb.kind, it->second->utterance_id,
                         lb.components, lb.dim};
    FusedSupervector fused = concat_supervectors(sa, sb);
    if (out.layout.empty()) out.layout = fused.layout;
    out.records.push_back({a.utterance_id, a.speaker_id, a.split, std::move(fused.values)});
  }
  return out;
}

SupervectorStore build_supervectors(const ExperimentManifest& manifest, FeatureSet set,
                                    const ToolkitConfig& cfg, StageInputs* audit,
                                    GmmModel* ubm_out) {
  const FeatureKind kind = kind_of(set);
  const auto used = entries_with(manifest, {Split::kTrain, Split::kTest});
  const auto train = manifest.with_split(Split::kTrain);
  if (train.empty()) throw Error(ErrorCode::kInsufficientData, "no training utterances");

  std::vector<FeatureMatrix> feats(used.size());
  detail::parallel_for(used.size(), [&](std::size_t i) {
    feats[i] = load_features(*used[i], set, cfg.frontend);
  });

  StageInputs local;
  StageInputs& rec = audit ? *audit : local;

  const std::uint64_t ubm_key = ubm_cache_key(manifest, set, cfg);
  GmmModel ubm;
  const bool cached = !cfg.cache_dir.empty() &&
                      std::filesystem::exists(cache_path(cfg, "ubm", ubm_key));
  std::vector<FeatureMatrix> ubm_data;
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]->split == Split::kTrain) {
      ubm_data.push_back(feats[i]);
      rec.ubm.insert(used[i]->utterance_id);
    }
  if (cached) {
    ubm = read_gmm(cache_path(cfg, "ubm", ubm_key));
  } else {
    ubm = em_fit(stack_features(ubm_data), cfg.em);
    if (!cfg.cache_dir.empty())
      write_gmm(cache_path(cfg, "ubm", ubm_key), ubm, kind, ubm_key);
  }
  ubm_data.clear();

  SupervectorStore store;
  store.set = set;
  store.config_hash =
      fnv1a64(hash_to_hex(hash_of(cfg.map, cfg.supervector)), ubm_key);
  store.layout.push_back({0, ubm.components() * ubm.dim(), kind, ubm.components(), ubm.dim()});
  store.records.resize(used.size());
  detail::parallel_for(used.size(), [&](std::size_t i) {
    const GmmModel adapted = map_adapt_means(ubm, feats[i].vectors, cfg.map);
    Supervector sv = extract_supervector(adapted, cfg.supervector);
    store.records[i] = {used[i]->utterance_id, used[i]->speaker_id, used[i]->split,
                        std::move(sv.values)};
  });
  for (std::size_t i = 0; i < used.size(); ++i)
    if (used[i]->split == Split::kTrain) {
      rec.enrollment.insert(used[i]->utterance_id);
      ++rec.adapted_models;
    }
  if (ubm_out) *ubm_out = std::move(ubm);
  return store;
}

std::vector<TrialRecord> score_trials(const SupervectorStore& store, const OvoSvmModel* svm,
                                      const NbModel* nb, const ToolkitConfig& cfg) {
  std::vector<TrialRecord> out;
  for (const auto& r : store.records) {
    if (r.split != Split::kTest) continue;
    TrialRecord t;
    t.feature = store.set;
    t.utterance_id = r.utterance_id;
    t.truth = r.speaker_id;
    std::optional<ScoreVector> s_svm, s_nb;
    if (svm) {
      s_svm = ovo_score(*svm, r.values);
      t.systems[System::kSvm] = {decide(*s_svm), *s_svm};
    }
    if (nb) {
      s_nb = nb_score(*nb, r.values);
      t.systems[System::kNb] = {decide(*s_nb), *s_nb};
    }
    if (s_svm && s_nb) {
      const ScoreVector fused = fuse_scores(*s_svm, *s_nb, cfg.fusion, cfg.fusion_rule);
      t.systems[System::kFused] = {decide(fused), fused};
    }
    out.push_back(std::move(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Grid

const GridCell& ResultsGrid::cell(FeatureSet f, System s) const {
  for (const auto& c : cells)
    if (c.feature == f && c.system == s) return c;
  throw Error(ErrorCode::kConfigInvalid, "cell not in grid");
}

ResultsGrid run_grid(const ExperimentManifest& manifest, const GridOptions& options,
                     const ToolkitConfig& cfg) {
  cfg.validate();
  ResultsGrid grid;
  grid.features = options.features;
  grid.systems = options.systems;
  for (FeatureSet f : grid.features)
    for (System s : grid.systems) grid.cells.push_back({f, s, std::nullopt, {}});

  std::map<FeatureSet, SupervectorStore> stores;
  std::map<FeatureSet, std::string> store_errors;
  auto get_store = [&](FeatureSet set) -> const SupervectorStore* {
    if (auto it = stores.find(set); it != stores.end()) return &it->second;
    if (store_errors.count(set)) return nullptr;
    try {
      StageInputs audit;
      SupervectorStore store;
      if (set == FeatureSet::kF5) {
        store = fuse_stores(stores.at(FeatureSet::kF1), stores.at(FeatureSet::kF2));
        const auto& a1 = grid.audit.at(FeatureSet::kF1);
        const auto& a2 = grid.audit.at(FeatureSet::kF2);
        audit.ubm = a1.ubm;
        audit.ubm.insert(a2.ubm.begin(), a2.ubm.end());
        audit.enrollment = a1.enrollment;
        audit.enrollment.insert(a2.enrollment.begin(), a2.enrollment.end());
        audit.adapted_models = a1.adapted_models + a2.adapted_models;
      } else {
        store = build_supervectors(manifest, set, cfg, &audit);
      }
      grid.audit[set] = std::move(audit);
      return &(stores[set] = std::move(store));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kLeakage) throw;
      store_errors[set] = e.what();
      return nullptr;
    } catch (const std::out_of_range&) {
      store_errors[set] = "F5 requires F1 and F2 supervectors";
      return nullptr;
    }
  };

  auto fail_row = [&](FeatureSet f, const std::string& msg) {
    for (auto& c : grid.cells)
      if (c.feature == f) c.error = msg;
  };

  for (FeatureSet f : grid.features) {
    if (f == FeatureSet::kF5) {
      get_store(FeatureSet::kF1);
      get_store(FeatureSet::kF2);
    }
    const SupervectorStore* store = get_store(f);
    if (!store) {
      fail_row(f, store_errors[f]);
      continue;
    }
    StageInputs& audit = grid.audit[f];

    const bool want_svm = std::count(grid.systems.begin(), grid.systems.end(), System::kSvm) ||
                          std::count(grid.systems.begin(), grid.systems.end(), System::kFused);
    const bool want_nb = std::count(grid.systems.begin(), grid.systems.end(), System::kNb) ||
                         std::count(grid.systems.begin(), grid.systems.end(), System::kFused);

    std::vector<std::string> speakers, ids;
    const Matrix train = store->matrix(Split::kTrain, &speakers, &ids);
    std::optional<OvoSvmModel> svm;
    std::optional<NbModel> nb;
    std::string svm_error, nb_error;
    if (want_svm) {
      try {
        audit.scaler.insert(ids.begin(), ids.end());
        audit.classifier.insert(ids.begin(), ids.end());
        check_no_leakage(manifest, audit, to_string(f));
        svm = ovo_train(train, speakers, cfg.svm);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kLeakage) throw;
        svm_error = e.what();
      }
    }
    if (want_nb) {
      try {
        audit.classifier.insert(ids.begin(), ids.end());
        check_no_leakage(manifest, audit, to_string(f));
        nb = nb_train(train, speakers, cfg.nb);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kLeakage) throw;
        nb_error = e.what();
      }
    }
    check_no_leakage(manifest, audit, to_string(f));

    std::vector<TrialRecord> trials;
    try {
      trials = score_trials(*store, svm ? &*svm : nullptr, nb ? &*nb : nullptr, cfg);
    } catch (const Error& e) {
      fail_row(f, e.what());
      continue;
    }
    for (System s : grid.systems) {
      GridCell& cell = *std::find_if(grid.cells.begin(), grid.cells.end(),
                                     [&](const GridCell& c) { return c.feature == f && c.system == s; });
      std::vector<std::pair<std::string, std::string>> decisions;
      for (const auto& t : trials)
        if (auto it = t.systems.find(s); it != t.systems.end())
          decisions.emplace_back(it->second.decision.speaker, t.truth);
      try {
        if (decisions.empty()) {
          cell.error = s == System::kSvm   ? svm_error
                       : s == System::kNb ? nb_error
                                          : (svm_error.empty() ? nb_error : svm_error);
          if (cell.error.empty()) cell.error = "no test trials";
          continue;
        }
        cell.ir = identification_rate(decisions);
      } catch (const Error& e) {
        cell.error = e.what();
      }
    }
    for (auto& t : trials) grid.trials.push_back(std::move(t));
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Tables

std::optional<TableFormat> table_format_from_string(std::string_view name) {
  if (name == "text") return TableFormat::kText;
  if (name == "csv") return TableFormat::kCsv;
  if (name == "json") return TableFormat::kJson;
  return std::nullopt;
}

std::string emit_tables(const ResultsGrid& grid, TableFormat format) {
  std::ostringstream out;
  switch (format) {
    case TableFormat::kText: {
      char buf[64];
      out << "Identification rates IR (%)\n";
      std::snprintf(buf, sizeof buf, "%-14s", "Feature Type");
      out << buf;
      for (System s : grid.systems) {
        std::snprintf(buf, sizeof buf, "%12s", std::string(to_string(s)).c_str());
        out << buf;
      }
      out << "\n";
      for (FeatureSet f : grid.features) {
        const std::string label = "Feature " + std::string(to_string(f)).substr(1);
        std::snprintf(buf, sizeof buf, "%-14s", label.c_str());
        out << buf;
        for (System s : grid.systems) {
          const auto& c = grid.cell(f, s);
          std::snprintf(buf, sizeof buf, "%12s", c.ir ? c.ir->formatted().c_str() : "failed");
          out << buf;
        }
        out << "\n";
      }
      break;
    }
    case TableFormat::kCsv: {
      out << "feature,system,correct,total,ir_percent,error\n";
      for (const auto& c : grid.cells) {
        out << to_string(c.feature) << ',' << to_string(c.system) << ',';
        if (c.ir) out << c.ir->correct << ',' << c.ir->total << ',' << c.ir->formatted();
        else out << ",,";
        out << ',';
        std::string err = c.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        out << err << '\n';
      }
      break;
    }
    case TableFormat::kJson: {
      json cells = json::array();
      for (const auto& c : grid.cells) {
        json j{{"feature", to_string(c.feature)}, {"system", to_string(c.system)}};
        if (c.ir) {
          j["correct"] = c.ir->correct;
          j["total"] = c.ir->total;
          j["ir_percent"] = c.ir->formatted();
        } else {
          j["error"] = c.error;
        }
        cells.push_back(j);
      }
      out << json{{"title", "Identification rates IR (%)"}, {"cells", cells}}.dump(2) << "\n";
      break;
    }
  }
  return out.str();
}

std::string emit_trials(const ResultsGrid& grid) {
  std::ostringstream out;
  for (const auto& t : grid.trials) {
    json systems = json::object();
    for (const auto& [s, ts] : t.systems) {
      json j{{"decision", ts.decision.speaker},
             {"speakers", ts.scores.speakers},
             {"scores", ts.scores.scores}};
      if (!ts.scores.tiebreak.empty()) j["tiebreak"] = ts.scores.tiebreak;
      systems[std::string(to_string(s))] = j;
    }
    out << json{{"feature", to_string(t.feature)},
                {"utterance_id", t.utterance_id},
                {"truth", t.truth},
                {"systems", systems}}
               .dump()
        << "\n";
  }
  return out.str();
}

}  // namespace spkid
