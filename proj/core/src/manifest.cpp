#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "json_util.hpp"
#include "spkid/error.hpp"
#include "spkid/experiment.hpp"
#include "spkid/hash.hpp"
#include "spkid/rng.hpp"

namespace spkid {
namespace {

using nlohmann::json;

const std::set<std::string> kEntryKeys = {"speaker_id", "utterance_id", "audio",
                                          "split",      "shared_text",  "features"};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::kParseError, "line " + std::to_string(line) + ": " + what);
}

std::string canonical_string(const std::filesystem::path& p) {
  std::error_code ec;
  auto c = std::filesystem::weakly_canonical(p, ec);
  return (ec ? p.lexically_normal() : c).string();
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kUnset: return "unset";
    case Split::kTrain: return "train";
    case Split::kTest: return "test";
  }
  return "?";
}

std::string ManifestEntry::source_key() const {
  if (!features.empty()) {
    std::string key;
    for (const auto& [family, path] : features)
      key += std::string(to_string(family)) + "=" + canonical_string(path) + ";";
    return key;
  }
  return "audio=" + canonical_string(audio);
}

std::vector<const ManifestEntry*> ExperimentManifest::with_split(Split split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries)
    if (e.split == split) out.push_back(&e);
  return out;
}

std::uint64_t ExperimentManifest::hash() const {
  std::uint64_t h = fnv1a64(corpus_name);
  for (const auto& e : entries) {
    h = fnv1a64(e.speaker_id + "\x1f" + e.utterance_id + "\x1f" + e.source_key() +
                    "\x1f" + std::string(to_string(e.split)) + "\x1e",
                h);
  }
  return h;
}

ExperimentManifest parse_manifest(std::istream& in, const std::filesystem::path& base_dir,
                                  bool check_files) {
  ExperimentManifest m;
  std::set<std::string> seen;
  std::string text;
  std::size_t line_no = 0;
  while (std::getline(in, text)) {
    ++line_no;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      parse_fail(line_no, e.what());
    }
    if (!doc.is_object()) parse_fail(line_no, "expected a JSON object");

    if (doc.contains("corpus")) {
      const auto& c = doc["corpus"];
      try {
        m.corpus_name = c.value("name", "");
        m.sample_rate_hz = c.value("sample_rate", 16000);
      } catch (const json::exception& e) {
        parse_fail(line_no, e.what());
      }
      continue;
    }

    ManifestEntry e;
    e.line = line_no;
    try {
      for (const auto& [key, _] : doc.items())
        if (!kEntryKeys.count(key)) parse_fail(line_no, "unknown key '" + key + "'");
      e.speaker_id = doc.at("speaker_id").get<std::string>();
      e.utterance_id = doc.at("utterance_id").get<std::string>();
      if (doc.contains("audio")) e.audio = resolve(base_dir, doc["audio"].get<std::string>());
      if (doc.contains("features")) {
        for (const auto& [family, path] : doc["features"].items()) {
          FeatureFamily fam;
          if (family == "mfcc") fam = FeatureFamily::kMfcc;
          else if (family == "rasta_plp") fam = FeatureFamily::kRastaPlp;
          else parse_fail(line_no, "unknown feature family '" + family + "'");
          e.features[fam] = resolve(base_dir, path.get<std::string>());
        }
      }
      const std::string split = doc.value("split", "");
      if (split == "train") e.split = Split::kTrain;
      else if (split == "test") e.split = Split::kTest;
      else if (!split.empty() && split != "unset")
        parse_fail(line_no, "split must be 'train' or 'test'");
      e.shared_text = doc.value("shared_text", false);
    } catch (const json::exception& ex) {
      parse_fail(line_no, ex.what());
    }
    if (e.speaker_id.empty() || e.utterance_id.empty())
      parse_fail(line_no, "empty speaker_id or utterance_id");
    if (e.audio.empty() && e.features.empty())
      parse_fail(line_no, "entry needs 'audio' or 'features'");
    if (!seen.insert(e.utterance_id).second)
      throw Error(ErrorCode::kDuplicateUtterance,
                  "line " + std::to_string(line_no) + ": " + e.utterance_id);
    if (check_files) {
      if (e.features.empty() && !std::filesystem::exists(e.audio))
        throw Error(ErrorCode::kMissingAudio,
                    "line " + std::to_string(line_no) + ": " + e.audio.string());
      for (const auto& [_, path] : e.features)
        if (!std::filesystem::exists(path))
          throw Error(ErrorCode::kMissingAudio,
                      "line " + std::to_string(line_no) + ": " + path.string());
    }
    m.entries.push_back(std::move(e));
  }
  return m;
}

ExperimentManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, path.string());
  return parse_manifest(in, path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const ExperimentManifest& m) {
  const auto base = path.parent_path();
  auto rel = [&](const std::filesystem::path& p) {
    return p.lexically_relative(base).generic_string();
  };
  std::ostringstream out;
  out << json{{"corpus", {{"name", m.corpus_name}, {"sample_rate", m.sample_rate_hz}}}}.dump()
      << "\n";
  for (const auto& e : m.entries) {
    json j{{"speaker_id", e.speaker_id}, {"utterance_id", e.utterance_id}};
    if (!e.audio.empty()) j["audio"] = rel(e.audio);
    if (!e.features.empty()) {
      json f = json::object();
      for (const auto& [family, p] : e.features) f[std::string(to_string(family))] = rel(p);
      j["features"] = f;
    }
    if (e.split != Split::kUnset) j["split"] = to_string(e.split);
    if (e.shared_text) j["shared_text"] = true;
    out << j.dump() << "\n";
  }
  detail::write_text_atomic(path, out.str());
}

ExperimentManifest auto_split(const ExperimentManifest& manifest, const SplitConfig& cfg) {
  if (cfg.n_train < 1 || cfg.n_test < 1)
    throw Error(ErrorCode::kConfigInvalid, "n_train and n_test must be >= 1");
  ExperimentManifest out = manifest;

  std::map<std::string, std::vector<std::size_t>> by_speaker;
  for (std::size_t i = 0; i < out.entries.size(); ++i)
    by_speaker[out.entries[i].speaker_id].push_back(i);

  Rng rng(cfg.seed);
  for (auto& [speaker, idx] : by_speaker) {
    std::size_t preset_train = 0, preset_test = 0;
    std::vector<std::size_t> unset;
    for (std::size_t i : idx) {
      const auto& e = out.entries[i];
      if (e.split == Split::kTrain) ++preset_train;
      else if (e.split == Split::kTest) ++preset_test;
      else unset.push_back(i);
    }
    if (unset.empty()) continue;
    const auto need_test =
        static_cast<std::size_t>(cfg.n_test) - std::min<std::size_t>(preset_test, cfg.n_test);
    const auto need_train =
        static_cast<std::size_t>(cfg.n_train) - std::min<std::size_t>(preset_train, cfg.n_train);
    if (unset.size() < need_test + need_train)
      throw Error(ErrorCode::kInsufficientUtterances,
                  "speaker '" + speaker + "' has " + std::to_string(idx.size()) +
                      " utterances, needs " + std::to_string(cfg.n_train + cfg.n_test));

    std::sort(unset.begin(), unset.end(), [&](std::size_t a, std::size_t b) {
      return out.entries[a].utterance_id < out.entries[b].utterance_id;
    });
    // Fisher-Yates with the portable generator; one stream across speakers
    // in speaker-id order.
    for (std::size_t i = unset.size(); i > 1; --i) std::swap(unset[i - 1], unset[rng.index(i)]);

    std::vector<std::size_t> test_pool, rest;
    for (std::size_t i : unset) {
      const bool eligible = !(cfg.exclude_shared_from_test && out.entries[i].shared_text);
      (eligible && test_pool.size() < need_test ? test_pool : rest).push_back(i);
    }
    if (test_pool.size() < need_test)
      throw Error(ErrorCode::kInsufficientUtterances,
                  "speaker '" + speaker + "' lacks test-eligible utterances");
    for (std::size_t i : test_pool) out.entries[i].split = Split::kTest;
    std::size_t assigned = 0;
    for (std::size_t i : rest) {
      if (assigned == need_train) break;
      out.entries[i].split = Split::kTrain;
      ++assigned;
    }
    if (assigned < need_train)
      throw Error(ErrorCode::kInsufficientUtterances,
                  "speaker '" + speaker + "' lacks training utterances");
  }
  return out;
}

}  // namespace spkid
