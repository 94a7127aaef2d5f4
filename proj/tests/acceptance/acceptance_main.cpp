// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and sizes are fixed here, not configurable.
//
// Usage: spkid_acceptance [work_dir]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "spkid/classifiers.hpp"
#include "spkid/error.hpp"
#include "spkid/experiment.hpp"
#include "spkid/features.hpp"
#include "spkid/fusion.hpp"
#include "spkid/gmm.hpp"
#include "spkid/rng.hpp"

namespace fs = std::filesystem;
using namespace spkid;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int run_cli(const std::string& args, const fs::path& stdout_path) {
  const std::string cmd = std::string(SPKID_CLI) + " " + args + " > " + stdout_path.string() +
                          " 2> " + stdout_path.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

GmmModel random_gmm(std::size_t m, std::size_t d, Rng& rng, double spread) {
  GmmModel g{std::vector<double>(m), Matrix(m, d), Matrix(m, d)};
  double total = 0.0;
  for (auto& w : g.weights) total += w = rng.uniform(0.3, 1.0);
  for (auto& w : g.weights) w /= total;
  for (double& v : g.means.data()) v = rng.normal(0.0, spread);
  for (double& v : g.variances.data()) v = rng.uniform(0.2, 1.5);
  return g;
}

Matrix draw(const GmmModel& g, std::size_t n, Rng& rng) {
  Matrix x(n, g.dim());
  for (std::size_t t = 0; t < n; ++t) {
    double u = rng.uniform();
    std::size_t k = 0;
    while (k + 1 < g.components() && u >= g.weights[k]) u -= g.weights[k++];
    for (std::size_t j = 0; j < g.dim(); ++j)
      x(t, j) = g.means(k, j) + std::sqrt(g.variances(k, j)) * rng.normal();
  }
  return x;
}

// --- criteria ----------------------------------------------------------------

Outcome informational() {
  return {true,
          "published corpus is licensed; reproduction replaced by criteria 2-10 "
          "(informational)"};
}

Outcome table_arithmetic() {
  const auto t0 = Clock::now();
  const std::pair<std::size_t, std::string> published[] = {
      {24, "42.85"}, {28, "50.00"}, {30, "53.57"}, {32, "57.14"}, {34, "60.71"},
      {36, "64.28"}, {38, "67.85"}, {40, "71.42"}, {42, "75.00"}, {48, "85.71"}};
  std::string bad;
  for (const auto& [correct, expect] : published) {
    std::vector<std::pair<std::string, std::string>> decisions;
    for (std::size_t i = 0; i < 56; ++i)
      decisions.emplace_back(i < correct ? "spk" : "other", "spk");
    ResultsGrid grid;
    grid.features = {FeatureSet::kF1};
    grid.systems = {System::kFused};
    grid.cells.push_back({FeatureSet::kF1, System::kFused, identification_rate(decisions), {}});
    const auto csv = emit_tables(grid, TableFormat::kCsv);
    const std::string want = "F1,System3," + std::to_string(correct) + ",56," + expect + ",";
    if (csv.find(want) == std::string::npos) bad += " " + std::to_string(correct) + "/56";
  }
  const double secs = seconds_since(t0);
  return {bad.empty() && secs < 1.0,
          (bad.empty() ? "10/10 values exact" : "mismatch:" + bad) + fmt(", %.3f s", secs)};
}

struct GridRun {
  int exit_code = -1;
  std::string csv;
  double seconds = 0.0;
};

Outcome synthetic_grid(const fs::path& work, GridRun* first) {
  const auto t0 = Clock::now();
  const auto corpus = work / "corpus";
  fs::remove_all(corpus);
  if (run_cli("synth-corpus --out " + corpus.string(), work / "synth.out") != 0)
    return {false, "synth-corpus failed: " + slurp(work / "synth.out.err")};
  first->exit_code = run_cli("run-grid --manifest " + (corpus / "manifest.jsonl").string() +
                                 " --features F1,F2,F5 --format csv",
                             work / "grid1.csv");
  first->csv = slurp(work / "grid1.csv");
  first->seconds = seconds_since(t0);
  if (first->exit_code != 0)
    return {false, "run-grid exit " + std::to_string(first->exit_code) + ": " +
                       slurp(work / "grid1.csv.err")};

  std::map<std::string, double> ir;
  std::istringstream lines(first->csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() >= 5 && !f[4].empty()) ir[f[0] + "/" + f[1]] = std::stod(f[4]);
  }
  bool ok = ir.size() == 9;
  std::string detail;
  for (const auto& [cell, v] : ir) {
    ok = ok && v >= 90.0;
    detail += cell + "=" + fmt("%.2f", v) + " ";
  }
  const double fused = ir.count("F5/System3") ? ir["F5/System3"] : -1.0;
  for (const char* single : {"F1/System3", "F2/System3"})
    ok = ok && ir.count(single) && fused >= ir[single];
  ok = ok && first->seconds < 300.0;
  return {ok, detail + fmt("(%.1f s)", first->seconds)};
}

Outcome em_monotonic() {
  const auto t0 = Clock::now();
  Rng rng(4242);
  const std::size_t dims[] = {2, 12};
  const int comps[] = {2, 8, 32};
  double worst = 0.0;
  int total_iters = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = dims[trial % 2];
    const int m = comps[(trial / 2) % 3];
    const std::size_t n = 200 + rng.index(1801);
    const auto truth = random_gmm(static_cast<std::size_t>(std::max(2, m / 2)), d, rng, 3.0);
    const auto x = draw(truth, n, rng);
    EmConfig cfg;
    cfg.components = m;
    cfg.max_iterations = 40;
    cfg.log_likelihood_rel_tol = 1e-10;
    cfg.rng_seed = static_cast<std::uint64_t>(trial + 1);
    EmReport rep;
    em_fit(x, cfg, &rep);
    total_iters += rep.iterations;
    for (std::size_t i = 1; i < rep.log_likelihood.size(); ++i) {
      const double prev = rep.log_likelihood[i - 1];
      const double drop = (prev - rep.log_likelihood[i]) / std::fabs(prev);
      worst = std::max(worst, drop);
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-8 && secs < 60.0,
          "20 datasets, " + std::to_string(total_iters) + " iterations, worst relative drop " +
              fmt("%.3g", worst) + fmt(", %.1f s", secs)};
}

Outcome map_limits() {
  Rng rng(77);
  double worst_inf = 0.0, worst_zero = 0.0;
  int instances = 0;
  while (instances < 10) {
    const auto ubm = random_gmm(2 + rng.index(5), 1 + rng.index(4), rng, 2.0);
    const auto x = draw(ubm, 300, rng);
    // Responsibility-weighted sample means and occupancies (oracle with r -> 0).
    const auto weighted = oracle::map_means(ubm, x, 1e-300);
    std::vector<double> occ(ubm.components(), 0.0);
    {
      GmmEvaluator ev(ubm);
      std::vector<double> post(ubm.components());
      for (std::size_t t = 0; t < x.rows(); ++t) {
        ev.responsibilities(x.row(t), post);
        for (std::size_t i = 0; i < post.size(); ++i) occ[i] += post[i];
      }
    }
    if (*std::min_element(occ.begin(), occ.end()) < 1.0) continue;  // precondition
    ++instances;
    const auto big = map_adapt_means(ubm, x, MapConfig{1e12});
    const auto small = map_adapt_means(ubm, x, MapConfig{1e-9});
    for (std::size_t k = 0; k < ubm.means.data().size(); ++k) {
      const double u = ubm.means.data()[k];
      worst_inf = std::max(worst_inf, std::fabs(big.means.data()[k] - u) / std::max(std::fabs(u), 1e-12));
      const double w = weighted.data()[k];
      worst_zero = std::max(worst_zero, std::fabs(small.means.data()[k] - w) / std::max(std::fabs(w), 1e-12));
    }
  }
  return {worst_inf <= 1e-9 && worst_zero <= 1e-6,
          "10 instances, r=1e12 max rel err " + fmt("%.2g", worst_inf) + ", r=1e-9 max rel err " +
              fmt("%.2g", worst_zero)};
}

Outcome smo_vs_qp() {
  Rng rng(606);
  int agree = 0, zero_err = 0;
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 6 + rng.index(25);
    const double theta = rng.uniform(0.0, 6.283185307179586);
    const double nx = std::cos(theta), ny = std::sin(theta);
    const double ox = rng.uniform(-3, 3), oy = rng.uniform(-3, 3);
    Matrix x;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      const int label = i % 2 ? 1 : -1;
      const double along = rng.uniform(-5.0, 5.0);
      const double across = label * (1.5 + rng.uniform(0.0, 3.0));
      x.append_row(std::vector<double>{-ny * along + nx * across + ox, nx * along + ny * across + oy});
      y.push_back(label);
    }
    oracle::Hyperplane h;
    if (!oracle::hard_margin_2d(x, y, &h)) return {false, "oracle found no separator"};
    SvmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial) + 1;
    SmoReport rep;
    const auto svm = smo_train(x, y, cfg, &rep);
    if (rep.training_errors == 0) ++zero_err;
    bool same = true;
    for (std::size_t i = 0; i < n; ++i)
      same = same && (svm.decision(x.row(i)) > 0) == (h(x(i, 0), x(i, 1)) > 0);
    if (same) ++agree;
  }
  return {agree == 25 && zero_err == 25,
          std::to_string(zero_err) + "/25 zero training error, " + std::to_string(agree) +
              "/25 sign agreement"};
}

Outcome nb_oracle() {
  Rng rng(707);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.index(5);
    const std::size_t d = 1 + rng.index(8);
    NbModel model;
    double total = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      model.classes.push_back("c" + std::to_string(c));
      model.priors.push_back(rng.uniform(0.2, 1.0));
      total += model.priors.back();
    }
    for (auto& p : model.priors) p /= total;
    model.means = Matrix(k, d);
    model.variances = Matrix(k, d);
    for (double& v : model.means.data()) v = rng.normal(0.0, 1.5);
    for (double& v : model.variances.data()) v = rng.uniform(0.3, 3.0);
    std::vector<double> probe(d);
    for (auto& v : probe) v = rng.normal(0.0, 2.0);
    if (decide(nb_score(model, probe)).index == oracle::nb_argmax(model, probe)) ++agree;
  }
  return {agree == 100, std::to_string(agree) + "/100 argmax agreement"};
}

Outcome determinism(const fs::path& work, const GridRun& first) {
  if (first.exit_code != 0) return {false, "first run-grid invocation failed"};
  const int rc = run_cli("run-grid --manifest " + (work / "corpus" / "manifest.jsonl").string() +
                             " --features F1,F2,F5 --format csv",
                         work / "grid2.csv");
  const auto second = slurp(work / "grid2.csv");
  const bool same = rc == 0 && second == first.csv;
  return {same, same ? "two invocations byte-identical (" + std::to_string(second.size()) +
                           " bytes)"
                     : "CSV outputs differ"};
}

Outcome dimensional_contract(const fs::path& work) {
  const auto manifest = load_manifest(work / "corpus" / "manifest.jsonl");
  const FrontendConfig fe;
  std::string bad;
  const std::pair<FeatureSet, std::size_t> sets[] = {
      {FeatureSet::kF1, 12}, {FeatureSet::kF2, 13}, {FeatureSet::kF3, 36}, {FeatureSet::kF4, 39}};
  std::map<FeatureSet, std::vector<FeatureMatrix>> feats;
  for (const auto& e : manifest.entries)
    for (const auto& [set, dims] : sets) {
      auto f = load_features(e, set, fe);
      if (f.dims() != dims) bad += " " + std::string(to_string(set));
      if (e.split == Split::kTrain && feats[set].size() < 4) feats[set].push_back(std::move(f));
    }

  // Frame-level streams from real audio as well.
  Rng rng(3);
  SampleBuffer audio{std::vector<double>(8000), 16000};
  for (auto& s : audio.samples) s = 0.2 * rng.normal();
  const auto frames = analysis_frames(audio, FramingConfig{});
  for (const auto& [set, dims] : sets)
    if (assemble_feature_set(set, frames, fe).dims() != dims) bad += " audio-" + std::string(to_string(set));

  EmConfig em;  // default M = 128
  em.max_iterations = 3;
  std::map<FeatureSet, Supervector> svs;
  for (FeatureSet set : {FeatureSet::kF1, FeatureSet::kF2}) {
    const auto ubm = em_fit(stack_features(feats[set]), em);
    auto sv = extract_supervector(map_adapt_means(ubm, feats[set][0].vectors, MapConfig{}));
    sv.utterance_id = "probe";
    svs[set] = sv;
  }
  const auto fused = concat_supervectors(svs[FeatureSet::kF1], svs[FeatureSet::kF2]);
  const bool ok = bad.empty() && svs[FeatureSet::kF1].values.size() == 1536 &&
                  svs[FeatureSet::kF2].values.size() == 1664 && fused.values.size() == 3200;
  return {ok, "F1..F4 = 12/13/36/39 on " + std::to_string(manifest.entries.size()) +
                  " utterances + audio; supervectors " +
                  std::to_string(svs[FeatureSet::kF1].values.size()) + "/" +
                  std::to_string(svs[FeatureSet::kF2].values.size()) + ", fused " +
                  std::to_string(fused.values.size()) + (bad.empty() ? "" : "; bad:" + bad)};
}

Outcome leakage_guard(const fs::path& work) {
  // The fixture references the synthetic corpus archives by relative path.
  const auto target = work / "corpus" / "leaky_manifest.jsonl";
  fs::copy_file(fs::path(SPKID_FIXTURES) / "leaky_manifest.jsonl", target,
                fs::copy_options::overwrite_existing);
  const int rc = run_cli("run-grid --manifest " + target.string(), work / "leaky.out");
  const auto err = slurp(work / "leaky.out.err");
  const bool named = err.find("Leakage") != std::string::npos;
  return {rc == 3 && named, "exit " + std::to_string(rc) + (named ? ", leakage reported" : "")};
}

}  // namespace

int main(int argc, char** argv) {
  const fs::path work = argc > 1 ? fs::path(argv[1])
                                 : fs::temp_directory_path() / "spkid_acceptance";
  fs::create_directories(work);

  GridRun first;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"published-number reproduction", informational},
      {"table arithmetic", table_arithmetic},
      {"synthetic end-to-end grid", [&] { return synthetic_grid(work, &first); }},
      {"EM monotonicity", em_monotonic},
      {"MAP limits", map_limits},
      {"SMO vs QP oracle", smo_vs_qp},
      {"NB oracle equivalence", nb_oracle},
      {"determinism", [&] { return determinism(work, first); }},
      {"dimensional contract", [&] { return dimensional_contract(work); }},
      {"leakage guard", [&] { return leakage_guard(work); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%2zu] %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failures),
              criteria.size());
  return failures == 0 ? 0 : 1;
}
