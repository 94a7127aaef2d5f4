#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spkid/classifiers.hpp"
#include "spkid/error.hpp"
#include "spkid/fusion.hpp"
#include "spkid/rng.hpp"

using namespace spkid;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m;
  for (double x : v) m.append_row(std::vector<double>{x});
  return m;
}

// Two clouds on either side of a random line, at least `gap` apart.
void separable_2d(Rng& rng, std::size_t n, double gap, Matrix* x, std::vector<int>* y) {
  const double theta = rng.uniform(0.0, 6.283185307179586);
  const double nx = std::cos(theta), ny = std::sin(theta);
  *x = Matrix();
  y->clear();
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 ? 1 : -1;
    const double along = rng.uniform(-4.0, 4.0);
    const double across = label * (gap / 2 + rng.uniform(0.0, 3.0));
    x->append_row(std::vector<double>{along * -ny + across * nx + 1.0,
                                      along * nx + across * ny - 0.5});
    y->push_back(label);
  }
}

double sum_alpha_y(const SmoReport& rep, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += rep.alphas[i] * y[i];
  return s;
}

}  // namespace

TEST(MinMax, Examples) {
  const auto s = fit_minmax(column({0.0, 10.0}));
  EXPECT_EQ(apply_minmax(s, std::vector<double>{5.0}), std::vector<double>{0.5});
  EXPECT_EQ(apply_minmax(s, std::vector<double>{10.0}), std::vector<double>{1.0});
  EXPECT_EQ(apply_minmax(s, std::vector<double>{12.0}), std::vector<double>{1.0});
  EXPECT_EQ(apply_minmax(s, std::vector<double>{-3.0}), std::vector<double>{0.0});
  const auto c = fit_minmax(column({3.0, 3.0}));
  EXPECT_EQ(apply_minmax(c, std::vector<double>{3.0}), std::vector<double>{0.5});
  EXPECT_THROW(fit_minmax(Matrix()), Error);
  EXPECT_THROW(apply_minmax(s, std::vector<double>{1.0, 2.0}), Error);
}

TEST(Smo, SymmetricPair) {
  const auto x = column({-1.0, 1.0});
  const std::vector<int> y{-1, 1};
  const auto svm = smo_train(x, y, SvmConfig{});
  for (double p : {-3.0, -0.5, 0.25, 2.0})
    EXPECT_EQ(svm.decision(std::vector<double>{p}) > 0, p > 0) << p;
  EXPECT_NEAR(svm.decision(std::vector<double>{0.0}), 0.0, 1e-3);
}

TEST(Smo, XorCompletesWithBoundedAlphas) {
  Matrix x;
  for (auto p : {std::vector<double>{0, 0}, {1, 1}, {0, 1}, {1, 0}}) x.append_row(p);
  const std::vector<int> y{1, 1, -1, -1};
  SmoReport rep;
  const SvmConfig cfg;
  smo_train(x, y, cfg, &rep);
  for (double a : rep.alphas) {
    EXPECT_GE(a, 0.0);
    EXPECT_LE(a, cfg.c);
  }
  EXPECT_GT(rep.training_errors, 0u);
}

TEST(Smo, SeparableSetsMatchQpOracle) {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x;
    std::vector<int> y;
    separable_2d(rng, 10 + rng.index(21), 3.0, &x, &y);
    SvmConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    SmoReport rep;
    const auto svm = smo_train(x, y, cfg, &rep);
    EXPECT_EQ(rep.training_errors, 0u) << "trial " << trial;
    EXPECT_TRUE(rep.converged);
    EXPECT_LT(std::fabs(sum_alpha_y(rep, y)), cfg.tol);
    for (double a : rep.alphas) EXPECT_TRUE(a >= 0.0 && a <= cfg.c);

    oracle::Hyperplane h;
    ASSERT_TRUE(oracle::hard_margin_2d(x, y, &h));
    for (std::size_t i = 0; i < x.rows(); ++i)
      EXPECT_EQ(svm.decision(x.row(i)) > 0, h(x(i, 0), x(i, 1)) > 0);
    // Same separator up to the SMO tolerance.
    const double cosine = (svm.weights[0] * h.w0 + svm.weights[1] * h.w1) /
                          std::hypot(svm.weights[0], svm.weights[1]) / std::hypot(h.w0, h.w1);
    EXPECT_GT(cosine, 0.99) << "trial " << trial;
  }
}

TEST(Smo, InputErrors) {
  const auto x = column({1.0, 2.0});
  try {
    smo_train(x, std::vector<int>{1, 1}, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSingleClassInput);
  }
  auto bad = x;
  bad(0, 0) = std::nan("");
  try {
    smo_train(bad, std::vector<int>{1, -1}, SvmConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFiniteFeature);
  }
  SvmConfig cfg;
  cfg.c = 0.0;
  EXPECT_THROW(smo_train(x, std::vector<int>{1, -1}, cfg), Error);
}

TEST(Ovo, TwoClassesSingleMachine) {
  const auto x = column({0.0, 0.2, 1.0, 1.2});
  const std::vector<std::string> labels{"b", "b", "a", "a"};
  const auto model = ovo_train(x, labels, SvmConfig{});
  ASSERT_EQ(model.machines.size(), 1u);
  EXPECT_EQ(model.classes, (std::vector<std::string>{"a", "b"}));
  const auto s = ovo_score(model, std::vector<double>{1.1});
  EXPECT_EQ(s.scores, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(decide(s).speaker, "a");
}

TEST(Ovo, VotesSumToPairCount) {
  Rng rng(7);
  Matrix x;
  std::vector<std::string> labels;
  for (int c = 0; c < 5; ++c)
    for (int i = 0; i < 6; ++i) {
      x.append_row(std::vector<double>{c + 0.3 * rng.normal(), -c + 0.3 * rng.normal(),
                                       rng.normal()});
      labels.push_back("spk" + std::to_string(c));
    }
  const auto model = ovo_train(x, labels, SvmConfig{});
  EXPECT_EQ(model.machines.size(), 10u);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& m : model.machines) pairs.emplace_back(m.positive, m.negative);
  std::sort(pairs.begin(), pairs.end());
  EXPECT_EQ(std::adjacent_find(pairs.begin(), pairs.end()), pairs.end());
  for (int p = 0; p < 30; ++p) {
    const std::vector<double> probe{rng.normal(2, 3), rng.normal(-2, 3), rng.normal()};
    const auto s = ovo_score(model, probe);
    const double votes = std::accumulate(s.scores.begin(), s.scores.end(), 0.0) * 10.0;
    EXPECT_NEAR(votes, 10.0, 1e-12);
    EXPECT_NO_THROW(check_normalized(s));
  }
  // Training rows are recognised.
  for (std::size_t r = 0; r < x.rows(); r += 6) EXPECT_EQ(decide(ovo_score(model, x.row(r))).speaker, labels[r]);
}

TEST(Ovo, ThreeClassVoteFractions) {
  // Hand-built machines with votes (2, 1, 0).
  OvoSvmModel model;
  model.classes = {"a", "b", "c"};
  model.scaler = fit_minmax(column({0.0, 1.0}));
  auto constant = [](double b) {
    BinarySvm s;
    s.weights = {0.0};
    s.bias = b;
    return s;
  };
  model.machines = {{0, 1, constant(1.0)}, {0, 2, constant(1.0)}, {1, 2, constant(1.0)}};
  const auto s = ovo_score(model, std::vector<double>{0.5});
  EXPECT_NEAR(s.scores[0], 2.0 / 3, 1e-15);
  EXPECT_NEAR(s.scores[1], 1.0 / 3, 1e-15);
  EXPECT_EQ(s.scores[2], 0.0);
}

TEST(Ovo, ThreeWayTieBrokenByMarginSums) {
  // k = 4: a, b, c each win two duels and d loses all three. The margins
  // decide among a, b, c; enumerate all sign patterns of the cycle.
  for (int variant = 0; variant < 8; ++variant) {
    const double m_ab = 0.5 + (variant & 1), m_bc = 0.7 + (variant & 2) * 0.5,
                 m_ca = 0.9 + (variant & 4) * 0.25;
    OvoSvmModel model;
    model.classes = {"a", "b", "c", "d"};
    model.scaler = fit_minmax(column({0.0, 1.0}));
    auto machine = [](std::size_t p, std::size_t n, double f) {
      BinarySvm s;
      s.weights = {0.0};
      s.bias = f;
      return OvoMachine{p, n, s};
    };
    model.machines = {machine(0, 1, m_ab),  machine(0, 2, -m_ca), machine(0, 3, 1.0),
                      machine(1, 2, m_bc),  machine(1, 3, 1.0),   machine(2, 3, 1.0)};
    const auto s = ovo_score(model, std::vector<double>{0.5});
    EXPECT_EQ(s.scores[0], s.scores[1]);
    EXPECT_EQ(s.scores[1], s.scores[2]);
    // Margin sums by hand.
    const double ma = m_ab - m_ca + 1.0, mb = -m_ab + m_bc + 1.0, mc = m_ca - m_bc + 1.0;
    std::size_t expect = 0;
    if (mb > ma) expect = 1;
    if (mc > std::max(ma, mb)) expect = 2;
    EXPECT_EQ(decide(s).index, expect) << "variant " << variant;
  }
}

TEST(NaiveBayes, IdenticalClassesSplitEvenly) {
  const auto x = column({-1.0, 1.0, -1.0, 1.0});
  const std::vector<std::string> labels{"a", "a", "b", "b"};
  const auto model = nb_train(x, labels, NbConfig{});
  const auto s = nb_score(model, std::vector<double>{0.3});
  EXPECT_NEAR(s.scores[0], 0.5, 1e-15);
  EXPECT_NEAR(s.scores[1], 0.5, 1e-15);
}

TEST(NaiveBayes, TenSigmaSeparation) {
  NbModel model{{"A", "B"}, {0.5, 0.5}, column({0.0, 10.0}), column({1.0, 1.0})};
  const auto s = nb_score(model, std::vector<double>{0.0});
  EXPECT_EQ(decide(s).speaker, "A");
  EXPECT_GT(s.scores[0], 0.999);
  EXPECT_NO_THROW(check_normalized(s));
}

TEST(NaiveBayes, MatchesDensityProductOracle) {
  Rng rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix x;
    std::vector<std::string> labels;
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 8; ++i) {
        std::vector<double> row(4);
        for (std::size_t j = 0; j < 4; ++j) row[j] = rng.normal(c * 0.7 * (j % 2 ? 1 : -1), 1.0 + c);
        x.append_row(row);
        labels.push_back(std::string(1, static_cast<char>('p' + c)));
      }
    const auto model = nb_train(x, labels, NbConfig{});
    for (int p = 0; p < 20; ++p) {
      std::vector<double> probe(4);
      for (auto& v : probe) v = rng.normal(0.0, 2.0);
      EXPECT_EQ(decide(nb_score(model, probe)).index, oracle::nb_argmax(model, probe));
    }
  }
}

TEST(NaiveBayes, ArgmaxScaleInvariant) {
  Rng rng(56);
  Matrix x;
  std::vector<std::string> labels;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 6; ++i) {
      x.append_row(std::vector<double>{rng.normal(c, 1.0), rng.normal(-c, 0.5), rng.normal()});
      labels.push_back("s" + std::to_string(c));
    }
  const auto base = nb_train(x, labels, NbConfig{});
  for (double factor : {0.5, 2.0}) {
    Matrix scaled = x;
    for (double& v : scaled.data()) v *= factor;
    const auto model = nb_train(scaled, labels, NbConfig{});
    for (int p = 0; p < 25; ++p) {
      std::vector<double> probe{rng.normal(1.5, 2), rng.normal(-1.5, 2), rng.normal()};
      auto probe_s = probe;
      for (auto& v : probe_s) v *= factor;
      EXPECT_EQ(decide(nb_score(base, probe)).index, decide(nb_score(model, probe_s)).index);
    }
  }
}

TEST(NaiveBayes, InvariantsAndErrors) {
  const auto x = column({1.0, 1.0, 2.0, 4.0, 4.0});
  const std::vector<std::string> labels{"a", "a", "b", "b", "b"};
  const auto model = nb_train(x, labels, NbConfig{});
  EXPECT_NEAR(model.priors[0] + model.priors[1], 1.0, 1e-15);
  EXPECT_NEAR(model.priors[0], 0.4, 1e-15);
  EXPECT_GT(model.variances(0, 0), 0.0);  // constant class, smoothed
  const auto single = nb_train(x, std::vector<std::string>(5, "a"), NbConfig{});
  EXPECT_EQ(nb_score(single, std::vector<double>{9.0}).scores, std::vector<double>{1.0});
  try {
    nb_train(Matrix(), {}, NbConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyClass);
  }
  EXPECT_THROW(nb_score(model, std::vector<double>{1.0, 2.0}), Error);
}

TEST(NaiveBayes, SoftmaxShiftInvariance) {
  NbModel model{{"A", "B", "C"}, {0.2, 0.3, 0.5}, column({0.0, 1.0, 2.0}), column({1.0, 2.0, 0.5})};
  const std::vector<double> probe{0.8};
  auto lj = nb_log_joint(model, probe);
  const auto best = std::max_element(lj.begin(), lj.end()) - lj.begin();
  for (double& v : lj) v += 1234.5;
  EXPECT_EQ(std::max_element(lj.begin(), lj.end()) - lj.begin(), best);
  EXPECT_EQ(static_cast<std::ptrdiff_t>(decide(nb_score(model, probe)).index), best);
}

TEST(ClassifierIo, RoundTrip) {
  Rng rng(9);
  Matrix x;
  std::vector<std::string> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 4; ++i) {
      x.append_row(std::vector<double>{rng.normal(c, 0.3), rng.normal(-c, 0.3)});
      labels.push_back("k" + std::to_string(c));
    }
  const auto dir = std::filesystem::temp_directory_path() / "spkid_clf_test";
  std::filesystem::create_directories(dir);
  const auto svm = ovo_train(x, labels, SvmConfig{});
  write_classifier(dir / "svm.json", svm_to_json(svm, 7));
  const auto svm2 = svm_from_json(read_classifier(dir / "svm.json"));
  const auto nb = nb_train(x, labels, NbConfig{});
  write_classifier(dir / "nb.json", nb_to_json(nb, 7));
  const auto nb2 = nb_from_json(read_classifier(dir / "nb.json"));
  std::filesystem::remove_all(dir);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    EXPECT_EQ(ovo_score(svm, x.row(r)).scores, ovo_score(svm2, x.row(r)).scores);
    EXPECT_EQ(nb_score(nb, x.row(r)).scores, nb_score(nb2, x.row(r)).scores);
  }
}
