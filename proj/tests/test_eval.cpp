#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "dynsel/eval.hpp"
#include "dynsel/learners.hpp"

using namespace dynsel;

namespace {

/// Knows the SEA labelling rule for a fixed threshold.
struct OracleModel {
  double theta = 8.0;
  ClassIndex predict(std::span<const double> x) const { return SeaGenerator::label_for(x, theta); }
  void partial_fit(std::span<const Instance>) {}
};

struct ConstantModel {
  ClassIndex answer = 0;
  ClassIndex predict(std::span<const double>) const { return answer; }
  void partial_fit(std::span<const Instance>) {}
};

/// Records the order of predict and fit calls and the labels it was shown.
struct RecordingModel {
  std::vector<std::string>* log;
  std::vector<ClassIndex> seen_labels;
  ClassIndex predict(std::span<const double> x) const {
    log->push_back("predict " + std::to_string(static_cast<int>(x[0])));
    return 0;
  }
  void partial_fit(std::span<const Instance> b) {
    for (const auto& i : b) {
      log->push_back("fit " + std::to_string(static_cast<int>(i.features[0])));
      seen_labels.push_back(*i.label);
    }
  }
};

/// Predicts the label of the previous instance; ready after one instance.
struct EchoModel {
  ClassIndex last = 0;
  std::size_t fitted = 0;
  ClassIndex predict(std::span<const double>) const { return last; }
  void partial_fit(std::span<const Instance> b) {
    for (const auto& i : b) last = *i.label;
    fitted += b.size();
  }
  bool ready() const { return fitted > 0; }
};

VectorStream balanced_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Instance> data;
  for (std::size_t i = 0; i < n; ++i)
    data.emplace_back(std::vector<double>{static_cast<double>(i)}, std::bernoulli_distribution(0.5)(rng) ? 1 : 0);
  return VectorStream(std::move(data), 2);
}

VectorStream labeled(const std::vector<ClassIndex>& labels, std::size_t classes = 2) {
  std::vector<Instance> data;
  for (std::size_t i = 0; i < labels.size(); ++i) data.emplace_back(std::vector<double>{static_cast<double>(i)}, labels[i]);
  return VectorStream(std::move(data), classes);
}

}  // namespace

TEST(Prequential, PerfectModelScoresOne) {
  SeaGenerator gen(1, DriftSchedule::constant(0));
  OracleModel m;
  const auto r = prequential_run(gen, m, 2000);
  ASSERT_EQ(r.rows.size(), 4u);
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.accuracy, 1.0);
    EXPECT_EQ(row.window_accuracy, 1.0);
    EXPECT_DOUBLE_EQ(row.faded_accuracy, 1.0);
    EXPECT_EQ(row.kappa, 1.0);
    EXPECT_EQ(row.gmean, 1.0);
  }
}

TEST(Prequential, ConstantModelOnBalancedStream) {
  auto s = balanced_stream(10000, 2);
  ConstantModel m;
  const auto r = prequential_run(s, m, 10000);
  EXPECT_NEAR(r.rows.back().accuracy, 0.5, 0.02);
  EXPECT_EQ(r.rows.back().kappa, 0.0);
  EXPECT_EQ(r.rows.back().gmean, 0.0);
}

TEST(Prequential, PredictsBeforeTraining) {
  std::vector<std::string> log;
  RecordingModel m{&log, {}};
  auto s = labeled({1, 0, 1});
  prequential_run(s, m, 3);
  EXPECT_EQ(log, (std::vector<std::string>{"predict 0", "fit 0", "predict 1", "fit 1", "predict 2", "fit 2"}));
  EXPECT_EQ(m.seen_labels, (std::vector<ClassIndex>{1, 0, 1}));
}

TEST(Prequential, CheckpointsAndFinalRow) {
  auto s = balanced_stream(1234, 3);
  ConstantModel m;
  const auto r = prequential_run(s, m, 1234, PrequentialOptions{.checkpoint_every = 500});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].index, 500u);
  EXPECT_EQ(r.rows[1].index, 1000u);
  EXPECT_EQ(r.rows[2].index, 1234u);
  EXPECT_FALSE(r.truncated);
}

TEST(Prequential, ShortStreamIsTruncated) {
  auto s = balanced_stream(700, 4);
  ConstantModel m;
  const auto r = prequential_run(s, m, 1000);
  EXPECT_TRUE(r.truncated);
  EXPECT_EQ(r.instances_seen, 700u);
  EXPECT_EQ(r.rows.back().index, 700u);
}

TEST(Prequential, RecordsFirstReadyIndex) {
  auto s = labeled({0, 1, 1, 0});
  EchoModel m;
  const auto r = prequential_run(s, m, 4);
  ASSERT_TRUE(r.first_ready_index);
  EXPECT_EQ(*r.first_ready_index, 2u);
  EXPECT_EQ(r.rows.back().accuracy, 0.5);  // predicted 0,0,1,1 against 0,1,1,0
}

TEST(Prequential, RejectsBadOptions) {
  auto s = balanced_stream(10, 5);
  ConstantModel m;
  EXPECT_THROW(prequential_run(s, m, 0), std::invalid_argument);
  EXPECT_THROW(prequential_run(s, m, 10, PrequentialOptions{.alpha = 0.0}), std::invalid_argument);
  EXPECT_THROW(prequential_run(s, m, 10, PrequentialOptions{.alpha = 1.5}), std::invalid_argument);
  EXPECT_THROW(prequential_run(s, m, 10, PrequentialOptions{.window = 0}), std::invalid_argument);
}

TEST(FadedAccuracy, AlphaOneIsPlainAccuracy) {
  std::mt19937_64 rng(6);
  PrequentialState st(3, 1.0, 100);
  for (int i = 0; i < 5000; ++i) {
    const ClassIndex t = rng() % 3, p = rng() % 3;
    st.score(t, p);
    ASSERT_NEAR(st.faded_accuracy(), st.accuracy(), 1e-12);
  }
}

TEST(FadedAccuracy, HandExample) {
  // hits 1, 0, 0 with alpha 0.5: numerator 0.25, denominator 1.75
  FadedAccuracy f;
  f.update(true, 0.5);
  f.update(false, 0.5);
  f.update(false, 0.5);
  EXPECT_DOUBLE_EQ(f.value(), 0.25 / 1.75);
  FadedAccuracy g;
  g.update(false, 0.5);
  g.update(true, 0.5);
  EXPECT_DOUBLE_EQ(g.value(), 1.0 / 1.5);
  FadedAccuracy h;
  h.update(true, 0.5);
  h.update(false, 0.5);
  EXPECT_DOUBLE_EQ(h.value(), 1.0 / 3.0);
}

TEST(WindowAccuracy, MatchesBruteForceRecount) {
  std::mt19937_64 rng(7);
  for (std::size_t w : {1u, 7u, 50u}) {
    PrequentialState st(2, 0.99, w);
    std::vector<bool> hits;
    for (int i = 0; i < 400; ++i) {
      const ClassIndex t = rng() % 2, p = rng() % 2;
      st.score(t, p);
      hits.push_back(t == p);
      const std::size_t from = hits.size() > w ? hits.size() - w : 0;
      std::size_t h = 0;
      for (std::size_t j = from; j < hits.size(); ++j) h += hits[j];
      ASSERT_DOUBLE_EQ(st.window_accuracy(), static_cast<double>(h) / static_cast<double>(hits.size() - from));
      ASSERT_LE(st.recent().size(), w);
    }
  }
}

TEST(ConfusionMatrix, CountsAreConserved) {
  std::mt19937_64 rng(8);
  ConfusionMatrix cm(4);
  std::vector<std::uint64_t> truth(4, 0), pred(4, 0);
  for (int i = 0; i < 3000; ++i) {
    const ClassIndex t = rng() % 4, p = rng() % 4;
    cm.add(t, p);
    ++truth[t];
    ++pred[p];
  }
  EXPECT_EQ(cm.total(), 3000u);
  std::uint64_t sum = 0;
  for (std::size_t c = 0; c < 4; ++c) {
    EXPECT_EQ(cm.row_sum(c), truth[c]);
    EXPECT_EQ(cm.col_sum(c), pred[c]);
    for (std::size_t d = 0; d < 4; ++d) sum += cm(c, d);
  }
  EXPECT_EQ(sum, 3000u);
  EXPECT_THROW(cm.add(4, 0), std::out_of_range);
}

TEST(Kappa, Examples) {
  EXPECT_EQ(kappa(ConfusionMatrix{{40, 10}, {5, 45}}), 0.7);
  EXPECT_EQ(kappa(ConfusionMatrix{{50, 0}, {0, 50}}), 1.0);
  EXPECT_EQ(kappa(ConfusionMatrix{{100, 0}, {0, 0}}), 0.0);  // chance agreement is total
  EXPECT_EQ(kappa(ConfusionMatrix{{25, 25}, {25, 25}}), 0.0);
  EXPECT_LT(kappa(ConfusionMatrix{{0, 50}, {50, 0}}), 0.0);
  EXPECT_THROW(kappa(ConfusionMatrix(2)), std::invalid_argument);
}

TEST(Gmean, Examples) {
  EXPECT_NEAR(gmean(ConfusionMatrix{{9, 1}, {5, 5}}), std::sqrt(0.45), 1e-12);
  EXPECT_EQ(gmean(ConfusionMatrix{{10, 0}, {10, 0}}), 0.0);
  // class 2 never occurs and does not count
  EXPECT_NEAR(gmean(ConfusionMatrix{{4, 0, 0}, {0, 1, 0}, {0, 0, 0}}), 1.0, 1e-12);
  EXPECT_NEAR(gmean_of_recalls({0.8, 0.5}), std::sqrt(0.4), 1e-12);
  EXPECT_EQ(gmean_of_recalls({0.8, 0.0}), 0.0);
}

TEST(ReportCsv, HeaderAndSixDecimals) {
  EvaluationReport r;
  r.rows.push_back({500, 0.5, 1.0 / 3.0, 0.75, -1e-9, 2.0 / 3.0});
  std::ostringstream out;
  write_report_csv(out, r);
  EXPECT_EQ(out.str(),
            "index,accuracy,faded_accuracy,window_accuracy,kappa,gmean\n"
            "500,0.500000,0.333333,0.750000,0.000000,0.666667\n");
}
