#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "dv/common.hpp"
#include "dv/experiments.hpp"
#include "support/helpers.hpp"

using namespace dv;
using dvtest::DocSpec;
using dvtest::make_two_view;
using dvtest::TwoView;

TEST_CASE("guarded labels refuse test-split reads outside scoring") {
  GuardedLabels labels({1, 0, 1}, {Split::Train, Split::Validation, Split::Test});
  CHECK(labels.label(0) == 1);
  CHECK(labels.label(1) == 0);
  std::vector<std::pair<int, Split>> seen;
  labels.set_observer([&](int doc, Split s) { seen.emplace_back(doc, s); });
  CHECK_THROWS_AS(labels.label(2), ConfigError);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].first == 2);
  CHECK(seen[0].second == Split::Test);

  CHECK(labels.score_test_accuracy({2}, {1}) == 1.0);
  CHECK(labels.score_test_accuracy({2}, {0}) == 0.0);
}

TEST_CASE("experiments never request test labels before scoring") {
  // GuardedLabels throws on any early test-label read, so the experiments
  // below completing at all is the enforcement; this case documents it.
  const TwoView data = make_two_view(40, 30, 0.07, 0.09, 3, 20);
  CurveSpec spec;
  spec.sizes = {10};
  spec.repeats = 2;
  spec.models = {CurveModel::DV};
  spec.seed = 1;
  EnsembleConfig cfg;
  CHECK_NOTHROW(learning_curve(spec, data.dense, data.sparse, data.meta, cfg));
}

TEST_CASE("learning curve at full train size matches the direct pipeline") {
  const TwoView data = make_two_view(40, 50, 0.07, 0.09, 21, 25);
  EnsembleConfig cfg;

  CurveSpec spec;
  spec.sizes = {80};  // the whole labeled training set
  spec.repeats = 1;
  spec.models = {CurveModel::DV};
  spec.seed = 9;
  const std::vector<CurveRow> rows =
      learning_curve(spec, data.dense, data.sparse, data.meta, cfg);
  REQUIRE(rows.size() == 1);

  // direct computation with the same protocol: all train rows, tune on valid
  FeatureMatrix train, valid, test;
  std::vector<int> test_ids;
  const auto fill = [&](FeatureMatrix& m, Split s, bool with_labels) {
    m.dense_dim = 1;
    for (int i = 0; i < data.meta.size(); ++i) {
      if (data.meta.splits[static_cast<std::size_t>(i)] != s) continue;
      m.dense.push_back(data.dense.data[static_cast<std::size_t>(i)]);
      ++m.n_rows;
      if (with_labels)
        m.labels.push_back(data.meta.labels[static_cast<std::size_t>(i)] == Label::Positive);
      if (s == Split::Test) test_ids.push_back(i);
    }
  };
  fill(train, Split::Train, true);
  fill(valid, Split::Validation, true);
  fill(test, Split::Test, false);
  const TuneResult tuned = tune_C(train, valid, cfg.c_grid, cfg.fit);
  int correct = 0;
  for (int i = 0; i < test.n_rows; ++i) {
    const int pred = predict_from_logit(logit(tuned.model, test, i));
    if (pred == (data.meta.labels[static_cast<std::size_t>(test_ids[static_cast<std::size_t>(i)])] ==
                 Label::Positive))
      ++correct;
  }
  const double direct = static_cast<double>(correct) / test.n_rows;
  CHECK(rows[0].accuracy == direct);
}

TEST_CASE("the weaker sparse view loses to the dense view at every size") {
  const TwoView data = make_two_view(1200, 700, 0.07, 0.09, 606, 500);
  CurveSpec spec;
  spec.sizes = {10, 2000};
  spec.repeats = 3;
  spec.models = {CurveModel::DV, CurveModel::BON};
  spec.seed = 11;
  EnsembleConfig cfg;
  const std::vector<CurveRow> rows =
      learning_curve(spec, data.dense, data.sparse, data.meta, cfg);
  for (int size : spec.sizes) {
    double dv_mean = 0.0, bon_mean = 0.0;
    for (const CurveRow& r : rows) {
      if (r.size != size) continue;
      (r.model == "dv" ? dv_mean : bon_mean) += r.accuracy;
    }
    INFO("size ", size, " dv ", dv_mean, " bon ", bon_mean);
    CHECK(dv_mean > bon_mean);
  }
}

TEST_CASE("curve defaults and validation") {
  const CurveSpec defaults;
  CHECK(defaults.repeats == 30);  // 30 random subsets per size
  CHECK(defaults.sizes.front() == 10);
  CHECK(defaults.sizes.back() == 20000);

  const TwoView data = make_two_view(30, 20, 0.07, 0.09, 5, 10);
  EnsembleConfig cfg;
  CurveSpec spec;
  spec.repeats = 1;
  spec.models = {CurveModel::DV};

  SUBCASE("odd sizes are rejected") {
    spec.sizes = {9};
    CHECK_THROWS_AS(learning_curve(spec, data.dense, data.sparse, data.meta, cfg), ConfigError);
  }
  SUBCASE("sizes beyond the labeled training set are rejected") {
    spec.sizes = {62};
    CHECK_THROWS_AS(learning_curve(spec, data.dense, data.sparse, data.meta, cfg), ConfigError);
  }
  SUBCASE("cells are reproducible from their derived seeds") {
    spec.sizes = {20};
    spec.repeats = 2;
    const auto a = learning_curve(spec, data.dense, data.sparse, data.meta, cfg);
    const auto b = learning_curve(spec, data.dense, data.sparse, data.meta, cfg);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].accuracy == b[i].accuracy);
  }
  SUBCASE("a single cell re-run in isolation reproduces its grid value") {
    spec.sizes = {8, 20};
    spec.repeats = 2;
    const auto grid = learning_curve(spec, data.dense, data.sparse, data.meta, cfg);
    CurveSpec lone = spec;
    lone.sizes = {20};
    lone.repeats = 2;
    const auto cell = learning_curve(lone, data.dense, data.sparse, data.meta, cfg);
    for (const CurveRow& r : cell) {
      const auto match = std::find_if(grid.begin(), grid.end(), [&](const CurveRow& g) {
        return g.model == r.model && g.size == r.size && g.repeat == r.repeat;
      });
      REQUIRE(match != grid.end());
      CHECK(match->accuracy == r.accuracy);
    }
  }
}

TEST_CASE("curve csv carries raw rows, summaries and the sampling flag") {
  std::vector<CurveRow> rows{{"dv", 10, 0, 0.8, "computed"}, {"dv", 10, 1, 0.9, "computed"}};
  const std::string path = "/tmp/dv_curve.csv";
  save_curve_csv(rows, true, path);
  std::ifstream is(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 5);
  CHECK(lines[0] == "model,size,repeat,accuracy,source,stratified");
  CHECK(lines[3] == "dv,10,mean,0.850000,summary,1");
  CHECK(lines[4].rfind("dv,10,std,", 0) == 0);
  std::remove(path.c_str());
}

namespace {

Corpus split_cluster_corpus(int train_per_class, int valid_per_class, int test_per_class,
                            std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::string> topic_a, topic_b;
  for (int i = 0; i < 20; ++i) {
    topic_a.push_back("pos" + std::to_string(i));
    topic_b.push_back("neg" + std::to_string(i));
  }
  std::vector<DocSpec> specs;
  const auto add = [&](Label label, Split split, int count) {
    const auto& topic = label == Label::Positive ? topic_a : topic_b;
    for (int d = 0; d < count; ++d) {
      std::string text;
      for (int t = 0; t < 16; ++t) {
        if (t) text += ' ';
        text += topic[static_cast<std::size_t>(rng.below(topic.size()))];
      }
      specs.push_back(DocSpec{text, label, split});
    }
  };
  add(Label::Positive, Split::Train, train_per_class);
  add(Label::Negative, Split::Train, train_per_class);
  add(Label::Positive, Split::Validation, valid_per_class);
  add(Label::Negative, Split::Validation, valid_per_class);
  add(Label::Positive, Split::Test, test_per_class);
  add(Label::Negative, Split::Test, test_per_class);
  return dvtest::make_corpus(specs);
}

}  // namespace

TEST_CASE("progress study records both variants with increasing checkpoints") {
  const Corpus corpus = split_cluster_corpus(10, 4, 6, 808);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  const NBWeights weights = fit_nb_weights(corpus, vocab, 1.0);

  TrainConfig base;
  base.dim = 8;
  base.epochs = 3;
  base.negatives = 2;
  base.lr_start = 0.05;
  base.lr_end = 1e-3;
  base.seed = 7;
  base.workers = 1;

  ProgressOptions opt;
  opt.runs_per_variant = 2;
  opt.interval = 100;
  opt.interval_until = 400;
  opt.c_grid = {0.1, 10.0};

  const std::vector<ProgressRecord> records = progress_study(corpus, vocab, base, weights, opt);
  REQUIRE(!records.empty());

  std::set<std::pair<std::string, int>> runs;
  for (const ProgressRecord& r : records) runs.insert({r.variant, r.run_id});
  CHECK(runs.size() == 4);  // 2 variants x 2 runs

  for (const auto& [variant, run] : runs) {
    std::vector<std::int64_t> steps;
    for (const ProgressRecord& r : records)
      if (r.variant == variant && r.run_id == run) steps.push_back(r.step);
    REQUIRE(steps.size() >= 2);
    for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i] > steps[i - 1]);
    if (variant == "vanilla")
      for (std::int64_t want : {100, 200, 300, 400})
        CHECK(std::find(steps.begin(), steps.end(), want) != steps.end());
  }

  // scores hold their plateau: the tail quartile stays within 0.3% of the
  // plateau mean (both validation and test)
  for (const auto& [variant, run] : runs) {
    std::vector<double> valid_acc, test_acc;
    for (const ProgressRecord& r : records)
      if (r.variant == variant && r.run_id == run) {
        valid_acc.push_back(r.valid_accuracy);
        test_acc.push_back(r.test_accuracy);
      }
    const auto tail_holds = [](const std::vector<double>& curve) {
      const std::size_t half = curve.size() / 2;
      const std::size_t quarter = std::max<std::size_t>(1, curve.size() / 4);
      double plateau = 0.0;
      for (std::size_t i = half; i < curve.size(); ++i) plateau += curve[i];
      plateau /= static_cast<double>(curve.size() - half);
      double tail = 0.0;
      for (std::size_t i = curve.size() - quarter; i < curve.size(); ++i) tail += curve[i];
      tail /= static_cast<double>(quarter);
      return tail >= plateau - 0.003;
    };
    CHECK(tail_holds(valid_acc));
    CHECK(tail_holds(test_acc));
  }

  SUBCASE("records are reproducible") {
    const std::vector<ProgressRecord> again = progress_study(corpus, vocab, base, weights, opt);
    REQUIRE(again.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      CHECK(again[i].step == records[i].step);
      CHECK(again[i].valid_accuracy == records[i].valid_accuracy);
      CHECK(again[i].test_accuracy == records[i].test_accuracy);
    }
  }
}

TEST_CASE("logit decomposition reconstructs the full logit") {
  const TwoView data = make_two_view(300, 200, 0.07, 0.09, 55);
  EnsembleConfig cfg;
  const FittedEnsemble fitted = fit_ensemble(data.dense, data.sparse, data.meta,
                                             {SchemeKind::CorrectMatching, 0}, cfg);
  const LogitAnalysis analysis = logit_analysis(fitted);
  REQUIRE(analysis.rows.size() == 400);
  for (std::size_t i = 0; i < analysis.rows.size(); ++i) {
    const LogitRow& r = analysis.rows[i];
    const double total = logit(fitted.model, fitted.test_rows, static_cast<int>(i));
    CHECK(std::abs(r.dense_logit + r.sparse_logit + 2.0 * r.half_intercept - total) < 1e-10);
  }
}

TEST_CASE("part logits correlate under correct matching and decorrelate when mismatched") {
  const TwoView data = make_two_view(1000, 800, 0.07, 0.09, 12321);
  EnsembleConfig cfg;
  const FittedEnsemble correct = fit_ensemble(data.dense, data.sparse, data.meta,
                                              {SchemeKind::CorrectMatching, 0}, cfg);
  const FittedEnsemble mismatch = fit_ensemble(
      data.dense, data.sparse, data.meta,
      {SchemeKind::OriginalMismatch, derive_seed(99, "mismatch")}, cfg);
  const LogitSummary sc = logit_analysis(correct).summary;
  const LogitSummary sm = logit_analysis(mismatch).summary;
  INFO("correct corr ", sc.corr_within_pos, "/", sc.corr_within_neg, " mismatch ",
       sm.corr_within_pos, "/", sm.corr_within_neg);
  CHECK(sm.corr_within_pos < 0.1);
  CHECK(sm.corr_within_neg < 0.1);
  CHECK(sc.corr_within_pos > 0.1);
  CHECK(sc.corr_within_neg > 0.1);

  // each part alone misclassifies roughly its designed share
  CHECK(sc.dense_error_rate > 0.03);
  CHECK(sc.dense_error_rate < 0.12);
  CHECK(sc.sparse_error_rate > 0.04);
  CHECK(sc.sparse_error_rate < 0.14);
}

TEST_CASE("logit csv and summary sidecar") {
  const TwoView data = make_two_view(50, 30, 0.07, 0.09, 2);
  EnsembleConfig cfg;
  const FittedEnsemble fitted = fit_ensemble(data.dense, data.sparse, data.meta,
                                             {SchemeKind::CorrectMatching, 0}, cfg);
  const LogitAnalysis analysis = logit_analysis(fitted);
  const std::string path = "/tmp/dv_logits.csv";
  save_logit_csv(analysis, path);
  std::ifstream is(path);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "doc_id,dense_logit,sparse_logit,half_intercept,label,dense_correct,sparse_correct,"
        "ensemble_correct");
  std::ifstream ss(path + ".summary.tsv");
  CHECK(ss.good());
  std::remove(path.c_str());
  std::remove((path + ".summary.tsv").c_str());
}

TEST_CASE("pearson correlation basics") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {6, 4, 2}) == doctest::Approx(-1.0));
  CHECK(std::abs(pearson({1, 2, 3, 4}, {1, -1, 1, -1})) < 0.5);
  CHECK_THROWS_AS(pearson({1}, {1}), ConfigError);
}
