#ifndef DV_EXPERIMENTS_HPP_
#define DV_EXPERIMENTS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dv/classifier.hpp"
#include "dv/corpus.hpp"
#include "dv/ensemble.hpp"
#include "dv/model.hpp"
#include "dv/nb.hpp"
#include "dv/vocab.hpp"

namespace dv {

// Labels gated by split: experiments fit and tune against this view, which
// refuses to answer for Test documents. Test labels re-enter only through
// score_test_accuracy, the final scoring step.
class GuardedLabels {
 public:
  GuardedLabels(std::vector<int> labels01, std::vector<Split> splits);

  int size() const { return static_cast<int>(labels_.size()); }
  Split split(int doc) const { return splits_.at(static_cast<std::size_t>(doc)); }
  int label(int doc) const;  // throws on Test-split access

  double score_test_accuracy(const std::vector<int>& doc_ids,
                             const std::vector<int>& predictions) const;

  using Observer = std::function<void(int doc, Split split)>;
  void set_observer(Observer cb) const { observer_ = std::move(cb); }

  static GuardedLabels from_meta(const CorpusMeta& meta);

 private:
  std::vector<int> labels_;
  std::vector<Split> splits_;
  mutable Observer observer_;
};

enum class CurveModel { DV, BON, DVBON };
const char* to_string(CurveModel m);
CurveModel curve_model_from_string(std::string_view tag);  // dv | bon | dv+bon

struct CurveSpec {
  std::vector<int> sizes = {10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000};
  int repeats = 30;
  std::vector<CurveModel> models = {CurveModel::DV, CurveModel::BON, CurveModel::DVBON};
  std::uint64_t seed = 1;
  bool stratified = true;  // recorded in the CSV; only balanced sampling is implemented
};

struct CurveRow {
  std::string model;
  int size = 0;
  int repeat = 0;
  double accuracy = 0.0;
  std::string source = "computed";  // external rows can be merged into the CSV
};

// For each (model, size, repeat): draw a class-balanced training subset with
// a seed derived from (base seed, model, size, repeat), tune C (and the
// dense scale for the ensemble) on validation, evaluate on test.
std::vector<CurveRow> learning_curve(const CurveSpec& spec, const DenseTable& dv,
                                     const SparseTable& bon, const CorpusMeta& meta,
                                     const EnsembleConfig& config);

void save_curve_csv(const std::vector<CurveRow>& rows, bool stratified,
                    const std::string& path);

enum class ProgressVariant { Vanilla, NBSubsampled };
const char* to_string(ProgressVariant v);

struct ProgressRecord {
  std::string variant;
  int run_id = 0;
  std::int64_t step = 0;
  double valid_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct ProgressOptions {
  int runs_per_variant = 3;
  std::int64_t interval = 500;        // dense checkpoints while step <= interval_until
  std::int64_t interval_until = 5000; // afterwards only epoch-end checkpoints
  double n_a = 2.0;
  double n_b = 3.0;
  std::vector<double> c_grid = default_c_grid();
  FitOptions fit;
};

// Trains both variants runs_per_variant times; at every checkpoint a
// classifier is fitted on the training doc vectors, C tuned on validation,
// and validation/test accuracy recorded. Checkpoint evaluation runs on a
// separate thread so it does not stall training.
std::vector<ProgressRecord> progress_study(const Corpus& corpus, const Vocabulary& vocab,
                                           const TrainConfig& base_config,
                                           const NBWeights& weights,
                                           const ProgressOptions& opt);

void save_progress_csv(const std::vector<ProgressRecord>& records, const std::string& path);

struct LogitRow {
  int doc_id = 0;
  double dense_logit = 0.0;
  double sparse_logit = 0.0;
  double half_intercept = 0.0;
  int label = 0;
  bool dense_correct = false;
  bool sparse_correct = false;
  bool ensemble_correct = false;
};

struct LogitSummary {
  double dense_error_rate = 0.0;   // share of hard examples for the dense part
  double sparse_error_rate = 0.0;
  double corr_within_pos = 0.0;    // correlation of the two part-logits per class
  double corr_within_neg = 0.0;
};

struct LogitAnalysis {
  std::vector<LogitRow> rows;
  LogitSummary summary;
};

// Additive decomposition of each test logit into dense and sparse
// contributions, each paired with half the intercept.
LogitAnalysis logit_analysis(const FittedEnsemble& fitted);

void save_logit_csv(const LogitAnalysis& analysis, const std::string& path);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace dv

#endif  // DV_EXPERIMENTS_HPP_
