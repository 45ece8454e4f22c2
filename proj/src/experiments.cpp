#include "dv/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>

namespace dv {

GuardedLabels::GuardedLabels(std::vector<int> labels01, std::vector<Split> splits)
    : labels_(std::move(labels01)), splits_(std::move(splits)) {
  if (labels_.size() != splits_.size())
    throw ConfigError("labels and splits must have equal length");
}

GuardedLabels GuardedLabels::from_meta(const CorpusMeta& meta) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(meta.size()));
  for (Label l : meta.labels) labels.push_back(l == Label::Positive ? 1 : 0);
  return GuardedLabels(std::move(labels), meta.splits);
}

int GuardedLabels::label(int doc) const {
  const Split s = splits_.at(static_cast<std::size_t>(doc));
  if (observer_) observer_(doc, s);
  if (s == Split::Test)
    throw ConfigError("test label requested before final scoring (doc " +
                      std::to_string(doc) + ")");
  return labels_[static_cast<std::size_t>(doc)];
}

double GuardedLabels::score_test_accuracy(const std::vector<int>& doc_ids,
                                          const std::vector<int>& predictions) const {
  if (doc_ids.size() != predictions.size())
    throw ConfigError("prediction count does not match doc ids");
  if (doc_ids.empty()) return 0.0;
  int correct = 0;
  for (std::size_t k = 0; k < doc_ids.size(); ++k)
    if (predictions[k] == labels_.at(static_cast<std::size_t>(doc_ids[k]))) ++correct;
  return static_cast<double>(correct) / static_cast<double>(doc_ids.size());
}

const char* to_string(CurveModel m) {
  switch (m) {
    case CurveModel::DV: return "dv";
    case CurveModel::BON: return "bon";
    case CurveModel::DVBON: return "dv+bon";
  }
  return "?";
}

CurveModel curve_model_from_string(std::string_view tag) {
  if (tag == "dv") return CurveModel::DV;
  if (tag == "bon") return CurveModel::BON;
  if (tag == "dv+bon") return CurveModel::DVBON;
  throw ConfigError("unknown curve model '" + std::string(tag) + "' (expected dv|bon|dv+bon)");
}

const char* to_string(ProgressVariant v) {
  return v == ProgressVariant::Vanilla ? "vanilla" : "nb_subsampled";
}

namespace {

struct SplitIds {
  std::vector<int> train, valid, test;
};

SplitIds collect_ids(const CorpusMeta& meta) {
  SplitIds ids;
  for (int i = 0; i < meta.size(); ++i) {
    if (meta.labels[static_cast<std::size_t>(i)] == Label::Unlabeled) continue;
    switch (meta.splits[static_cast<std::size_t>(i)]) {
      case Split::Train: ids.train.push_back(i); break;
      case Split::Validation: ids.valid.push_back(i); break;
      case Split::Test: ids.test.push_back(i); break;
      default: break;
    }
  }
  return ids;
}

// size/2 documents per class, without replacement, ascending id order
std::vector<int> balanced_subset(const std::vector<int>& train_ids,
                                 const GuardedLabels& labels, int size, Rng& rng) {
  if (size % 2 != 0) throw ConfigError("subset sizes must be even for balanced sampling");
  std::vector<int> pos, neg;
  for (int id : train_ids) (labels.label(id) == 1 ? pos : neg).push_back(id);
  const int half = size / 2;
  if (half > static_cast<int>(pos.size()) || half > static_cast<int>(neg.size()))
    throw ConfigError("subset size " + std::to_string(size) +
                      " exceeds the available labeled training documents");
  rng.shuffle(pos);
  rng.shuffle(neg);
  std::vector<int> subset(pos.begin(), pos.begin() + half);
  subset.insert(subset.end(), neg.begin(), neg.begin() + half);
  std::sort(subset.begin(), subset.end());
  return subset;
}

FeatureMatrix rows_for_model(CurveModel model, const DenseTable& dv, const SparseTable& bon,
                             const std::vector<int>& ids, double scale,
                             const std::optional<std::vector<int>>& labels) {
  FeatureMatrix f;
  f.n_rows = static_cast<int>(ids.size());
  if (model != CurveModel::BON) {
    f.dense_dim = dv.dim;
    f.dense.reserve(ids.size() * static_cast<std::size_t>(dv.dim));
    for (int id : ids)
      for (double v : dv.row(id)) f.dense.push_back(scale * v);
  }
  if (model != CurveModel::DV) {
    f.sparse_dim = bon.dim;
    f.sparse.reserve(ids.size());
    for (int id : ids) f.sparse.push_back(bon.rows[static_cast<std::size_t>(id)]);
  }
  if (labels) f.labels = *labels;
  return f;
}

std::vector<int> labels_for(const GuardedLabels& labels, const std::vector<int>& ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(labels.label(id));
  return out;
}

struct CellResult {
  double accuracy = 0.0;
};

CellResult evaluate_cell(CurveModel model, const DenseTable& dv, const SparseTable& bon,
                         const GuardedLabels& labels, const std::vector<int>& subset,
                         const SplitIds& ids, const EnsembleConfig& config) {
  const bool has_valid = !ids.valid.empty();
  const bool tune_scale = model == CurveModel::DVBON && has_valid && config.tune_scale;
  std::vector<double> scale_grid =
      tune_scale ? config.scale_grid : std::vector<double>{config.scale};
  std::sort(scale_grid.begin(), scale_grid.end());

  const std::vector<int> train_labels = labels_for(labels, subset);
  std::optional<std::vector<int>> valid_labels;
  if (has_valid) valid_labels = labels_for(labels, ids.valid);

  double best_score = -1.0;
  LogRegModel best_model;
  double best_scale = scale_grid.front();
  for (double s : scale_grid) {
    const FeatureMatrix train_rows = rows_for_model(model, dv, bon, subset, s, train_labels);
    TuneResult tuned;
    if (has_valid) {
      const FeatureMatrix valid_rows = rows_for_model(model, dv, bon, ids.valid, s, valid_labels);
      tuned = tune_C(train_rows, valid_rows, config.c_grid, config.fit);
    } else {
      tuned = tune_C_cv(train_rows, config.c_grid, config.cv_folds, config.fit);
    }
    if (tuned.valid_accuracy > best_score) {
      best_score = tuned.valid_accuracy;
      best_model = std::move(tuned.model);
      best_scale = s;
    }
  }

  const FeatureMatrix test_rows =
      rows_for_model(model, dv, bon, ids.test, best_scale, std::nullopt);
  std::vector<int> predictions;
  predictions.reserve(ids.test.size());
  for (int i = 0; i < test_rows.n_rows; ++i)
    predictions.push_back(predict_from_logit(logit(best_model, test_rows, i)));

  CellResult out;
  out.accuracy = labels.score_test_accuracy(ids.test, predictions);
  return out;
}

}  // namespace

std::vector<CurveRow> learning_curve(const CurveSpec& spec, const DenseTable& dv,
                                     const SparseTable& bon, const CorpusMeta& meta,
                                     const EnsembleConfig& config) {
  if (dv.rows() != meta.size() || bon.size() != meta.size())
    throw ConfigError("representations must cover the whole document set");
  if (!std::is_sorted(spec.sizes.begin(), spec.sizes.end()))
    throw ConfigError("curve sizes must be ascending");
  const GuardedLabels labels = GuardedLabels::from_meta(meta);
  const SplitIds ids = collect_ids(meta);
  if (ids.train.empty() || ids.test.empty())
    throw ConfigError("learning curve needs labeled train and test documents");

  std::vector<CurveRow> rows;
  for (CurveModel model : spec.models) {
    for (int size : spec.sizes) {
      if (size > static_cast<int>(ids.train.size()))
        throw ConfigError("curve size " + std::to_string(size) +
                          " exceeds labeled training count " + std::to_string(ids.train.size()));
      for (int rep = 0; rep < spec.repeats; ++rep) {
        Rng rng(derive_seed(spec.seed, std::string("curve/") + to_string(model) +
                                           "/size=" + std::to_string(size) +
                                           "/rep=" + std::to_string(rep)));
        const std::vector<int> subset = balanced_subset(ids.train, labels, size, rng);
        const CellResult cell = evaluate_cell(model, dv, bon, labels, subset, ids, config);
        rows.push_back(CurveRow{to_string(model), size, rep, cell.accuracy, "computed"});
      }
    }
  }
  return rows;
}

void save_curve_csv(const std::vector<CurveRow>& rows, bool stratified,
                    const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write curve csv " + path);
  os << "model,size,repeat,accuracy,source,stratified\n";
  const char* flag = stratified ? "1" : "0";
  for (const CurveRow& r : rows)
    os << r.model << ',' << r.size << ',' << r.repeat << ',' << fmt_fixed(r.accuracy, 6)
       << ',' << r.source << ',' << flag << '\n';

  // mean/std summary per (model, size)
  struct Key {
    std::string model;
    int size;
  };
  std::vector<std::pair<Key, std::vector<double>>> groups;
  for (const CurveRow& r : rows) {
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) {
      return g.first.model == r.model && g.first.size == r.size;
    });
    if (it == groups.end()) {
      groups.push_back({Key{r.model, r.size}, {r.accuracy}});
    } else {
      it->second.push_back(r.accuracy);
    }
  }
  for (const auto& [key, accs] : groups) {
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= static_cast<double>(accs.size());
    double ss = 0.0;
    for (double a : accs) ss += (a - mean) * (a - mean);
    const double stddev =
        accs.size() > 1 ? std::sqrt(ss / static_cast<double>(accs.size() - 1)) : 0.0;
    os << key.model << ',' << key.size << ",mean," << fmt_fixed(mean, 6) << ",summary," << flag
       << '\n';
    os << key.model << ',' << key.size << ",std," << fmt_fixed(stddev, 6) << ",summary," << flag
       << '\n';
  }
}

namespace {

// Doc-vector snapshot of one checkpoint, evaluated off the training thread.
struct Snapshot {
  std::int64_t step = 0;
  std::vector<double> train_vecs, valid_vecs, test_vecs;  // row-major, dim columns
};

class AsyncEvaluator {
 public:
  AsyncEvaluator(int dim, const SplitIds& ids, const GuardedLabels& labels,
                 const ProgressOptions& opt)
      : dim_(dim), ids_(ids), labels_(labels), opt_(opt) {
    worker_ = std::thread([this] { loop(); });
  }

  ~AsyncEvaluator() { finish(); }

  void push(Snapshot snap) {
    std::unique_lock<std::mutex> lock(mu_);
    cv_space_.wait(lock, [this] { return queue_.size() < 2 || error_ != nullptr; });
    if (error_) return;  // surfaced by finish()
    queue_.push(std::move(snap));
    cv_data_.notify_one();
  }

  std::vector<std::pair<std::int64_t, std::pair<double, double>>> finish() {
    {
      std::unique_lock<std::mutex> lock(mu_);
      if (done_) return results_;
      done_ = true;
      cv_data_.notify_one();
    }
    if (worker_.joinable()) worker_.join();
    if (error_) std::rethrow_exception(error_);
    return results_;
  }

 private:
  void loop() {
    while (true) {
      Snapshot snap;
      {
        std::unique_lock<std::mutex> lock(mu_);
        cv_data_.wait(lock, [this] { return !queue_.empty() || done_; });
        if (queue_.empty()) return;
        snap = std::move(queue_.front());
        queue_.pop();
        cv_space_.notify_one();
      }
      try {
        evaluate(snap);
      } catch (...) {
        std::unique_lock<std::mutex> lock(mu_);
        error_ = std::current_exception();
        cv_space_.notify_all();
        return;
      }
    }
  }

  FeatureMatrix matrix_of(const std::vector<double>& vecs, const std::vector<int>& ids,
                          bool with_labels) const {
    FeatureMatrix f;
    f.n_rows = static_cast<int>(ids.size());
    f.dense_dim = dim_;
    f.dense = vecs;
    if (with_labels) {
      f.labels.reserve(ids.size());
      for (int id : ids) f.labels.push_back(labels_.label(id));
    }
    return f;
  }

  void evaluate(const Snapshot& snap) {
    const FeatureMatrix train = matrix_of(snap.train_vecs, ids_.train, true);
    TuneResult tuned;
    double valid_acc;
    if (!ids_.valid.empty()) {
      const FeatureMatrix valid = matrix_of(snap.valid_vecs, ids_.valid, true);
      tuned = tune_C(train, valid, opt_.c_grid, opt_.fit);
      valid_acc = tuned.valid_accuracy;
    } else {
      tuned = tune_C_cv(train, opt_.c_grid, 5, opt_.fit);
      valid_acc = tuned.valid_accuracy;
    }
    const FeatureMatrix test = matrix_of(snap.test_vecs, ids_.test, false);
    std::vector<int> predictions;
    predictions.reserve(ids_.test.size());
    for (int i = 0; i < test.n_rows; ++i)
      predictions.push_back(predict_from_logit(logit(tuned.model, test, i)));
    const double test_acc = labels_.score_test_accuracy(ids_.test, predictions);
    std::unique_lock<std::mutex> lock(mu_);
    results_.push_back({snap.step, {valid_acc, test_acc}});
  }

  int dim_;
  const SplitIds& ids_;
  const GuardedLabels& labels_;
  const ProgressOptions& opt_;

  std::mutex mu_;
  std::condition_variable cv_data_, cv_space_;
  std::queue<Snapshot> queue_;
  bool done_ = false;
  std::exception_ptr error_;
  std::vector<std::pair<std::int64_t, std::pair<double, double>>> results_;
  std::thread worker_;
};

std::vector<double> gather_rows(const DVModel& model, const std::vector<int>& ids) {
  std::vector<double> out;
  out.reserve(ids.size() * static_cast<std::size_t>(model.dim));
  for (int id : ids) {
    const auto row = model.doc(id);
    out.insert(out.end(), row.begin(), row.end());
  }
  return out;
}

}  // namespace

std::vector<ProgressRecord> progress_study(const Corpus& corpus, const Vocabulary& vocab,
                                           const TrainConfig& base_config,
                                           const NBWeights& weights,
                                           const ProgressOptions& opt) {
  if (opt.runs_per_variant < 1) throw ConfigError("runs_per_variant must be >= 1");
  const CorpusMeta meta = CorpusMeta::from_corpus(corpus);
  const GuardedLabels labels = GuardedLabels::from_meta(meta);
  const SplitIds ids = collect_ids(meta);
  if (ids.train.empty() || ids.test.empty())
    throw ConfigError("progress study needs labeled train and test documents");

  std::vector<ProgressRecord> records;
  for (ProgressVariant variant : {ProgressVariant::Vanilla, ProgressVariant::NBSubsampled}) {
    for (int run = 0; run < opt.runs_per_variant; ++run) {
      TrainConfig cfg = base_config;
      cfg.seed = derive_seed(base_config.seed, std::string("progress/") + to_string(variant) +
                                                   "/run=" + std::to_string(run));
      std::optional<SubSampler> subsampler;
      if (variant == ProgressVariant::NBSubsampled)
        subsampler.emplace(weights, opt.n_a, opt.n_b, derive_seed(cfg.seed, "subsample"));

      AsyncEvaluator evaluator(cfg.dim, ids, labels, opt);
      Checkpointer monitor;
      monitor.interval = opt.interval;
      monitor.interval_until = opt.interval_until;
      monitor.at_epoch_end = true;
      monitor.on_checkpoint = [&](std::int64_t step, const DVModel& model) {
        Snapshot snap;
        snap.step = step;
        snap.train_vecs = gather_rows(model, ids.train);
        snap.valid_vecs = gather_rows(model, ids.valid);
        snap.test_vecs = gather_rows(model, ids.test);
        evaluator.push(std::move(snap));
      };
      train(corpus, vocab, cfg, subsampler ? &*subsampler : nullptr, &monitor);
      for (const auto& [step, accs] : evaluator.finish())
        records.push_back(ProgressRecord{to_string(variant), run, step, accs.first, accs.second});
    }
  }
  return records;
}

void save_progress_csv(const std::vector<ProgressRecord>& records, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write progress csv " + path);
  os << "variant,run_id,step,valid_accuracy,test_accuracy\n";
  for (const ProgressRecord& r : records)
    os << r.variant << ',' << r.run_id << ',' << r.step << ',' << fmt_fixed(r.valid_accuracy, 6)
       << ',' << fmt_fixed(r.test_accuracy, 6) << '\n';
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ConfigError("correlation needs two equal-length samples");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double denom = std::sqrt(sxx * syy);
  return denom > 0.0 ? sxy / denom : 0.0;
}

LogitAnalysis logit_analysis(const FittedEnsemble& fitted) {
  LogitAnalysis out;
  const int n = fitted.test_rows.n_rows;
  if (n == 0) throw ConfigError("logit analysis needs test rows");
  std::vector<double> pos_dense, pos_sparse, neg_dense, neg_sparse;
  int dense_err = 0, sparse_err = 0;
  for (int i = 0; i < n; ++i) {
    const LogitParts parts = logit_parts(fitted.model, fitted.test_rows, i);
    LogitRow row;
    row.doc_id = fitted.test_doc_ids[static_cast<std::size_t>(i)];
    row.dense_logit = parts.dense;
    row.sparse_logit = parts.sparse;
    row.half_intercept = parts.intercept / 2.0;
    row.label = fitted.test_labels[static_cast<std::size_t>(i)];
    row.dense_correct = predict_from_logit(parts.dense + row.half_intercept) == row.label;
    row.sparse_correct = predict_from_logit(parts.sparse + row.half_intercept) == row.label;
    row.ensemble_correct = predict_from_logit(parts.total()) == row.label;
    if (!row.dense_correct) ++dense_err;
    if (!row.sparse_correct) ++sparse_err;
    (row.label == 1 ? pos_dense : neg_dense).push_back(parts.dense);
    (row.label == 1 ? pos_sparse : neg_sparse).push_back(parts.sparse);
    out.rows.push_back(row);
  }
  out.summary.dense_error_rate = static_cast<double>(dense_err) / n;
  out.summary.sparse_error_rate = static_cast<double>(sparse_err) / n;
  out.summary.corr_within_pos = pos_dense.size() >= 2 ? pearson(pos_dense, pos_sparse) : 0.0;
  out.summary.corr_within_neg = neg_dense.size() >= 2 ? pearson(neg_dense, neg_sparse) : 0.0;
  return out;
}

void save_logit_csv(const LogitAnalysis& analysis, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write logit csv " + path);
  os << "doc_id,dense_logit,sparse_logit,half_intercept,label,dense_correct,sparse_correct,"
        "ensemble_correct\n";
  for (const LogitRow& r : analysis.rows)
    os << r.doc_id << ',' << fmt_full(r.dense_logit) << ',' << fmt_full(r.sparse_logit) << ','
       << fmt_full(r.half_intercept) << ',' << r.label << ',' << (r.dense_correct ? 1 : 0)
       << ',' << (r.sparse_correct ? 1 : 0) << ',' << (r.ensemble_correct ? 1 : 0) << '\n';

  std::ofstream ss(path + ".summary.tsv");
  if (!ss) throw DependencyError("cannot write logit summary for " + path);
  ss << "dense_error_rate\t" << fmt_full(analysis.summary.dense_error_rate) << '\n';
  ss << "sparse_error_rate\t" << fmt_full(analysis.summary.sparse_error_rate) << '\n';
  ss << "corr_within_pos\t" << fmt_full(analysis.summary.corr_within_pos) << '\n';
  ss << "corr_within_neg\t" << fmt_full(analysis.summary.corr_within_neg) << '\n';
}

}  // namespace dv
