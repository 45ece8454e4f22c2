#include "dv/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <mutex>
#include <thread>

namespace dv {

const char* to_string(Objective o) {
  return o == Objective::Cosine ? "cosine" : "dot";
}

Objective objective_from_string(std::string_view tag) {
  if (tag == "cosine") return Objective::Cosine;
  if (tag == "dot") return Objective::DotProduct;
  throw ConfigError("unknown objective '" + std::string(tag) + "' (expected cosine|dot)");
}

void TrainConfig::validate() const {
  if (dim < 2) throw ConfigError("dim must be >= 2");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (negatives < 1) throw ConfigError("negatives must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(lr_start >= lr_end) || !(lr_end > 0.0))
    throw ConfigError("learning rates must satisfy lr_start >= lr_end > 0");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (!(ns_power >= 0.0)) throw ConfigError("ns_power must be >= 0");
}

namespace {

constexpr double kNormFloor = 1e-12;

// Loss and gradients for one step, all evaluated at the incoming parameter
// values. xs[0] is the positive n-gram, xs[1..] are negatives. grad_x is
// n_x rows of dim. Returns the loss.
double pair_core(const double* d, const double* const* xs, int n_x, int dim,
                 double alpha, Objective obj, double* grad_d, double* grad_x) {
  std::fill(grad_d, grad_d + dim, 0.0);
  double loss = 0.0;

  double nd2 = 0.0;
  if (obj == Objective::Cosine) {
    for (int j = 0; j < dim; ++j) nd2 += d[j] * d[j];
    if (nd2 == 0.0) throw NumericError("degenerate input: zero-norm document vector in cosine mode");
  }
  const double nd = std::sqrt(nd2);
  const double nd2c = std::max(nd2, kNormFloor);

  for (int r = 0; r < n_x; ++r) {
    const double* x = xs[r];
    double* gx = grad_x + static_cast<std::size_t>(r) * static_cast<std::size_t>(dim);
    const bool positive = r == 0;

    double dot = 0.0;
    for (int j = 0; j < dim; ++j) dot += d[j] * x[j];

    if (obj == Objective::Cosine) {
      double nx2 = 0.0;
      for (int j = 0; j < dim; ++j) nx2 += x[j] * x[j];
      if (nx2 == 0.0) throw NumericError("degenerate input: zero-norm n-gram vector in cosine mode");
      const double nx2c = std::max(nx2, kNormFloor);
      const double denom = std::max(nd * std::sqrt(nx2), kNormFloor);
      const double c = dot / denom;
      const double s = alpha * c;
      // d(-log s(s))/dc = a(s(s)-1) for the positive term,
      // d(-log s(-s))/dc = a s(s) for a negative term
      const double g = positive ? alpha * (sigmoid(s) - 1.0) : alpha * sigmoid(s);
      loss += positive ? -log_sigmoid(s) : -log_sigmoid(-s);
      // dcos(d,x)/dd = x/(|d||x|) - cos * d/|d|^2, and symmetrically for x
      for (int j = 0; j < dim; ++j) {
        grad_d[j] += g * (x[j] / denom - c * d[j] / nd2c);
        gx[j] = g * (d[j] / denom - c * x[j] / nx2c);
      }
    } else {
      const double g = positive ? sigmoid(dot) - 1.0 : sigmoid(dot);
      loss += positive ? -log_sigmoid(dot) : -log_sigmoid(-dot);
      for (int j = 0; j < dim; ++j) {
        grad_d[j] += g * x[j];
        gx[j] = g * d[j];
      }
    }
  }
  return loss;
}

}  // namespace

PairLoss pair_loss(std::span<const double> v_d, std::span<const double> v_u,
                   const std::vector<std::vector<double>>& negatives, double alpha,
                   Objective objective) {
  const int dim = static_cast<int>(v_d.size());
  if (static_cast<int>(v_u.size()) != dim)
    throw ConfigError("pair_loss: vector dimensions differ");
  for (const auto& n : negatives)
    if (static_cast<int>(n.size()) != dim)
      throw ConfigError("pair_loss: negative vector dimension differs");
  if (!(alpha > 0.0)) throw ConfigError("pair_loss: alpha must be positive");

  const int n_x = 1 + static_cast<int>(negatives.size());
  std::vector<const double*> xs(static_cast<std::size_t>(n_x));
  xs[0] = v_u.data();
  for (std::size_t k = 0; k < negatives.size(); ++k) xs[k + 1] = negatives[k].data();

  PairLoss out;
  out.grad_doc.resize(static_cast<std::size_t>(dim));
  std::vector<double> grad_x(static_cast<std::size_t>(n_x) * static_cast<std::size_t>(dim));
  out.loss = pair_core(v_d.data(), xs.data(), n_x, dim, alpha, objective,
                       out.grad_doc.data(), grad_x.data());
  out.grad_ngram.assign(grad_x.begin(), grad_x.begin() + dim);
  out.grad_negatives.resize(negatives.size());
  for (std::size_t k = 0; k < negatives.size(); ++k)
    out.grad_negatives[k].assign(grad_x.begin() + static_cast<std::ptrdiff_t>((k + 1)) * dim,
                                 grad_x.begin() + static_cast<std::ptrdiff_t>((k + 2)) * dim);
  return out;
}

namespace {

class Trainer {
 public:
  Trainer(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
          const SubSampler* subsampler, Checkpointer* monitor)
      : corpus_(corpus),
        vocab_(vocab),
        config_(config),
        subsampler_(subsampler),
        monitor_(monitor),
        sampler_(vocab, config.ns_power, derive_seed(config.seed, "negatives")) {}

  TrainResult run() {
    precompute_occurrences();
    init_model();

    const int n_docs = corpus_.size();
    const int workers = config_.workers;
    result_.epoch_mean_loss.reserve(static_cast<std::size_t>(config_.epochs));

    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
      epoch_loss_sum_ = 0.0;
      epoch_loss_count_ = 0;
      if (workers == 1) {
        run_chunk(epoch, 0, 0, n_docs, /*allow_step_checkpoints=*/true);
      } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
          const int begin = static_cast<int>(static_cast<long long>(n_docs) * w / workers);
          const int end = static_cast<int>(static_cast<long long>(n_docs) * (w + 1) / workers);
          pool.emplace_back([this, epoch, w, begin, end] {
            run_chunk(epoch, w, begin, end, /*allow_step_checkpoints=*/false);
          });
        }
        for (auto& t : pool) t.join();
        if (failed_.load()) throw NumericError(failure_message_);
      }
      result_.epoch_mean_loss.push_back(
          epoch_loss_count_ > 0 ? epoch_loss_sum_ / static_cast<double>(epoch_loss_count_) : 0.0);
      if (monitor_ && monitor_->at_epoch_end) fire_checkpoint(steps_.load());
    }
    result_.total_steps = steps_.load();
    return std::move(result_);
  }

 private:
  void precompute_occurrences() {
    doc_ngrams_.resize(static_cast<std::size_t>(corpus_.size()));
    long long total = 0;
    for (int i = 0; i < corpus_.size(); ++i) {
      auto& ids = doc_ngrams_[static_cast<std::size_t>(i)];
      for_each_ngram_key(corpus_.doc(i).tokens, vocab_.max_order(),
                         [&](const std::string& key, int) {
                           const int id = vocab_.id_of(key);
                           if (id >= 0) ids.push_back(id);
                         });
      total += static_cast<long long>(ids.size());
    }
    if (total == 0)
      throw ConfigError("vocabulary does not cover any n-gram of the corpus");
    total_scheduled_ = total * config_.epochs;
  }

  void init_model() {
    DVModel& m = result_.model;
    m.dim = config_.dim;
    m.config = config_;
    const std::size_t dim = static_cast<std::size_t>(config_.dim);
    m.doc_vectors.resize(static_cast<std::size_t>(corpus_.size()) * dim);
    m.ngram_vectors.resize(static_cast<std::size_t>(vocab_.size()) * dim);
    Rng rng(derive_seed(config_.seed, "init"));
    const double span = 1.0 / static_cast<double>(config_.dim);
    for (double& v : m.doc_vectors) v = rng.uniform(-0.5 * span, 0.5 * span);
    for (double& v : m.ngram_vectors) v = rng.uniform(-0.5 * span, 0.5 * span);
  }

  void run_chunk(int epoch, int worker, int begin, int end, bool allow_step_checkpoints) {
    const int dim = config_.dim;
    const int negs = config_.negatives;
    DVModel& m = result_.model;
    Rng rng(derive_seed(config_.seed, "train/epoch=" + std::to_string(epoch) +
                                          "/worker=" + std::to_string(worker)));
    std::vector<double> grad_d(static_cast<std::size_t>(dim));
    std::vector<double> grad_x(static_cast<std::size_t>(negs + 1) * static_cast<std::size_t>(dim));
    std::vector<const double*> xs(static_cast<std::size_t>(negs + 1));
    std::vector<int> neg_ids(static_cast<std::size_t>(negs));
    double loss_sum = 0.0;
    long long loss_count = 0;
    const double lr_span = config_.lr_end - config_.lr_start;

    try {
      for (int doc = begin; doc < end; ++doc) {
        const auto& ids = doc_ngrams_[static_cast<std::size_t>(doc)];
        if (ids.empty()) continue;
        const long long base_pos = scheduled_pos_.fetch_add(static_cast<long long>(ids.size()));
        double* vd = m.doc_vectors.data() + static_cast<std::size_t>(doc) * static_cast<std::size_t>(dim);

        for (std::size_t o = 0; o < ids.size(); ++o) {
          const int u = ids[o];
          const double frac = static_cast<double>(base_pos + static_cast<long long>(o)) /
                              static_cast<double>(total_scheduled_);
          const double lr = config_.lr_start + lr_span * frac;
          if (subsampler_ && !subsampler_->keep(u, rng)) continue;

          double* vu = m.ngram_vectors.data() + static_cast<std::size_t>(u) * static_cast<std::size_t>(dim);
          xs[0] = vu;
          for (int k = 0; k < negs; ++k) {
            neg_ids[static_cast<std::size_t>(k)] = sampler_.sample(rng);
            xs[static_cast<std::size_t>(k + 1)] =
                m.ngram_vectors.data() +
                static_cast<std::size_t>(neg_ids[static_cast<std::size_t>(k)]) * static_cast<std::size_t>(dim);
          }
          const double loss = pair_core(vd, xs.data(), negs + 1, dim, config_.alpha,
                                        config_.objective, grad_d.data(), grad_x.data());
          if (!std::isfinite(loss))
            throw NumericError("non-finite loss at step " + std::to_string(steps_.load()) +
                               "; learning rate schedule may be divergent");
          for (int j = 0; j < dim; ++j) vd[j] -= lr * grad_d[j];
          for (int j = 0; j < dim; ++j) vu[j] -= lr * grad_x[static_cast<std::size_t>(j)];
          for (int k = 0; k < negs; ++k) {
            double* vn = m.ngram_vectors.data() +
                         static_cast<std::size_t>(neg_ids[static_cast<std::size_t>(k)]) *
                             static_cast<std::size_t>(dim);
            const double* gx = grad_x.data() +
                               static_cast<std::size_t>(k + 1) * static_cast<std::size_t>(dim);
            for (int j = 0; j < dim; ++j) vn[j] -= lr * gx[j];
          }
          loss_sum += loss;
          ++loss_count;
          const std::int64_t step = steps_.fetch_add(1) + 1;
          if (allow_step_checkpoints && monitor_ && monitor_->interval > 0 &&
              (monitor_->interval_until == 0 || step <= monitor_->interval_until) &&
              step % monitor_->interval == 0)
            fire_checkpoint(step);
        }
      }
    } catch (const std::exception& e) {
      if (config_.workers == 1) throw;
      if (!failed_.exchange(true)) failure_message_ = e.what();
      return;
    }
    epoch_loss_mutex_.lock();
    epoch_loss_sum_ += loss_sum;
    epoch_loss_count_ += loss_count;
    epoch_loss_mutex_.unlock();
  }

  void fire_checkpoint(std::int64_t step) {
    if (!monitor_ || step == last_checkpoint_step_ || step == 0) return;
    last_checkpoint_step_ = step;
    if (!monitor_->dir.empty())
      export_vectors(result_.model, VectorKind::Documents, nullptr,
                     monitor_->dir + "/docvecs_step" + std::to_string(step) + ".txt");
    if (monitor_->on_checkpoint) monitor_->on_checkpoint(step, result_.model);
  }

  const Corpus& corpus_;
  const Vocabulary& vocab_;
  const TrainConfig& config_;
  const SubSampler* subsampler_;
  Checkpointer* monitor_;
  NegativeSampler sampler_;

  std::vector<std::vector<int>> doc_ngrams_;
  long long total_scheduled_ = 0;
  std::atomic<long long> scheduled_pos_{0};
  std::atomic<std::int64_t> steps_{0};
  std::int64_t last_checkpoint_step_ = -1;

  std::mutex epoch_loss_mutex_;
  double epoch_loss_sum_ = 0.0;
  long long epoch_loss_count_ = 0;
  std::atomic<bool> failed_{false};
  std::string failure_message_;

  TrainResult result_;
};

}  // namespace

TrainResult train(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const SubSampler* subsampler, Checkpointer* monitor) {
  config.validate();
  if (corpus.size() == 0) throw ConfigError("cannot train on an empty corpus");
  if (vocab.size() == 0) throw ConfigError("cannot train with an empty vocabulary");
  Trainer trainer(corpus, vocab, config, subsampler, monitor);
  return trainer.run();
}

void export_vectors(const DVModel& model, VectorKind kind, const Vocabulary* vocab,
                    const std::string& path) {
  const int n = kind == VectorKind::Documents ? model.n_docs() : model.n_ngrams();
  if (kind == VectorKind::NGrams) {
    if (!vocab) throw ConfigError("exporting n-gram vectors requires a vocabulary");
    if (vocab->size() != n) throw ConfigError("vocabulary size does not match model");
  }
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write embedding file " + path);
  os << n << ' ' << model.dim << '\n';
  for (int i = 0; i < n; ++i) {
    if (kind == VectorKind::Documents)
      os << i;
    else
      os << vocab->entry(i).key;
    const std::span<const double> row =
        kind == VectorKind::Documents ? model.doc(i) : model.ngram(i);
    for (double v : row) os << ' ' << fmt_full(v);
    os << '\n';
  }
}

DenseTable load_embedding_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open embedding file " + path);
  std::string line;
  if (!std::getline(is, line)) throw ConfigError("embedding file is empty: " + path);
  const auto header = tokenize_ws(line);
  if (header.size() != 2) throw ConfigError("embedding header must be 'N dim'");
  const int n = static_cast<int>(parse_int(header[0]));
  const int dim = static_cast<int>(parse_int(header[1]));
  if (n < 0 || dim <= 0) throw ConfigError("bad embedding header: " + line);

  DenseTable t;
  t.dim = dim;
  t.keys.reserve(static_cast<std::size_t>(n));
  t.data.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(dim));
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = tokenize_ws(line);
    if (static_cast<int>(cols.size()) != dim + 1)
      throw ConfigError("embedding row has " + std::to_string(cols.size() - 1) +
                        " values, expected " + std::to_string(dim));
    t.keys.push_back(cols[0]);
    for (int j = 1; j <= dim; ++j) t.data.push_back(parse_double(cols[static_cast<std::size_t>(j)]));
  }
  if (static_cast<int>(t.keys.size()) != n)
    throw ConfigError("embedding file row count " + std::to_string(t.keys.size()) +
                      " does not match header " + std::to_string(n));
  return t;
}

void save_embedding_file(const DenseTable& table, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write embedding file " + path);
  os << table.rows() << ' ' << table.dim << '\n';
  for (int i = 0; i < table.rows(); ++i) {
    os << table.keys[static_cast<std::size_t>(i)];
    for (double v : table.row(i)) os << ' ' << fmt_full(v);
    os << '\n';
  }
}

}  // namespace dv
