#ifndef DV_MODEL_HPP_
#define DV_MODEL_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dv/common.hpp"
#include "dv/corpus.hpp"
#include "dv/nb.hpp"
#include "dv/vocab.hpp"

namespace dv {

enum class Objective { Cosine, DotProduct };

const char* to_string(Objective o);
Objective objective_from_string(std::string_view tag);  // cosine | dot

struct TrainConfig {
  int dim = 500;
  double alpha = 6.0;      // cosine sharpness; unused by the dot-product objective
  int negatives = 5;
  int epochs = 20;
  double lr_start = 0.025;
  double lr_end = 1e-4;
  double ns_power = 0.75;  // negative-sampling distribution exponent
  Objective objective = Objective::Cosine;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const;
};

// Jointly trained document and n-gram embedding matrices (row-major).
struct DVModel {
  int dim = 0;
  std::vector<double> doc_vectors;
  std::vector<double> ngram_vectors;
  TrainConfig config;

  int n_docs() const { return dim ? static_cast<int>(doc_vectors.size()) / dim : 0; }
  int n_ngrams() const { return dim ? static_cast<int>(ngram_vectors.size()) / dim : 0; }
  std::span<const double> doc(int i) const {
    return {doc_vectors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
  std::span<const double> ngram(int i) const {
    return {ngram_vectors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

// Loss and exact gradients for one (document, n-gram, negatives) pair.
//   Cosine:     -log s(a cos(d,u)) - sum_k log s(-a cos(d,n_k))
//   DotProduct: -log s(d.u)        - sum_k log s(-d.n_k)
struct PairLoss {
  double loss = 0.0;
  std::vector<double> grad_doc;
  std::vector<double> grad_ngram;
  std::vector<std::vector<double>> grad_negatives;
};

PairLoss pair_loss(std::span<const double> v_d, std::span<const double> v_u,
                   const std::vector<std::vector<double>>& negatives, double alpha,
                   Objective objective);

// Checkpoint schedule: fire every `interval` update steps while the step
// count is below `interval_until`, and at every epoch end. Snapshots go to
// on_checkpoint and, when dir is set, to dir/docvecs_step<N>.txt.
struct Checkpointer {
  std::int64_t interval = 0;        // 0 disables step-interval checkpoints
  std::int64_t interval_until = 0;  // 0 means no limit
  bool at_epoch_end = true;
  std::string dir;
  std::function<void(std::int64_t step, const DVModel&)> on_checkpoint;
};

struct TrainResult {
  DVModel model;
  std::vector<double> epoch_mean_loss;  // mean pair loss over performed updates
  std::int64_t total_steps = 0;         // SGD updates performed
};

// One SGD step per in-vocabulary n-gram occurrence (after optional
// sub-sampling), with `negatives` fresh draws per step. The learning rate
// decays linearly over the scheduled occurrence count, so sub-sampling does
// not alter the decay trajectory. Multi-worker mode updates shared matrices
// without locks (statistical correctness only); workers=1 with a fixed seed
// is bit-reproducible.
TrainResult train(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& config,
                  const SubSampler* subsampler = nullptr, Checkpointer* monitor = nullptr);

enum class VectorKind { Documents, NGrams };

// Text format: header "N dim", one row per vector: key then dim values.
// Document keys are doc_id integers in corpus order; n-gram keys are the
// joined vocabulary form.
void export_vectors(const DVModel& model, VectorKind kind, const Vocabulary* vocab,
                    const std::string& path);

// Dense per-document vector table (also the import side of export_vectors).
struct DenseTable {
  int dim = 0;
  std::vector<std::string> keys;
  std::vector<double> data;  // rows() x dim row-major

  int rows() const { return dim ? static_cast<int>(data.size()) / dim : 0; }
  std::span<const double> row(int i) const {
    return {data.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dim),
            static_cast<std::size_t>(dim)};
  }
};

DenseTable load_embedding_file(const std::string& path);
void save_embedding_file(const DenseTable& table, const std::string& path);

}  // namespace dv

#endif  // DV_MODEL_HPP_
