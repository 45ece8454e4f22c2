#ifndef DV_NB_HPP_
#define DV_NB_HPP_

#include <string>
#include <utility>
#include <vector>

#include "dv/common.hpp"
#include "dv/corpus.hpp"
#include "dv/vocab.hpp"

namespace dv {

enum class NBEventModel { Multinomial, Bernoulli };

// Per-n-gram class log-likelihood ratios fitted on labeled training
// documents only. h(id) = |r(id)| is the importance used for weighting
// and sub-sampling.
struct NBWeights {
  std::vector<double> log_ratio;  // r_i = log p(f_i|pos) - log p(f_i|neg)
  double smoothing = 1.0;
  NBEventModel event_model = NBEventModel::Multinomial;
  std::string fitted_on = "train";

  int size() const { return static_cast<int>(log_ratio.size()); }
  double r(int id) const { return log_ratio.at(static_cast<std::size_t>(id)); }
  double h(int id) const { return std::abs(r(id)); }

  void save(const std::string& path, const Vocabulary& vocab) const;  // TSV: ngram, h, r
  static NBWeights load(const std::string& path, const Vocabulary& vocab);
};

NBWeights fit_nb_weights(const Corpus& corpus, const Vocabulary& vocab,
                         double smoothing = 1.0,
                         NBEventModel event_model = NBEventModel::Multinomial);

struct BonOptions {
  bool signed_weights = true;  // signed log-ratio r_i; unsigned uses h_i
  bool use_counts = false;     // raw occurrence counts instead of binarized presence
};

// Sparse (ngram_id, weight) pairs for one document, ascending by id.
// Distinct in-vocabulary n-grams only under the binarized default.
std::vector<std::pair<int, double>> bon_vector(const Document& doc,
                                               const Vocabulary& vocab,
                                               const NBWeights& weights,
                                               const BonOptions& opt = {});

// p(f_i) = min(exp(h_i / n_a) / n_b, 1)
double keep_probability(double h, double n_a, double n_b);

// Per-epoch stochastic filter over training n-grams; keeps n-gram id with
// probability keep_probability(h_i, n_a, n_b).
class SubSampler {
 public:
  SubSampler(const NBWeights& weights, double n_a, double n_b, std::uint64_t seed);

  bool keep(int ngram_id, Rng& rng) const {
    return rng.uniform() < keep_prob_[static_cast<std::size_t>(ngram_id)];
  }
  double prob(int ngram_id) const { return keep_prob_.at(static_cast<std::size_t>(ngram_id)); }
  double n_a() const { return n_a_; }
  double n_b() const { return n_b_; }
  std::uint64_t seed() const { return seed_; }

 private:
  std::vector<double> keep_prob_;
  double n_a_ = 2.0;
  double n_b_ = 3.0;
  std::uint64_t seed_ = 0;
};

// Sparse BON rows for a whole document set.
struct SparseTable {
  int dim = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;

  int size() const { return static_cast<int>(rows.size()); }
  void save(const std::string& path) const;  // one line per doc: id:weight pairs
  static SparseTable load(const std::string& path, int dim_hint = 0);
};

SparseTable build_bon_table(const Corpus& corpus, const Vocabulary& vocab,
                            const NBWeights& weights, const BonOptions& opt = {});

}  // namespace dv

#endif  // DV_NB_HPP_
