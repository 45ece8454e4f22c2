#ifndef DV_VOCAB_HPP_
#define DV_VOCAB_HPP_

#include <array>
#include <string>
#include <unordered_map>
#include <vector>

#include "dv/common.hpp"
#include "dv/corpus.hpp"

namespace dv {

struct VocabEntry {
  std::string key;  // n-gram tokens joined by '_'
  int order = 1;
  long long count = 0;
};

// N-gram vocabulary with dense ids. Ordering is deterministic: descending
// count, ties broken by the lexicographic order of the joined key, so ids
// are stable for a fixed corpus and config.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<VocabEntry> entries, int max_order,
             std::array<long long, 4> min_count_by_order);

  int size() const { return static_cast<int>(entries_.size()); }
  int id_of(const std::string& key) const;  // -1 when absent
  const VocabEntry& entry(int id) const { return entries_.at(static_cast<std::size_t>(id)); }
  long long count(int id) const { return entry(id).count; }
  int max_order() const { return max_order_; }
  long long min_count(int order) const { return min_count_by_order_.at(static_cast<std::size_t>(order)); }

  void save(const std::string& path) const;  // TSV: key, id, count
  static Vocabulary load(const std::string& path);

 private:
  std::vector<VocabEntry> entries_;
  std::unordered_map<std::string, int> index_;
  int max_order_ = 1;
  std::array<long long, 4> min_count_by_order_{0, 1, 1, 1};  // indexed by order
};

struct VocabConfig {
  int max_order = 3;
  long long min_count_unigram = 5;
  long long min_count_higher = 20;  // bigrams and trigrams
};

// Counts aggregate over every document, labeled or not; n-grams below the
// per-order threshold are dropped.
Vocabulary build_vocab(const Corpus& corpus, const VocabConfig& cfg);
Vocabulary build_vocab(const Corpus& corpus, int max_order, long long min_count);

// O(1) weighted draws over ngram ids with P(id) proportional to
// count(id)^power, built with the alias method. Immutable after
// construction; concurrent callers pass their own Rng.
class NegativeSampler {
 public:
  NegativeSampler(const Vocabulary& vocab, double power, std::uint64_t seed);
  NegativeSampler(std::vector<double> weights, double power, std::uint64_t seed);

  int sample(Rng& rng) const;
  const std::vector<double>& distribution() const { return prob_; }
  double power() const { return power_; }
  std::uint64_t seed() const { return seed_; }
  Rng make_rng() const { return Rng(seed_); }

 private:
  void build(std::vector<double> weights);

  std::vector<double> prob_;        // normalized target distribution
  std::vector<double> cut_;         // alias acceptance thresholds
  std::vector<int> alias_;
  double power_ = 0.75;
  std::uint64_t seed_ = 0;
};

}  // namespace dv

#endif  // DV_VOCAB_HPP_
