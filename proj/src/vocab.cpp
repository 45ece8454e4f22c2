#include "dv/vocab.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dv {

Vocabulary::Vocabulary(std::vector<VocabEntry> entries, int max_order,
                       std::array<long long, 4> min_count_by_order)
    : entries_(std::move(entries)),
      max_order_(max_order),
      min_count_by_order_(min_count_by_order) {
  index_.reserve(entries_.size() * 2);
  for (int id = 0; id < size(); ++id) {
    const VocabEntry& e = entries_[static_cast<std::size_t>(id)];
    if (e.count < min_count_by_order_.at(static_cast<std::size_t>(e.order)))
      throw ConfigError("vocabulary entry below its min_count: " + e.key);
    if (!index_.emplace(e.key, id).second)
      throw ConfigError("duplicate vocabulary key: " + e.key);
  }
}

int Vocabulary::id_of(const std::string& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? -1 : it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write vocabulary file " + path);
  for (int id = 0; id < size(); ++id) {
    const VocabEntry& e = entries_[static_cast<std::size_t>(id)];
    os << e.key << '\t' << id << '\t' << e.count << '\n';
  }
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open vocabulary file " + path);
  std::vector<VocabEntry> entries;
  std::array<long long, 4> min_count{0, 1, 1, 1};
  int max_order = 1;
  std::string line;
  int expect_id = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) throw ConfigError("bad vocabulary row: " + line);
    if (parse_int(cols[1]) != expect_id)
      throw ConfigError("vocabulary ids must be dense and ascending");
    VocabEntry e;
    e.key = cols[0];
    e.order = 1 + static_cast<int>(std::count(e.key.begin(), e.key.end(), '_'));
    e.order = std::min(e.order, 3);
    e.count = parse_int(cols[2]);
    max_order = std::max(max_order, e.order);
    entries.push_back(std::move(e));
    ++expect_id;
  }
  return Vocabulary(std::move(entries), max_order, min_count);
}

Vocabulary build_vocab(const Corpus& corpus, const VocabConfig& cfg) {
  if (corpus.size() == 0) throw ConfigError("cannot build vocabulary from an empty corpus");
  if (cfg.max_order < 1 || cfg.max_order > 3)
    throw ConfigError("max_order must be in 1..3");

  std::unordered_map<std::string, std::pair<long long, int>> counts;  // key -> (count, order)
  for (int i = 0; i < corpus.size(); ++i) {
    const Document& d = corpus.doc(i);
    for_each_ngram_key(d.tokens, cfg.max_order, [&](const std::string& key, int order) {
      auto [it, fresh] = counts.try_emplace(key, 0LL, order);
      ++it->second.first;
      (void)fresh;
    });
  }

  std::array<long long, 4> thresholds{0, cfg.min_count_unigram, cfg.min_count_higher,
                                      cfg.min_count_higher};
  std::vector<VocabEntry> entries;
  entries.reserve(counts.size());
  for (auto& [key, cnt_order] : counts) {
    const auto [count, order] = cnt_order;
    if (count >= thresholds.at(static_cast<std::size_t>(order)))
      entries.push_back(VocabEntry{key, order, count});
  }
  std::sort(entries.begin(), entries.end(), [](const VocabEntry& a, const VocabEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.key < b.key;
  });
  return Vocabulary(std::move(entries), cfg.max_order, thresholds);
}

Vocabulary build_vocab(const Corpus& corpus, int max_order, long long min_count) {
  VocabConfig cfg;
  cfg.max_order = max_order;
  cfg.min_count_unigram = min_count;
  cfg.min_count_higher = min_count;
  return build_vocab(corpus, cfg);
}

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double power, std::uint64_t seed)
    : power_(power), seed_(seed) {
  if (vocab.size() == 0) throw ConfigError("sampler needs a non-empty vocabulary");
  std::vector<double> weights(static_cast<std::size_t>(vocab.size()));
  for (int id = 0; id < vocab.size(); ++id)
    weights[static_cast<std::size_t>(id)] =
        std::pow(static_cast<double>(vocab.count(id)), power);
  build(std::move(weights));
}

NegativeSampler::NegativeSampler(std::vector<double> weights, double power, std::uint64_t seed)
    : power_(power), seed_(seed) {
  if (weights.empty()) throw ConfigError("sampler needs a non-empty weight table");
  build(std::move(weights));
}

// Vose's alias method.
void NegativeSampler::build(std::vector<double> weights) {
  const std::size_t n = weights.size();
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w))
      throw NumericError("sampler weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0.0) throw NumericError("sampler weights sum to zero");

  prob_.resize(n);
  for (std::size_t i = 0; i < n; ++i) prob_[i] = weights[i] / total;

  cut_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  std::vector<int> small, large;
  small.reserve(n);
  large.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    scaled[i] = prob_[i] * static_cast<double>(n);
    if (scaled[i] < 1.0)
      small.push_back(static_cast<int>(i));
    else
      large.push_back(static_cast<int>(i));
  }
  while (!small.empty() && !large.empty()) {
    const int s = small.back();
    small.pop_back();
    const int l = large.back();
    large.pop_back();
    cut_[static_cast<std::size_t>(s)] = scaled[static_cast<std::size_t>(s)];
    alias_[static_cast<std::size_t>(s)] = l;
    scaled[static_cast<std::size_t>(l)] -= 1.0 - scaled[static_cast<std::size_t>(s)];
    if (scaled[static_cast<std::size_t>(l)] < 1.0)
      small.push_back(l);
    else
      large.push_back(l);
  }
  for (int i : large) cut_[static_cast<std::size_t>(i)] = 1.0;
  for (int i : small) cut_[static_cast<std::size_t>(i)] = 1.0;
}

int NegativeSampler::sample(Rng& rng) const {
  const std::size_t k = static_cast<std::size_t>(rng.below(prob_.size()));
  if (rng.uniform() < cut_[k]) return static_cast<int>(k);
  return alias_[k];
}

}  // namespace dv
