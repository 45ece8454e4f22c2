#include "dv/nb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

namespace dv {

void NBWeights::save(const std::string& path, const Vocabulary& vocab) const {
  if (size() != vocab.size())
    throw ConfigError("weights size does not match vocabulary");
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write weights file " + path);
  for (int id = 0; id < size(); ++id)
    os << vocab.entry(id).key << '\t' << fmt_full(h(id)) << '\t' << fmt_full(r(id)) << '\n';
}

NBWeights NBWeights::load(const std::string& path, const Vocabulary& vocab) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open weights file " + path);
  NBWeights w;
  w.log_ratio.assign(static_cast<std::size_t>(vocab.size()), 0.0);
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) throw ConfigError("bad weights row: " + line);
    const int id = vocab.id_of(cols[0]);
    if (id < 0) throw ConfigError("weights entry not in vocabulary: " + cols[0]);
    w.log_ratio[static_cast<std::size_t>(id)] = parse_double(cols[2]);
    ++rows;
  }
  if (rows != vocab.size())
    throw ConfigError("weights file covers " + std::to_string(rows) + " of " +
                      std::to_string(vocab.size()) + " vocabulary entries");
  return w;
}

NBWeights fit_nb_weights(const Corpus& corpus, const Vocabulary& vocab,
                         double smoothing, NBEventModel event_model) {
  if (smoothing <= 0.0) throw ConfigError("smoothing must be positive");
  const std::size_t v = static_cast<std::size_t>(vocab.size());
  std::vector<double> pos_count(v, 0.0), neg_count(v, 0.0);
  double pos_total = 0.0, neg_total = 0.0;  // token totals (multinomial) or doc totals (bernoulli)
  long long pos_docs = 0, neg_docs = 0;

  std::vector<char> seen(v, 0);
  std::vector<int> seen_ids;
  for (int i = 0; i < corpus.size(); ++i) {
    // only labeled documents of the training split are visible to the fit
    if (corpus.layout().blocks()[static_cast<std::size_t>(corpus.layout().block_of(i))].split !=
        Split::Train)
      continue;
    const Document& d = corpus.doc(i);
    if (d.split != Split::Train || d.label == Label::Unlabeled) continue;
    const bool positive = d.label == Label::Positive;
    (positive ? pos_docs : neg_docs) += 1;
    std::vector<double>& count = positive ? pos_count : neg_count;
    double& total = positive ? pos_total : neg_total;

    if (event_model == NBEventModel::Multinomial) {
      for_each_ngram_key(d.tokens, vocab.max_order(), [&](const std::string& key, int) {
        const int id = vocab.id_of(key);
        if (id < 0) return;
        count[static_cast<std::size_t>(id)] += 1.0;
        total += 1.0;
      });
    } else {
      seen_ids.clear();
      for_each_ngram_key(d.tokens, vocab.max_order(), [&](const std::string& key, int) {
        const int id = vocab.id_of(key);
        if (id < 0 || seen[static_cast<std::size_t>(id)]) return;
        seen[static_cast<std::size_t>(id)] = 1;
        seen_ids.push_back(id);
      });
      for (int id : seen_ids) {
        count[static_cast<std::size_t>(id)] += 1.0;
        seen[static_cast<std::size_t>(id)] = 0;
      }
      total += 1.0;  // one document
    }
  }
  if (pos_docs == 0 || neg_docs == 0)
    throw ConfigError("training split must contain at least one document per class");

  NBWeights w;
  w.smoothing = smoothing;
  w.event_model = event_model;
  w.fitted_on = "train";
  w.log_ratio.resize(v);
  for (std::size_t i = 0; i < v; ++i) {
    double log_p_pos, log_p_neg;
    if (event_model == NBEventModel::Multinomial) {
      log_p_pos = std::log(pos_count[i] + smoothing) -
                  std::log(pos_total + smoothing * static_cast<double>(v));
      log_p_neg = std::log(neg_count[i] + smoothing) -
                  std::log(neg_total + smoothing * static_cast<double>(v));
    } else {
      log_p_pos = std::log(pos_count[i] + smoothing) -
                  std::log(static_cast<double>(pos_docs) + 2.0 * smoothing);
      log_p_neg = std::log(neg_count[i] + smoothing) -
                  std::log(static_cast<double>(neg_docs) + 2.0 * smoothing);
    }
    w.log_ratio[i] = log_p_pos - log_p_neg;
  }
  return w;
}

std::vector<std::pair<int, double>> bon_vector(const Document& doc,
                                               const Vocabulary& vocab,
                                               const NBWeights& weights,
                                               const BonOptions& opt) {
  if (weights.size() != vocab.size())
    throw ConfigError("weights size does not match vocabulary");
  std::map<int, long long> occurrences;
  for_each_ngram_key(doc.tokens, vocab.max_order(), [&](const std::string& key, int) {
    const int id = vocab.id_of(key);
    if (id >= 0) ++occurrences[id];
  });
  std::vector<std::pair<int, double>> out;
  out.reserve(occurrences.size());
  for (const auto& [id, n] : occurrences) {
    const double base = opt.signed_weights ? weights.r(id) : weights.h(id);
    const double scale = opt.use_counts ? static_cast<double>(n) : 1.0;
    out.emplace_back(id, scale * base);
  }
  return out;
}

double keep_probability(double h, double n_a, double n_b) {
  if (!(n_a > 0.0) || !(n_b > 0.0))
    throw ConfigError("sub-sampling hyperparameters must be positive");
  // branch form of min(exp(h/n_a)/n_b, 1): the clamp is decided in the
  // h-domain so the boundary case h = n_a*log(n_b) lands on exactly 1
  if (h >= n_a * std::log(n_b)) return 1.0;
  return std::exp(h / n_a) / n_b;
}

SubSampler::SubSampler(const NBWeights& weights, double n_a, double n_b, std::uint64_t seed)
    : n_a_(n_a), n_b_(n_b), seed_(seed) {
  keep_prob_.resize(static_cast<std::size_t>(weights.size()));
  for (int id = 0; id < weights.size(); ++id)
    keep_prob_[static_cast<std::size_t>(id)] = keep_probability(weights.h(id), n_a, n_b);
}

void SparseTable::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write sparse table " + path);
  for (const auto& row : rows) {
    bool first = true;
    for (const auto& [id, w] : row) {
      if (!first) os << ' ';
      os << id << ':' << fmt_full(w);
      first = false;
    }
    os << '\n';
  }
}

SparseTable SparseTable::load(const std::string& path, int dim_hint) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open sparse table " + path);
  SparseTable t;
  t.dim = dim_hint;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::pair<int, double>> row;
    for (const std::string& tok : tokenize_ws(line)) {
      const std::size_t colon = tok.find(':');
      if (colon == std::string::npos) throw ConfigError("bad sparse entry: " + tok);
      const int id = static_cast<int>(parse_int(tok.substr(0, colon)));
      row.emplace_back(id, parse_double(tok.substr(colon + 1)));
      t.dim = std::max(t.dim, id + 1);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

SparseTable build_bon_table(const Corpus& corpus, const Vocabulary& vocab,
                            const NBWeights& weights, const BonOptions& opt) {
  SparseTable t;
  t.dim = vocab.size();
  t.rows.reserve(static_cast<std::size_t>(corpus.size()));
  for (int i = 0; i < corpus.size(); ++i)
    t.rows.push_back(bon_vector(corpus.doc(i), vocab, weights, opt));
  return t;
}

}  // namespace dv
