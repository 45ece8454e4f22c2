#ifndef DV_TESTS_SUPPORT_HELPERS_HPP_
#define DV_TESTS_SUPPORT_HELPERS_HPP_

#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dv/common.hpp"
#include "dv/corpus.hpp"
#include "dv/model.hpp"
#include "dv/nb.hpp"
#include "dv/vocab.hpp"

namespace dvtest {

struct DocSpec {
  std::string text;
  dv::Label label;
  dv::Split split;
};

inline dv::Corpus make_corpus(const std::vector<DocSpec>& specs) {
  std::ostringstream docs, meta;
  meta << "doc_id\tlabel\tsplit\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    docs << specs[i].text << '\n';
    meta << i << '\t' << dv::to_string(specs[i].label) << '\t'
         << dv::to_string(specs[i].split) << '\n';
  }
  std::istringstream docs_in(docs.str()), meta_in(meta.str());
  return dv::ingest(docs_in, meta_in);
}

// Two disjoint-vocabulary topics; documents draw tokens from their own topic
// plus a tiny shared filler set.
inline dv::Corpus make_two_cluster_corpus(int docs_per_cluster, int tokens_per_doc,
                                          std::uint64_t seed) {
  dv::Rng rng(seed);
  std::vector<std::string> topic_a, topic_b;
  for (int i = 0; i < 30; ++i) {
    topic_a.push_back("alpha" + std::to_string(i));
    topic_b.push_back("beta" + std::to_string(i));
  }
  std::vector<DocSpec> specs;
  for (int cluster = 0; cluster < 2; ++cluster) {
    const auto& topic = cluster == 0 ? topic_a : topic_b;
    for (int d = 0; d < docs_per_cluster; ++d) {
      std::string text;
      for (int t = 0; t < tokens_per_doc; ++t) {
        if (t) text += ' ';
        text += topic[static_cast<std::size_t>(rng.below(topic.size()))];
      }
      specs.push_back(DocSpec{text, cluster == 0 ? dv::Label::Positive : dv::Label::Negative,
                              dv::Split::Train});
    }
  }
  return make_corpus(specs);
}

// Independent dictionary-based counting oracle for NB weights (token-level,
// train-split labeled documents only).
inline std::vector<double> nb_log_ratio_oracle(const dv::Corpus& corpus,
                                               const dv::Vocabulary& vocab,
                                               double smoothing) {
  std::map<std::string, long long> pos, neg;
  long long pos_total = 0, neg_total = 0;
  for (int i = 0; i < corpus.size(); ++i) {
    const dv::Document& d = corpus.doc(i);
    if (d.split != dv::Split::Train || d.label == dv::Label::Unlabeled) continue;
    std::vector<dv::NGram> grams = dv::extract_ngrams(d, vocab.max_order());
    for (const dv::NGram& g : grams) {
      const std::string key = g.joined();
      if (vocab.id_of(key) < 0) continue;
      if (d.label == dv::Label::Positive) {
        ++pos[key];
        ++pos_total;
      } else {
        ++neg[key];
        ++neg_total;
      }
    }
  }
  const double v = static_cast<double>(vocab.size());
  std::vector<double> out(static_cast<std::size_t>(vocab.size()));
  for (int id = 0; id < vocab.size(); ++id) {
    const std::string& key = vocab.entry(id).key;
    const double cp = pos.count(key) ? static_cast<double>(pos.at(key)) : 0.0;
    const double cn = neg.count(key) ? static_cast<double>(neg.at(key)) : 0.0;
    const double lp = std::log(cp + smoothing) -
                      std::log(static_cast<double>(pos_total) + smoothing * v);
    const double ln = std::log(cn + smoothing) -
                      std::log(static_cast<double>(neg_total) + smoothing * v);
    out[static_cast<std::size_t>(id)] = lp - ln;
  }
  return out;
}

// Acklam's rational approximation of the standard normal quantile,
// accurate to ~1e-9 over (0, 1).
inline double normal_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
  const double q = p - 0.5, r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

// Two 1-dimensional views per document that mimic sub-model logits: each
// view classifies its document with a small error rate, errors carry small
// margins, and a shared difficulty draw correlates the two views of the
// same document. Block order: pos-train, neg-train, pos-test, neg-test.
struct TwoView {
  dv::DenseTable dense;
  dv::SparseTable sparse;
  dv::CorpusMeta meta;
};

inline TwoView make_two_view(int n_train_per_class, int n_test_per_class, double err1,
                             double err2, std::uint64_t seed, int n_valid_per_class = 0) {
  dv::Rng rng(seed);
  TwoView out;
  out.dense.dim = 1;
  out.sparse.dim = 1;

  // per-view difficulty t_i shares a document-level component g, so the two
  // views of one document are positively correlated without being redundant;
  // thresholds are the normal quantiles of the target error rates
  const double tau1 = normal_quantile(err1);
  const double tau2 = normal_quantile(err2);
  const double rho = 0.75;
  const double indep = std::sqrt(1.0 - rho * rho);

  std::vector<dv::Block> blocks;
  const auto add_block = [&](dv::Label label, dv::Split split, int count) {
    blocks.push_back(dv::Block{label, split, static_cast<int>(out.meta.labels.size()), count});
    const double y = label == dv::Label::Positive ? 1.0 : -1.0;
    for (int k = 0; k < count; ++k) {
      const double g = rng.normal();
      const double t1 = rho * g + indep * rng.normal();
      const double t2 = rho * g + indep * rng.normal();
      // hard examples sit below the threshold and keep small margins; easy
      // ones grow with their distance from it
      const double m1 = t1 < tau1 ? 0.12 + 0.7 * (tau1 - t1) : 0.7 + 1.4 * (t1 - tau1);
      const double m2 = t2 < tau2 ? 0.30 + 1.5 * (tau2 - t2) : 0.35 + 0.7 * (t2 - tau2);
      const double z1 = y * (t1 < tau1 ? -m1 : m1);
      const double z2 = y * (t2 < tau2 ? -m2 : m2);
      out.dense.data.push_back(z1);
      out.dense.keys.push_back(std::to_string(out.meta.labels.size()));
      out.sparse.rows.push_back({{0, z2}});
      out.meta.labels.push_back(label);
      out.meta.splits.push_back(split);
    }
  };
  add_block(dv::Label::Positive, dv::Split::Train, n_train_per_class);
  add_block(dv::Label::Negative, dv::Split::Train, n_train_per_class);
  if (n_valid_per_class > 0) {
    add_block(dv::Label::Positive, dv::Split::Validation, n_valid_per_class);
    add_block(dv::Label::Negative, dv::Split::Validation, n_valid_per_class);
  }
  add_block(dv::Label::Positive, dv::Split::Test, n_test_per_class);
  add_block(dv::Label::Negative, dv::Split::Test, n_test_per_class);
  out.meta.layout = dv::BlockLayout(blocks);
  return out;
}

}  // namespace dvtest

#endif  // DV_TESTS_SUPPORT_HELPERS_HPP_
