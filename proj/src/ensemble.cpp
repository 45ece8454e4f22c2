#include "dv/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace dv {

const char* to_string(SchemeKind k) {
  switch (k) {
    case SchemeKind::CorrectMatching: return "correct";
    case SchemeKind::OriginalMismatch: return "original";
    case SchemeKind::TestInClass_A: return "A";
    case SchemeKind::TestCrossClass_B: return "B";
    case SchemeKind::TrainTestInClass_C: return "C";
    case SchemeKind::TrainTestCrossClass_D: return "D";
  }
  return "?";
}

SchemeKind scheme_from_string(std::string_view tag) {
  if (tag == "correct") return SchemeKind::CorrectMatching;
  if (tag == "original") return SchemeKind::OriginalMismatch;
  if (tag == "A") return SchemeKind::TestInClass_A;
  if (tag == "B") return SchemeKind::TestCrossClass_B;
  if (tag == "C") return SchemeKind::TrainTestInClass_C;
  if (tag == "D") return SchemeKind::TrainTestCrossClass_D;
  throw ConfigError("unknown scheme '" + std::string(tag) +
                    "' (expected correct|original|A|B|C|D)");
}

namespace {

std::vector<int> identity_perm(int n) {
  std::vector<int> p(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  return p;
}

// permute the values sitting at positions idxs among themselves
void shuffle_positions(std::vector<int>& perm, const std::vector<int>& idxs, Rng& rng) {
  std::vector<int> values;
  values.reserve(idxs.size());
  for (int i : idxs) values.push_back(perm[static_cast<std::size_t>(i)]);
  rng.shuffle(values);
  for (std::size_t k = 0; k < idxs.size(); ++k)
    perm[static_cast<std::size_t>(idxs[k])] = values[k];
}

std::vector<int> block_indices(const Block& b) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(b.length));
  for (int i = b.start; i < b.end(); ++i) out.push_back(i);
  return out;
}

bool touches_in_class(SchemeKind k, Split s) {
  switch (k) {
    case SchemeKind::OriginalMismatch: return true;
    case SchemeKind::TestInClass_A: return s == Split::Test;
    case SchemeKind::TrainTestInClass_C: return s == Split::Train || s == Split::Test;
    default: return false;
  }
}

bool touches_cross_class(SchemeKind k, Split s) {
  switch (k) {
    case SchemeKind::TestCrossClass_B: return s == Split::Test;
    case SchemeKind::TrainTestCrossClass_D: return s == Split::Train || s == Split::Test;
    default: return false;
  }
}

void check_scheme(const AlignmentMap& map, const BlockLayout& layout, SchemeKind kind) {
  const int n = layout.total();
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int j = map.perm[static_cast<std::size_t>(i)];
    if (j < 0 || j >= n || seen[static_cast<std::size_t>(j)])
      throw std::logic_error("scheme produced a non-bijective map");
    seen[static_cast<std::size_t>(j)] = 1;

    const Block& bi = layout.blocks()[static_cast<std::size_t>(layout.block_of(i))];
    const Block& bj = layout.blocks()[static_cast<std::size_t>(layout.block_of(j))];
    if (touches_in_class(kind, bi.split)) {
      if (&bi != &bj) throw std::logic_error("in-class scheme left its block");
    } else if (touches_cross_class(kind, bi.split) && bi.label != Label::Unlabeled) {
      if (bj.split != bi.split || bj.label == Label::Unlabeled)
        throw std::logic_error("cross-class scheme left its split pool");
    } else if (j != i) {
      throw std::logic_error("scheme moved an index it must not touch");
    }
  }
}

}  // namespace

AlignmentMap apply_scheme(const ShuffleScheme& scheme, const BlockLayout& layout) {
  AlignmentMap map;
  map.perm = identity_perm(layout.total());
  Rng rng(scheme.seed);

  switch (scheme.kind) {
    case SchemeKind::CorrectMatching:
      break;
    case SchemeKind::OriginalMismatch:
      for (const Block& b : layout.blocks()) shuffle_positions(map.perm, block_indices(b), rng);
      break;
    case SchemeKind::TestInClass_A:
    case SchemeKind::TrainTestInClass_C:
      for (const Block& b : layout.blocks())
        if (touches_in_class(scheme.kind, b.split))
          shuffle_positions(map.perm, block_indices(b), rng);
      break;
    case SchemeKind::TestCrossClass_B:
    case SchemeKind::TrainTestCrossClass_D:
      for (Split s : {Split::Train, Split::Test}) {
        if (!touches_cross_class(scheme.kind, s)) continue;
        std::vector<int> pool;  // the two class blocks of this split, as a whole
        for (const Block& b : layout.blocks())
          if (b.split == s && b.label != Label::Unlabeled) {
            const auto idxs = block_indices(b);
            pool.insert(pool.end(), idxs.begin(), idxs.end());
          }
        shuffle_positions(map.perm, pool, rng);
      }
      break;
  }
  check_scheme(map, layout, scheme.kind);
  return map;
}

namespace {

struct SplitIds {
  std::vector<int> train, valid, test;
};

SplitIds labeled_split_ids(const CorpusMeta& meta) {
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

FeatureMatrix build_rows(const DenseTable& dense, const SparseTable& sparse,
                         const CorpusMeta& meta, const std::vector<int>& ids,
                         const std::vector<int>& perm, double scale, bool with_labels) {
  FeatureMatrix f;
  f.n_rows = static_cast<int>(ids.size());
  f.dense_dim = dense.dim;
  f.sparse_dim = sparse.dim;
  f.dense.reserve(ids.size() * static_cast<std::size_t>(dense.dim));
  f.sparse.reserve(ids.size());
  if (with_labels) f.labels.reserve(ids.size());
  for (int id : ids) {
    const auto row = dense.row(perm[static_cast<std::size_t>(id)]);
    for (double v : row) f.dense.push_back(scale * v);
    f.sparse.push_back(sparse.rows[static_cast<std::size_t>(id)]);
    if (with_labels)
      f.labels.push_back(meta.labels[static_cast<std::size_t>(id)] == Label::Positive ? 1 : 0);
  }
  return f;
}

std::vector<int> label_vector(const CorpusMeta& meta, const std::vector<int>& ids) {
  std::vector<int> out;
  out.reserve(ids.size());
  for (int id : ids)
    out.push_back(meta.labels[static_cast<std::size_t>(id)] == Label::Positive ? 1 : 0);
  return out;
}

}  // namespace

FittedEnsemble fit_ensemble(const DenseTable& dense, const SparseTable& sparse,
                            const CorpusMeta& meta, const ShuffleScheme& scheme,
                            const EnsembleConfig& config,
                            std::optional<SchemeKind> test_scheme) {
  if (dense.rows() != meta.size() || sparse.size() != meta.size())
    throw ConfigError("dense/sparse tables must cover the same document set as the metadata");
  const SplitIds ids = labeled_split_ids(meta);
  if (ids.train.empty() || ids.test.empty())
    throw ConfigError("ensemble evaluation needs labeled train and test documents");

  const AlignmentMap train_map = apply_scheme(scheme, meta.layout);
  const AlignmentMap eval_map =
      test_scheme ? apply_scheme(
                        ShuffleScheme{*test_scheme, derive_seed(scheme.seed, "eval-side")},
                        meta.layout)
                  : train_map;

  const bool has_valid = !ids.valid.empty();
  std::vector<double> scale_grid =
      (has_valid && config.tune_scale) ? config.scale_grid : std::vector<double>{config.scale};
  std::sort(scale_grid.begin(), scale_grid.end());

  FittedEnsemble out;
  double best_score = -1.0;
  for (double s : scale_grid) {
    const FeatureMatrix train_rows =
        build_rows(dense, sparse, meta, ids.train, train_map.perm, s, true);
    TuneResult tuned;
    if (has_valid) {
      const FeatureMatrix valid_rows =
          build_rows(dense, sparse, meta, ids.valid, eval_map.perm, s, true);
      tuned = tune_C(train_rows, valid_rows, config.c_grid, config.fit);
    } else {
      tuned = tune_C_cv(train_rows, config.c_grid, config.cv_folds, config.fit);
    }
    if (tuned.valid_accuracy > best_score) {
      best_score = tuned.valid_accuracy;
      out.model = std::move(tuned.model);
      out.chosen_C = tuned.best_C;
      out.chosen_scale = s;
      out.valid_accuracy = tuned.valid_accuracy;
    }
  }

  out.test_rows = build_rows(dense, sparse, meta, ids.test, eval_map.perm, out.chosen_scale,
                             /*with_labels=*/false);
  out.test_labels = label_vector(meta, ids.test);
  out.test_doc_ids = ids.test;
  out.test_accuracy = accuracy(out.model, out.test_rows, out.test_labels);
  return out;
}

EnsembleReport evaluate_ensemble(const DenseTable& dense, const SparseTable& sparse,
                                 const CorpusMeta& meta, SchemeKind scheme,
                                 const EnsembleConfig& config, int n_seeds,
                                 std::uint64_t base_seed,
                                 std::optional<SchemeKind> test_scheme) {
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  EnsembleReport report;
  report.scheme = to_string(scheme);
  double sum = 0.0;
  for (int k = 0; k < n_seeds; ++k) {
    ShuffleScheme s{scheme, derive_seed(base_seed, std::string("ensemble/") +
                                                       to_string(scheme) + "/seed=" +
                                                       std::to_string(k))};
    const FittedEnsemble fitted = fit_ensemble(dense, sparse, meta, s, config, test_scheme);
    EnsembleRun run;
    run.seed_index = k;
    run.test_accuracy = fitted.test_accuracy;
    run.chosen_C = fitted.chosen_C;
    run.chosen_scale = fitted.chosen_scale;
    run.valid_accuracy = fitted.valid_accuracy;
    sum += run.test_accuracy;
    report.runs.push_back(run);
  }
  report.mean = sum / static_cast<double>(n_seeds);
  double ss = 0.0;
  for (const EnsembleRun& r : report.runs) {
    const double d = r.test_accuracy - report.mean;
    ss += d * d;
  }
  report.stddev = n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
  return report;
}

void EnsembleReport::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write report " + path);
  os << "scheme,seed,split,accuracy\n";
  for (const EnsembleRun& r : runs)
    os << scheme << ',' << r.seed_index << ",test," << fmt_fixed(r.test_accuracy, 6) << '\n';
  os << scheme << ",mean,test," << fmt_fixed(mean, 6) << '\n';
  os << scheme << ",std,test," << fmt_fixed(stddev, 6) << '\n';

  std::ofstream cs(path + ".choices.tsv");
  if (!cs) throw DependencyError("cannot write choices sidecar for " + path);
  cs << "seed\tchosen_C\tchosen_scale\n";
  for (const EnsembleRun& r : runs)
    cs << r.seed_index << '\t' << fmt_full(r.chosen_C) << '\t' << fmt_full(r.chosen_scale) << '\n';
}

DenseTable import_external_dense(const std::string& path,
                                 const std::unordered_map<std::string, int>& id_map,
                                 int n_docs) {
  const DenseTable raw = load_embedding_file(path);
  DenseTable out;
  out.dim = raw.dim;
  out.data.assign(static_cast<std::size_t>(n_docs) * static_cast<std::size_t>(raw.dim), 0.0);
  out.keys.resize(static_cast<std::size_t>(n_docs));
  std::vector<char> covered(static_cast<std::size_t>(n_docs), 0);
  for (int i = 0; i < raw.rows(); ++i) {
    const std::string& key = raw.keys[static_cast<std::size_t>(i)];
    int doc_id;
    if (id_map.empty()) {
      doc_id = static_cast<int>(parse_int(key));
    } else {
      const auto it = id_map.find(key);
      if (it == id_map.end()) throw ConfigError("embedding key not in id map: " + key);
      doc_id = it->second;
    }
    if (doc_id < 0 || doc_id >= n_docs)
      throw ConfigError("embedding key maps to out-of-range doc id: " + key);
    if (covered[static_cast<std::size_t>(doc_id)])
      throw ConfigError("duplicate embedding rows for doc id " + std::to_string(doc_id));
    covered[static_cast<std::size_t>(doc_id)] = 1;
    const auto row = raw.row(i);
    std::copy(row.begin(), row.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(doc_id) * out.dim);
    out.keys[static_cast<std::size_t>(doc_id)] = std::to_string(doc_id);
  }
  for (int i = 0; i < n_docs; ++i)
    if (!covered[static_cast<std::size_t>(i)])
      throw ConfigError("embedding file is missing doc id " + std::to_string(i));
  return out;
}

}  // namespace dv
