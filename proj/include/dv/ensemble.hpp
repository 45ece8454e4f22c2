#ifndef DV_ENSEMBLE_HPP_
#define DV_ENSEMBLE_HPP_

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dv/classifier.hpp"
#include "dv/corpus.hpp"
#include "dv/model.hpp"
#include "dv/nb.hpp"

namespace dv {

// How the dense representation is paired with the sparse one. Only the
// dense rows are permuted; labels and sparse rows stay put.
//   CorrectMatching      identity pairing
//   OriginalMismatch     independent uniform permutation inside every block
//   TestInClass_A        test blocks permuted within themselves
//   TestCrossClass_B     the two test class blocks pooled and permuted
//   TrainTestInClass_C   train and test blocks permuted within themselves
//   TrainTestCrossClass_D train and test pooled per split across classes
enum class SchemeKind {
  CorrectMatching,
  OriginalMismatch,
  TestInClass_A,
  TestCrossClass_B,
  TrainTestInClass_C,
  TrainTestCrossClass_D,
};

const char* to_string(SchemeKind k);
SchemeKind scheme_from_string(std::string_view tag);  // correct|original|A|B|C|D

struct ShuffleScheme {
  SchemeKind kind = SchemeKind::CorrectMatching;
  std::uint64_t seed = 0;
};

// Generates the scheme's permutation over the layout and checks its
// invariants (in-block schemes stay in-block, cross-class schemes stay
// within their split) before returning.
AlignmentMap apply_scheme(const ShuffleScheme& scheme, const BlockLayout& layout);

struct EnsembleConfig {
  double scale = 1.0;                              // dense multiplier when not tuned
  std::vector<double> c_grid = default_c_grid();
  std::vector<double> scale_grid = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  bool tune_scale = true;  // only applies when a validation split exists
  int cv_folds = 5;        // fallback protocol without a validation split
  FitOptions fit;
};

struct EnsembleRun {
  int seed_index = 0;
  double test_accuracy = 0.0;
  double valid_accuracy = 0.0;  // validation or CV estimate
  double chosen_C = 1.0;
  double chosen_scale = 1.0;
};

struct EnsembleReport {
  std::string scheme;
  std::vector<EnsembleRun> runs;
  double mean = 0.0;
  double stddev = 0.0;

  // CSV (scheme, seed, split, accuracy) plus mean/std summary rows; tuned
  // values go to <path>.choices.tsv.
  void save(const std::string& path) const;
};

// Permutes the dense table by the scheme, concatenates (scale * dense ||
// sparse) per row, fits on Train, tunes on Validation when present (or via
// train-internal CV), and reports Test accuracy over n_seeds runs.
// test_scheme, when set, applies a different permutation to the
// validation/test rows than to the training rows.
EnsembleReport evaluate_ensemble(const DenseTable& dense, const SparseTable& sparse,
                                 const CorpusMeta& meta, SchemeKind scheme,
                                 const EnsembleConfig& config, int n_seeds,
                                 std::uint64_t base_seed,
                                 std::optional<SchemeKind> test_scheme = std::nullopt);

// Per-run artifacts of one ensemble evaluation, for downstream analysis.
struct FittedEnsemble {
  LogRegModel model;
  FeatureMatrix test_rows;       // unlabeled; labels kept separately
  std::vector<int> test_labels;
  std::vector<int> test_doc_ids;
  double chosen_C = 1.0;
  double chosen_scale = 1.0;
  double valid_accuracy = 0.0;  // validation or CV estimate behind the choice
  double test_accuracy = 0.0;
};

FittedEnsemble fit_ensemble(const DenseTable& dense, const SparseTable& sparse,
                            const CorpusMeta& meta, const ShuffleScheme& scheme,
                            const EnsembleConfig& config,
                            std::optional<SchemeKind> test_scheme = std::nullopt);

// Reads an externally produced embedding file and reorders its rows into
// doc_id order. id_map translates file keys to doc ids; when empty, keys
// must parse as the doc ids themselves.
DenseTable import_external_dense(const std::string& path,
                                 const std::unordered_map<std::string, int>& id_map,
                                 int n_docs);

}  // namespace dv

#endif  // DV_ENSEMBLE_HPP_
