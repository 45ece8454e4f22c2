#ifndef DV_CLASSIFIER_HPP_
#define DV_CLASSIFIER_HPP_

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dv/common.hpp"

namespace dv {

// Per-document feature rows: an optional dense block followed by an optional
// sparse block addressed by id. The sparse block never densifies.
struct FeatureMatrix {
  int n_rows = 0;
  int dense_dim = 0;
  std::vector<double> dense;  // n_rows x dense_dim row-major
  int sparse_dim = 0;
  std::vector<std::vector<std::pair<int, double>>> sparse;  // per row; may be empty overall
  std::vector<int> labels;                                  // empty, or n_rows of {0,1}

  int feature_dim() const { return dense_dim + sparse_dim; }
  bool has_labels() const { return !labels.empty(); }
  std::span<const double> dense_row(int i) const {
    return {dense.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(dense_dim),
            static_cast<std::size_t>(dense_dim)};
  }
  void validate() const;
};

struct FitOptions {
  double tol = 1e-6;      // gradient-norm stopping threshold
  int max_iter = 1000;
  int threads = 1;        // gradient reduction; result depends only on the count
};

struct LogRegModel {
  std::vector<double> weights;  // dense block then sparse block
  double intercept = 0.0;
  double C = 1.0;

  // fit diagnostics
  bool converged = false;
  int iterations = 0;
  double final_grad_norm = 0.0;
  std::vector<double> objective_history;  // per accepted iterate, non-increasing

  void save(const std::string& path) const;  // TSV: feature_id, weight; plus intercept and C
  static LogRegModel load(const std::string& path);
};

// Minimizes |w|^2/(2 C n) + mean_i log(1+exp(-y_i z_i)) with an
// unregularized intercept (same minimizer as the usual C-parameterized
// L2 logistic regression). Deterministic for fixed inputs and thread count.
LogRegModel fit(const FeatureMatrix& features, double C, const FitOptions& opt = {});

double logit(const LogRegModel& model, const FeatureMatrix& features, int row);
double logit(const LogRegModel& model, std::span<const double> dense_features);

// Additive split of a row's logit; dense + sparse + intercept == total.
struct LogitParts {
  double dense = 0.0;
  double sparse = 0.0;
  double intercept = 0.0;
  double total() const { return dense + sparse + intercept; }
};
LogitParts logit_parts(const LogRegModel& model, const FeatureMatrix& features, int row);

inline int predict_from_logit(double z) { return z > 0.0 ? 1 : 0; }

double accuracy(const LogRegModel& model, const FeatureMatrix& features);
double accuracy(const LogRegModel& model, const FeatureMatrix& features,
                const std::vector<int>& labels);

struct TuneResult {
  double best_C = 1.0;
  double valid_accuracy = 0.0;
  LogRegModel model;  // refit at best_C on the training matrix
};

// Exhaustive grid evaluation on a validation matrix; ties prefer the
// smaller C (stronger regularization).
TuneResult tune_C(const FeatureMatrix& train, const FeatureMatrix& valid,
                  const std::vector<double>& grid, const FitOptions& opt = {});

// Deterministic k-fold cross-validation on the training matrix (fold of row
// i is i mod k); used when no validation split exists.
TuneResult tune_C_cv(const FeatureMatrix& train, const std::vector<double>& grid,
                     int folds, const FitOptions& opt = {});

// 10 points log-spaced over [1e-4, 1e4].
std::vector<double> default_c_grid();

}  // namespace dv

#endif  // DV_CLASSIFIER_HPP_
