#include "dv/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <thread>

namespace dv {

void FeatureMatrix::validate() const {
  if (dense_dim > 0 && static_cast<int>(dense.size()) != n_rows * dense_dim)
    throw ConfigError("dense block size does not match n_rows x dense_dim");
  if (dense_dim == 0 && !dense.empty())
    throw ConfigError("dense block present but dense_dim is zero");
  if (!sparse.empty() && static_cast<int>(sparse.size()) != n_rows)
    throw ConfigError("sparse block row count does not match n_rows");
  for (const auto& row : sparse)
    for (const auto& [id, v] : row) {
      if (id < 0 || id >= sparse_dim)
        throw ConfigError("sparse feature id " + std::to_string(id) + " outside 0.." +
                          std::to_string(sparse_dim - 1));
      if (!std::isfinite(v)) throw NumericError("non-finite sparse feature value");
    }
  if (!labels.empty()) {
    if (static_cast<int>(labels.size()) != n_rows)
      throw ConfigError("label count does not match n_rows");
    for (int y : labels)
      if (y != 0 && y != 1) throw ConfigError("labels must be 0/1");
  }
}

namespace {

double row_margin(const FeatureMatrix& f, int i, const double* w, double b) {
  double z = b;
  if (f.dense_dim > 0) {
    const double* x = f.dense.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(f.dense_dim);
    for (int j = 0; j < f.dense_dim; ++j) z += w[j] * x[j];
  }
  if (!f.sparse.empty())
    for (const auto& [id, v] : f.sparse[static_cast<std::size_t>(i)])
      z += w[f.dense_dim + id] * v;
  return z;
}

struct ObjectiveEval {
  double value = 0.0;
  std::vector<double> grad;  // d+1 entries; last is intercept
};

// mean logistic loss + |w|^2/(2 C n); gradient reduced over fixed row
// chunks so the result is reproducible for a given thread count
ObjectiveEval evaluate(const FeatureMatrix& f, const std::vector<double>& x, double C,
                       int threads) {
  const int d = f.feature_dim();
  const int n = f.n_rows;
  const double* w = x.data();
  const double b = x[static_cast<std::size_t>(d)];

  const int chunks = std::max(1, std::min(threads, n));
  std::vector<double> chunk_loss(static_cast<std::size_t>(chunks), 0.0);
  std::vector<std::vector<double>> chunk_grad(
      static_cast<std::size_t>(chunks),
      std::vector<double>(static_cast<std::size_t>(d) + 1, 0.0));

  auto work = [&](int c) {
    const int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
    const int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
    double loss = 0.0;
    std::vector<double>& g = chunk_grad[static_cast<std::size_t>(c)];
    for (int i = begin; i < end; ++i) {
      const double y = f.labels[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
      const double m = y * row_margin(f, i, w, b);
      loss += -log_sigmoid(m);              // log(1 + exp(-m))
      const double coef = -y * sigmoid(-m);  // d/dz of the loss
      if (f.dense_dim > 0) {
        const double* xr = f.dense.data() +
                           static_cast<std::size_t>(i) * static_cast<std::size_t>(f.dense_dim);
        for (int j = 0; j < f.dense_dim; ++j) g[static_cast<std::size_t>(j)] += coef * xr[j];
      }
      if (!f.sparse.empty())
        for (const auto& [id, v] : f.sparse[static_cast<std::size_t>(i)])
          g[static_cast<std::size_t>(f.dense_dim + id)] += coef * v;
      g[static_cast<std::size_t>(d)] += coef;
    }
    chunk_loss[static_cast<std::size_t>(c)] = loss;
  };

  if (chunks == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(chunks));
    for (int c = 0; c < chunks; ++c) pool.emplace_back(work, c);
    for (auto& t : pool) t.join();
  }

  ObjectiveEval out;
  out.grad.assign(static_cast<std::size_t>(d) + 1, 0.0);
  double loss = 0.0;
  for (int c = 0; c < chunks; ++c) {
    loss += chunk_loss[static_cast<std::size_t>(c)];
    for (int j = 0; j <= d; ++j)
      out.grad[static_cast<std::size_t>(j)] += chunk_grad[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const double reg = 1.0 / (C * static_cast<double>(n));
  double penalty = 0.0;
  for (int j = 0; j < d; ++j) {
    penalty += w[j] * w[j];
    out.grad[static_cast<std::size_t>(j)] =
        out.grad[static_cast<std::size_t>(j)] * inv_n + reg * w[j];
  }
  out.grad[static_cast<std::size_t>(d)] *= inv_n;  // intercept unregularized
  out.value = loss * inv_n + 0.5 * reg * penalty;
  return out;
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

LogRegModel fit(const FeatureMatrix& features, double C, const FitOptions& opt) {
  features.validate();
  if (!(C > 0.0)) throw ConfigError("C must be positive");
  if (!features.has_labels()) throw ConfigError("fit requires labels");
  bool has0 = false, has1 = false;
  for (int y : features.labels) (y == 1 ? has1 : has0) = true;
  if (!has0 || !has1) throw ConfigError("fit requires at least one example of each class");

  const int d = features.feature_dim();
  std::vector<double> x(static_cast<std::size_t>(d) + 1, 0.0);
  ObjectiveEval cur = evaluate(features, x, C, opt.threads);

  LogRegModel model;
  model.C = C;
  model.objective_history.push_back(cur.value);

  // two-loop L-BFGS with Armijo backtracking
  constexpr int kHistory = 10;
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  int iter = 0;
  double gnorm = norm2(cur.grad);
  while (gnorm > opt.tol && iter < opt.max_iter) {
    std::vector<double> dir = cur.grad;
    std::vector<double> alpha_coef(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      double a = 0.0;
      for (std::size_t j = 0; j < dir.size(); ++j) a += s_hist[static_cast<std::size_t>(k)][j] * dir[j];
      a *= rho_hist[static_cast<std::size_t>(k)];
      alpha_coef[static_cast<std::size_t>(k)] = a;
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] -= a * y_hist[static_cast<std::size_t>(k)][j];
    }
    if (!s_hist.empty()) {
      double sy = 0.0, yy = 0.0;
      for (std::size_t j = 0; j < dir.size(); ++j) {
        sy += s_hist.back()[j] * y_hist.back()[j];
        yy += y_hist.back()[j] * y_hist.back()[j];
      }
      const double gamma = sy / std::max(yy, 1e-300);
      for (double& v : dir) v *= gamma;
    }
    for (int k = 0; k < static_cast<int>(s_hist.size()); ++k) {
      double beta = 0.0;
      for (std::size_t j = 0; j < dir.size(); ++j) beta += y_hist[static_cast<std::size_t>(k)][j] * dir[j];
      beta *= rho_hist[static_cast<std::size_t>(k)];
      const double coef = alpha_coef[static_cast<std::size_t>(k)] - beta;
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] += coef * s_hist[static_cast<std::size_t>(k)][j];
    }
    for (double& v : dir) v = -v;

    double dir_dot_grad = 0.0;
    for (std::size_t j = 0; j < dir.size(); ++j) dir_dot_grad += dir[j] * cur.grad[j];
    if (dir_dot_grad >= 0.0) {  // not a descent direction; reset to steepest descent
      for (std::size_t j = 0; j < dir.size(); ++j) dir[j] = -cur.grad[j];
      dir_dot_grad = -gnorm * gnorm;
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double step = 1.0;
    constexpr double kArmijo = 1e-4;
    std::vector<double> x_new(x.size());
    ObjectiveEval next;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < x.size(); ++j) x_new[j] = x[j] + step * dir[j];
      next = evaluate(features, x_new, C, opt.threads);
      if (std::isfinite(next.value) && next.value <= cur.value + kArmijo * step * dir_dot_grad) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at double precision

    std::vector<double> s_vec(x.size()), y_vec(x.size());
    double sy = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      s_vec[j] = x_new[j] - x[j];
      y_vec[j] = next.grad[j] - cur.grad[j];
      sy += s_vec[j] * y_vec[j];
    }
    if (sy > 1e-12) {
      s_hist.push_back(std::move(s_vec));
      y_hist.push_back(std::move(y_vec));
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > kHistory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    cur = std::move(next);
    gnorm = norm2(cur.grad);
    ++iter;
    model.objective_history.push_back(cur.value);
  }

  model.weights.assign(x.begin(), x.end() - 1);
  model.intercept = x[static_cast<std::size_t>(d)];
  model.iterations = iter;
  model.final_grad_norm = gnorm;
  model.converged = gnorm <= opt.tol;
  return model;
}

double logit(const LogRegModel& model, const FeatureMatrix& features, int row) {
  if (static_cast<int>(model.weights.size()) != features.feature_dim())
    throw ConfigError("model dimension " + std::to_string(model.weights.size()) +
                      " does not match features " + std::to_string(features.feature_dim()));
  return row_margin(features, row, model.weights.data(), model.intercept);
}

double logit(const LogRegModel& model, std::span<const double> dense_features) {
  if (model.weights.size() != dense_features.size())
    throw ConfigError("model dimension does not match feature vector");
  double z = model.intercept;
  for (std::size_t j = 0; j < dense_features.size(); ++j)
    z += model.weights[j] * dense_features[j];
  return z;
}

LogitParts logit_parts(const LogRegModel& model, const FeatureMatrix& features, int row) {
  if (static_cast<int>(model.weights.size()) != features.feature_dim())
    throw ConfigError("model dimension does not match features");
  LogitParts parts;
  parts.intercept = model.intercept;
  if (features.dense_dim > 0) {
    const std::span<const double> x = features.dense_row(row);
    for (int j = 0; j < features.dense_dim; ++j)
      parts.dense += model.weights[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
  }
  if (!features.sparse.empty())
    for (const auto& [id, v] : features.sparse[static_cast<std::size_t>(row)])
      parts.sparse += model.weights[static_cast<std::size_t>(features.dense_dim + id)] * v;
  return parts;
}

double accuracy(const LogRegModel& model, const FeatureMatrix& features) {
  if (!features.has_labels()) throw ConfigError("accuracy requires labels");
  return accuracy(model, features, features.labels);
}

double accuracy(const LogRegModel& model, const FeatureMatrix& features,
                const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != features.n_rows)
    throw ConfigError("label count does not match rows");
  int correct = 0;
  for (int i = 0; i < features.n_rows; ++i)
    if (predict_from_logit(logit(model, features, i)) == labels[static_cast<std::size_t>(i)])
      ++correct;
  return features.n_rows == 0 ? 0.0 : static_cast<double>(correct) / features.n_rows;
}

TuneResult tune_C(const FeatureMatrix& train, const FeatureMatrix& valid,
                  const std::vector<double>& grid, const FitOptions& opt) {
  if (grid.empty()) throw ConfigError("C grid must be non-empty");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  TuneResult best;
  best.valid_accuracy = -1.0;
  for (double c : sorted) {
    LogRegModel m = fit(train, c, opt);
    const double acc = accuracy(m, valid);
    if (acc > best.valid_accuracy) {
      best.valid_accuracy = acc;
      best.best_C = c;
      best.model = std::move(m);
    }
  }
  return best;
}

namespace {

FeatureMatrix take_rows(const FeatureMatrix& f, const std::vector<int>& rows) {
  FeatureMatrix out;
  out.n_rows = static_cast<int>(rows.size());
  out.dense_dim = f.dense_dim;
  out.sparse_dim = f.sparse_dim;
  if (f.dense_dim > 0) {
    out.dense.reserve(rows.size() * static_cast<std::size_t>(f.dense_dim));
    for (int i : rows) {
      const auto r = f.dense_row(i);
      out.dense.insert(out.dense.end(), r.begin(), r.end());
    }
  }
  if (!f.sparse.empty()) {
    out.sparse.reserve(rows.size());
    for (int i : rows) out.sparse.push_back(f.sparse[static_cast<std::size_t>(i)]);
  }
  if (f.has_labels()) {
    out.labels.reserve(rows.size());
    for (int i : rows) out.labels.push_back(f.labels[static_cast<std::size_t>(i)]);
  }
  return out;
}

}  // namespace

TuneResult tune_C_cv(const FeatureMatrix& train, const std::vector<double>& grid,
                     int folds, const FitOptions& opt) {
  if (grid.empty()) throw ConfigError("C grid must be non-empty");
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());

  std::vector<std::vector<int>> fold_rows(static_cast<std::size_t>(folds));
  for (int i = 0; i < train.n_rows; ++i)
    fold_rows[static_cast<std::size_t>(i % folds)].push_back(i);

  double best_c = sorted.front();
  double best_acc = -1.0;
  for (double c : sorted) {
    double correct = 0.0;
    for (int k = 0; k < folds; ++k) {
      std::vector<int> fit_rows;
      for (int j = 0; j < folds; ++j)
        if (j != k)
          fit_rows.insert(fit_rows.end(), fold_rows[static_cast<std::size_t>(j)].begin(),
                          fold_rows[static_cast<std::size_t>(j)].end());
      const FeatureMatrix ftrain = take_rows(train, fit_rows);
      const FeatureMatrix fvalid = take_rows(train, fold_rows[static_cast<std::size_t>(k)]);
      const LogRegModel m = fit(ftrain, c, opt);
      correct += accuracy(m, fvalid) * static_cast<double>(fvalid.n_rows);
    }
    const double acc = correct / static_cast<double>(train.n_rows);
    if (acc > best_acc) {
      best_acc = acc;
      best_c = c;
    }
  }
  TuneResult out;
  out.best_C = best_c;
  out.valid_accuracy = best_acc;
  out.model = fit(train, best_c, opt);
  return out;
}

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int k = 0; k < 10; ++k)
    grid.push_back(std::pow(10.0, -4.0 + 8.0 * static_cast<double>(k) / 9.0));
  return grid;
}

void LogRegModel::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write model file " + path);
  os << "C\t" << fmt_full(C) << '\n';
  os << "intercept\t" << fmt_full(intercept) << '\n';
  for (std::size_t j = 0; j < weights.size(); ++j)
    os << j << '\t' << fmt_full(weights[j]) << '\n';
}

LogRegModel LogRegModel::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open model file " + path);
  LogRegModel m;
  std::string line;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 2) throw ConfigError("bad model row: " + line);
    if (cols[0] == "C") {
      m.C = parse_double(cols[1]);
    } else if (cols[0] == "intercept") {
      m.intercept = parse_double(cols[1]);
    } else {
      const std::size_t id = static_cast<std::size_t>(parse_int(cols[0]));
      if (id != m.weights.size()) throw ConfigError("model weights must be dense and ordered");
      m.weights.push_back(parse_double(cols[1]));
    }
  }
  return m;
}

}  // namespace dv
