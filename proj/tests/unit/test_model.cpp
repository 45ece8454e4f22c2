#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "dv/common.hpp"
#include "dv/model.hpp"
#include "support/helpers.hpp"

using namespace dv;

namespace {

std::vector<double> random_vector(Rng& rng, int dim, double min_norm) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  while (true) {
    double norm2 = 0.0;
    for (double& x : v) {
      x = rng.uniform(-1.0, 1.0);
      norm2 += x * x;
    }
    if (std::sqrt(norm2) >= min_norm) return v;
  }
}

double loss_only(const std::vector<double>& d, const std::vector<double>& u,
                 const std::vector<std::vector<double>>& negs, double alpha, Objective obj) {
  return pair_loss(d, u, negs, alpha, obj).loss;
}

// central finite differences over every input coordinate, h = 1e-5
struct FdGradients {
  std::vector<double> all;  // d, then u, then each negative, flattened
};

FdGradients fd_gradients(std::vector<double> d, std::vector<double> u,
                         std::vector<std::vector<double>> negs, double alpha, Objective obj) {
  constexpr double h = 1e-5;
  FdGradients out;
  const auto probe = [&](std::vector<double>& target, std::size_t j) {
    const double keep = target[j];
    target[j] = keep + h;
    const double up = loss_only(d, u, negs, alpha, obj);
    target[j] = keep - h;
    const double down = loss_only(d, u, negs, alpha, obj);
    target[j] = keep;
    out.all.push_back((up - down) / (2.0 * h));
  };
  for (std::size_t j = 0; j < d.size(); ++j) probe(d, j);
  for (std::size_t j = 0; j < u.size(); ++j) probe(u, j);
  for (auto& n : negs)
    for (std::size_t j = 0; j < n.size(); ++j) probe(n, j);
  return out;
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

}  // namespace

TEST_CASE("orthogonal vectors give (1+negatives) log 2 for any alpha") {
  const int dim = 4;
  std::vector<double> d{1, 0, 0, 0}, u{0, 1, 0, 0};
  std::vector<std::vector<double>> negs{{0, 0, 1, 0}, {0, 0, 0, 1}};
  for (double alpha : {0.7, 3.0, 11.0}) {
    const PairLoss cosine = pair_loss(d, u, negs, alpha, Objective::Cosine);
    CHECK(cosine.loss == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
  }
  const PairLoss dot = pair_loss(d, u, negs, 1.0, Objective::DotProduct);
  CHECK(dot.loss == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
  (void)dim;
}

TEST_CASE("dot-product mode matches the analytic sigmoid values") {
  std::vector<double> d{1, 0}, u{1, 0};
  std::vector<std::vector<double>> negs{{-1, 0}};
  const PairLoss r = pair_loss(d, u, negs, 6.0, Objective::DotProduct);
  // -log s(1) - log s(-(-1)) = -2 log s(1); alpha plays no role here
  CHECK(r.loss == doctest::Approx(-2.0 * std::log(1.0 / (1.0 + std::exp(-1.0)))).epsilon(1e-12));
  CHECK(r.loss == doctest::Approx(2.0 * 0.3132616875182228).epsilon(1e-12));
}

TEST_CASE("analytic gradients match central finite differences") {
  for (Objective obj : {Objective::Cosine, Objective::DotProduct}) {
    Rng rng(obj == Objective::Cosine ? 1001 : 2002);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const int dim = 8;
      const double alpha = rng.uniform(0.5, 8.0);
      const int n_negs = 1 + static_cast<int>(rng.below(5));
      const std::vector<double> d = random_vector(rng, dim, 0.5);
      const std::vector<double> u = random_vector(rng, dim, 0.5);
      std::vector<std::vector<double>> negs;
      for (int k = 0; k < n_negs; ++k) negs.push_back(random_vector(rng, dim, 0.5));

      const PairLoss analytic = pair_loss(d, u, negs, alpha, obj);
      std::vector<double> flat = analytic.grad_doc;
      flat.insert(flat.end(), analytic.grad_ngram.begin(), analytic.grad_ngram.end());
      for (const auto& g : analytic.grad_negatives) flat.insert(flat.end(), g.begin(), g.end());

      const FdGradients fd = fd_gradients(d, u, negs, alpha, obj);
      worst = std::max(worst, relative_error(flat, fd.all));
    }
    INFO("objective ", to_string(obj), " worst relative error ", worst);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("positive-pair loss strictly decreases as cosine similarity grows") {
  const double alpha = 4.0;
  double prev = 1e300;
  for (int k = 0; k <= 200; ++k) {
    const double c = -1.0 + 2.0 * static_cast<double>(k) / 200.0;
    const double theta = std::acos(std::clamp(c, -1.0, 1.0));
    const std::vector<double> d{1.0, 0.0};
    const std::vector<double> u{std::cos(theta), std::sin(theta)};
    const double loss = pair_loss(d, u, {}, alpha, Objective::Cosine).loss;
    CHECK(loss < prev);
    prev = loss;
  }
}

TEST_CASE("large alpha saturates the aligned-pair loss") {
  const std::vector<double> d{0.0, 1.0}, u{0.0, 1.0};
  CHECK(pair_loss(d, u, {}, 20.0, Objective::Cosine).loss < 1e-3);
}

TEST_CASE("zero-norm vectors are rejected in cosine mode only") {
  const std::vector<double> zero{0.0, 0.0}, unit{1.0, 0.0};
  CHECK_THROWS_AS(pair_loss(zero, unit, {}, 1.0, Objective::Cosine), NumericError);
  CHECK_THROWS_AS(pair_loss(unit, zero, {}, 1.0, Objective::Cosine), NumericError);
  CHECK_NOTHROW(pair_loss(zero, unit, {}, 1.0, Objective::DotProduct));
}

namespace {

TrainConfig desk_config(int dim, int epochs, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.dim = dim;
  cfg.epochs = epochs;
  cfg.negatives = 3;
  cfg.alpha = 6.0;
  cfg.lr_start = 0.05;
  cfg.lr_end = 1e-3;
  cfg.seed = seed;
  cfg.workers = 1;
  return cfg;
}

double mean_cosine(const DVModel& m, int a_begin, int a_end, int b_begin, int b_end) {
  double sum = 0.0;
  long long n = 0;
  for (int i = a_begin; i < a_end; ++i) {
    for (int j = b_begin; j < b_end; ++j) {
      if (i == j) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (int k = 0; k < m.dim; ++k) {
        dot += m.doc(i)[static_cast<std::size_t>(k)] * m.doc(j)[static_cast<std::size_t>(k)];
        ni += m.doc(i)[static_cast<std::size_t>(k)] * m.doc(i)[static_cast<std::size_t>(k)];
        nj += m.doc(j)[static_cast<std::size_t>(k)] * m.doc(j)[static_cast<std::size_t>(k)];
      }
      sum += dot / std::sqrt(ni * nj);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("two-cluster corpus separates in embedding space") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(20, 25, 314);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  const TrainResult result = train(corpus, vocab, desk_config(16, 40, 9));
  const DVModel& m = result.model;

  for (double v : m.doc_vectors) CHECK(std::isfinite(v));
  for (int i = 0; i < m.n_docs(); ++i) {
    double norm = 0.0;
    for (double v : m.doc(i)) norm += v * v;
    CHECK(norm > 0.0);
  }

  const double intra =
      0.5 * (mean_cosine(m, 0, 20, 0, 20) + mean_cosine(m, 20, 40, 20, 40));
  const double inter = mean_cosine(m, 0, 20, 20, 40);
  INFO("intra ", intra, " inter ", inter);
  CHECK(intra - inter >= 0.2);
}

TEST_CASE("per-epoch mean loss settles after the early epochs") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(15, 20, 55);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  const TrainResult result = train(corpus, vocab, desk_config(16, 30, 4));
  REQUIRE(result.epoch_mean_loss.size() == 30);
  for (std::size_t e = 5; e + 1 < result.epoch_mean_loss.size(); ++e)
    CHECK(result.epoch_mean_loss[e + 1] <= result.epoch_mean_loss[e] * 1.05);
}

TEST_CASE("single-worker training is bit-reproducible") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(8, 12, 77);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  const TrainConfig cfg = desk_config(8, 5, 123);
  const TrainResult a = train(corpus, vocab, cfg);
  const TrainResult b = train(corpus, vocab, cfg);
  REQUIRE(a.model.doc_vectors.size() == b.model.doc_vectors.size());
  for (std::size_t i = 0; i < a.model.doc_vectors.size(); ++i)
    CHECK(a.model.doc_vectors[i] == b.model.doc_vectors[i]);
  for (std::size_t i = 0; i < a.model.ngram_vectors.size(); ++i)
    CHECK(a.model.ngram_vectors[i] == b.model.ngram_vectors[i]);
}

TEST_CASE("multi-worker training still produces usable vectors") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(10, 15, 88);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  TrainConfig cfg = desk_config(8, 10, 42);
  cfg.workers = 2;
  const TrainResult result = train(corpus, vocab, cfg);
  for (double v : result.model.doc_vectors) CHECK(std::isfinite(v));
  CHECK(result.total_steps > 0);
}

TEST_CASE("a vocabulary that covers nothing is a corpus mismatch") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(4, 8, 3);
  const Corpus other = dvtest::make_corpus({
      {"zzz yyy", Label::Positive, Split::Train},
      {"yyy xxx", Label::Negative, Split::Train},
  });
  const Vocabulary vocab = build_vocab(other, 1, 1);
  CHECK_THROWS_AS(train(corpus, vocab, desk_config(8, 2, 1)), ConfigError);
}

TEST_CASE("divergent learning rates surface as a numeric failure") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(6, 10, 21);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  TrainConfig cfg = desk_config(8, 50, 2);
  cfg.objective = Objective::DotProduct;
  cfg.lr_start = 1e8;
  cfg.lr_end = 1e7;
  CHECK_THROWS_AS(train(corpus, vocab, cfg), NumericError);
}

TEST_CASE("export format and round-trip") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(1, 6, 11);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  const TrainResult result = train(corpus, vocab, desk_config(3, 2, 6));
  const std::string path = "/tmp/dv_export_roundtrip.txt";
  export_vectors(result.model, VectorKind::Documents, nullptr, path);

  const DenseTable t = load_embedding_file(path);
  REQUIRE(t.rows() == result.model.n_docs());
  REQUIRE(t.dim == 3);
  for (int i = 0; i < t.rows(); ++i) {
    CHECK(t.keys[static_cast<std::size_t>(i)] == std::to_string(i));  // ids in corpus order
    for (int j = 0; j < t.dim; ++j)
      CHECK(std::abs(t.row(i)[static_cast<std::size_t>(j)] -
                     result.model.doc(i)[static_cast<std::size_t>(j)]) < 1e-6);
  }
  // header + N rows
  std::ifstream is(path);
  std::string line;
  int lines = 0;
  while (std::getline(is, line)) ++lines;
  CHECK(lines == result.model.n_docs() + 1);
  std::remove(path.c_str());

  const std::string npath = "/tmp/dv_export_ngrams.txt";
  export_vectors(result.model, VectorKind::NGrams, &vocab, npath);
  const DenseTable nt = load_embedding_file(npath);
  CHECK(nt.rows() == vocab.size());
  CHECK(nt.keys[0] == vocab.entry(0).key);
  std::remove(npath.c_str());
}

TEST_CASE("checkpoints respect the configured cadence") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(6, 10, 61);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  TrainConfig cfg = desk_config(8, 3, 9);

  std::vector<std::int64_t> steps;
  Checkpointer monitor;
  monitor.interval = 50;
  monitor.interval_until = 200;
  monitor.at_epoch_end = true;
  monitor.on_checkpoint = [&](std::int64_t step, const DVModel&) { steps.push_back(step); };
  const TrainResult result = train(corpus, vocab, cfg, nullptr, &monitor);

  REQUIRE(!steps.empty());
  for (std::size_t i = 1; i < steps.size(); ++i) CHECK(steps[i] > steps[i - 1]);
  for (std::int64_t s : {50, 100, 150, 200})
    CHECK(std::find(steps.begin(), steps.end(), s) != steps.end());
  CHECK(steps.back() == result.total_steps);  // final epoch-end checkpoint
}

TEST_CASE("nb sub-sampling reduces the number of update steps") {
  const Corpus corpus = dvtest::make_two_cluster_corpus(10, 20, 19);
  const Vocabulary vocab = build_vocab(corpus, 1, 1);
  NBWeights w;
  w.log_ratio.assign(static_cast<std::size_t>(vocab.size()), 0.0);  // keep prob 1/3 everywhere
  const SubSampler sub(w, 2.0, 3.0, 5);
  const TrainConfig cfg = desk_config(8, 10, 33);
  const TrainResult plain = train(corpus, vocab, cfg);
  const TrainResult sampled = train(corpus, vocab, cfg, &sub);
  CHECK(sampled.total_steps < plain.total_steps);
  const double rate = static_cast<double>(sampled.total_steps) /
                      static_cast<double>(plain.total_steps);
  CHECK(rate == doctest::Approx(1.0 / 3.0).epsilon(0.05));
}
