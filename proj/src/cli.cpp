#include "dv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "dv/classifier.hpp"
#include "dv/config.hpp"
#include "dv/corpus.hpp"
#include "dv/ensemble.hpp"
#include "dv/experiments.hpp"
#include "dv/model.hpp"
#include "dv/nb.hpp"
#include "dv/plot.hpp"
#include "dv/vocab.hpp"

namespace fs = std::filesystem;

namespace dv {
namespace {

std::string art(const RunConfig& cfg, const std::string& name) {
  return cfg.get("out_dir") + "/" + name;
}

void need_artifact(const std::string& path, const std::string& producer) {
  if (!fs::exists(path))
    throw DependencyError("missing artifact " + path + "; run `dvlab " + producer + "` first");
}

void need_input(const RunConfig& cfg, const std::string& key) {
  if (!cfg.has(key)) throw ConfigError("required key '" + key + "' is not set");
  if (!fs::exists(cfg.get(key)))
    throw DependencyError("input path does not exist: " + cfg.get(key));
}

void warn_sidecar(const RunConfig& cfg, const std::string& path, std::ostream& err) {
  const std::string msg = cfg.check_sidecar(path);
  if (!msg.empty()) err << msg << '\n';
}

std::vector<double> c_grid_of(const RunConfig& cfg) {
  if (!cfg.has("c_grid")) return default_c_grid();
  return cfg.get_double_list("c_grid");
}

EnsembleConfig ensemble_config_of(const RunConfig& cfg) {
  EnsembleConfig ec;
  ec.scale = cfg.get_double("scale");
  ec.c_grid = c_grid_of(cfg);
  ec.scale_grid = cfg.get_double_list("scale_grid");
  ec.cv_folds = static_cast<int>(cfg.get_int("cv_folds"));
  ec.fit.tol = cfg.get_double("tol");
  ec.fit.max_iter = static_cast<int>(cfg.get_int("max_iter"));
  ec.fit.threads = static_cast<int>(cfg.get_int("clf_threads"));
  return ec;
}

Corpus load_corpus_artifacts(const RunConfig& cfg) {
  const std::string docs = art(cfg, "corpus.txt");
  const std::string meta = art(cfg, "corpus.meta.tsv");
  need_artifact(docs, "ingest");
  need_artifact(meta, "ingest");
  return ingest_files(docs, meta);
}

Vocabulary load_vocab_artifact(const RunConfig& cfg, std::ostream& err) {
  const std::string path = art(cfg, "vocab.tsv");
  need_artifact(path, "vocab");
  warn_sidecar(cfg, path, err);
  return Vocabulary::load(path);
}

DenseTable load_dense_for_docs(const RunConfig& cfg, const CorpusMeta& meta, std::ostream& err) {
  if (cfg.has("dense_file")) {
    need_input(cfg, "dense_file");
    std::unordered_map<std::string, int> id_map;
    if (cfg.has("dense_id_map")) {
      need_input(cfg, "dense_id_map");
      std::ifstream is(cfg.get("dense_id_map"));
      std::string line;
      while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split_on(line, '\t');
        if (cols.size() != 2) throw ConfigError("bad id-map row: " + line);
        id_map[cols[0]] = static_cast<int>(parse_int(cols[1]));
      }
    }
    return import_external_dense(cfg.get("dense_file"), id_map, meta.size());
  }
  const std::string path = art(cfg, "docvecs.txt");
  need_artifact(path, "train-dv");
  warn_sidecar(cfg, path, err);
  const DenseTable t = load_embedding_file(path);
  if (t.rows() != meta.size())
    throw ConfigError("doc-vector table covers " + std::to_string(t.rows()) +
                      " documents, metadata has " + std::to_string(meta.size()));
  return t;
}

SparseTable load_bon_artifact(const RunConfig& cfg, const CorpusMeta& meta, std::ostream& err) {
  const std::string path = art(cfg, "bon.txt");
  need_artifact(path, "bon");
  warn_sidecar(cfg, path, err);
  SparseTable t = SparseTable::load(path);
  if (t.size() != meta.size())
    throw ConfigError("BON table covers " + std::to_string(t.size()) +
                      " documents, metadata has " + std::to_string(meta.size()));
  return t;
}

CorpusMeta load_meta_artifact(const RunConfig& cfg) {
  const std::string path = art(cfg, "corpus.meta.tsv");
  need_artifact(path, "ingest");
  return CorpusMeta::load(path);
}

// ---- subcommands ----

int cmd_ingest(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  need_input(cfg, "docs");
  need_input(cfg, "meta");
  fs::create_directories(cfg.get("out_dir"));

  std::ifstream meta_in(cfg.get("meta"));
  std::ifstream docs_in(cfg.get("docs"));
  std::stringstream doc_lines;
  if (cfg.get_bool("normalize")) {
    std::string line;
    while (std::getline(docs_in, line)) {
      const auto tokens = normalize_tokens(line);
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) doc_lines << ' ';
        doc_lines << tokens[i];
      }
      doc_lines << '\n';
    }
  } else {
    doc_lines << docs_in.rdbuf();
  }
  Corpus corpus = ingest(doc_lines, meta_in);

  const std::string docs_path = art(cfg, "corpus.txt");
  {
    std::ofstream os(docs_path);
    if (!os) throw DependencyError("cannot write " + docs_path);
    for (int i = 0; i < corpus.size(); ++i) {
      const Document& d = corpus.doc(i);
      for (std::size_t t = 0; t < d.tokens.size(); ++t) {
        if (t) os << ' ';
        os << d.tokens[t];
      }
      os << '\n';
    }
  }
  const CorpusMeta meta = CorpusMeta::from_corpus(corpus);
  meta.save(art(cfg, "corpus.meta.tsv"));
  corpus.layout().save(art(cfg, "layout.tsv"));
  cfg.write_sidecar(docs_path);
  cfg.write_sidecar(art(cfg, "corpus.meta.tsv"));
  cfg.write_sidecar(art(cfg, "layout.tsv"));
  (void)err;
  out << "documents=" << corpus.size() << " blocks=" << corpus.layout().blocks().size()
      << " canonical=" << (corpus.layout().is_canonical_imdb() ? 1 : 0) << '\n';
  return 0;
}

int cmd_vocab(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus_artifacts(cfg);
  warn_sidecar(cfg, art(cfg, "corpus.txt"), err);
  VocabConfig vc;
  vc.max_order = static_cast<int>(cfg.get_int("max_order"));
  vc.min_count_unigram = cfg.get_int("min_count_unigram");
  vc.min_count_higher = cfg.get_int("min_count_higher");
  const Vocabulary vocab = build_vocab(corpus, vc);
  const std::string path = art(cfg, "vocab.tsv");
  vocab.save(path);
  cfg.write_sidecar(path);
  out << "vocabulary=" << vocab.size() << " max_order=" << vc.max_order << '\n';
  return 0;
}

TrainConfig train_config_of(const RunConfig& cfg) {
  TrainConfig tc;
  tc.dim = static_cast<int>(cfg.get_int("dim"));
  tc.alpha = cfg.get_double("alpha");
  tc.negatives = static_cast<int>(cfg.get_int("negatives"));
  tc.epochs = static_cast<int>(cfg.get_int("epochs"));
  tc.lr_start = cfg.get_double("lr_start");
  tc.lr_end = cfg.get_double("lr_end");
  tc.ns_power = cfg.get_double("power");
  tc.objective = objective_from_string(cfg.get("objective"));
  tc.seed = derive_seed(cfg.get_seed("seed"), "train-dv");
  tc.workers = static_cast<int>(cfg.get_int("workers"));
  return tc;
}

int cmd_train_dv(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus_artifacts(cfg);
  const Vocabulary vocab = load_vocab_artifact(cfg, err);
  const TrainConfig tc = train_config_of(cfg);

  std::optional<NBWeights> weights;
  std::optional<SubSampler> subsampler;
  if (cfg.get_bool("nb_subsample")) {
    const std::string wpath = art(cfg, "nb_weights.tsv");
    need_artifact(wpath, "nb-weights");
    warn_sidecar(cfg, wpath, err);
    weights = NBWeights::load(wpath, vocab);
    subsampler.emplace(*weights, cfg.get_double("n_a"), cfg.get_double("n_b"),
                       derive_seed(tc.seed, "subsample"));
  }

  Checkpointer monitor;
  Checkpointer* monitor_ptr = nullptr;
  if (cfg.has("checkpoint_dir")) {
    fs::create_directories(cfg.get("checkpoint_dir"));
    monitor.dir = cfg.get("checkpoint_dir");
    monitor.interval = cfg.get_int("checkpoint_interval");
    monitor.interval_until = cfg.get_int("checkpoint_early_until");
    monitor_ptr = &monitor;
  }

  const TrainResult result =
      train(corpus, vocab, tc, subsampler ? &*subsampler : nullptr, monitor_ptr);
  const std::string path = art(cfg, "docvecs.txt");
  export_vectors(result.model, VectorKind::Documents, nullptr, path);
  cfg.write_sidecar(path);
  if (cfg.get_bool("export_ngrams")) {
    const std::string npath = art(cfg, "ngramvecs.txt");
    export_vectors(result.model, VectorKind::NGrams, &vocab, npath);
    cfg.write_sidecar(npath);
  }
  out << "steps=" << result.total_steps << " final_epoch_loss="
      << fmt_fixed(result.epoch_mean_loss.empty() ? 0.0 : result.epoch_mean_loss.back(), 6)
      << '\n';
  return 0;
}

int cmd_nb_weights(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus_artifacts(cfg);
  const Vocabulary vocab = load_vocab_artifact(cfg, err);
  const NBEventModel model = cfg.get("nb_event_model") == "bernoulli"
                                 ? NBEventModel::Bernoulli
                                 : NBEventModel::Multinomial;
  if (cfg.get("nb_event_model") != "bernoulli" && cfg.get("nb_event_model") != "multinomial")
    throw ConfigError("nb_event_model expects multinomial|bernoulli");
  const NBWeights weights = fit_nb_weights(corpus, vocab, cfg.get_double("smoothing"), model);
  const std::string path = art(cfg, "nb_weights.tsv");
  weights.save(path, vocab);
  cfg.write_sidecar(path);
  out << "weights=" << weights.size() << '\n';
  return 0;
}

int cmd_bon(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus_artifacts(cfg);
  const Vocabulary vocab = load_vocab_artifact(cfg, err);
  const std::string wpath = art(cfg, "nb_weights.tsv");
  need_artifact(wpath, "nb-weights");
  warn_sidecar(cfg, wpath, err);
  const NBWeights weights = NBWeights::load(wpath, vocab);
  BonOptions opt;
  opt.signed_weights = cfg.get_bool("bon_signed");
  opt.use_counts = cfg.get_bool("bon_counts");
  const SparseTable table = build_bon_table(corpus, vocab, weights, opt);
  const std::string path = art(cfg, "bon.txt");
  table.save(path);
  cfg.write_sidecar(path);
  out << "rows=" << table.size() << " dim=" << table.dim << '\n';
  return 0;
}

struct LabeledIds {
  std::vector<int> train, valid, test;
};

LabeledIds labeled_ids_of(const CorpusMeta& meta) {
  LabeledIds ids;
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

FeatureMatrix clf_rows(const DenseTable* dv, const SparseTable* bon, const CorpusMeta& meta,
                       const std::vector<int>& ids, double scale, bool with_labels) {
  FeatureMatrix f;
  f.n_rows = static_cast<int>(ids.size());
  if (dv) {
    f.dense_dim = dv->dim;
    f.dense.reserve(ids.size() * static_cast<std::size_t>(dv->dim));
    for (int id : ids)
      for (double v : dv->row(id)) f.dense.push_back(scale * v);
  }
  if (bon) {
    f.sparse_dim = bon->dim;
    for (int id : ids) f.sparse.push_back(bon->rows[static_cast<std::size_t>(id)]);
  }
  if (with_labels) {
    f.labels.reserve(ids.size());
    for (int id : ids)
      f.labels.push_back(meta.labels[static_cast<std::size_t>(id)] == Label::Positive ? 1 : 0);
  }
  return f;
}

int cmd_train_clf(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const CorpusMeta meta = load_meta_artifact(cfg);
  const std::string features = cfg.get("clf_features");
  if (features != "dv" && features != "bon" && features != "both")
    throw ConfigError("clf_features expects dv|bon|both");

  std::optional<DenseTable> dv;
  std::optional<SparseTable> bon;
  if (features != "bon") dv = load_dense_for_docs(cfg, meta, err);
  if (features != "dv") bon = load_bon_artifact(cfg, meta, err);

  const LabeledIds ids = labeled_ids_of(meta);
  if (ids.train.empty() || ids.test.empty())
    throw ConfigError("train-clf needs labeled train and test documents");
  const EnsembleConfig ec = ensemble_config_of(cfg);

  const bool has_valid = !ids.valid.empty();
  const bool tune_scale = features == "both" && has_valid;
  std::vector<double> scale_grid =
      tune_scale ? ec.scale_grid : std::vector<double>{ec.scale};
  std::sort(scale_grid.begin(), scale_grid.end());

  double best_score = -1.0;
  LogRegModel best;
  double best_scale = scale_grid.front();
  for (double s : scale_grid) {
    const FeatureMatrix train_rows =
        clf_rows(dv ? &*dv : nullptr, bon ? &*bon : nullptr, meta, ids.train, s, true);
    TuneResult tuned;
    if (has_valid) {
      const FeatureMatrix valid_rows =
          clf_rows(dv ? &*dv : nullptr, bon ? &*bon : nullptr, meta, ids.valid, s, true);
      tuned = tune_C(train_rows, valid_rows, ec.c_grid, ec.fit);
    } else {
      tuned = tune_C_cv(train_rows, ec.c_grid, ec.cv_folds, ec.fit);
    }
    if (tuned.valid_accuracy > best_score) {
      best_score = tuned.valid_accuracy;
      best = std::move(tuned.model);
      best_scale = s;
    }
  }

  const FeatureMatrix test_rows = clf_rows(dv ? &*dv : nullptr, bon ? &*bon : nullptr, meta,
                                           ids.test, best_scale, true);
  const double test_acc = accuracy(best, test_rows);
  const std::string path = art(cfg, "clf_model.tsv");
  best.save(path);
  cfg.write_sidecar(path);
  out << "test_accuracy=" << fmt_fixed(test_acc, 4) << " chosen_C=" << fmt_full(best.C)
      << " chosen_scale=" << fmt_full(best_scale) << '\n';
  return 0;
}

int cmd_ensemble_eval(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const CorpusMeta meta = load_meta_artifact(cfg);
  const DenseTable dense = load_dense_for_docs(cfg, meta, err);
  const SparseTable bon = load_bon_artifact(cfg, meta, err);
  const EnsembleConfig ec = ensemble_config_of(cfg);

  const SchemeKind eval_scheme = scheme_from_string(cfg.get("scheme"));
  SchemeKind train_scheme = eval_scheme;
  std::optional<SchemeKind> test_override;
  if (cfg.has("train_scheme")) {
    train_scheme = scheme_from_string(cfg.get("train_scheme"));
    test_override = eval_scheme;
  }

  const bool deterministic_row = train_scheme == SchemeKind::CorrectMatching ||
                                 train_scheme == SchemeKind::OriginalMismatch;
  const int n_seeds = deterministic_row ? 1 : static_cast<int>(cfg.get_int("n_seeds"));
  const EnsembleReport report = evaluate_ensemble(dense, bon, meta, train_scheme, ec, n_seeds,
                                                  cfg.get_seed("seed"), test_override);
  const std::string path = art(cfg, "ensemble_report.csv");
  report.save(path);
  cfg.write_sidecar(path);

  // the pairing permutation of the first run, as an alignment report
  const ShuffleScheme first{train_scheme,
                            derive_seed(cfg.get_seed("seed"), std::string("ensemble/") +
                                                                  to_string(train_scheme) +
                                                                  "/seed=0")};
  apply_scheme(first, meta.layout).save_report(art(cfg, "alignment.tsv"), meta.layout);
  cfg.write_sidecar(art(cfg, "alignment.tsv"));
  out << "test_accuracy=" << fmt_fixed(report.mean, 4) << " std=" << fmt_fixed(report.stddev, 4)
      << " runs=" << report.runs.size() << '\n';
  return 0;
}

int cmd_learning_curve(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const CorpusMeta meta = load_meta_artifact(cfg);
  const DenseTable dense = load_dense_for_docs(cfg, meta, err);
  const SparseTable bon = load_bon_artifact(cfg, meta, err);

  CurveSpec spec;
  spec.sizes = cfg.get_int_list("curve_sizes");
  spec.repeats = static_cast<int>(cfg.get_int("curve_repeats"));
  spec.models.clear();
  for (const std::string& m : split_on(cfg.get("curve_models"), ','))
    spec.models.push_back(curve_model_from_string(trim(m)));
  spec.seed = cfg.get_seed("seed");
  spec.stratified = cfg.get_bool("stratified");

  const std::vector<CurveRow> rows = learning_curve(spec, dense, bon, meta, ensemble_config_of(cfg));
  const std::string path = art(cfg, "curve.csv");
  save_curve_csv(rows, spec.stratified, path);
  cfg.write_sidecar(path);
  out << "rows=" << rows.size() << '\n';
  return 0;
}

int cmd_progress_study(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const Corpus corpus = load_corpus_artifacts(cfg);
  const Vocabulary vocab = load_vocab_artifact(cfg, err);
  const std::string wpath = art(cfg, "nb_weights.tsv");
  need_artifact(wpath, "nb-weights");
  const NBWeights weights = NBWeights::load(wpath, vocab);

  ProgressOptions opt;
  opt.runs_per_variant = static_cast<int>(cfg.get_int("runs_per_variant"));
  opt.interval = cfg.get_int("checkpoint_interval");
  opt.interval_until = cfg.get_int("checkpoint_early_until");
  opt.n_a = cfg.get_double("n_a");
  opt.n_b = cfg.get_double("n_b");
  opt.c_grid = c_grid_of(cfg);
  opt.fit.tol = cfg.get_double("tol");
  opt.fit.max_iter = static_cast<int>(cfg.get_int("max_iter"));

  const std::vector<ProgressRecord> records =
      progress_study(corpus, vocab, train_config_of(cfg), weights, opt);
  const std::string path = art(cfg, "progress.csv");
  save_progress_csv(records, path);
  cfg.write_sidecar(path);
  out << "records=" << records.size() << '\n';
  return 0;
}

int cmd_logit_analysis(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const CorpusMeta meta = load_meta_artifact(cfg);
  const DenseTable dense = load_dense_for_docs(cfg, meta, err);
  const SparseTable bon = load_bon_artifact(cfg, meta, err);
  const SchemeKind kind = scheme_from_string(cfg.get("scheme"));
  const ShuffleScheme scheme{kind, derive_seed(cfg.get_seed("seed"), "logit-analysis")};
  const FittedEnsemble fitted =
      fit_ensemble(dense, bon, meta, scheme, ensemble_config_of(cfg));
  const LogitAnalysis analysis = logit_analysis(fitted);
  const std::string path = art(cfg, "logits.csv");
  save_logit_csv(analysis, path);
  cfg.write_sidecar(path);
  out << "rows=" << analysis.rows.size()
      << " dense_error=" << fmt_fixed(analysis.summary.dense_error_rate, 4)
      << " sparse_error=" << fmt_fixed(analysis.summary.sparse_error_rate, 4) << '\n';
  return 0;
}

int cmd_plot(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  (void)err;
  const std::string kind = cfg.get("plot_kind");
  std::string input = cfg.has("plot_input") ? cfg.get("plot_input") : "";
  std::string output = cfg.has("plot_output") ? cfg.get("plot_output") : "";
  if (kind == "curve") {
    if (input.empty()) input = art(cfg, "curve.csv");
    if (output.empty()) output = art(cfg, "curve.svg");
    need_artifact(input, "learning-curve");
    plot_curve_csv(input, output);
  } else if (kind == "progress" || kind == "progress-valid") {
    if (input.empty()) input = art(cfg, "progress.csv");
    if (output.empty()) output = art(cfg, kind == "progress" ? "progress.svg" : "progress_valid.svg");
    need_artifact(input, "progress-study");
    plot_progress_csv(input, output, kind == "progress-valid");
  } else if (kind == "logits") {
    if (input.empty()) input = art(cfg, "logits.csv");
    if (output.empty()) output = art(cfg, "logits.svg");
    need_artifact(input, "logit-analysis");
    plot_logits_csv(input, output);
  } else {
    throw ConfigError("plot_kind expects curve|progress|progress-valid|logits");
  }
  out << "wrote " << output << '\n';
  return 0;
}

struct SubcommandSpec {
  const char* name;
  const char* help;
  int (*handler)(const RunConfig&, std::ostream&, std::ostream&);
};

const SubcommandSpec kSubcommands[] = {
    {"ingest", "tokenize and validate a document collection", cmd_ingest},
    {"vocab", "build the n-gram vocabulary", cmd_vocab},
    {"train-dv", "train document/n-gram embeddings", cmd_train_dv},
    {"nb-weights", "fit per-n-gram class log-ratio weights", cmd_nb_weights},
    {"bon", "write weighted bag-of-n-grams vectors", cmd_bon},
    {"train-clf", "train the logistic-regression classifier", cmd_train_clf},
    {"ensemble-eval", "evaluate a concatenated representation under a pairing scheme",
     cmd_ensemble_eval},
    {"learning-curve", "accuracy over training-set sizes", cmd_learning_curve},
    {"progress-study", "checkpointed accuracy during training, with and without sub-sampling",
     cmd_progress_study},
    {"logit-analysis", "per-document decomposition of ensemble logits", cmd_logit_analysis},
    {"plot", "render an experiment CSV as SVG", cmd_plot},
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"document-embedding laboratory"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::map<std::string, std::string> overrides;
  const SubcommandSpec* chosen = nullptr;

  for (const SubcommandSpec& spec : kSubcommands) {
    CLI::App* sub = app.add_subcommand(spec.name, spec.help);
    sub->add_option("--config", config_path, "flat key = value config file");
    for (const KeySpec& key : config_schema()) {
      std::string name = std::string("--") + key.name;
      std::string kebab = key.name;
      for (char& c : kebab) c = c == '_' ? '-' : c;
      if (kebab != key.name) name += ",--" + kebab;  // hyphenated alias
      const std::string key_name = key.name;
      const bool is_bool = std::string(key.def) == "true" || std::string(key.def) == "false";
      if (is_bool) {
        sub->add_flag_function(
            name + ",!--no-" + key.name,
            [&overrides, key_name](std::int64_t count) {
              overrides[key_name] = count > 0 ? "true" : "false";
            },
            key.help);
      } else {
        sub->add_option_function<std::string>(
            name,
            [&overrides, key_name](const std::string& v) { overrides[key_name] = v; },
            key.help);
      }
    }
    sub->callback([&chosen, &spec] { chosen = &spec; });
  }

  std::vector<const char*> argv;
  argv.push_back("dvlab");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForHelp&) {
    out << app.help();  // delegates to the selected subcommand when present
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ERROR code=2 message=\"" << e.what() << "\"\n";
    return 2;
  }

  try {
    if (!chosen) throw ConfigError("no subcommand given; see --help");
    RunConfig cfg;
    if (!config_path.empty()) cfg.load_file(config_path);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    return chosen->handler(cfg, out, err);
  } catch (const ConfigError& e) {
    err << "ERROR code=2 message=\"" << e.what() << "\"\n";
    return 2;
  } catch (const DependencyError& e) {
    err << "ERROR code=3 message=\"" << e.what() << "\"\n";
    return 3;
  } catch (const NumericError& e) {
    err << "ERROR code=4 message=\"" << e.what() << "\"\n";
    return 4;
  } catch (const std::exception& e) {
    err << "ERROR code=1 message=\"" << e.what() << "\"\n";
    return 1;
  }
}

}  // namespace dv
