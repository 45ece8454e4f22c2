#include "dv/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dv/corpus.hpp"

namespace dv {

const std::vector<KeySpec>& config_schema() {
  static const std::vector<KeySpec> schema = {
      {"seed", "1", "base seed; every random stream derives from it"},
      {"workers", "1", "worker threads for embedding training"},
      {"out_dir", "out", "directory for artifacts"},
      {"docs", "", "input document file (one document per line)"},
      {"meta", "", "metadata TSV (doc_id, label, split)"},
      {"normalize", "false", "normalize raw text during ingest"},
      {"max_order", "3", "n-gram orders to extract (1..3)"},
      {"min_count_unigram", "5", "vocabulary threshold for unigrams"},
      {"min_count_higher", "20", "vocabulary threshold for bigrams/trigrams"},
      {"power", "0.75", "negative-sampling distribution exponent"},
      {"dim", "500", "embedding dimensionality"},
      {"alpha", "6.0", "cosine objective scale factor"},
      {"negatives", "5", "negative samples per positive n-gram"},
      {"epochs", "20", "training epochs"},
      {"lr_start", "0.025", "initial learning rate"},
      {"lr_end", "0.0001", "final learning rate"},
      {"objective", "cosine", "training objective: cosine|dot"},
      {"export_ngrams", "false", "also export n-gram vectors after training"},
      {"smoothing", "1.0", "NB pseudo-count"},
      {"nb_event_model", "multinomial", "NB estimate: multinomial|bernoulli"},
      {"bon_signed", "true", "BON uses signed log-ratios (unsigned uses importances)"},
      {"bon_counts", "false", "BON uses raw counts instead of binarized presence"},
      {"n_a", "2.0", "sub-sampling hyperparameter n_a"},
      {"n_b", "3.0", "sub-sampling hyperparameter n_b"},
      {"nb_subsample", "false", "train-dv with NB sub-sampling"},
      {"c_grid", "", "comma list of C values; empty uses 10 points in [1e-4,1e4]"},
      {"scale_grid", "0.25,0.5,1,2,4,8", "dense-scale grid for ensemble tuning"},
      {"scale", "1.0", "fixed dense scale when not tuned"},
      {"tol", "1e-06", "classifier gradient tolerance"},
      {"max_iter", "1000", "classifier iteration cap"},
      {"clf_threads", "1", "classifier gradient-reduction threads"},
      {"cv_folds", "5", "train-internal CV folds when no validation split exists"},
      {"clf_features", "dv", "train-clf representation: dv|bon|both"},
      {"scheme", "correct", "ensemble pairing scheme: correct|original|A|B|C|D"},
      {"train_scheme", "", "when set, train rows use this scheme and 'scheme' applies to eval rows"},
      {"n_seeds", "30", "seeded repetitions for shuffled schemes"},
      {"dense_file", "", "external dense representation to use instead of docvecs"},
      {"dense_id_map", "", "TSV mapping external embedding keys to doc ids"},
      {"curve_sizes", "10,20,50,100,200,500,1000,2000,5000,10000,20000",
       "training-subset sizes"},
      {"curve_repeats", "30", "repeats per curve size"},
      {"curve_models", "dv,bon,dv+bon", "models on the learning curve"},
      {"stratified", "true", "record balanced sampling in the curve CSV"},
      {"runs_per_variant", "3", "progress-study runs per variant"},
      {"checkpoint_interval", "500", "checkpoint every N steps early in training"},
      {"checkpoint_early_until", "5000", "step-interval checkpoints stop after this step"},
      {"checkpoint_dir", "", "when set, write doc-vector checkpoints here"},
      {"plot_kind", "curve", "plot subcommand input kind: curve|progress|progress-valid|logits"},
      {"plot_input", "", "CSV consumed by the plot subcommand"},
      {"plot_output", "", "SVG written by the plot subcommand"},
  };
  return schema;
}

namespace {

const KeySpec* find_key(const std::string& key) {
  for (const KeySpec& spec : config_schema())
    if (key == spec.name) return &spec;
  return nullptr;
}

}  // namespace

RunConfig::RunConfig() {
  for (const KeySpec& spec : config_schema()) values_[spec.name] = spec.def;
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!find_key(key)) throw ConfigError("unknown config key '" + key + "'");
  values_[key] = value;
}

bool RunConfig::has(const std::string& key) const {
  const auto it = values_.find(key);
  return it != values_.end() && !it->second.empty();
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const { return parse_int(get(key)); }

double RunConfig::get_double(const std::string& key) const { return parse_double(get(key)); }

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "' expects true|false, got '" + v + "'");
}

std::uint64_t RunConfig::get_seed(const std::string& key) const {
  const long long v = get_int(key);
  if (v < 0) throw ConfigError("seed must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::vector<double> RunConfig::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& part : split_on(get(key), ',')) {
    const std::string p = trim(part);
    if (!p.empty()) out.push_back(parse_double(p));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' expects a comma-separated list");
  return out;
}

std::vector<int> RunConfig::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& part : split_on(get(key), ',')) {
    const std::string p = trim(part);
    if (!p.empty()) out.push_back(static_cast<int>(parse_int(p)));
  }
  if (out.empty()) throw ConfigError("key '" + key + "' expects a comma-separated list");
  return out;
}

std::string RunConfig::snapshot() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) os << key << " = " << value << '\n';
  return os.str();
}

std::string RunConfig::hash() const {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(snapshot())));
  return buf;
}

void RunConfig::write_sidecar(const std::string& artifact_path) const {
  std::ofstream os(artifact_path + ".meta");
  if (!os) throw DependencyError("cannot write sidecar for " + artifact_path);
  os << "config_hash = " << hash() << '\n';
  os << snapshot();
}

std::string RunConfig::check_sidecar(const std::string& artifact_path) const {
  std::ifstream is(artifact_path + ".meta");
  if (!is) return {};  // no provenance recorded; nothing to verify
  std::string line;
  if (!std::getline(is, line)) return {};
  const auto parts = split_on(line, '=');
  if (parts.size() != 2 || trim(parts[0]) != "config_hash") return {};
  const std::string recorded = trim(parts[1]);
  if (recorded == hash()) return {};
  return "warning: " + artifact_path + " was produced under config hash " + recorded +
         ", current resolved config hashes to " + hash();
}

}  // namespace dv
