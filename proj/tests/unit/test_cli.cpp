#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dv/cli.hpp"
#include "dv/common.hpp"
#include "dv/config.hpp"

namespace fs = std::filesystem;
using namespace dv;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& rel = "") const {
    return rel.empty() ? path.string() : (path / rel).string();
  }
};

void write_tiny_corpus(const TempDir& dir) {
  Rng rng(64);
  std::ofstream docs(dir.str("docs.txt"));
  std::ofstream meta(dir.str("meta.tsv"));
  meta << "doc_id\tlabel\tsplit\n";
  int id = 0;
  const auto block = [&](const char* label, const char* split, int n) {
    for (int k = 0; k < n; ++k) {
      const char* base = label[0] == 'p' ? "warm" : (label[0] == 'n' ? "cold" : "meh");
      for (int t = 0; t < 10; ++t) docs << base << rng.below(6) << (t == 9 ? "" : " ");
      docs << '\n';
      meta << id << '\t' << label << '\t' << split << '\n';
      ++id;
    }
  };
  block("pos", "train", 14);
  block("neg", "train", 14);
  block("pos", "valid", 5);
  block("neg", "valid", 5);
  block("pos", "test", 8);
  block("neg", "test", 8);
  block("unsup", "extra", 6);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("config schema parsing, precedence and rejection") {
  RunConfig cfg;
  CHECK(cfg.get_int("dim") == 500);
  CHECK(cfg.get_double("alpha") == 6.0);
  CHECK(cfg.get("objective") == "cosine");
  CHECK_THROWS_AS(cfg.set("no_such_key", "1"), ConfigError);
  CHECK_THROWS_AS(cfg.get("no_such_key"), ConfigError);

  TempDir dir("dv_cli_cfg");
  {
    std::ofstream os(dir.str("a.cfg"));
    os << "# comment\n";
    os << "dim = 32\n";
    os << "alpha = 2.5\n";
  }
  cfg.load_file(dir.str("a.cfg"));
  CHECK(cfg.get_int("dim") == 32);
  cfg.set("dim", "8");  // flag layer wins
  CHECK(cfg.get_int("dim") == 8);
  CHECK(cfg.get_double("alpha") == 2.5);

  {
    std::ofstream os(dir.str("bad.cfg"));
    os << "nonsense_key = 1\n";
  }
  RunConfig fresh;
  CHECK_THROWS_AS(fresh.load_file(dir.str("bad.cfg")), ConfigError);

  CHECK(cfg.hash().size() == 16);
  const std::string h1 = cfg.hash();
  cfg.set("dim", "9");
  CHECK(cfg.hash() != h1);
}

TEST_CASE("every subcommand help lists the whole config schema") {
  for (const std::string sub :
       {"ingest", "vocab", "train-dv", "nb-weights", "bon", "train-clf", "ensemble-eval",
        "learning-curve", "progress-study", "logit-analysis", "plot"}) {
    const CliResult r = run({sub, "--help"});
    CHECK(r.code == 0);
    for (const KeySpec& key : config_schema()) {
      INFO("subcommand ", sub, " key ", key.name);
      CHECK(r.out.find(std::string("--") + key.name) != std::string::npos);
    }
  }
}

TEST_CASE("cli error surfaces carry machine-readable codes") {
  SUBCASE("no subcommand") {
    const CliResult r = run({});
    CHECK(r.code == 2);
    CHECK(r.err.find("ERROR code=2") != std::string::npos);
  }
  SUBCASE("unknown flag") {
    const CliResult r = run({"vocab", "--frobnicate"});
    CHECK(r.code == 2);
    CHECK(r.err.find("ERROR code=2") != std::string::npos);
  }
  SUBCASE("unknown config key") {
    TempDir dir("dv_cli_badkey");
    std::ofstream(dir.str("c.cfg")) << "zzz = 1\n";
    const CliResult r = run({"vocab", "--config", dir.str("c.cfg")});
    CHECK(r.code == 2);
  }
  SUBCASE("missing artifact dependency") {
    TempDir dir("dv_cli_missing");
    const CliResult r = run({"train-dv", "--out_dir", dir.str("nothing")});
    CHECK(r.code == 3);
    CHECK(r.err.find("ERROR code=3") != std::string::npos);
    CHECK(r.err.find("ingest") != std::string::npos);
  }
  SUBCASE("bon before nb-weights") {
    TempDir dir("dv_cli_order");
    write_tiny_corpus(dir);
    REQUIRE(run({"ingest", "--docs", dir.str("docs.txt"), "--meta", dir.str("meta.tsv"),
                 "--out_dir", dir.str("out")})
                .code == 0);
    REQUIRE(run({"vocab", "--out_dir", dir.str("out"), "--min_count_unigram", "1"}).code == 0);
    const CliResult r = run({"bon", "--out_dir", dir.str("out")});
    CHECK(r.code == 3);
    CHECK(r.err.find("nb-weights") != std::string::npos);
  }
}

TEST_CASE("pipeline end to end with byte-identical reruns") {
  TempDir dir("dv_cli_pipe");
  write_tiny_corpus(dir);
  {
    std::ofstream os(dir.str("pipe.cfg"));
    os << "seed = 5\n";
    os << "out_dir = " << dir.str("out") << "\n";
    os << "docs = " << dir.str("docs.txt") << "\n";
    os << "meta = " << dir.str("meta.tsv") << "\n";
    os << "max_order = 1\n";
    os << "min_count_unigram = 1\n";
    os << "dim = 8\n";
    os << "epochs = 3\n";
    os << "negatives = 2\n";
    os << "n_seeds = 2\n";
    os << "curve_sizes = 8,20\n";
    os << "curve_repeats = 1\n";
    os << "curve_models = dv,bon\n";
  }
  const std::vector<std::string> cfg{"--config", dir.str("pipe.cfg")};
  const auto with_cfg = [&](std::vector<std::string> head) {
    head.insert(head.end(), cfg.begin(), cfg.end());
    return head;
  };

  REQUIRE(run(with_cfg({"ingest"})).code == 0);
  REQUIRE(run(with_cfg({"vocab"})).code == 0);
  REQUIRE(run(with_cfg({"nb-weights"})).code == 0);
  REQUIRE(run(with_cfg({"train-dv"})).code == 0);
  REQUIRE(run(with_cfg({"bon"})).code == 0);

  const CliResult clf = run(with_cfg({"train-clf"}));
  REQUIRE(clf.code == 0);
  CHECK(clf.out.find("test_accuracy=") != std::string::npos);

  const CliResult ens = run(with_cfg({"ensemble-eval", "--scheme", "C"}));
  REQUIRE(ens.code == 0);
  CHECK(ens.out.find("test_accuracy=") != std::string::npos);
  const std::string report_first = slurp(dir.str("out/ensemble_report.csv"));
  REQUIRE(run(with_cfg({"ensemble-eval", "--scheme", "C"})).code == 0);
  CHECK(slurp(dir.str("out/ensemble_report.csv")) == report_first);

  REQUIRE(run(with_cfg({"learning-curve"})).code == 0);
  const std::string curve_first = slurp(dir.str("out/curve.csv"));
  REQUIRE(run(with_cfg({"learning-curve"})).code == 0);
  CHECK(slurp(dir.str("out/curve.csv")) == curve_first);

  REQUIRE(run(with_cfg({"logit-analysis"})).code == 0);
  REQUIRE(run(with_cfg({"plot", "--plot_kind", "curve"})).code == 0);
  CHECK(slurp(dir.str("out/curve.svg")).find("<svg") != std::string::npos);

  SUBCASE("artifacts carry config-hash sidecars and mismatches warn") {
    CHECK(fs::exists(dir.str("out/docvecs.txt.meta")));
    const std::string meta = slurp(dir.str("out/docvecs.txt.meta"));
    CHECK(meta.rfind("config_hash = ", 0) == 0);

    // a changed setting downstream triggers the provenance warning
    const CliResult warned = run(with_cfg({"train-clf", "--alpha", "3.0"}));
    CHECK(warned.code == 0);
    CHECK(warned.err.find("warning:") != std::string::npos);
    CHECK(warned.err.find("config hash") != std::string::npos);
  }
}

TEST_CASE("deterministic single runs for correct and original schemes") {
  TempDir dir("dv_cli_schemes");
  write_tiny_corpus(dir);
  const std::string out = dir.str("out");
  REQUIRE(run({"ingest", "--docs", dir.str("docs.txt"), "--meta", dir.str("meta.tsv"),
               "--out_dir", out})
              .code == 0);
  REQUIRE(run({"vocab", "--out_dir", out, "--min_count_unigram", "1", "--max_order", "1"})
              .code == 0);
  REQUIRE(run({"nb-weights", "--out_dir", out}).code == 0);
  REQUIRE(
      run({"train-dv", "--out_dir", out, "--dim", "8", "--epochs", "2", "--negatives", "2"})
          .code == 0);
  REQUIRE(run({"bon", "--out_dir", out}).code == 0);

  for (const std::string scheme : {"correct", "original"}) {
    const CliResult r =
        run({"ensemble-eval", "--out_dir", out, "--scheme", scheme, "--n_seeds", "30"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("runs=1") != std::string::npos);  // single deterministic run
  }
  const CliResult r =
      run({"ensemble-eval", "--out_dir", out, "--scheme", "B", "--n_seeds", "4"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("runs=4") != std::string::npos);

  SUBCASE("the evaluation writes the pairing permutation as an alignment report") {
    REQUIRE(fs::exists(out + "/alignment.tsv"));
    std::ifstream is(out + "/alignment.tsv");
    std::string line;
    int rows = 0;
    bool crossed = false;
    while (std::getline(is, line)) {
      const auto cols = split_on(line, '\t');
      REQUIRE(cols.size() == 3);
      if (cols[2] == "0") crossed = true;
      ++rows;
    }
    CHECK(rows == 60);       // every document
    CHECK(crossed);          // scheme B leaves blocks
  }
}

TEST_CASE("train-dv supports hyphenated flags and checkpoint files") {
  TempDir dir("dv_cli_ckpt");
  write_tiny_corpus(dir);
  const std::string out = dir.str("out");
  REQUIRE(run({"ingest", "--docs", dir.str("docs.txt"), "--meta", dir.str("meta.tsv"),
               "--out_dir", out})
              .code == 0);
  REQUIRE(run({"vocab", "--out_dir", out, "--min_count_unigram", "1", "--max_order", "1"})
              .code == 0);
  REQUIRE(run({"nb-weights", "--out_dir", out}).code == 0);

  const CliResult r = run({"train-dv", "--out_dir", out, "--dim", "8", "--epochs", "2",
                           "--negatives", "2", "--nb-subsample", "--checkpoint-dir",
                           dir.str("ckpt"), "--checkpoint-interval", "100",
                           "--checkpoint-early-until", "300"});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(dir.str("ckpt/docvecs_step100.txt")));
  CHECK(fs::exists(dir.str("ckpt/docvecs_step200.txt")));
  CHECK(fs::exists(dir.str("ckpt/docvecs_step300.txt")));

  SUBCASE("numeric failures exit with code 4") {
    const CliResult diverged =
        run({"train-dv", "--out_dir", out, "--dim", "8", "--epochs", "40", "--negatives", "2",
             "--objective", "dot", "--lr_start", "1e8", "--lr_end", "1e7"});
    CHECK(diverged.code == 4);
    CHECK(diverged.err.find("ERROR code=4") != std::string::npos);
  }
}
