#include "dv/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "dv/common.hpp"

namespace dv {

const char* to_string(Label l) {
  switch (l) {
    case Label::Positive: return "pos";
    case Label::Negative: return "neg";
    case Label::Unlabeled: return "unsup";
  }
  return "?";
}

const char* to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "valid";
    case Split::Test: return "test";
    case Split::Extra: return "extra";
  }
  return "?";
}

Label label_from_string(std::string_view tag) {
  if (tag == "pos") return Label::Positive;
  if (tag == "neg") return Label::Negative;
  if (tag == "unsup") return Label::Unlabeled;
  throw ConfigError("unknown label tag '" + std::string(tag) + "' (expected pos|neg|unsup)");
}

Split split_from_string(std::string_view tag) {
  if (tag == "train") return Split::Train;
  if (tag == "valid") return Split::Validation;
  if (tag == "test") return Split::Test;
  if (tag == "extra") return Split::Extra;
  throw ConfigError("unknown split tag '" + std::string(tag) + "' (expected train|valid|test|extra)");
}

BlockLayout::BlockLayout(std::vector<Block> blocks) : blocks_(std::move(blocks)) {
  int expect = 0;
  for (const Block& b : blocks_) {
    if (b.start != expect || b.length <= 0)
      throw ConfigError("block layout must be contiguous and non-empty");
    expect = b.end();
  }
}

int BlockLayout::total() const {
  return blocks_.empty() ? 0 : blocks_.back().end();
}

int BlockLayout::block_of(int index) const {
  if (index < 0 || index >= total())
    throw ConfigError("index " + std::to_string(index) + " outside layout");
  int lo = 0, hi = static_cast<int>(blocks_.size()) - 1;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (index < blocks_[mid].end())
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

bool BlockLayout::is_canonical_imdb() const {
  if (blocks_.size() != 5) return false;
  const Block want[5] = {
      {Label::Positive, Split::Train, 0, 12500},
      {Label::Negative, Split::Train, 12500, 12500},
      {Label::Positive, Split::Test, 25000, 12500},
      {Label::Negative, Split::Test, 37500, 12500},
      {Label::Unlabeled, Split::Extra, 50000, 50000},
  };
  for (int i = 0; i < 5; ++i) {
    const Block& b = blocks_[static_cast<std::size_t>(i)];
    if (b.label != want[i].label || b.split != want[i].split ||
        b.start != want[i].start || b.length != want[i].length)
      return false;
  }
  return true;
}

void BlockLayout::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write layout file " + path);
  os << "label\tsplit\tstart\tlength\n";
  for (const Block& b : blocks_)
    os << to_string(b.label) << '\t' << to_string(b.split) << '\t' << b.start
       << '\t' << b.length << '\n';
}

BlockLayout BlockLayout::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DependencyError("cannot open layout file " + path);
  std::string line;
  std::getline(is, line);  // header
  std::vector<Block> blocks;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 4) throw ConfigError("bad layout row: " + line);
    blocks.push_back(Block{label_from_string(cols[0]), split_from_string(cols[1]),
                           static_cast<int>(parse_int(cols[2])),
                           static_cast<int>(parse_int(cols[3]))});
  }
  return BlockLayout(std::move(blocks));
}

Corpus::Corpus(std::vector<Document> docs, BlockLayout layout)
    : docs_(std::move(docs)), layout_(std::move(layout)) {
  if (layout_.total() != static_cast<int>(docs_.size()))
    throw ConfigError("layout covers " + std::to_string(layout_.total()) +
                      " documents but corpus has " + std::to_string(docs_.size()));
  for (int i = 0; i < size(); ++i) {
    const Document& d = docs_[static_cast<std::size_t>(i)];
    if (d.doc_id != i)
      throw ConfigError("doc_id " + std::to_string(d.doc_id) +
                        " at position " + std::to_string(i) +
                        " (ids must be 0..N-1 in order)");
    if (d.tokens.empty())
      throw ConfigError("document " + std::to_string(i) + " has no tokens");
    if ((d.label == Label::Unlabeled) != (d.split == Split::Extra))
      throw ConfigError("document " + std::to_string(i) +
                        ": unlabeled and extra-split must coincide");
    const Block& b = layout_.blocks()[static_cast<std::size_t>(layout_.block_of(i))];
    if (b.label != d.label || b.split != d.split)
      throw ConfigError("document " + std::to_string(i) + " disagrees with its block");
  }
}

const Document& Corpus::doc(int i) const {
  const Document& d = docs_.at(static_cast<std::size_t>(i));
  if (observer_) observer_(d);
  return d;
}

std::string NGram::joined() const {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += '_';
    out += parts[i];
  }
  return out;
}

namespace {

struct MetaRow {
  Label label;
  Split split;
};

std::vector<MetaRow> parse_metadata(std::istream& metadata) {
  std::string line;
  if (!std::getline(metadata, line))
    throw ConfigError("metadata file is empty");
  {
    const auto cols = split_on(trim(line), '\t');
    if (cols.size() != 3 || cols[0] != "doc_id" || cols[1] != "label" || cols[2] != "split")
      throw ConfigError("metadata header must be 'doc_id\\tlabel\\tsplit'");
  }
  std::vector<MetaRow> rows;
  int row = 0;
  while (std::getline(metadata, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3)
      throw ConfigError("metadata row " + std::to_string(row) + " has " +
                        std::to_string(cols.size()) + " columns, expected 3");
    if (parse_int(cols[0]) != row)
      throw ConfigError("metadata doc_id " + cols[0] + " at row " +
                        std::to_string(row) + " (ids must be 0..N-1 in file order)");
    rows.push_back(MetaRow{label_from_string(trim(cols[1])), split_from_string(trim(cols[2]))});
    ++row;
  }
  return rows;
}

BlockLayout infer_layout(const std::vector<Document>& docs) {
  std::vector<Block> blocks;
  for (int i = 0; i < static_cast<int>(docs.size()); ++i) {
    const Document& d = docs[static_cast<std::size_t>(i)];
    if (!blocks.empty() && blocks.back().label == d.label && blocks.back().split == d.split) {
      ++blocks.back().length;
    } else {
      blocks.push_back(Block{d.label, d.split, i, 1});
    }
  }
  return BlockLayout(std::move(blocks));
}

}  // namespace

Corpus ingest(std::istream& doc_lines, std::istream& metadata) {
  const std::vector<MetaRow> rows = parse_metadata(metadata);
  std::vector<Document> docs;
  docs.reserve(rows.size());
  std::string line;
  int i = 0;
  while (std::getline(doc_lines, line)) {
    if (i >= static_cast<int>(rows.size()))
      throw ConfigError("more document lines than metadata rows (" +
                        std::to_string(rows.size()) + ")");
    Document d;
    d.doc_id = i;
    d.tokens = tokenize_ws(line);
    if (d.tokens.empty())
      throw ConfigError("empty document at line " + std::to_string(i));
    d.label = rows[static_cast<std::size_t>(i)].label;
    d.split = rows[static_cast<std::size_t>(i)].split;
    docs.push_back(std::move(d));
    ++i;
  }
  if (i != static_cast<int>(rows.size()))
    throw ConfigError("document count " + std::to_string(i) +
                      " does not match metadata row count " + std::to_string(rows.size()));
  BlockLayout layout = infer_layout(docs);
  return Corpus(std::move(docs), std::move(layout));
}

Corpus ingest_files(const std::string& docs_path, const std::string& meta_path) {
  std::ifstream docs(docs_path);
  if (!docs) throw DependencyError("cannot open document file " + docs_path);
  std::ifstream meta(meta_path);
  if (!meta) throw DependencyError("cannot open metadata file " + meta_path);
  return ingest(docs, meta);
}

std::vector<NGram> extract_ngrams(const Document& doc, int max_order) {
  if (max_order < 1 || max_order > 3)
    throw ConfigError("max_order must be in 1..3");
  const int n = static_cast<int>(doc.tokens.size());
  std::vector<NGram> out;
  for (int k = 1; k <= max_order; ++k) {
    for (int i = 0; i + k <= n; ++i) {
      NGram g;
      g.parts.assign(doc.tokens.begin() + i, doc.tokens.begin() + i + k);
      out.push_back(std::move(g));
    }
  }
  return out;
}

void for_each_ngram_key(const std::vector<std::string>& tokens, int max_order,
                        const std::function<void(const std::string&, int)>& fn) {
  if (max_order < 1 || max_order > 3)
    throw ConfigError("max_order must be in 1..3");
  const int n = static_cast<int>(tokens.size());
  std::string key;
  for (int k = 1; k <= max_order; ++k) {
    for (int i = 0; i + k <= n; ++i) {
      key.clear();
      for (int j = 0; j < k; ++j) {
        if (j) key += '_';
        key += tokens[static_cast<std::size_t>(i + j)];
      }
      fn(key, k);
    }
  }
}

std::vector<std::string> normalize_tokens(std::string_view raw) {
  std::string text;
  text.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    // drop <br /> and <br> variants
    if (raw[i] == '<' && (i + 3 < raw.size()) &&
        (raw[i + 1] == 'b' || raw[i + 1] == 'B') &&
        (raw[i + 2] == 'r' || raw[i + 2] == 'R')) {
      const std::size_t close = raw.find('>', i);
      if (close != std::string_view::npos && close - i <= 5) {
        text += ' ';
        i = close;
        continue;
      }
    }
    char c = raw[i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    static const std::string_view punct = ".\",()!?;:'";
    if (punct.find(c) != std::string_view::npos) {
      text += ' ';
      text += c;
      text += ' ';
    } else {
      text += c;
    }
  }
  return tokenize_ws(text);
}

bool AlignmentMap::is_identity() const {
  for (int i = 0; i < static_cast<int>(perm.size()); ++i)
    if (perm[static_cast<std::size_t>(i)] != i) return false;
  return true;
}

AlignmentMap::Kind AlignmentMap::classify(const BlockLayout& layout) const {
  if (layout.total() != static_cast<int>(perm.size()))
    throw ConfigError("alignment size does not match layout");
  if (is_identity()) return Kind::Identity;
  for (int i = 0; i < static_cast<int>(perm.size()); ++i)
    if (!layout.same_block(i, perm[static_cast<std::size_t>(i)]))
      return Kind::CrossBlock;
  return Kind::InBlock;
}

AlignmentMap AlignmentMap::composed(const AlignmentMap& then) const {
  if (perm.size() != then.perm.size())
    throw ConfigError("cannot compose alignments of different sizes");
  AlignmentMap out;
  out.perm.resize(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i)
    out.perm[i] = then.perm[static_cast<std::size_t>(perm[i])];
  return out;
}

void AlignmentMap::save_report(const std::string& path, const BlockLayout& layout) const {
  std::ofstream os(path);
  if (!os) throw DependencyError("cannot write alignment report " + path);
  for (int i = 0; i < static_cast<int>(perm.size()); ++i) {
    const int j = perm[static_cast<std::size_t>(i)];
    os << i << '\t' << j << '\t' << (layout.same_block(i, j) ? 1 : 0) << '\n';
  }
}

AlignmentMap build_alignment(const std::vector<int>& order_a,
                             const std::vector<int>& order_b) {
  if (order_a.size() != order_b.size())
    throw ConfigError("orders have different lengths");
  const int n = static_cast<int>(order_a.size());
  std::vector<int> pos_in_b(static_cast<std::size_t>(n), -1);
  for (int j = 0; j < n; ++j) {
    const int id = order_b[static_cast<std::size_t>(j)];
    if (id < 0 || id >= n || pos_in_b[static_cast<std::size_t>(id)] != -1)
      throw ConfigError("order_b is not a permutation of 0..N-1");
    pos_in_b[static_cast<std::size_t>(id)] = j;
  }
  AlignmentMap map;
  map.perm.resize(static_cast<std::size_t>(n));
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    const int id = order_a[static_cast<std::size_t>(i)];
    if (id < 0 || id >= n || seen[static_cast<std::size_t>(id)])
      throw ConfigError("order_a is not a permutation of 0..N-1");
    seen[static_cast<std::size_t>(id)] = 1;
    map.perm[static_cast<std::size_t>(i)] = pos_in_b[static_cast<std::size_t>(id)];
  }
  return map;
}

CorpusMeta CorpusMeta::from_corpus(const Corpus& corpus) {
  CorpusMeta meta;
  meta.labels.reserve(static_cast<std::size_t>(corpus.size()));
  meta.splits.reserve(static_cast<std::size_t>(corpus.size()));
  for (int i = 0; i < corpus.size(); ++i) {
    const Document& d = corpus.doc(i);
    meta.labels.push_back(d.label);
    meta.splits.push_back(d.split);
  }
  meta.layout = corpus.layout();
  return meta;
}

CorpusMeta CorpusMeta::load(const std::string& meta_path) {
  std::ifstream is(meta_path);
  if (!is) throw DependencyError("cannot open metadata file " + meta_path);
  std::string line;
  std::getline(is, line);  // header validated by ingest; be lenient here
  CorpusMeta meta;
  std::vector<Block> blocks;
  int i = 0;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 3) throw ConfigError("bad metadata row: " + line);
    const Label label = label_from_string(trim(cols[1]));
    const Split split = split_from_string(trim(cols[2]));
    meta.labels.push_back(label);
    meta.splits.push_back(split);
    if (!blocks.empty() && blocks.back().label == label && blocks.back().split == split)
      ++blocks.back().length;
    else
      blocks.push_back(Block{label, split, i, 1});
    ++i;
  }
  meta.layout = BlockLayout(std::move(blocks));
  return meta;
}

void CorpusMeta::save(const std::string& meta_path) const {
  std::ofstream os(meta_path);
  if (!os) throw DependencyError("cannot write metadata file " + meta_path);
  os << "doc_id\tlabel\tsplit\n";
  for (int i = 0; i < size(); ++i)
    os << i << '\t' << to_string(labels[static_cast<std::size_t>(i)]) << '\t'
       << to_string(splits[static_cast<std::size_t>(i)]) << '\n';
}

double parse_double(const std::string& s) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
}

long long parse_int(const std::string& s) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
}

}  // namespace dv
