#ifndef DV_CORPUS_HPP_
#define DV_CORPUS_HPP_

#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace dv {

enum class Label { Positive, Negative, Unlabeled };
enum class Split { Train, Validation, Test, Extra };

const char* to_string(Label l);
const char* to_string(Split s);
Label label_from_string(std::string_view tag);   // pos | neg | unsup
Split split_from_string(std::string_view tag);   // train | valid | test | extra

struct Document {
  int doc_id = -1;
  std::vector<std::string> tokens;
  Label label = Label::Unlabeled;
  Split split = Split::Extra;
};

struct Block {
  Label label = Label::Unlabeled;
  Split split = Split::Extra;
  int start = 0;
  int length = 0;
  int end() const { return start + length; }
};

// Contiguous (class, split) blocks covering 0..N-1, mirroring the layout of
// the preprocessed review files where e.g. all positive training documents
// sit in one run of lines.
class BlockLayout {
 public:
  BlockLayout() = default;
  explicit BlockLayout(std::vector<Block> blocks);  // validates cover/contiguity

  const std::vector<Block>& blocks() const { return blocks_; }
  int total() const;
  int block_of(int index) const;
  bool same_block(int a, int b) const { return block_of(a) == block_of(b); }

  // The canonical IMDB shape: 12500 pos-train, 12500 neg-train, 12500
  // pos-test, 12500 neg-test, 50000 unlabeled.
  bool is_canonical_imdb() const;

  void save(const std::string& path) const;
  static BlockLayout load(const std::string& path);

 private:
  std::vector<Block> blocks_;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> docs, BlockLayout layout);

  int size() const { return static_cast<int>(docs_.size()); }
  const Document& doc(int i) const;
  const BlockLayout& layout() const { return layout_; }

  // Test hook: observes every doc() access. Used to verify that fitting
  // steps touch only the splits they are allowed to see.
  using AccessObserver = std::function<void(const Document&)>;
  void set_access_observer(AccessObserver cb) const { observer_ = std::move(cb); }

 private:
  std::vector<Document> docs_;
  BlockLayout layout_;
  mutable AccessObserver observer_;
};

struct NGram {
  std::vector<std::string> parts;  // 1..3 tokens
  int order() const { return static_cast<int>(parts.size()); }
  std::string joined() const;      // parts joined by '_'
  bool operator==(const NGram&) const = default;
};

// doc_lines: one document per line, tokens separated by spaces.
// metadata: TSV with header "doc_id\tlabel\tsplit"; row i describes line i.
Corpus ingest(std::istream& doc_lines, std::istream& metadata);
Corpus ingest_files(const std::string& docs_path, const std::string& meta_path);

// All contiguous n-grams of order 1..max_order in document order,
// duplicates preserved.
std::vector<NGram> extract_ngrams(const Document& doc, int max_order);

// Hot-path variant: calls fn(key, order) for each n-gram, where key is the
// '_'-joined form, without materializing NGram objects.
void for_each_ngram_key(const std::vector<std::string>& tokens, int max_order,
                        const std::function<void(const std::string&, int)>& fn);

// Minimal normalizer for raw review text: lowercase ASCII, drop <br /> tags,
// put spaces around punctuation. Provided for convenience; corpora prepared
// elsewhere can be ingested as-is.
std::vector<std::string> normalize_tokens(std::string_view raw);

struct AlignmentMap {
  enum class Kind { Identity, InBlock, CrossBlock };

  std::vector<int> perm;  // row i of order A holds the document at row perm[i] of order B

  bool is_identity() const;
  Kind classify(const BlockLayout& layout) const;
  AlignmentMap composed(const AlignmentMap& then) const;

  void save_report(const std::string& path, const BlockLayout& layout) const;
};

// perm[i] = position in order_b of the document at position i of order_a.
AlignmentMap build_alignment(const std::vector<int>& order_a,
                             const std::vector<int>& order_b);

// Plain per-document metadata without token storage, for stages that only
// need labels/splits/layout.
struct CorpusMeta {
  std::vector<Label> labels;
  std::vector<Split> splits;
  BlockLayout layout;

  int size() const { return static_cast<int>(labels.size()); }
  static CorpusMeta from_corpus(const Corpus& corpus);
  static CorpusMeta load(const std::string& meta_path);
  void save(const std::string& meta_path) const;
};

}  // namespace dv

#endif  // DV_CORPUS_HPP_
