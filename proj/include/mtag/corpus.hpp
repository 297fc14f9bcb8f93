#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mtag {

/// Morphological attribute bundle: a set of attribute=value pairs keyed by
/// attribute name. Stored sorted by attribute, so equality is order-insensitive.
/// A bare feature without '=' is kept as an attribute with an empty value.
class MorphBundle {
 public:
  using Entry = std::pair<std::string, std::string>;

  MorphBundle() = default;

  /// Parses "a=b|c=d" or "_". Throws ConfigError on a repeated attribute.
  static MorphBundle parse(std::string_view text);

  /// Returns false when the attribute is already present.
  bool insert(std::string attribute, std::string value);
  const std::string* find(std::string_view attribute) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }

  /// Keeps only the listed attributes.
  MorphBundle restricted(const std::vector<std::string>& attributes) const;

  /// Canonical "a=b|c=d", or "_" for the empty bundle.
  std::string str() const;

  friend bool operator==(const MorphBundle&, const MorphBundle&) = default;

 private:
  std::vector<Entry> entries_;
};

struct Token {
  int index = 0;  // 1-based
  std::string form;
  std::string lemma;  // empty when absent
  std::string pos;
  MorphBundle morph;
  int head = 0;  // 0 = artificial root
  std::string deprel;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  const Token& operator[](std::size_t i) const { return tokens[i]; }
  Token& operator[](std::size_t i) { return tokens[i]; }

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

using Corpus = std::vector<Sentence>;

Corpus read_conll(std::istream& in);
Corpus read_conll(const std::filesystem::path& path);

/// Writes CoNLL-X. `comments` become leading "# ..." lines, which read_conll
/// skips; with `predicted` the PHEAD/PDEPREL columns repeat HEAD/DEPREL.
void write_conll(std::ostream& out, const Corpus& corpus, bool predicted = false,
                 const std::vector<std::string>& comments = {});
void write_conll(const std::filesystem::path& path, const Corpus& corpus, bool predicted = false,
                 const std::vector<std::string>& comments = {});

struct SplitSpec {
  double train_fraction = 0.8;
  int fold_count = 10;
  std::uint64_t seed = 1;
};

struct TrainDev {
  Corpus train;
  Corpus dev;
};

/// Seeded permutation of sentence indices; the first round(f*N) go to train.
/// Both halves keep the original corpus order.
TrainDev split_train_dev(const Corpus& corpus, const SplitSpec& spec);

struct Fold {
  Corpus train;
  Corpus test;
  std::vector<std::size_t> test_indices;  // positions in the input corpus
};

/// k balanced folds over a seeded permutation; the first N mod k folds get
/// one extra sentence.
std::vector<Fold> kfold(const Corpus& corpus, int k, std::uint64_t seed);

/// Heads form a tree rooted at 0 (every token reaches the root, no cycles).
bool is_tree(const Sentence& sentence);
bool is_projective(const Sentence& sentence);
/// Tree, projective, and exactly one token attached to the root: what the
/// arc-standard system with root-last attachment can derive.
bool is_derivable(const Sentence& sentence);

struct DerivableSplit {
  Corpus kept;
  std::size_t skipped = 0;
};
DerivableSplit filter_derivable(const Corpus& corpus);

std::size_t token_count(const Corpus& corpus);

}  // namespace mtag
