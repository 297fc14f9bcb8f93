#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mtag/corpus.hpp"

namespace mtag {

class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> items);

  int add(std::string_view item);
  /// -1 when absent.
  int find(std::string_view item) const;
  std::size_t size() const { return items_.size(); }
  const std::string& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<std::string>& items() const { return items_; }

 private:
  std::vector<std::string> items_;
  std::unordered_map<std::string, int> index_;
};

enum class TargetField { Pos, Morph, PosMorph };

/// What a tagger predicts: the POS tag, the morph bundle, or both as one
/// label. `attributes` restricts the morph bundle (empty means keep all).
struct TargetSpec {
  TargetField field = TargetField::Pos;
  std::vector<std::string> attributes;

  bool has_pos() const { return field != TargetField::Morph; }
  bool has_morph() const { return field != TargetField::Pos; }
  MorphBundle morph_of(const Token& token) const;
  std::string label_of(const Token& token) const;

  std::string field_name() const;
  /// "pos", "morph" or "pos+morph".
  static TargetSpec parse(std::string_view field, std::vector<std::string> attributes = {});
};

/// Class inventory of a tagger: one entry per distinct target label, in
/// order of first appearance in the training data.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(TargetSpec target) : target_(std::move(target)) {}

  static TagSet build(const Corpus& corpus, const TargetSpec& target);
  /// Rebuilds from stored parts (model loading).
  static TagSet from_parts(const TargetSpec& target, const std::vector<std::string>& pos,
                           const std::vector<std::string>& morph);

  int add(const Token& token);
  int find(const Token& token) const { return labels_.find(target_.label_of(token)); }
  int find_label(std::string_view label) const { return labels_.find(label); }
  std::size_t size() const { return labels_.size(); }

  const TargetSpec& target() const { return target_; }
  const std::string& label(std::size_t tag) const { return labels_[tag]; }
  const std::string& pos(std::size_t tag) const { return pos_[tag]; }
  const std::string& morph(std::size_t tag) const { return morph_[tag]; }
  const std::vector<std::string>& labels() const { return labels_.items(); }
  const std::vector<std::string>& pos_parts() const { return pos_; }
  const std::vector<std::string>& morph_parts() const { return morph_; }

  /// Writes the predicted fields of `tag` into the token.
  void assign(std::size_t tag, Token& token) const;

 private:
  TargetSpec target_;
  Vocabulary labels_;
  std::vector<std::string> pos_;
  std::vector<std::string> morph_;
};

}  // namespace mtag
