#include "mtag/tagset.hpp"

#include "mtag/error.hpp"

namespace mtag {

Vocabulary::Vocabulary(std::vector<std::string> items) {
  for (auto& item : items) add(item);
}

int Vocabulary::add(std::string_view item) {
  if (const int existing = find(item); existing >= 0) return existing;
  const int id = static_cast<int>(items_.size());
  items_.emplace_back(item);
  index_.emplace(items_.back(), id);
  return id;
}

int Vocabulary::find(std::string_view item) const {
  auto it = index_.find(std::string(item));
  return it == index_.end() ? -1 : it->second;
}

MorphBundle TargetSpec::morph_of(const Token& token) const {
  return attributes.empty() ? token.morph : token.morph.restricted(attributes);
}

std::string TargetSpec::label_of(const Token& token) const {
  switch (field) {
    case TargetField::Pos:
      return token.pos;
    case TargetField::Morph:
      return morph_of(token).str();
    case TargetField::PosMorph:
      return token.pos + "#" + morph_of(token).str();
  }
  return {};
}

std::string TargetSpec::field_name() const {
  switch (field) {
    case TargetField::Pos: return "pos";
    case TargetField::Morph: return "morph";
    case TargetField::PosMorph: return "pos+morph";
  }
  return {};
}

TargetSpec TargetSpec::parse(std::string_view field, std::vector<std::string> attributes) {
  TargetSpec spec;
  spec.attributes = std::move(attributes);
  if (field == "pos") {
    spec.field = TargetField::Pos;
  } else if (field == "morph") {
    spec.field = TargetField::Morph;
  } else if (field == "pos+morph") {
    spec.field = TargetField::PosMorph;
  } else {
    throw ConfigError("unknown target field '" + std::string(field) + "' (expected pos, morph or pos+morph)");
  }
  return spec;
}

TagSet TagSet::build(const Corpus& corpus, const TargetSpec& target) {
  TagSet set(target);
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) set.add(token);
  }
  return set;
}

TagSet TagSet::from_parts(const TargetSpec& target, const std::vector<std::string>& pos,
                          const std::vector<std::string>& morph) {
  if (pos.size() != morph.size()) throw ModelError("tag part lists differ in length");
  TagSet set(target);
  for (std::size_t i = 0; i < pos.size(); ++i) {
    Token t;
    t.pos = pos[i];
    t.morph = MorphBundle::parse(morph[i]);
    set.add(t);
  }
  return set;
}

int TagSet::add(const Token& token) {
  const auto label = target_.label_of(token);
  if (const int existing = labels_.find(label); existing >= 0) return existing;
  const int id = labels_.add(label);
  pos_.push_back(target_.has_pos() ? token.pos : std::string{});
  morph_.push_back(target_.has_morph() ? target_.morph_of(token).str() : std::string{});
  return id;
}

void TagSet::assign(std::size_t tag, Token& token) const {
  if (target_.has_pos()) token.pos = pos_[tag];
  if (target_.has_morph()) token.morph = MorphBundle::parse(morph_[tag]);
}

}  // namespace mtag
