#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/hash.hpp"

namespace mtag {

enum class FunctorKind : std::uint8_t {
  Form,
  FormLc,
  Lemma,
  Prefix,
  Suffix,
  SuffixUc,
  Uppercase,
  Chars,
  Length,
  Number,
  Pos,
  Morph,
  FormMorph,
  Deprel,
};

struct Functor {
  FunctorKind kind = FunctorKind::Form;
  int n = 0;      // affix length
  int first = 0;  // chars range, 1-based inclusive
  int last = 0;

  bool reads_tags() const {
    return kind == FunctorKind::Pos || kind == FunctorKind::Morph || kind == FunctorKind::FormMorph;
  }
  std::string name() const;

  friend bool operator==(const Functor&, const Functor&) = default;
};

/// Where a template part is anchored. W is the token being tagged; the rest
/// address parser configuration slots (stack, buffer, outermost children).
enum class Anchor : std::uint8_t { W, S0, S1, S2, B0, B1, B2, S0L, S0R, S1L, S1R };
inline constexpr std::size_t kAnchorCount = 11;

struct TemplatePart {
  Functor functor;
  Anchor anchor = Anchor::W;
  int offset = 0;

  friend bool operator==(const TemplatePart&, const TemplatePart&) = default;
};

struct FeatureTemplate {
  std::uint32_t id = 0;
  std::string text;
  std::vector<TemplatePart> parts;

  /// True when some part reads a tag at w or to its right, i.e. information
  /// that only a previous tagging pass can supply.
  bool reads_right_tags() const;
};

struct TemplateSet {
  std::string name;
  std::vector<FeatureTemplate> templates;
  /// Added to template ids before hashing so parser and tagger templates never
  /// share a key space.
  std::uint32_t hash_base = 0;

  std::size_t size() const { return templates.size(); }
  const FeatureTemplate& operator[](std::size_t id) const { return templates[id]; }
  std::vector<std::uint32_t> all_ids() const;
  /// One template per line, in id order; parse_template_spec(spec_text()) reproduces the set.
  std::string spec_text() const;
};

/// Grammar, one template per line:
///   line    := part ('+' part)*
///   part    := functor [ '(' arg (',' arg)* ')' ]          (no args means (w))
///   arg     := anchor [ ('+'|'-') digit ]                  offsets in [-4, 4]
///   anchor  := w | s0 | s1 | s2 | b0 | b1 | b2 | s0l | s0r | s1l | s1r
/// A functor with several args expands to one part per arg. '#' starts a comment.
TemplateSet parse_template_spec(std::string_view text, std::string name = {});
TemplateSet load_template_file(const std::filesystem::path& path);

inline constexpr std::string_view kNone = "<none>";
inline constexpr char kPartSeparator = '\x1f';

/// Tag information visible to feature extraction, indexed by 0-based position.
/// Unassigned positions hold kNone.
struct TagContext {
  std::vector<std::string_view> pos;
  std::vector<std::string_view> morph;
  std::vector<std::string_view> deprel;

  TagContext() = default;
  explicit TagContext(std::size_t n) { reset(n); }
  void reset(std::size_t n) {
    pos.assign(n, kNone);
    morph.assign(n, kNone);
    deprel.assign(n, kNone);
  }
};

/// Resolved anchor slots: 1-based token index, 0 for the artificial root, -1 when empty.
struct AnchorFrame {
  std::array<int, kAnchorCount> index{};

  AnchorFrame() { index.fill(-1); }
  static AnchorFrame at_word(std::size_t position) {
    AnchorFrame f;
    f.index[0] = static_cast<int>(position) + 1;
    return f;
  }
  int operator[](Anchor a) const { return index[static_cast<std::size_t>(a)]; }
  int& operator[](Anchor a) { return index[static_cast<std::size_t>(a)]; }
};

/// Value of one functor applied to a token. Tag-reading functors take the
/// token's slot in the context.
std::string instantiate_value(const Functor& functor, const Token& token, std::string_view pos,
                              std::string_view morph, std::string_view deprel);

/// Concatenated value string of a whole template (parts joined by kPartSeparator).
std::string template_value(const FeatureTemplate& tmpl, const Sentence& sentence, const AnchorFrame& frame,
                           const TagContext& ctx);

/// Appends one key per active template to `out`. Inactive templates are never touched.
void extract(const TemplateSet& set, std::span<const std::uint32_t> active, const Sentence& sentence,
             const AnchorFrame& frame, const TagContext& ctx, std::vector<FeatureKey>& out);

std::vector<FeatureKey> extract(const TemplateSet& set, std::span<const std::uint32_t> active,
                                const Sentence& sentence, std::size_t position, const TagContext& ctx);

/// Throws ConfigError if an id is outside the set or repeated.
void validate_active(const TemplateSet& set, std::span<const std::uint32_t> active);

/// Digits in groups separated by single periods or commas: 7, 1,234.5, 3.14.
bool is_number(std::string_view s);

}  // namespace mtag
