#include "mtag/templates.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "mtag/error.hpp"
#include "mtag/utf8.hpp"

namespace mtag {

namespace {

constexpr std::string_view kAnchorNames[kAnchorCount] = {"w",  "s0", "s1", "s2",  "b0", "b1",
                                                         "b2", "s0l", "s0r", "s1l", "s1r"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool parse_small(std::string_view s, int& out) {
  if (s.empty() || s.size() > 2) return false;
  out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    out = out * 10 + (c - '0');
  }
  return true;
}

bool parse_functor(std::string_view name, Functor& f) {
  auto with_n = [&](std::string_view prefix, FunctorKind kind, std::string_view suffix = {}) {
    if (!name.starts_with(prefix) || !name.ends_with(suffix)) return false;
    auto digits = name.substr(prefix.size(), name.size() - prefix.size() - suffix.size());
    int n = 0;
    if (!parse_small(digits, n)) return false;
    f.kind = kind;
    f.n = n;
    return true;
  };
  if (name == "form" || name == "fo.") return f.kind = FunctorKind::Form, true;
  if (name == "formlc") return f.kind = FunctorKind::FormLc, true;
  if (name == "lemma" || name == "lem" || name == "lemmas") return f.kind = FunctorKind::Lemma, true;
  if (name == "uppercase" || name == "uc") return f.kind = FunctorKind::Uppercase, true;
  if (name == "length") return f.kind = FunctorKind::Length, true;
  if (name == "number") return f.kind = FunctorKind::Number, true;
  if (name == "pos") return f.kind = FunctorKind::Pos, true;
  if (name == "morph" || name == "mor" || name == "mo.") return f.kind = FunctorKind::Morph, true;
  if (name == "form_morph") return f.kind = FunctorKind::FormMorph, true;
  if (name == "deprel" || name == "label") return f.kind = FunctorKind::Deprel, true;
  if (with_n("suffix", FunctorKind::SuffixUc, "uc") || with_n("suff", FunctorKind::SuffixUc, "uc")) return true;
  if (with_n("prefix", FunctorKind::Prefix) || with_n("pref", FunctorKind::Prefix)) return true;
  if (with_n("suffix", FunctorKind::Suffix) || with_n("suff", FunctorKind::Suffix)) return true;
  // c2c3c4: consecutive 1-based character positions
  if (name.size() >= 2 && name.size() % 2 == 0 && name[0] == 'c') {
    int prev = -1;
    int first = -1;
    for (std::size_t i = 0; i < name.size(); i += 2) {
      if (name[i] != 'c' || !std::isdigit(static_cast<unsigned char>(name[i + 1]))) return false;
      const int k = name[i + 1] - '0';
      if (prev >= 0 && k != prev + 1) return false;
      if (first < 0) first = k;
      prev = k;
    }
    f.kind = FunctorKind::Chars;
    f.first = first;
    f.last = prev;
    return true;
  }
  return false;
}

bool parse_arg(std::string_view arg, Anchor& anchor, int& offset) {
  arg = trim(arg);
  std::size_t split = arg.find_first_of("+-");
  const auto head = arg.substr(0, split);
  bool found = false;
  for (std::size_t a = 0; a < kAnchorCount; ++a) {
    if (head == kAnchorNames[a]) {
      anchor = static_cast<Anchor>(a);
      found = true;
    }
  }
  if (!found) return false;
  offset = 0;
  if (split == std::string_view::npos) return true;
  const auto rest = arg.substr(split + 1);
  int magnitude = 0;
  if (!parse_small(trim(rest), magnitude)) return false;
  offset = arg[split] == '-' ? -magnitude : magnitude;
  return true;
}

// Splits on '+' at parenthesis depth zero, so "w+1" inside args stays intact.
std::vector<std::string_view> split_parts(std::string_view line) {
  std::vector<std::string_view> parts;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '(') ++depth;
    if (line[i] == ')') --depth;
    if (line[i] == '+' && depth == 0) {
      parts.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  parts.push_back(line.substr(start));
  return parts;
}

void validate_functor(const Functor& f, std::size_t lineno) {
  switch (f.kind) {
    case FunctorKind::Prefix:
    case FunctorKind::Suffix:
    case FunctorKind::SuffixUc:
      if (f.n < 1 || f.n > 5) throw ParseError(lineno, "affix length must be in [1,5]");
      break;
    case FunctorKind::Chars:
      if (f.first < 2 || f.last > 6 || f.first > f.last) throw ParseError(lineno, "character range must satisfy 2 <= i <= j <= 6");
      break;
    default:
      break;
  }
}

}  // namespace

std::string Functor::name() const {
  switch (kind) {
    case FunctorKind::Form: return "form";
    case FunctorKind::FormLc: return "formlc";
    case FunctorKind::Lemma: return "lemma";
    case FunctorKind::Prefix: return "prefix" + std::to_string(n);
    case FunctorKind::Suffix: return "suffix" + std::to_string(n);
    case FunctorKind::SuffixUc: return "suffix" + std::to_string(n) + "uc";
    case FunctorKind::Uppercase: return "uppercase";
    case FunctorKind::Chars: {
      std::string s;
      for (int k = first; k <= last; ++k) s += "c" + std::to_string(k);
      return s;
    }
    case FunctorKind::Length: return "length";
    case FunctorKind::Number: return "number";
    case FunctorKind::Pos: return "pos";
    case FunctorKind::Morph: return "morph";
    case FunctorKind::FormMorph: return "form_morph";
    case FunctorKind::Deprel: return "deprel";
  }
  return "?";
}

bool FeatureTemplate::reads_right_tags() const {
  return std::any_of(parts.begin(), parts.end(), [](const TemplatePart& p) {
    return p.functor.reads_tags() && p.anchor == Anchor::W && p.offset >= 0;
  });
}

std::vector<std::uint32_t> TemplateSet::all_ids() const {
  std::vector<std::uint32_t> ids(templates.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i);
  return ids;
}

std::string TemplateSet::spec_text() const {
  std::string out;
  for (const auto& t : templates) {
    out += t.text;
    out += '\n';
  }
  return out;
}

TemplateSet parse_template_spec(std::string_view text, std::string name) {
  TemplateSet set;
  set.name = std::move(name);
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    FeatureTemplate tmpl;
    tmpl.id = static_cast<std::uint32_t>(set.templates.size());
    tmpl.text = std::string(line);
    for (auto piece : split_parts(line)) {
      piece = trim(piece);
      if (piece.empty()) throw ParseError(lineno, "empty template part in '" + std::string(line) + "'");
      std::string_view fname = piece;
      std::string_view args = "w";
      if (const auto open = piece.find('('); open != std::string_view::npos) {
        if (piece.back() != ')') throw ParseError(lineno, "unbalanced parentheses in '" + std::string(piece) + "'");
        fname = trim(piece.substr(0, open));
        args = piece.substr(open + 1, piece.size() - open - 2);
      }
      Functor functor;
      if (!parse_functor(fname, functor)) throw ParseError(lineno, "unknown functor '" + std::string(fname) + "'");
      validate_functor(functor, lineno);
      std::size_t astart = 0;
      while (astart <= args.size()) {
        std::size_t aend = args.find(',', astart);
        if (aend == std::string_view::npos) aend = args.size();
        const auto arg = args.substr(astart, aend - astart);
        astart = aend + 1;
        TemplatePart part;
        part.functor = functor;
        if (!parse_arg(arg, part.anchor, part.offset)) {
          throw ParseError(lineno, "malformed position '" + std::string(trim(arg)) + "'");
        }
        if (part.offset < -4 || part.offset > 4) throw ParseError(lineno, "offset out of [-4,+4]");
        tmpl.parts.push_back(part);
      }
    }
    set.templates.push_back(std::move(tmpl));
  }
  return set;
}

TemplateSet load_template_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open template file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_template_spec(buffer.str(), path.stem().string());
}

bool is_number(std::string_view s) {
  bool need_digit = true;
  for (char c : s) {
    if (c >= '0' && c <= '9') {
      need_digit = false;
    } else if ((c == '.' || c == ',') && !need_digit) {
      need_digit = true;
    } else {
      return false;
    }
  }
  return !need_digit;
}

namespace {

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

void append_affix(std::string& out, std::string_view word, int n, bool from_end) {
  const auto k = static_cast<std::size_t>(n);
  if (is_ascii(word)) {
    if (k >= word.size()) {
      out.append(word);
    } else {
      out.append(from_end ? word.substr(word.size() - k) : word.substr(0, k));
    }
    return;
  }
  const auto bounds = utf8::boundaries(word);
  const std::size_t len = bounds.size() - 1;
  if (static_cast<std::size_t>(n) >= len) {
    out.append(word);
    return;
  }
  if (from_end) {
    out.append(word.substr(bounds[len - static_cast<std::size_t>(n)]));
  } else {
    out.append(word.substr(0, bounds[static_cast<std::size_t>(n)]));
  }
}

char case_flag(std::string_view word) { return utf8::is_upper(utf8::decode_first(word)) ? 'U' : 'L'; }

void append_value(std::string& out, const Functor& f, const Token& token, std::string_view pos,
                  std::string_view morph, std::string_view deprel) {
  switch (f.kind) {
    case FunctorKind::Form:
      out.append(token.form);
      return;
    case FunctorKind::FormLc:
      out.append(utf8::lowercase(token.form));
      return;
    case FunctorKind::Lemma:
      out.append(token.lemma.empty() ? std::string_view("_") : std::string_view(token.lemma));
      return;
    case FunctorKind::Prefix:
      append_affix(out, token.form, f.n, false);
      return;
    case FunctorKind::Suffix:
      append_affix(out, token.form, f.n, true);
      return;
    case FunctorKind::SuffixUc:
      append_affix(out, token.form, f.n, true);
      out.push_back('|');
      out.push_back(case_flag(token.form));
      return;
    case FunctorKind::Uppercase:
      out.push_back(case_flag(token.form));
      return;
    case FunctorKind::Chars: {
      const auto bounds = utf8::boundaries(token.form);
      const std::size_t len = bounds.size() - 1;
      if (len < static_cast<std::size_t>(f.last)) {
        out.append("<short>");
        return;
      }
      const auto b = bounds[static_cast<std::size_t>(f.first - 1)];
      const auto e = bounds[static_cast<std::size_t>(f.last)];
      out.append(std::string_view(token.form).substr(b, e - b));
      return;
    }
    case FunctorKind::Length:
      out.append(std::to_string(utf8::length(token.form)));
      return;
    case FunctorKind::Number:
      out.push_back(is_number(token.form) ? 'Y' : 'N');
      return;
    case FunctorKind::Pos:
      out.append(pos);
      return;
    case FunctorKind::Morph:
      out.append(morph);
      return;
    case FunctorKind::FormMorph:
      out.append(token.form);
      out.push_back('/');
      out.append(morph);
      return;
    case FunctorKind::Deprel:
      out.append(deprel);
      return;
  }
}

void append_part(std::string& out, const TemplatePart& part, const Sentence& sentence, const AnchorFrame& frame,
                 const TagContext& ctx) {
  const int base = frame[part.anchor];
  if (base < 0) {
    out.append("<absent>");
    return;
  }
  if (base == 0 && part.anchor != Anchor::W && part.offset == 0) {
    out.append("<root>");
    return;
  }
  const int n = static_cast<int>(sentence.size());
  const int idx = base + part.offset;
  if (idx < 1) {
    out.append("<s-");
    out.append(std::to_string(1 - idx));
    out.push_back('>');
    return;
  }
  if (idx > n) {
    out.append("</s+");
    out.append(std::to_string(idx - n));
    out.push_back('>');
    return;
  }
  const auto p = static_cast<std::size_t>(idx - 1);
  // Slots beyond the context (e.g. an empty context for tag-free templates) read as <none>.
  const auto slot = [p](const std::vector<std::string_view>& v) { return p < v.size() ? v[p] : kNone; };
  append_value(out, part.functor, sentence[p], slot(ctx.pos), slot(ctx.morph), slot(ctx.deprel));
}

void append_template(std::string& out, const FeatureTemplate& tmpl, const Sentence& sentence,
                     const AnchorFrame& frame, const TagContext& ctx) {
  bool first = true;
  for (const auto& part : tmpl.parts) {
    if (!first) out.push_back(kPartSeparator);
    first = false;
    append_part(out, part, sentence, frame, ctx);
  }
}

}  // namespace

std::string instantiate_value(const Functor& functor, const Token& token, std::string_view pos,
                              std::string_view morph, std::string_view deprel) {
  std::string out;
  append_value(out, functor, token, pos, morph, deprel);
  return out;
}

std::string template_value(const FeatureTemplate& tmpl, const Sentence& sentence, const AnchorFrame& frame,
                           const TagContext& ctx) {
  std::string out;
  append_template(out, tmpl, sentence, frame, ctx);
  return out;
}

void extract(const TemplateSet& set, std::span<const std::uint32_t> active, const Sentence& sentence,
             const AnchorFrame& frame, const TagContext& ctx, std::vector<FeatureKey>& out) {
  thread_local std::string buffer;
  for (const auto id : active) {
    buffer.clear();
    append_template(buffer, set.templates[id], sentence, frame, ctx);
    out.push_back(feature_hash(set.hash_base + id, buffer));
  }
}

std::vector<FeatureKey> extract(const TemplateSet& set, std::span<const std::uint32_t> active,
                                const Sentence& sentence, std::size_t position, const TagContext& ctx) {
  std::vector<FeatureKey> out;
  out.reserve(active.size());
  extract(set, active, sentence, AnchorFrame::at_word(position), ctx, out);
  return out;
}

void validate_active(const TemplateSet& set, std::span<const std::uint32_t> active) {
  std::vector<char> seen(set.size(), 0);
  for (const auto id : active) {
    if (id >= set.size()) throw ConfigError("active template id " + std::to_string(id) + " not in template set");
    if (seen[id]) throw ConfigError("active template id " + std::to_string(id) + " repeated");
    seen[id] = 1;
  }
}

}  // namespace mtag
