#include "mtag/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "mtag/error.hpp"
#include "mtag/rng.hpp"

namespace mtag {

MorphBundle MorphBundle::parse(std::string_view text) {
  MorphBundle bundle;
  if (text.empty() || text == "_") return bundle;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('|', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    if (!item.empty()) {
      const auto eq = item.find('=');
      std::string attribute(eq == std::string_view::npos ? item : item.substr(0, eq));
      std::string value(eq == std::string_view::npos ? std::string_view{} : item.substr(eq + 1));
      if (!bundle.insert(attribute, std::move(value))) {
        throw ConfigError("duplicate morph attribute '" + attribute + "'");
      }
    }
    start = end + 1;
  }
  return bundle;
}

bool MorphBundle::insert(std::string attribute, std::string value) {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), attribute,
                             [](const Entry& e, const std::string& a) { return e.first < a; });
  if (it != entries_.end() && it->first == attribute) return false;
  entries_.emplace(it, std::move(attribute), std::move(value));
  return true;
}

const std::string* MorphBundle::find(std::string_view attribute) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), attribute,
                             [](const Entry& e, std::string_view a) { return e.first < a; });
  if (it != entries_.end() && it->first == attribute) return &it->second;
  return nullptr;
}

MorphBundle MorphBundle::restricted(const std::vector<std::string>& attributes) const {
  MorphBundle out;
  for (const auto& [attribute, value] : entries_) {
    if (std::find(attributes.begin(), attributes.end(), attribute) != attributes.end()) {
      out.entries_.emplace_back(attribute, value);
    }
  }
  return out;
}

std::string MorphBundle::str() const {
  if (entries_.empty()) return "_";
  std::string out;
  for (const auto& [attribute, value] : entries_) {
    if (!out.empty()) out.push_back('|');
    out += attribute;
    if (!value.empty()) {
      out.push_back('=');
      out += value;
    }
  }
  return out;
}

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      break;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return cols;
}

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc{} && ptr == last;
}

std::string absent_to_empty(std::string_view s) { return s == "_" ? std::string{} : std::string(s); }

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

}  // namespace

Corpus read_conll(std::istream& in) {
  Corpus corpus;
  Sentence current;
  std::vector<std::size_t> token_lines;
  std::string line;
  std::size_t lineno = 0;

  auto flush = [&]() {
    if (current.empty()) return;
    const int n = static_cast<int>(current.size());
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (current[i].head > n) {
        throw ParseError(token_lines[i], "HEAD " + std::to_string(current[i].head) + " beyond sentence length");
      }
    }
    corpus.push_back(std::move(current));
    current = Sentence{};
    token_lines.clear();
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (is_blank(line)) {
      flush();
      continue;
    }
    if (line[0] == '#') continue;
    const auto cols = split_tabs(line);
    if (cols.size() < 8) {
      throw ParseError(lineno, "expected at least 8 tab-separated columns, found " + std::to_string(cols.size()));
    }
    // CoNLL-U multiword ranges and empty nodes.
    if (cols[0].find_first_of("-.") != std::string_view::npos) continue;

    Token token;
    if (!parse_int(cols[0], token.index)) throw ParseError(lineno, "non-integer ID '" + std::string(cols[0]) + "'");
    if (token.index != static_cast<int>(current.size()) + 1) {
      throw ParseError(lineno, "ID " + std::to_string(token.index) + " out of sequence");
    }
    token.form = std::string(cols[1]);
    token.lemma = absent_to_empty(cols[2]);
    token.pos = absent_to_empty(cols[4] == "_" ? cols[3] : cols[4]);
    try {
      token.morph = MorphBundle::parse(cols[5]);
    } catch (const ConfigError& e) {
      throw ParseError(lineno, e.what());
    }
    if (!parse_int(cols[6], token.head)) throw ParseError(lineno, "non-integer HEAD '" + std::string(cols[6]) + "'");
    if (token.head < 0) throw ParseError(lineno, "negative HEAD");
    if (token.head == token.index) throw ParseError(lineno, "token is its own head");
    token.deprel = absent_to_empty(cols[7]);
    current.tokens.push_back(std::move(token));
    token_lines.push_back(lineno);
  }
  flush();
  return corpus;
}

Corpus read_conll(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_conll(in);
}

namespace {

std::string_view or_absent(const std::string& s) { return s.empty() ? std::string_view("_") : std::string_view(s); }

}  // namespace

void write_conll(std::ostream& out, const Corpus& corpus, bool predicted, const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  for (const auto& sentence : corpus) {
    for (const auto& t : sentence.tokens) {
      const auto pos = or_absent(t.pos);
      const auto deprel = or_absent(t.deprel);
      out << t.index << '\t' << or_absent(t.form) << '\t' << or_absent(t.lemma) << '\t' << pos << '\t' << pos << '\t'
          << t.morph.str() << '\t' << t.head << '\t' << deprel << '\t';
      if (predicted) {
        out << t.head << '\t' << deprel << '\n';
      } else {
        out << "_\t_\n";
      }
    }
    out << '\n';
  }
}

void write_conll(const std::filesystem::path& path, const Corpus& corpus, bool predicted,
                 const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_conll(out, corpus, predicted, comments);
  if (!out) throw IoError("write failed for " + path.string());
}

TrainDev split_train_dev(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0,1)");
  }
  if (corpus.empty()) throw ConfigError("cannot split an empty corpus");
  const auto n = corpus.size();
  const auto n_train = static_cast<std::size_t>(std::lround(spec.train_fraction * static_cast<double>(n)));
  auto perm = seeded_permutation(n, spec.seed);
  std::vector<char> in_train(n, 0);
  for (std::size_t i = 0; i < n_train; ++i) in_train[perm[i]] = 1;
  TrainDev out;
  for (std::size_t i = 0; i < n; ++i) (in_train[i] ? out.train : out.dev).push_back(corpus[i]);
  return out;
}

std::vector<Fold> kfold(const Corpus& corpus, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k-fold needs k >= 2");
  if (static_cast<std::size_t>(k) > corpus.size()) throw ConfigError("more folds than sentences");
  const auto n = corpus.size();
  const auto perm = seeded_permutation(n, seed);
  std::vector<int> fold_of(n);
  const std::size_t base = n / static_cast<std::size_t>(k);
  const std::size_t extra = n % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (int f = 0; f < k; ++f) {
    const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
    for (std::size_t i = 0; i < size; ++i) fold_of[perm[pos++]] = f;
  }
  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i) {
    for (int f = 0; f < k; ++f) {
      auto& fold = folds[static_cast<std::size_t>(f)];
      if (fold_of[i] == f) {
        fold.test.push_back(corpus[i]);
        fold.test_indices.push_back(i);
      } else {
        fold.train.push_back(corpus[i]);
      }
    }
  }
  return folds;
}

bool is_tree(const Sentence& sentence) {
  const int n = static_cast<int>(sentence.size());
  for (int i = 1; i <= n; ++i) {
    int node = i;
    int steps = 0;
    while (node != 0) {
      const int head = sentence[static_cast<std::size_t>(node - 1)].head;
      if (head < 0 || head > n) return false;
      node = head;
      if (++steps > n) return false;
    }
  }
  return true;
}

bool is_projective(const Sentence& sentence) {
  if (!is_tree(sentence)) return false;
  const int n = static_cast<int>(sentence.size());
  auto head_of = [&](int i) { return sentence[static_cast<std::size_t>(i - 1)].head; };
  for (int d = 1; d <= n; ++d) {
    const int h = head_of(d);
    const int lo = std::min(h, d);
    const int hi = std::max(h, d);
    for (int k = lo + 1; k < hi; ++k) {
      // every word strictly between must be dominated by h
      int node = k;
      while (node != 0 && node != h) node = head_of(node);
      if (node != h) return false;
    }
  }
  return true;
}

bool is_derivable(const Sentence& sentence) {
  if (!is_projective(sentence)) return false;
  const auto roots = std::count_if(sentence.tokens.begin(), sentence.tokens.end(),
                                   [](const Token& t) { return t.head == 0; });
  return roots == 1 || sentence.empty();
}

DerivableSplit filter_derivable(const Corpus& corpus) {
  DerivableSplit out;
  for (const auto& s : corpus) {
    if (is_derivable(s)) {
      out.kept.push_back(s);
    } else {
      ++out.skipped;
    }
  }
  return out;
}

std::size_t token_count(const Corpus& corpus) {
  std::size_t n = 0;
  for (const auto& s : corpus) n += s.size();
  return n;
}

}  // namespace mtag
