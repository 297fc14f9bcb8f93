#include "mtag/synthetic.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "mtag/rng.hpp"

namespace mtag::synth {
namespace {

class Builder {
 public:
  int add(std::string form, std::string lemma, std::string pos, std::string_view morph) {
    Token t;
    t.index = static_cast<int>(s_.tokens.size()) + 1;
    t.form = std::move(form);
    t.lemma = std::move(lemma);
    t.pos = std::move(pos);
    t.morph = MorphBundle::parse(morph);
    s_.tokens.push_back(std::move(t));
    return s_.tokens.back().index;
  }
  void attach(int dep, int head, std::string label) {
    auto& t = s_.tokens[static_cast<std::size_t>(dep - 1)];
    t.head = head;
    t.deprel = std::move(label);
  }
  Sentence take() { return std::move(s_); }

 private:
  Sentence s_;
};

class Zipf {
 public:
  Zipf(std::size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      total += 1.0 / std::pow(static_cast<double>(r + 1), exponent);
      cdf_[r] = total;
    }
    for (auto& c : cdf_) c /= total;
  }
  std::size_t draw(Rng& rng) const {
    const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::string syllable(Rng& rng) {
  static constexpr std::string_view onsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r",
                                                "s", "t", "v", "z", "br", "st", "tr", "pl", "gr", "sh"};
  static constexpr std::string_view vowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};
  std::string s(onsets[rng.below(std::size(onsets))]);
  s += vowels[rng.below(std::size(vowels))];
  return s;
}

std::vector<std::string> make_stems(Rng& rng, std::size_t count, std::set<std::string>& used, int min_syl,
                                    int max_syl) {
  std::vector<std::string> out;
  while (out.size() < count) {
    const int syl = min_syl + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_syl - min_syl + 1)));
    std::string stem;
    for (int i = 0; i < syl; ++i) stem += syllable(rng);
    if (rng.below(3) == 0) stem += "n";
    if (used.insert(stem).second) out.push_back(stem);
  }
  return out;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

struct Lexicon {
  std::vector<std::string> nouns;  // singular forms
  std::vector<std::string> verbs;  // stems
  std::vector<std::string> adjs;
  std::vector<std::string> names;
  Zipf noun_dist;
  Zipf verb_dist;
  Zipf adj_dist;
  Zipf name_dist;

  explicit Lexicon(Rng& rng)
      : noun_dist(2400, 1.05), verb_dist(900, 1.05), adj_dist(700, 1.0), name_dist(400, 1.0) {
    std::set<std::string> used;
    verbs = make_stems(rng, 900, used, 1, 2);
    static constexpr std::string_view noun_suffixes[] = {"", "", "", "tion", "ment", "ness", "ity", "er", "ism", "age"};
    static constexpr std::string_view adj_suffixes[] = {"ous", "ive", "al", "ful", "ic", "ish", "able", ""};
    auto noun_stems = make_stems(rng, 2400, used, 1, 3);
    for (std::size_t i = 0; i < noun_stems.size(); ++i) {
      // A quarter of the frequent nouns share their form with a verb stem.
      if (i % 4 == 1 && i / 4 < verbs.size()) {
        nouns.push_back(verbs[i / 4]);
      } else {
        nouns.push_back(noun_stems[i] + std::string(noun_suffixes[rng.below(std::size(noun_suffixes))]));
      }
    }
    for (auto& stem : make_stems(rng, 700, used, 1, 2)) {
      adjs.push_back(stem + std::string(adj_suffixes[rng.below(std::size(adj_suffixes))]));
    }
    for (auto& stem : make_stems(rng, 400, used, 2, 3)) names.push_back(capitalize(stem));
  }
};

struct Phrase {
  int head = 0;
  bool plural = false;
  int person = 3;
};

class EnglishGenerator {
 public:
  explicit EnglishGenerator(std::uint64_t seed) : rng_(seed), lex_(rng_) {}

  Sentence sentence() {
    Builder b;
    const int root = clause(b);
    b.attach(root, 0, "root");
    if (rng_.uniform() < 0.15) {
      if (rng_.uniform() < 0.5) {
        const int comma = b.add(",", ",", "PUNCT", "_");
        b.attach(comma, root, "punct");
      }
      const bool but = rng_.coin();
      const int cc = b.add(but ? "but" : "and", but ? "but" : "and", "CCONJ", "_");
      const int second = clause(b);
      b.attach(cc, second, "cc");
      b.attach(second, root, "conj");
    }
    if (rng_.uniform() < 0.92) {
      const double r = rng_.uniform();
      const char* mark = r < 0.85 ? "." : (r < 0.93 ? "?" : "!");
      const int p = b.add(mark, mark, "PUNCT", "_");
      b.attach(p, root, "punct");
    }
    return b.take();
  }

 private:
  int clause(Builder& b) {
    const Phrase subj = noun_phrase(b, true);
    std::vector<int> adverbs;
    if (rng_.uniform() < 0.08) adverbs.push_back(adverb(b));
    const double t = rng_.uniform();
    const auto& stem = lex_.verbs[lex_.verb_dist.draw(rng_)];
    const bool third_sing = !subj.plural && subj.person == 3;
    int verb = 0;
    std::vector<int> aux;
    if (t < 0.35) {
      verb = third_sing ? b.add(stem + "s", stem, "VERB", "Number=Sing|Person=3|Tense=Pres|VerbForm=Fin")
                        : b.add(stem, stem, "VERB", "Tense=Pres|VerbForm=Fin");
    } else if (t < 0.62) {
      verb = b.add(stem + "ed", stem, "VERB", "Tense=Past|VerbForm=Fin");
    } else if (t < 0.72) {
      aux.push_back(b.add(rng_.coin() ? "will" : "would", "will", "AUX", "VerbForm=Fin"));
      if (rng_.uniform() < 0.15) adverbs.push_back(adverb(b, "not"));
      verb = b.add(stem, stem, "VERB", "VerbForm=Inf");
    } else if (t < 0.88) {
      const bool past = rng_.coin();
      if (subj.person == 1 && !subj.plural && !past) {
        aux.push_back(b.add("am", "be", "AUX", "Number=Sing|Person=1|Tense=Pres|VerbForm=Fin"));
      } else if (third_sing || (subj.person == 1 && !subj.plural)) {
        aux.push_back(past ? b.add("was", "be", "AUX", "Number=Sing|Tense=Past|VerbForm=Fin")
                           : b.add("is", "be", "AUX", "Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"));
      } else {
        aux.push_back(past ? b.add("were", "be", "AUX", "Number=Plur|Tense=Past|VerbForm=Fin")
                           : b.add("are", "be", "AUX", "Number=Plur|Tense=Pres|VerbForm=Fin"));
      }
      verb = b.add(stem + "ing", stem, "VERB", "VerbForm=Ger");
    } else {
      aux.push_back(third_sing ? b.add("has", "have", "AUX", "Number=Sing|Person=3|Tense=Pres|VerbForm=Fin")
                               : b.add("have", "have", "AUX", "Tense=Pres|VerbForm=Fin"));
      if (rng_.uniform() < 0.1) adverbs.push_back(adverb(b, "also"));
      verb = b.add(stem + "ed", stem, "VERB", "Tense=Past|VerbForm=Part");
    }
    b.attach(subj.head, verb, "nsubj");
    for (const int a : aux) b.attach(a, verb, "aux");
    for (const int a : adverbs) b.attach(a, verb, "advmod");

    int object = 0;
    if (rng_.uniform() < 0.6) {
      object = noun_phrase(b, false).head;
      b.attach(object, verb, "obj");
    }
    // Once something attaches to the verb after the object, a later PP on the
    // object would cross that arc.
    if (rng_.uniform() < 0.1) {
      object = 0;
      const int to = b.add("to", "to", "PART", "_");
      const auto& s2 = lex_.verbs[lex_.verb_dist.draw(rng_)];
      const int inf = b.add(s2, s2, "VERB", "VerbForm=Inf");
      b.attach(to, inf, "mark");
      b.attach(inf, verb, "xcomp");
      if (rng_.uniform() < 0.5) {
        const int o2 = noun_phrase(b, false).head;
        b.attach(o2, inf, "obj");
      }
    }
    const int pps = rng_.uniform() < 0.45 ? (rng_.uniform() < 0.3 ? 2 : 1) : 0;
    for (int i = 0; i < pps; ++i) {
      const int pp = prep_phrase(b);
      if (object != 0 && rng_.coin()) {
        b.attach(pp, object, "nmod");
      } else {
        b.attach(pp, verb, "obl");
        object = 0;
      }
    }
    if (rng_.uniform() < 0.08) b.attach(adverb(b), verb, "advmod");
    return verb;
  }

  int adverb(Builder& b, const char* fixed = nullptr) {
    if (fixed != nullptr) return b.add(fixed, fixed, fixed == std::string_view("not") ? "PART" : "ADV", "_");
    static constexpr const char* closed[] = {"often", "never", "soon", "here", "today"};
    if (rng_.uniform() < 0.4) {
      const char* w = closed[rng_.below(std::size(closed))];
      return b.add(w, w, "ADV", "_");
    }
    const auto& adj = lex_.adjs[lex_.adj_dist.draw(rng_)];
    return b.add(adj + "ly", adj + "ly", "ADV", "_");
  }

  int prep_phrase(Builder& b) {
    static constexpr const char* preps[] = {"in", "on", "with", "for", "from", "of", "by", "at", "to", "under"};
    const char* p = preps[rng_.below(std::size(preps))];
    const int adp = b.add(p, p, "ADP", "_");
    const Phrase np = noun_phrase(b, false);
    b.attach(adp, np.head, "case");
    return np.head;
  }

  Phrase noun_phrase(Builder& b, bool subject) {
    const double r = rng_.uniform();
    Phrase ph;
    if (r < 0.16) {
      struct Pron {
        const char* nom;
        const char* acc;
        bool plural;
        int person;
      };
      static constexpr Pron prons[] = {{"he", "him", false, 3}, {"she", "her", false, 3}, {"it", "it", false, 3},
                                       {"they", "them", true, 3}, {"we", "us", true, 1},   {"I", "me", false, 1},
                                       {"you", "you", true, 2}};
      const auto& p = prons[rng_.below(std::size(prons))];
      std::string morph;
      if (std::string_view(p.nom) != p.acc) morph = subject ? "Case=Nom|" : "Case=Acc|";
      morph += std::string("Number=") + (p.plural ? "Plur" : "Sing") + "|Person=" + std::to_string(p.person);
      const char* form = subject ? p.nom : p.acc;
      ph.head = b.add(form, p.nom, "PRON", morph);
      ph.plural = p.plural;
      ph.person = p.person;
      return ph;
    }
    if (r < 0.26) {
      const auto& name = lex_.names[lex_.name_dist.draw(rng_)];
      ph.head = b.add(name, name, "PROPN", "Number=Sing");
      if (rng_.uniform() < 0.3) {
        const auto& second = lex_.names[lex_.name_dist.draw(rng_)];
        b.attach(b.add(second, second, "PROPN", "Number=Sing"), ph.head, "flat");
      }
      return ph;
    }
    if (r < 0.31) {
      int num = 0;
      if (rng_.coin()) {
        static constexpr const char* words[] = {"two", "three", "four", "five", "ten", "twenty"};
        const char* w = words[rng_.below(std::size(words))];
        num = b.add(w, w, "NUM", "NumType=Card");
      } else {
        std::string digits = std::to_string(2 + rng_.below(998));
        if (rng_.uniform() < 0.3) digits += "," + std::to_string(100 + rng_.below(900));
        if (rng_.uniform() < 0.2) digits += "." + std::to_string(rng_.below(10));
        num = b.add(digits, digits, "NUM", "NumType=Card");
      }
      const auto& noun = lex_.nouns[lex_.noun_dist.draw(rng_)];
      ph.head = b.add(noun + "s", noun, "NOUN", "Number=Plur");
      ph.plural = true;
      b.attach(num, ph.head, "nummod");
      return ph;
    }
    ph.plural = rng_.uniform() < 0.35;
    int det = 0;
    if (rng_.uniform() < (ph.plural ? 0.55 : 0.85)) {
      const double d = rng_.uniform();
      if (d < 0.55) {
        det = b.add(subject && rng_.uniform() < 0.1 ? "The" : "the", "the", "DET", "Definite=Def|PronType=Art");
      } else if (ph.plural) {
        det = d < 0.8 ? b.add("these", "this", "DET", "Number=Plur|PronType=Dem") : b.add("some", "some", "DET", "_");
      } else if (d < 0.85) {
        det = b.add("a", "a", "DET", "Definite=Ind|PronType=Art");
      } else {
        det = b.add("this", "this", "DET", "Number=Sing|PronType=Dem");
      }
    }
    std::vector<int> mods;
    for (int i = 0; i < 2 && rng_.uniform() < 0.3; ++i) {
      int very = 0;
      if (rng_.uniform() < 0.1) very = b.add("very", "very", "ADV", "_");
      const auto& adj = lex_.adjs[lex_.adj_dist.draw(rng_)];
      const bool cmp = rng_.uniform() < 0.1;
      const int a = cmp ? b.add(adj + "er", adj, "ADJ", "Degree=Cmp") : b.add(adj, adj, "ADJ", "Degree=Pos");
      if (very != 0) b.attach(very, a, "advmod");
      mods.push_back(a);
    }
    int compound = 0;
    if (rng_.uniform() < 0.08) {
      const auto& c = lex_.nouns[lex_.noun_dist.draw(rng_)];
      compound = b.add(c, c, "NOUN", "Number=Sing");
    }
    const auto& noun = lex_.nouns[lex_.noun_dist.draw(rng_)];
    ph.head = ph.plural ? b.add(noun + "s", noun, "NOUN", "Number=Plur") : b.add(noun, noun, "NOUN", "Number=Sing");
    if (det != 0) b.attach(det, ph.head, "det");
    for (const int m : mods) b.attach(m, ph.head, "amod");
    if (compound != 0) b.attach(compound, ph.head, "compound");
    return ph;
  }

  Rng rng_;
  Lexicon lex_;
};

}  // namespace

Corpus english_like(std::size_t sentences, std::uint64_t seed) {
  EnglishGenerator gen(seed);
  Corpus out;
  out.reserve(sentences);
  for (std::size_t i = 0; i < sentences; ++i) out.push_back(gen.sentence());
  return out;
}

Corpus right_context(std::size_t sentences, std::uint64_t seed) {
  Rng rng(seed);
  Corpus out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    const int len = 6 + static_cast<int>(rng.below(7));
    std::vector<bool> ambiguous(static_cast<std::size_t>(len), false);
    std::vector<bool> noun(static_cast<std::size_t>(len), false);
    for (int i = 0; i < len; ++i) {
      const auto u = static_cast<std::size_t>(i);
      const bool prev_ambiguous = i > 0 && ambiguous[u - 1];
      ambiguous[u] = !prev_ambiguous && i + 1 < len && rng.uniform() < 0.45;
      noun[u] = rng.coin();
    }
    Builder b;
    int root = 0;
    for (int i = 0; i < len; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (ambiguous[u]) {
        const std::string form = "a" + std::to_string(rng.below(12));
        b.add(form, form, noun[u + 1] ? "A_N" : "A_V", "_");
      } else {
        const std::string form = (noun[u] ? "n" : "v") + std::to_string(rng.below(60));
        const int t = b.add(form, form, noun[u] ? "N" : "V", "_");
        if (root == 0) root = t;
      }
    }
    for (int i = 1; i <= len; ++i) {
      if (ambiguous[static_cast<std::size_t>(i - 1)]) {
        b.attach(i, i + 1, "dep");
      } else if (i == root) {
        b.attach(i, 0, "root");
      } else {
        b.attach(i, root, "dep");
      }
    }
    out.push_back(b.take());
  }
  return out;
}

Corpus agreement(std::size_t sentences, std::uint64_t seed) {
  Rng rng(seed);
  std::set<std::string> used;
  const auto noun_stems = make_stems(rng, 3000, used, 2, 3);
  const auto verb_stems = make_stems(rng, 1200, used, 2, 3);
  Corpus out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    const int nouns = 1 + static_cast<int>(rng.below(4));
    const int verb_slot = static_cast<int>(rng.below(static_cast<std::uint64_t>(nouns + 1)));
    const bool verb_masc = rng.coin();
    Builder b;
    std::vector<std::pair<int, bool>> deps;  // noun index, masculine
    int verb = 0;
    for (int slot = 0; slot <= nouns; ++slot) {
      if (slot == verb_slot) {
        const auto& stem = verb_stems[rng.below(verb_stems.size())];
        verb = b.add(stem + (verb_masc ? "on" : "an"), stem, "VERB",
                     verb_masc ? "Dummy=x|Gender=m" : "Dummy=x|Gender=f");
        continue;
      }
      int det = 0;
      if (rng.uniform() < 0.4) det = b.add("ke", "ke", "DET", "Dummy=x");
      const bool masc = rng.coin();
      const auto& stem = noun_stems[rng.below(noun_stems.size())];
      const int n = b.add(stem + (masc ? "o" : "a"), stem, "NOUN", masc ? "Dummy=x|Gender=m" : "Dummy=x|Gender=f");
      if (det != 0) b.attach(det, n, "det");
      deps.emplace_back(n, masc);
    }
    b.attach(verb, 0, "root");
    for (const auto& [n, masc] : deps) b.attach(n, verb, masc == verb_masc ? "agr" : "dis");
    out.push_back(b.take());
  }
  return out;
}

}  // namespace mtag::synth
