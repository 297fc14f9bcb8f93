#pragma once

#include <string>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/rng.hpp"

namespace mtag::fixtures {

inline Sentence make_sentence(const std::vector<std::string>& forms, const std::vector<std::string>& tags = {},
                              const std::vector<int>& heads = {}, const std::vector<std::string>& labels = {}) {
  Sentence s;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Token t;
    t.index = static_cast<int>(i) + 1;
    t.form = forms[i];
    t.pos = i < tags.size() ? tags[i] : "X";
    t.head = i < heads.size() ? heads[i] : 0;
    t.deprel = i < labels.size() ? labels[i] : (t.head == 0 ? "root" : "dep");
    s.tokens.push_back(t);
  }
  return s;
}

// Random projective single-root tree: heads[i] for tokens 1..n (slot 0 unused).
// Every span picks a head, then cuts its left and right remainders into
// contiguous child subtrees.
inline void grow(std::vector<int>& heads, int lo, int hi, int parent, Rng& rng) {
  if (lo > hi) return;
  const int m = lo + static_cast<int>(rng.below(static_cast<std::uint64_t>(hi - lo + 1)));
  heads[static_cast<std::size_t>(m)] = parent;
  const auto split = [&](int a, int b) {
    while (a <= b) {
      const int end = a + static_cast<int>(rng.below(static_cast<std::uint64_t>(b - a + 1)));
      grow(heads, a, end, m, rng);
      a = end + 1;
    }
  };
  split(lo, m - 1);
  split(m + 1, hi);
}

inline std::vector<int> random_tree(int n, Rng& rng) {
  std::vector<int> heads(static_cast<std::size_t>(n) + 1, -1);
  grow(heads, 1, n, 0, rng);
  return heads;
}

}  // namespace mtag::fixtures
