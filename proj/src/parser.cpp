#include "mtag/parser.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>
#include <unordered_set>
#include <map>

#include <spdlog/spdlog.h>

#include "mtag/error.hpp"
#include "mtag/rng.hpp"

namespace mtag {
namespace {

constexpr std::string_view kDefaultParserTemplates = R"(# configuration features for transition scoring
pos(s0)
form(s0)
form(s0)+pos(s0)
pos(s1)
form(s1)
form(s1)+pos(s1)
pos(b0)
form(b0)
form(b0)+pos(b0)
pos(b1)
form(b1)+pos(b1)
pos(b2)
pos(s0)+pos(s1)
form(s0)+pos(s1)
pos(s0)+form(s1)
form(s0)+form(s1)
pos(s0)+pos(b0)
pos(s0)+pos(s1)+pos(b0)
pos(s0)+pos(b0)+pos(b1)
pos(s2)+pos(s1)+pos(s0)
pos(s1)+pos(s0)+pos(s0l)
pos(s1)+pos(s0)+pos(s0r)
pos(s1)+pos(s1l)+pos(s0)
pos(s1)+pos(s1r)+pos(s0)
deprel(s0l)+pos(s0)
deprel(s0r)+pos(s0)
deprel(s1l)+pos(s1)
deprel(s1r)+pos(s1)
lemma(s0)+pos(s1)
pos(s0)+lemma(s1)
morph(s0)
morph(s1)
morph(b0)
morph(s0)+morph(s1)
morph(s0)+pos(s0)+morph(s1)+pos(s1)
)";

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-independent set hashes: a configuration's arcs and tags are sums of
// per-element mixes, so two paths to the same configuration hash alike.
std::uint64_t arc_mix(int head, int dep, int label) {
  return mix64((static_cast<std::uint64_t>(dep) << 42) ^ (static_cast<std::uint64_t>(head) << 21) ^
               static_cast<std::uint64_t>(label) ^ 0xa5a5000000000000ULL);
}

std::uint64_t tag_mix(int position, int tag) {
  return mix64((static_cast<std::uint64_t>(position) << 32) ^ static_cast<std::uint64_t>(tag) ^ 0x5a5a000000000000ULL);
}

int stack_at(const ParserItem& item, std::size_t depth) {
  return item.stack.size() > depth ? item.stack[item.stack.size() - 1 - depth] : -1;
}

// Applies `t` to `item` in place; `item` must already be a copy of the parent.
void advance(ParserItem& item, const Transition& t, double transition_score) {
  switch (t.move) {
    case Move::Shift:
      if (item.buffer_empty()) throw OracleError("SHIFT with an empty buffer");
      item.tags[static_cast<std::size_t>(item.cursor)] = static_cast<int>(t.arg);
      item.stack.push_back(item.cursor);
      ++item.cursor;
      break;
    case Move::Left: {
      if (item.stack.size() < 2 || stack_at(item, 1) == 0) throw OracleError("LEFT-ARC needs a non-root second item");
      const int s0 = stack_at(item, 0);
      const int s1 = stack_at(item, 1);
      item.heads[static_cast<std::size_t>(s1)] = s0;
      item.labels[static_cast<std::size_t>(s1)] = static_cast<int>(t.arg);
      auto& lm = item.leftmost[static_cast<std::size_t>(s0)];
      if (lm < 0 || s1 < lm) lm = s1;
      item.stack.erase(item.stack.end() - 2);
      break;
    }
    case Move::Right: {
      if (item.stack.size() < 2) throw OracleError("RIGHT-ARC needs two stack items");
      const int s0 = stack_at(item, 0);
      const int s1 = stack_at(item, 1);
      if (s1 == 0 && !item.buffer_empty()) throw OracleError("root attachment before the buffer is empty");
      item.heads[static_cast<std::size_t>(s0)] = s1;
      item.labels[static_cast<std::size_t>(s0)] = static_cast<int>(t.arg);
      auto& rm = item.rightmost[static_cast<std::size_t>(s1)];
      if (rm < 0 || s0 > rm) rm = s0;
      item.stack.pop_back();
      break;
    }
  }
  item.score += transition_score;
  item.history.push_back(t);
}


void legal_into(const ParserItem& item, const Candidates& candidates, std::size_t num_labels,
                std::vector<Transition>& out) {
  out.clear();
  if (item.terminal()) return;
  if (!item.buffer_empty()) {
    for (const auto tag : candidates[static_cast<std::size_t>(item.cursor - 1)]) out.push_back({Move::Shift, tag});
  }
  if (item.stack.size() >= 2) {
    const int s1 = stack_at(item, 1);
    if (s1 != 0) {
      for (std::uint32_t l = 0; l < num_labels; ++l) out.push_back({Move::Left, l});
    }
    if (s1 != 0 || item.buffer_empty()) {
      for (std::uint32_t l = 0; l < num_labels; ++l) out.push_back({Move::Right, l});
    }
  }
}

std::string_view distance_bucket(int d) {
  static constexpr std::string_view small[] = {"1", "2", "3", "4"};
  if (d <= 0) return "r";
  if (d <= 4) return small[d - 1];
  if (d <= 9) return "5-9";
  return "10+";
}

struct BeamEntry {
  ParserItem item;
  std::uint64_t arc_sig = 0;
  std::uint64_t tag_sig = 0;
};

struct Candidate {
  std::uint32_t parent;
  Transition transition;
  double score;
  std::uint64_t arc_sig;
  std::uint64_t tag_sig;
};

void extend_sigs(const ParserItem& item, const Transition& t, std::uint64_t& arc_sig, std::uint64_t& tag_sig) {
  switch (t.move) {
    case Move::Shift:
      tag_sig += tag_mix(item.cursor, static_cast<int>(t.arg));
      break;
    case Move::Left:
      arc_sig += arc_mix(stack_at(item, 0), stack_at(item, 1), static_cast<int>(t.arg));
      break;
    case Move::Right:
      arc_sig += arc_mix(stack_at(item, 1), stack_at(item, 0), static_cast<int>(t.arg));
      break;
  }
}

struct GoldTrack {
  std::vector<std::uint64_t> arc_sig;  // after step s (index s-1)
  std::vector<std::uint64_t> tag_sig;
};

struct BeamOutcome {
  ParserItem best;
  bool early = false;
  int steps = 0;
};

bool candidate_before(const Candidate& x, const Candidate& y) {
  if (x.score != y.score) return x.score > y.score;
  if (x.transition != y.transition) return x.transition < y.transition;
  return x.parent < y.parent;
}

// Candidate indices in an order that prune_keys treats exactly like the full
// sort: the best head of the list sorted, then only those later candidates
// that repeat a tree already chosen from the head (the rest can never
// survive). Falls back to a full sort when the head holds too few trees.
void sorted_for_pruning(const std::vector<Candidate>& cands, const std::vector<std::uint64_t>& arc_keys,
                        const BeamConfig& config, std::vector<std::size_t>& order) {
  const auto before = [&](std::size_t a, std::size_t b) { return candidate_before(cands[a], cands[b]); };
  order.resize(cands.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto want = static_cast<std::size_t>(std::max(config.tree_beam, 1));
  const std::size_t head = 2 * (want + static_cast<std::size_t>(std::max(config.tag_variant_beam, 0)));
  if (order.size() <= head) {
    std::sort(order.begin(), order.end(), before);
    return;
  }
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), before);
  std::unordered_set<std::uint64_t> trees;
  for (std::size_t r = 0; r < head && trees.size() < want; ++r) trees.insert(arc_keys[order[r]]);
  if (trees.size() < want) {
    std::sort(order.begin() + static_cast<std::ptrdiff_t>(head), order.end(), before);
    return;
  }
  const auto tail = std::stable_partition(order.begin() + static_cast<std::ptrdiff_t>(head), order.end(),
                                          [&](std::size_t i) { return trees.count(arc_keys[i]) > 0; });
  std::sort(order.begin() + static_cast<std::ptrdiff_t>(head), tail, before);
  order.erase(tail, order.end());
}

BeamOutcome run_beam(const JointModel& model, const WeightStore& weights, const Sentence& sentence,
                     const Candidates& candidates, const std::vector<std::uint32_t>& tagger_best,
                     const BeamConfig& config, const GoldTrack* gold) {
  const std::size_t n = sentence.size();
  BeamOutcome out;
  if (n == 0) {
    out.best = ParserItem::initial(0);
    return out;
  }
  const TransitionScorer scorer(model, weights, sentence, tagger_best);
  std::vector<BeamEntry> beam{{ParserItem::initial(n), 0, 0}};
  std::vector<BeamEntry> next;
  std::vector<Transition> legal;
  std::vector<Candidate> cands;
  std::vector<double> scores(model.num_classes());
  std::vector<std::size_t> order;
  std::vector<std::uint64_t> arc_keys;
  std::vector<std::uint64_t> tag_keys;
  for (std::size_t step = 0; step < 2 * n; ++step) {
    cands.clear();
    for (std::uint32_t r = 0; r < beam.size(); ++r) {
      const auto& entry = beam[r];
      scorer.score(entry.item, scores);
      legal_into(entry.item, candidates, model.labels.size(), legal);
      for (const auto& t : legal) {
        Candidate c{r, t, entry.item.score + scores[model.class_of(t)], entry.arc_sig, entry.tag_sig};
        extend_sigs(entry.item, t, c.arc_sig, c.tag_sig);
        cands.push_back(c);
      }
    }
    arc_keys.resize(cands.size());
    tag_keys.resize(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) {
      arc_keys[i] = cands[i].arc_sig;
      tag_keys[i] = cands[i].tag_sig;
    }
    sorted_for_pruning(cands, arc_keys, config, order);
    const auto kept = prune_keys(order, arc_keys, tag_keys, config);
    // Copy-assignment into recycled entries reuses their vector capacity.
    if (next.size() < kept.size()) next.resize(kept.size());
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const auto& c = cands[kept[k]];
      auto& entry = next[k];
      entry.item = beam[c.parent].item;
      advance(entry.item, c.transition, 0.0);
      entry.item.score = c.score;
      entry.arc_sig = c.arc_sig;
      entry.tag_sig = c.tag_sig;
    }
    next.resize(kept.size());
    std::swap(beam, next);
    if (gold != nullptr) {
      const bool alive = std::any_of(beam.begin(), beam.end(), [&](const BeamEntry& e) {
        return e.arc_sig == gold->arc_sig[step] && e.tag_sig == gold->tag_sig[step];
      });
      if (!alive) {
        out.best = beam.front().item;
        out.early = true;
        out.steps = static_cast<int>(step + 1);
        return out;
      }
    }
  }
  out.best = std::move(beam.front().item);
  out.steps = static_cast<int>(2 * n);
  return out;
}

Candidates candidates_from(const SentenceNBest& nbest, const BeamConfig& config) {
  Candidates c(nbest.size());
  for (std::size_t i = 0; i < nbest.size(); ++i) {
    c[i] = filter_candidates(nbest[i], config.nbest_k, config.alpha);
    std::sort(c[i].begin(), c[i].end());
  }
  return c;
}

double hamming(const ParserItem& a, const ParserItem& b) {
  double loss = 0.0;
  for (std::size_t j = 1; j < a.heads.size(); ++j) {
    if (a.tags[j] != b.tags[j]) loss += 1.0;
    if (a.heads[j] != b.heads[j] || a.labels[j] != b.labels[j]) loss += 1.0;
  }
  return loss;
}

}  // namespace

std::vector<std::uint32_t> filter_candidates(const NBestList& nbest, int k, double alpha) {
  std::vector<std::uint32_t> out;
  if (nbest.empty()) return out;
  const double floor = nbest.front().score - alpha;
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 1)), nbest.size());
  out.push_back(nbest.front().tag);
  for (std::size_t j = 1; j < m; ++j) {
    if (nbest[j].score >= floor) out.push_back(nbest[j].tag);
  }
  return out;
}

ParserItem ParserItem::initial(std::size_t n) {
  ParserItem item;
  item.heads.assign(n + 1, -1);
  item.labels.assign(n + 1, -1);
  item.tags.assign(n + 1, -1);
  item.leftmost.assign(n + 1, -1);
  item.rightmost.assign(n + 1, -1);
  item.history.reserve(2 * n);
  return item;
}

std::vector<Transition> legal_transitions(const ParserItem& item, const Candidates& candidates,
                                          std::size_t num_labels) {
  std::vector<Transition> out;
  legal_into(item, candidates, num_labels, out);
  return out;
}


ParserItem apply(const ParserItem& item, const Transition& t, double transition_score) {
  ParserItem next = item;
  advance(next, t, transition_score);
  return next;
}

std::vector<Transition> oracle(const std::vector<int>& heads, const std::vector<int>& labels,
                               const std::vector<int>& tags) {
  const std::size_t n = heads.empty() ? 0 : heads.size() - 1;
  std::vector<int> pending(n + 1, 0);  // gold dependents not yet attached
  for (std::size_t j = 1; j <= n; ++j) {
    const int h = heads[j];
    if (h < 0 || h > static_cast<int>(n) || h == static_cast<int>(j)) {
      throw OracleError("token " + std::to_string(j) + " has no valid gold head");
    }
    ++pending[static_cast<std::size_t>(h)];
  }
  std::vector<Transition> out;
  ParserItem item = ParserItem::initial(n);
  while (!item.terminal()) {
    Transition t{};
    bool found = false;
    if (item.stack.size() >= 2) {
      const int s0 = stack_at(item, 0);
      const int s1 = stack_at(item, 1);
      if (s1 != 0 && heads[static_cast<std::size_t>(s1)] == s0 && pending[static_cast<std::size_t>(s1)] == 0) {
        t = {Move::Left, static_cast<std::uint32_t>(labels[static_cast<std::size_t>(s1)])};
        found = true;
      } else if (heads[static_cast<std::size_t>(s0)] == s1 && pending[static_cast<std::size_t>(s0)] == 0 &&
                 (s1 != 0 || item.buffer_empty())) {
        t = {Move::Right, static_cast<std::uint32_t>(labels[static_cast<std::size_t>(s0)])};
        found = true;
      }
    }
    if (!found) {
      if (item.buffer_empty()) throw OracleError("gold tree cannot be derived (non-projective or multi-rooted)");
      t = {Move::Shift, static_cast<std::uint32_t>(tags[static_cast<std::size_t>(item.cursor)])};
    }
    if (t.move == Move::Left) --pending[static_cast<std::size_t>(stack_at(item, 0))];
    if (t.move == Move::Right) --pending[static_cast<std::size_t>(stack_at(item, 1))];
    item = apply(item, t);
    out.push_back(t);
  }
  return out;
}

std::vector<std::size_t> prune_keys(const std::vector<std::size_t>& order, const std::vector<std::uint64_t>& arc_keys,
                                    const std::vector<std::uint64_t>& tag_keys, const BeamConfig& config) {
  struct PairHash {
    std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
      return static_cast<std::size_t>(p.first ^ mix64(p.second));
    }
  };
  std::unordered_map<std::uint64_t, int> trees;  // arc key -> variants taken
  std::unordered_set<std::pair<std::uint64_t, std::uint64_t>, PairHash> seen;
  std::vector<char> taken(order.size(), 0);
  for (std::size_t r = 0; r < order.size() && trees.size() < static_cast<std::size_t>(config.tree_beam); ++r) {
    const auto i = order[r];
    if (trees.try_emplace(arc_keys[i], 0).second) {
      seen.insert({arc_keys[i], tag_keys[i]});
      taken[r] = 1;
    }
  }
  int variants = 0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!config.per_tree_variants && variants >= config.tag_variant_beam) break;
    if (taken[r]) continue;
    const auto i = order[r];
    auto tree = trees.find(arc_keys[i]);
    if (tree == trees.end()) continue;
    if (config.per_tree_variants && tree->second >= config.tag_variant_beam) continue;
    if (!seen.insert({arc_keys[i], tag_keys[i]}).second) continue;
    ++tree->second;
    ++variants;
    taken[r] = 1;
  }
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (taken[r]) kept.push_back(order[r]);
  }
  return kept;
}

std::vector<ParserItem> prune(const std::vector<ParserItem>& items, const BeamConfig& config) {
  std::map<std::vector<int>, std::uint64_t> arc_ids;
  std::map<std::vector<int>, std::uint64_t> tag_ids;
  std::vector<std::uint64_t> arc_keys(items.size());
  std::vector<std::uint64_t> tag_keys(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) {
    std::vector<int> arcs = items[i].heads;
    arcs.insert(arcs.end(), items[i].labels.begin(), items[i].labels.end());
    arc_keys[i] = arc_ids.try_emplace(std::move(arcs), arc_ids.size()).first->second;
    tag_keys[i] = tag_ids.try_emplace(items[i].tags, tag_ids.size()).first->second;
  }
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return items[a].score > items[b].score; });
  auto kept = prune_keys(order, arc_keys, tag_keys, config);
  std::sort(kept.begin(), kept.end());
  std::vector<ParserItem> out;
  out.reserve(kept.size());
  for (const auto i : kept) out.push_back(items[i]);
  return out;
}

std::size_t JointModel::class_of(const Transition& t) const {
  switch (t.move) {
    case Move::Shift: return t.arg;
    case Move::Left: return num_tags() + t.arg;
    case Move::Right: return num_tags() + labels.size() + t.arg;
  }
  return 0;
}

std::string JointModel::transition_name(const Transition& t) const {
  switch (t.move) {
    case Move::Shift: return "SHIFT:" + tagger.tags.label(t.arg);
    case Move::Left: return "LEFT:" + labels[t.arg];
    case Move::Right: return "RIGHT:" + labels[t.arg];
  }
  return {};
}

TemplateSet default_parser_templates() {
  auto set = parse_template_spec(kDefaultParserTemplates, "parser");
  set.hash_base = kParserHashBase;
  return set;
}

TransitionScorer::TransitionScorer(const JointModel& model, const WeightStore& weights, const Sentence& sentence,
                                   std::vector<std::uint32_t> tagger_best)
    : model_(model), weights_(weights), sentence_(sentence), tagger_best_(std::move(tagger_best)) {
  if (tagger_best_.size() != sentence.size()) throw AlignmentError("tagger output does not cover the sentence");
}

void TransitionScorer::fill_context(const ParserItem& item, TagContext& ctx) const {
  const auto& tags = model_.tagger.tags;
  const bool has_pos = tags.target().has_pos();
  const bool has_morph = tags.target().has_morph();
  ctx.reset(sentence_.size());
  for (std::size_t j = 1; j <= sentence_.size(); ++j) {
    const int chosen = item.tags[j];
    const auto tag = chosen >= 0 ? static_cast<std::size_t>(chosen) : tagger_best_[j - 1];
    if (has_pos) ctx.pos[j - 1] = tags.pos(tag);
    if (has_morph) ctx.morph[j - 1] = tags.morph(tag);
    if (item.labels[j] >= 0) ctx.deprel[j - 1] = model_.labels[static_cast<std::size_t>(item.labels[j])];
  }
}

void TransitionScorer::features(const ParserItem& item, std::vector<FeatureKey>& config,
                                std::vector<FeatureKey>& shift) const {
  thread_local TagContext ctx;
  fill_context(item, ctx);
  const int n = static_cast<int>(sentence_.size());
  AnchorFrame frame;
  const int s0 = stack_at(item, 0);
  const int s1 = stack_at(item, 1);
  frame[Anchor::S0] = s0;
  frame[Anchor::S1] = s1;
  frame[Anchor::S2] = stack_at(item, 2);
  for (int d = 0; d < 3; ++d) {
    const int b = item.cursor + d;
    frame.index[static_cast<std::size_t>(Anchor::B0) + static_cast<std::size_t>(d)] = b <= n ? b : -1;
  }
  if (s0 > 0) {
    frame[Anchor::S0L] = item.leftmost[static_cast<std::size_t>(s0)];
    frame[Anchor::S0R] = item.rightmost[static_cast<std::size_t>(s0)];
  }
  if (s1 > 0) {
    frame[Anchor::S1L] = item.leftmost[static_cast<std::size_t>(s1)];
    frame[Anchor::S1R] = item.rightmost[static_cast<std::size_t>(s1)];
  }
  config.clear();
  shift.clear();
  const auto& pt = model_.parser_templates;
  for (std::uint32_t id = 0; id < pt.size(); ++id) {
    const std::uint32_t one[] = {id};
    extract(pt, one, sentence_, frame, ctx, config);
  }
  const std::uint32_t structural = kParserHashBase - 1;
  config.push_back(feature_hash(structural, "bias"));
  thread_local std::string conj;
  conj.assign("dist=");
  conj.append(s1 > 0 ? distance_bucket(s0 - s1) : std::string_view("root"));
  config.push_back(feature_hash(structural, conj));
  conj.push_back(kPartSeparator);
  conj.append(s0 > 0 ? ctx.pos[static_cast<std::size_t>(s0 - 1)] : "<root>");
  conj.push_back(kPartSeparator);
  conj.append(s1 > 0 ? ctx.pos[static_cast<std::size_t>(s1 - 1)] : (s1 == 0 ? "<root>" : "<absent>"));
  config.push_back(feature_hash(structural, conj));
  if (!item.buffer_empty()) {
    const auto& tagger = model_.tagger;
    extract(tagger.templates, tagger.active, sentence_, AnchorFrame::at_word(static_cast<std::size_t>(item.cursor - 1)),
            ctx, shift);
  }
}

void TransitionScorer::score(const ParserItem& item, std::vector<double>& scores) const {
  thread_local std::vector<FeatureKey> config;
  thread_local std::vector<FeatureKey> shift;
  features(item, config, shift);
  scores.assign(model_.num_classes(), 0.0);
  weights_.score_all(config, scores);
  if (shift.empty()) return;
  // tagger features only score SHIFT classes
  thread_local std::vector<double> tag_scores;
  tag_scores.assign(model_.num_classes(), 0.0);
  weights_.score_all(shift, tag_scores);
  for (std::size_t c = 0; c < model_.num_tags(); ++c) scores[c] += tag_scores[c];
}

JointFeatures TransitionScorer::derivation_features(const std::vector<Transition>& history) const {
  JointFeatures phi;
  ParserItem item = ParserItem::initial(sentence_.size());
  std::vector<FeatureKey> config;
  std::vector<FeatureKey> shift;
  for (const auto& t : history) {
    features(item, config, shift);
    const auto cls = model_.class_of(t);
    phi.add(cls, config);
    if (t.move == Move::Shift) phi.add(cls, shift);
    item = apply(item, t);
  }
  phi.compact();
  return phi;
}

std::vector<std::uint32_t> one_best(const SentenceNBest& nbest) {
  std::vector<std::uint32_t> out;
  out.reserve(nbest.size());
  for (const auto& list : nbest) out.push_back(list.empty() ? 0 : list.front().tag);
  return out;
}

ParserItem beam_search(const JointModel& model, const WeightStore& weights, const Sentence& sentence,
                       const Candidates& candidates, const std::vector<std::uint32_t>& tagger_best,
                       const BeamConfig& config) {
  return run_beam(model, weights, sentence, candidates, tagger_best, config, nullptr).best;
}

ParserItem beam_parse(const JointModel& model, const Sentence& sentence, const SentenceNBest& nbest,
                      const BeamConfig& config) {
  return beam_search(model, model.weights, sentence, candidates_from(nbest, config), one_best(nbest), config);
}

Sentence decode_item(const JointModel& model, const Sentence& sentence, const ParserItem& item) {
  Sentence out = sentence;
  for (std::size_t j = 1; j <= out.size(); ++j) {
    auto& token = out[j - 1];
    if (item.tags[j] >= 0) model.tagger.tags.assign(static_cast<std::size_t>(item.tags[j]), token);
    token.head = std::max(item.heads[j], 0);
    token.deprel = item.labels[j] >= 0 ? model.labels[static_cast<std::size_t>(item.labels[j])] : std::string{};
  }
  return out;
}

Sentence parse_sentence(const JointModel& model, const Sentence& sentence) {
  if (sentence.empty()) return sentence;
  const auto nbest = tag_sentence(model.tagger, sentence);
  return decode_item(model, sentence, beam_parse(model, sentence, nbest, model.beam));
}

Corpus parse_corpus(const JointModel& model, const Corpus& corpus) {
  Corpus out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    out[static_cast<std::size_t>(s)] = parse_sentence(model, corpus[static_cast<std::size_t>(s)]);
  }
  return out;
}

Corpus parse_corpus_serial(const JointModel& model, const Corpus& corpus) {
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& sentence : corpus) out.push_back(parse_sentence(model, sentence));
  return out;
}

GoldAnalysis gold_analysis(const JointModel& model, const Sentence& sentence) {
  GoldAnalysis g;
  const std::size_t n = sentence.size();
  g.heads.assign(n + 1, -1);
  g.labels.assign(n + 1, -1);
  g.tags.assign(n + 1, -1);
  for (std::size_t j = 1; j <= n; ++j) {
    const auto& token = sentence[j - 1];
    g.heads[j] = token.head;
    g.labels[j] = model.labels.find(token.deprel);
    g.tags[j] = model.tagger.tags.find(token);
    if (g.labels[j] < 0) throw OracleError("label '" + token.deprel + "' is not in the model vocabulary");
    if (g.tags[j] < 0) throw OracleError("tag of '" + token.form + "' is not in the model vocabulary");
  }
  return g;
}

JointTrainer::JointTrainer(JointModel& model, const TrainConfig& config)
    : model_(model), config_(config), weights_(model.num_classes()) {}

JointUpdateInfo JointTrainer::train_sentence(const Sentence& sentence, const Candidates& candidates,
                                             const std::vector<std::uint32_t>& tagger_best) {
  JointUpdateInfo info;
  const std::size_t n = sentence.size();
  if (n == 0) return info;
  const auto g = gold_analysis(model_, sentence);
  const auto gold_seq = oracle(g.heads, g.labels, g.tags);

  GoldTrack track;
  std::vector<ParserItem> gold_items;
  gold_items.reserve(gold_seq.size() + 1);
  gold_items.push_back(ParserItem::initial(n));
  std::uint64_t arc_sig = 0;
  std::uint64_t tag_sig = 0;
  for (const auto& t : gold_seq) {
    extend_sigs(gold_items.back(), t, arc_sig, tag_sig);
    track.arc_sig.push_back(arc_sig);
    track.tag_sig.push_back(tag_sig);
    gold_items.push_back(apply(gold_items.back(), t));
  }

  const auto outcome = run_beam(model_, weights_, sentence, candidates, tagger_best, model_.beam, &track);
  const auto& predicted = outcome.best;
  const auto& gold_item = gold_items[static_cast<std::size_t>(outcome.steps)];
  info.early = outcome.early;
  info.step = outcome.steps;
  info.loss = hamming(predicted, gold_item);
  if (info.loss > 0.0) {
    const TransitionScorer scorer(model_, weights_, sentence, tagger_best);
    const std::vector<Transition> gold_prefix(gold_seq.begin(), gold_seq.begin() + outcome.steps);
    const auto r = mira_update(weights_, scorer.derivation_features(gold_prefix),
                               scorer.derivation_features(predicted.history), info.loss, config_.aggressiveness);
    info.updated = r.updated;
    info.tau = r.tau;
  }
  weights_.tick();
  return info;
}

void JointTrainer::finish() { model_.weights = weights_.averaged(); }

JointModel train_joint(const Corpus& corpus, const TemplateSet& templates, std::vector<std::uint32_t> active,
                       const TrainConfig& config, const BeamConfig& beam, const JointTrainOptions& options,
                       JointTrainStats* stats) {
  if (corpus.empty()) throw ConfigError("cannot train a joint model on an empty corpus");
  if (config.iterations < 1) throw ConfigError("training needs at least one iteration");
  if (beam.tree_beam < 1 || beam.tag_variant_beam < 0 || beam.nbest_k < 1 || beam.alpha < 0.0) {
    throw ConfigError("beam settings must be positive");
  }
  JointTrainStats local;
  auto [kept, skipped] = filter_derivable(corpus);
  local.skipped_sentences = skipped;
  if (skipped > 0) spdlog::info("parser training skips {} sentences the transition system cannot derive", skipped);
  if (kept.empty()) throw ConfigError("no derivable sentence left for parser training");

  JointModel model;
  model.tagger = train_tagger(corpus, templates, active, options.tagger_config, options.target, options.tagger_passes);
  model.parser_templates = default_parser_templates();
  model.beam = beam;
  for (const auto& sentence : kept) {
    for (const auto& token : sentence.tokens) model.labels.add(token.deprel);
  }

  // Training-time n-best lists come from taggers that never saw the sentence.
  std::vector<SentenceNBest> nbest(kept.size());
  const int folds = std::min<int>(options.jackknife_folds, static_cast<int>(kept.size()));
  if (folds >= 2) {
    const auto parts = kfold(kept, folds, config.seed);
    const auto& main_tags = model.tagger.tags;
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel_folds)
    for (int f = 0; f < folds; ++f) {
      const auto& fold = parts[static_cast<std::size_t>(f)];
      const auto fold_tagger =
          train_tagger(fold.train, templates, active, options.tagger_config, options.target, options.tagger_passes);
      std::vector<std::uint32_t> to_main(fold_tagger.tags.size());
      for (std::size_t t = 0; t < to_main.size(); ++t) {
        to_main[t] = static_cast<std::uint32_t>(main_tags.find_label(fold_tagger.tags.label(t)));
      }
      for (std::size_t j = 0; j < fold.test.size(); ++j) {
        auto lists = tag_sentence(fold_tagger, fold.test[j]);
        for (auto& list : lists) {
          for (auto& entry : list) entry.tag = to_main[entry.tag];
        }
        nbest[fold.test_indices[j]] = std::move(lists);
      }
    }
  } else {
    spdlog::warn("too few sentences to jackknife; parser trains on the final tagger's own n-best lists");
    for (std::size_t s = 0; s < kept.size(); ++s) nbest[s] = tag_sentence(model.tagger, kept[s]);
  }

  std::vector<Candidates> candidates(kept.size());
  std::vector<std::vector<std::uint32_t>> best(kept.size());
  for (std::size_t s = 0; s < kept.size(); ++s) {
    candidates[s] = candidates_from(nbest[s], beam);
    best[s] = one_best(nbest[s]);
    for (std::size_t i = 0; i < kept[s].size(); ++i) {
      const auto gold = static_cast<std::uint32_t>(model.tagger.tags.find(kept[s][i]));
      auto& c = candidates[s][i];
      if (std::find(c.begin(), c.end(), gold) == c.end()) {
        c.insert(std::lower_bound(c.begin(), c.end(), gold), gold);
        ++local.forced_gold_tags;
      }
    }
  }
  if (local.forced_gold_tags > 0) {
    spdlog::info("gold tag added to the candidates of {} training tokens", local.forced_gold_tags);
  }

  JointTrainer trainer(model, config);
  std::vector<std::size_t> order(kept.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  for (int epoch = 0; epoch < config.iterations; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (const auto s : order) {
      const auto info = trainer.train_sentence(kept[s], candidates[s], best[s]);
      if (info.updated) ++(info.early ? local.early_updates : local.full_updates);
    }
    spdlog::debug("joint epoch {}: {} early / {} full updates so far", epoch + 1, local.early_updates,
                  local.full_updates);
  }
  trainer.finish();
  if (stats != nullptr) *stats = local;
  return model;
}

std::vector<ModelBundle> to_bundles(const JointModel& model) {
  ModelBundle parser;
  parser.kind = "parser";
  parser.templates = model.parser_templates;
  parser.active = model.parser_templates.all_ids();
  for (std::size_t c = 0; c < model.num_classes(); ++c) {
    Transition t;
    if (c < model.num_tags()) {
      t = {Move::Shift, static_cast<std::uint32_t>(c)};
    } else if (c < model.num_tags() + model.labels.size()) {
      t = {Move::Left, static_cast<std::uint32_t>(c - model.num_tags())};
    } else {
      t = {Move::Right, static_cast<std::uint32_t>(c - model.num_tags() - model.labels.size())};
    }
    parser.classes.push_back(model.transition_name(t));
  }
  parser.weights = model.weights.averaged();
  parser.meta["labels"] = model.labels.items();
  parser.meta["tree_beam"] = model.beam.tree_beam;
  parser.meta["tag_variant_beam"] = model.beam.tag_variant_beam;
  parser.meta["nbest_k"] = model.beam.nbest_k;
  parser.meta["alpha"] = model.beam.alpha;
  parser.meta["per_tree_variants"] = model.beam.per_tree_variants;
  return {to_bundle(model.tagger), parser};
}

JointModel joint_from_bundles(const std::vector<ModelBundle>& bundles) {
  const ModelBundle* tagger = nullptr;
  const ModelBundle* parser = nullptr;
  for (const auto& b : bundles) {
    if (b.kind == "tagger") tagger = &b;
    if (b.kind == "parser") parser = &b;
  }
  if (tagger == nullptr || parser == nullptr) throw ModelError("joint model needs a tagger and a parser component");
  JointModel model;
  model.tagger = tagger_from_bundle(*tagger);
  model.parser_templates = parser->templates;
  try {
    model.labels = Vocabulary(parser->meta.at("labels").get<std::vector<std::string>>());
    model.beam.tree_beam = parser->meta.at("tree_beam").get<int>();
    model.beam.tag_variant_beam = parser->meta.at("tag_variant_beam").get<int>();
    model.beam.nbest_k = parser->meta.at("nbest_k").get<int>();
    model.beam.alpha = parser->meta.at("alpha").get<double>();
    model.beam.per_tree_variants = parser->meta.at("per_tree_variants").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("parser metadata incomplete: ") + e.what());
  }
  if (parser->classes.size() != model.num_classes()) throw ModelError("parser class list does not match its vocabularies");
  model.weights = parser->weights;
  return model;
}

}  // namespace mtag
