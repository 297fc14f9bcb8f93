#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "helpers.hpp"
#include "mtag/error.hpp"
#include "mtag/parser.hpp"
#include "mtag/synthetic.hpp"
#include "parser_oracles.hpp"

using namespace mtag;
using fixtures::ToyInput;

namespace {

NBestList nbest_of(std::vector<double> scores) {
  NBestList out;
  for (std::size_t t = 0; t < scores.size(); ++t) out.push_back({static_cast<std::uint32_t>(t), scores[t]});
  return out;
}

ParserItem with_arcs(std::vector<int> heads, std::vector<int> tags, double score) {
  ParserItem item = ParserItem::initial(heads.size() - 1);
  item.heads = std::move(heads);
  item.labels.assign(item.heads.size(), 0);
  item.tags = std::move(tags);
  item.score = score;
  return item;
}

BeamConfig beam(int trees, int variants) {
  BeamConfig c;
  c.tree_beam = trees;
  c.tag_variant_beam = variants;
  return c;
}

// Greedy decoder: best-scoring transition at each step, ties to the first legal one.
ParserItem greedy(const JointModel& model, const WeightStore& weights, const ToyInput& in) {
  const TransitionScorer scorer(model, weights, in.sentence, in.tagger_best);
  ParserItem item = ParserItem::initial(in.sentence.size());
  std::vector<double> scores;
  while (!item.terminal()) {
    scorer.score(item, scores);
    auto legal = legal_transitions(item, in.candidates, model.labels.size());
    std::sort(legal.begin(), legal.end());
    const Transition* best = nullptr;
    for (const auto& t : legal) {
      if (!best || scores[model.class_of(t)] > scores[model.class_of(*best)]) best = &t;
    }
    item = apply(item, *best, scores[model.class_of(*best)]);
  }
  return item;
}

// Random input with sorted candidate lists and weights on every reachable feature.
struct Problem {
  JointModel model;
  WeightStore weights;
  ToyInput in;
};

Problem random_problem(std::size_t n, std::size_t tags, std::size_t labels, std::size_t cands, Rng& rng) {
  Problem p{fixtures::toy_joint_model(tags, labels), WeightStore(1), {}};
  p.weights = WeightStore(p.model.num_classes());
  p.in = fixtures::toy_input(n, tags, cands, rng);
  for (auto& c : p.in.candidates) std::sort(c.begin(), c.end());
  fixtures::randomize_weights(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best, rng);
  return p;
}

bool forms_projective_tree(const Sentence& s) { return is_tree(s) && is_projective(s); }

JointModel small_joint(const Corpus& corpus, bool parallel_folds = true) {
  const auto set = parse_template_spec("form(w)\nsuffix2(w)\npos(w-1)\npos(w+1)");
  TrainConfig config;
  config.iterations = 2;
  JointTrainOptions options;
  options.jackknife_folds = 3;
  options.tagger_config.iterations = 2;
  options.parallel_folds = parallel_folds;
  return train_joint(corpus, set, set.all_ids(), config, beam(8, 4), options);
}

}  // namespace

TEST(FilterCandidates, Examples) {
  const auto nb = nbest_of({5.0, 4.9, 4.0});
  EXPECT_EQ(filter_candidates(nb, 2, 0.25), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(filter_candidates(nb, 3, 0.25), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(filter_candidates(nb, 3, 2.0), (std::vector<std::uint32_t>{0, 1, 2}));
  EXPECT_EQ(filter_candidates(nb, 1, 10.0), (std::vector<std::uint32_t>{0}));
  EXPECT_TRUE(filter_candidates({}, 2, 0.25).empty());
}

TEST(FilterCandidates, WorkedExamples) {
  // N, V, A
  EXPECT_EQ(filter_candidates(nbest_of({1.0, 0.8, 0.7}), 2, 0.25), (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(filter_candidates(nbest_of({1.0, 0.7}), 2, 0.25), (std::vector<std::uint32_t>{0}));
  EXPECT_EQ(filter_candidates(nbest_of({1.0, 1.0, 1.0}), 1, 0.25), (std::vector<std::uint32_t>{0}));
}

TEST(FilterCandidates, NeverEmptyAndLeadsWithBest) {
  Rng rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<double> scores(1 + rng.below(6));
    for (auto& s : scores) s = rng.uniform() * 4 - 2;
    std::sort(scores.rbegin(), scores.rend());
    const auto nb = nbest_of(scores);
    const int k = 1 + static_cast<int>(rng.below(4));
    const double alpha = rng.uniform();
    const auto c = filter_candidates(nb, k, alpha);
    ASSERT_FALSE(c.empty());
    EXPECT_EQ(c.front(), 0u);
    EXPECT_LE(c.size(), static_cast<std::size_t>(k));
    for (const auto t : c) EXPECT_GE(scores[t], scores[0] - alpha);
  }
}

TEST(LegalTransitions, Examples) {
  const Candidates cands = {{0}, {1, 0}};
  auto item = ParserItem::initial(2);
  EXPECT_EQ(legal_transitions(item, cands, 3), (std::vector<Transition>{{Move::Shift, 0}}));
  item = apply(item, {Move::Shift, 0});
  // the root may only take a dependent once the buffer is empty
  EXPECT_EQ(legal_transitions(item, cands, 3), (std::vector<Transition>{{Move::Shift, 1}, {Move::Shift, 0}}));
  item = apply(item, {Move::Shift, 1});
  const auto legal = legal_transitions(item, cands, 3);
  ASSERT_EQ(legal.size(), 6u);
  EXPECT_TRUE(std::all_of(legal.begin(), legal.begin() + 3, [](auto t) { return t.move == Move::Left; }));
  EXPECT_TRUE(std::all_of(legal.begin() + 3, legal.end(), [](auto t) { return t.move == Move::Right; }));
}

TEST(LegalTransitions, Table) {
  const auto init = ParserItem::initial(1);
  EXPECT_EQ(legal_transitions(init, {{0, 1}}, 2), (std::vector<Transition>{{Move::Shift, 0}, {Move::Shift, 1}}));
  // stack [0, 3] with the buffer exhausted: only RIGHT-ARC
  auto item = ParserItem::initial(3);
  for (const auto& t : std::vector<Transition>{{Move::Shift, 0}, {Move::Shift, 0}, {Move::Left, 0}, {Move::Shift, 0},
                                               {Move::Left, 1}}) {
    item = apply(item, t);
  }
  ASSERT_EQ(item.stack, (std::vector<int>{0, 3}));
  EXPECT_EQ(legal_transitions(item, Candidates(3, {0}), 2),
            (std::vector<Transition>{{Move::Right, 0}, {Move::Right, 1}}));
  item = apply(item, {Move::Right, 1});
  EXPECT_TRUE(item.terminal());
  EXPECT_TRUE(legal_transitions(item, Candidates(3, {0}), 2).empty());
}

TEST(Apply, IllegalAndTerminal) {
  auto one = apply(ParserItem::initial(1), {Move::Shift, 0});
  EXPECT_THROW(apply(one, {Move::Left, 0}), OracleError);
  const auto done = apply(one, {Move::Right, 0}, 1.5);
  EXPECT_TRUE(done.terminal());
  EXPECT_EQ(done.heads[1], 0);
  EXPECT_DOUBLE_EQ(done.score, 1.5);
  EXPECT_THROW(apply(done, {Move::Shift, 0}), OracleError);
}

TEST(Apply, DerivationsTakeTwoNSteps) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    const Candidates cands(n, {0, 1});
    auto item = ParserItem::initial(n);
    std::size_t steps = 0;
    while (!item.terminal()) {
      const auto legal = legal_transitions(item, cands, 2);
      ASSERT_FALSE(legal.empty());
      item = apply(item, legal[rng.below(legal.size())]);
      ++steps;
    }
    EXPECT_EQ(steps, 2 * n);
    EXPECT_EQ(item.history.size(), 2 * n);
  }
}

TEST(Oracle, TwoWordChain) {
  // "a b" with a <- b <- root
  const auto seq = oracle({-1, 2, 0}, {-1, 0, 1}, {-1, 3, 4});
  const std::vector<Transition> expected = {{Move::Shift, 3}, {Move::Shift, 4}, {Move::Left, 0}, {Move::Right, 1}};
  EXPECT_EQ(seq, expected);
}

TEST(Oracle, RandomTreesRoundTrip) {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(14));
    const auto heads = fixtures::random_tree(n, rng);
    std::vector<int> labels(heads.size(), -1), tags(heads.size(), -1);
    for (int j = 1; j <= n; ++j) {
      labels[static_cast<std::size_t>(j)] = static_cast<int>(rng.below(4));
      tags[static_cast<std::size_t>(j)] = static_cast<int>(rng.below(5));
    }
    const auto seq = oracle(heads, labels, tags);
    ASSERT_EQ(seq.size(), 2u * static_cast<std::size_t>(n));
    auto item = ParserItem::initial(static_cast<std::size_t>(n));
    for (const auto& t : seq) item = apply(item, t);
    ASSERT_TRUE(item.terminal());
    for (int j = 1; j <= n; ++j) {
      const auto s = static_cast<std::size_t>(j);
      EXPECT_EQ(item.heads[s], heads[s]);
      EXPECT_EQ(item.labels[s], labels[s]);
      EXPECT_EQ(item.tags[s], tags[s]);
    }
  }
}

TEST(Oracle, NonProjectiveThrows) {
  EXPECT_THROW(oracle({-1, 0, 4, 1, 1}, {-1, 0, 0, 0, 0}, {-1, 0, 0, 0, 0}), OracleError);
  EXPECT_THROW(oracle({-1, 0, 0}, {-1, 0, 0}, {-1, 0, 0}), OracleError);
}

TEST(Prune, NineOfOneTree) {
  std::vector<ParserItem> items;
  for (int v = 0; v < 12; ++v) items.push_back(with_arcs({-1, 0, -1}, {-1, v, -1}, 20.0 - v));
  const auto kept = prune(items, beam(40, 8));
  ASSERT_EQ(kept.size(), 9u);
  for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(kept[i].tags[1], static_cast<int>(i));
}

TEST(Prune, FortyDistinctTrees) {
  std::vector<ParserItem> items;
  for (int t = 0; t < 50; ++t) items.push_back(with_arcs({-1, t, -1}, {-1, 0, -1}, static_cast<double>(t)));
  const auto kept = prune(items, beam(40, 8));
  ASSERT_EQ(kept.size(), 40u);
  for (const auto& k : kept) EXPECT_GE(k.score, 10.0);
}

TEST(Prune, SmallInputsAreKept) {
  std::vector<ParserItem> items;
  for (int t = 0; t < 5; ++t) items.push_back(with_arcs({-1, t % 3, -1}, {-1, t, -1}, 5.0 - t));
  const auto kept = prune(items, beam(40, 8));
  ASSERT_EQ(kept.size(), items.size());
  for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(kept[i].score, items[i].score);
}

TEST(Prune, DuplicatesDroppedBestSurvives) {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<ParserItem> items;
    const auto count = 1 + rng.below(60);
    for (std::size_t i = 0; i < count; ++i) {
      items.push_back(with_arcs({-1, static_cast<int>(rng.below(6)), -1}, {-1, static_cast<int>(rng.below(4)), -1},
                                rng.uniform()));
    }
    const auto config = beam(1 + static_cast<int>(rng.below(6)), static_cast<int>(rng.below(5)));
    const auto kept = prune(items, config);
    const auto best = std::max_element(items.begin(), items.end(),
                                       [](const auto& a, const auto& b) { return a.score < b.score; });
    EXPECT_TRUE(std::any_of(kept.begin(), kept.end(), [&](const auto& k) { return k.score == best->score; }));
    std::set<std::pair<int, int>> seen, trees;
    for (const auto& k : kept) {
      EXPECT_TRUE(seen.insert({k.heads[1], k.tags[1]}).second);
      trees.insert({k.heads[1], 0});
    }
    EXPECT_LE(trees.size(), static_cast<std::size_t>(config.tree_beam));
    EXPECT_LE(kept.size() - trees.size(), static_cast<std::size_t>(config.tag_variant_beam));
  }
}

TEST(BeamSearch, WidthOneIsGreedy) {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = random_problem(1 + rng.below(5), 3, 2, 2, rng);
    const auto b = beam_search(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best, beam(1, 0));
    const auto g = greedy(p.model, p.weights, p.in);
    EXPECT_EQ(b.history, g.history);
    EXPECT_NEAR(b.score, g.score, 1e-9);
  }
}

TEST(BeamSearch, ZeroWeightsGiveCanonicalDerivation) {
  // all ties; a single-item beam SHIFTs the lowest candidate to the end, then
  // LEFT-ARCs down to the last token and RIGHT-ARCs it to the root
  const auto model = fixtures::toy_joint_model(3, 2);
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    auto in = fixtures::toy_input(1 + rng.below(7), 3, 3, rng);
    for (auto& c : in.candidates) std::sort(c.begin(), c.end());
    const auto n = static_cast<int>(in.sentence.size());
    const auto wide = beam_search(model, model.weights, in.sentence, in.candidates, in.tagger_best, beam(40, 8));
    EXPECT_EQ(wide.history,
              beam_search(model, model.weights, in.sentence, in.candidates, in.tagger_best, beam(40, 8)).history);
    EXPECT_TRUE(forms_projective_tree(decode_item(model, in.sentence, wide)));
    const auto a = beam_search(model, model.weights, in.sentence, in.candidates, in.tagger_best, beam(1, 0));
    ASSERT_TRUE(a.terminal());
    for (int j = 1; j <= n; ++j) {
      const auto s = static_cast<std::size_t>(j);
      EXPECT_EQ(a.heads[s], j == n ? 0 : n);
      EXPECT_EQ(a.labels[s], 0);
      EXPECT_EQ(a.tags[s], static_cast<int>(in.candidates[s - 1].front()));
    }
  }
}

TEST(BeamSearch, PlantedGoldDerivationIsRecovered) {
  // +1 for the gold class on every feature of a gold step, -1 for every other class
  Rng rng(51);
  const auto model = fixtures::toy_joint_model(3, 2);
  int exhaustive_gold = 0;
  for (int trial = 0; trial < 20; ++trial) {
    auto in = fixtures::toy_input(3, 3, 2, rng);
    const auto heads = fixtures::random_tree(3, rng);
    std::vector<int> labels(4, -1), tags(4, -1);
    for (std::size_t j = 1; j <= 3; ++j) {
      tags[j] = static_cast<int>(in.candidates[j - 1][rng.below(in.candidates[j - 1].size())]);
      labels[j] = static_cast<int>(rng.below(2));
    }
    const auto gold = oracle(heads, labels, tags);
    WeightStore weights(model.num_classes());
    const TransitionScorer scorer(model, weights, in.sentence, in.tagger_best);
    auto item = ParserItem::initial(3);
    std::vector<FeatureKey> conf, shift;
    for (const auto& t : gold) {
      scorer.features(item, conf, shift);
      if (t.move == Move::Shift) conf.insert(conf.end(), shift.begin(), shift.end());
      for (const auto k : conf) {
        for (std::size_t c = 0; c < model.num_classes(); ++c) weights.add(k, c, c == model.class_of(t) ? 1.0 : -1.0);
      }
      item = apply(item, t);
    }
    const auto ex = fixtures::exhaustive_search(model, weights, in.sentence, in.candidates, in.tagger_best);
    const auto b = beam_search(model, weights, in.sentence, in.candidates, in.tagger_best, beam(2, 2));
    if (ex.item.heads == item.heads && ex.item.tags == item.tags && ex.item.labels == item.labels) ++exhaustive_gold;
    EXPECT_EQ(b.heads, item.heads);
    EXPECT_EQ(b.tags, item.tags);
    EXPECT_EQ(b.labels, item.labels);
  }
  EXPECT_EQ(exhaustive_gold, 20);
}

TEST(BeamSearch, WideBeamMatchesExhaustiveSearch) {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_problem(1 + rng.below(5), 2, 2, 2, rng);
    const auto ex = fixtures::exhaustive_search(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best);
    const auto b =
        beam_search(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best, beam(1000, 1000));
    EXPECT_NEAR(b.score, ex.best, 1e-9) << "n=" << p.in.sentence.size();
  }
}

TEST(BeamSearch, NarrowBeamsNeverBeatExhaustiveSearch) {
  // A wider beam is not guaranteed to score higher at every width; only the
  // exhaustive bound and the wide-beam limit hold.
  Rng rng(43);
  int non_monotone = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_problem(2 + rng.below(4), 2, 2, 2, rng);
    const auto ex = fixtures::exhaustive_search(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best);
    double previous = -1e300;
    for (const int width : {1, 2, 4, 8, 16}) {
      const auto b = beam_search(p.model, p.weights, p.in.sentence, p.in.candidates, p.in.tagger_best,
                                 beam(width, width));
      EXPECT_LE(b.score, ex.best + 1e-9);
      if (b.score < previous - 1e-9) ++non_monotone;
      previous = b.score;
    }
  }
  RecordProperty("non_monotone_widenings", non_monotone);
}

TEST(JointTrainer, MemorizesOneSentence) {
  auto model = fixtures::toy_joint_model(3, 2);
  model.beam = beam(8, 4);
  const auto s = fixtures::make_sentence({"f0", "f1", "f2", "f1"}, {"T0", "T1", "T2", "T1"}, {2, 0, 4, 2},
                                         {"l0", "l1", "l0", "l1"});
  const Candidates cands(4, {0, 1, 2});
  const std::vector<std::uint32_t> best = {1, 1, 1, 1};
  TrainConfig config;
  JointTrainer trainer(model, config);
  for (int epoch = 0; epoch < 10; ++epoch) trainer.train_sentence(s, cands, best);
  trainer.finish();
  const auto out = decode_item(model, s, beam_search(model, model.weights, s, cands, best, model.beam));
  EXPECT_EQ(out, s);
}

TEST(JointTrainer, EarlyUpdateWhenGoldFallsOff) {
  auto model = fixtures::toy_joint_model(2, 1);
  model.beam = beam(1, 0);
  const auto s = fixtures::make_sentence({"f0", "f1", "f0"}, {"T0", "T1", "T0"}, {2, 0, 2}, {"l0", "l0", "l0"});
  const Candidates cands(3, {0, 1});
  const std::vector<std::uint32_t> best = {0, 1, 0};
  TrainConfig config;
  JointTrainer trainer(model, config);
  // every first-step feature pushes SHIFT toward the wrong tag
  const TransitionScorer scorer(model, trainer.weights(), s, best);
  std::vector<FeatureKey> conf, shift;
  scorer.features(ParserItem::initial(3), conf, shift);
  for (const auto k : conf) trainer.weights().add(k, 1, 100.0);
  const auto info = trainer.train_sentence(s, cands, best);
  EXPECT_TRUE(info.updated);
  EXPECT_TRUE(info.early);
  EXPECT_EQ(info.step, 1);
}

TEST(ParseCorpus, ParallelMatchesSerialAndYieldsTrees) {
  const auto corpus = synth::english_like(150, 3);
  const auto model = small_joint(corpus);
  const auto test = blind(synth::english_like(40, 4));
  const auto par = parse_corpus(model, test);
  EXPECT_EQ(par, parse_corpus_serial(model, test));
  for (const auto& s : par) EXPECT_TRUE(forms_projective_tree(s));
}

TEST(ParseCorpus, EmptySentence) {
  const auto model = small_joint(synth::english_like(60, 2));
  EXPECT_TRUE(parse_sentence(model, Sentence{}).empty());
}

TEST(TrainJoint, SerialFoldsMatchParallel) {
  const auto corpus = synth::english_like(90, 7);
  const auto a = small_joint(corpus, true);
  const auto b = small_joint(corpus, false);
  std::map<std::pair<FeatureKey, std::size_t>, double> wa, wb;
  a.weights.for_each_nonzero([&](FeatureKey k, std::size_t c, double w) { wa[{k, c}] = w; });
  b.weights.for_each_nonzero([&](FeatureKey k, std::size_t c, double w) { wb[{k, c}] = w; });
  EXPECT_EQ(wa, wb);
}

TEST(JointBundle, RoundTrip) {
  const auto corpus = synth::english_like(100, 5);
  const auto model = small_joint(corpus);
  const auto loaded = joint_from_bundles(to_bundles(model));
  EXPECT_EQ(loaded.labels.items(), model.labels.items());
  const auto test = blind(synth::english_like(20, 6));
  EXPECT_EQ(parse_corpus(loaded, test), parse_corpus(model, test));
}
