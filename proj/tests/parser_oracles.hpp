#pragma once

// Brute-force references for the joint parser: a toy model with random
// weights on every feature reachable from a sentence, and exhaustive search
// over all derivations.

#include <functional>
#include <limits>
#include <vector>

#include "helpers.hpp"
#include "mtag/parser.hpp"
#include "mtag/rng.hpp"

namespace mtag::fixtures {

inline JointModel toy_joint_model(std::size_t num_tags, std::size_t num_labels) {
  std::vector<std::string> forms, tags;
  for (std::size_t t = 0; t < num_tags; ++t) {
    forms.push_back("f" + std::to_string(t));
    tags.push_back("T" + std::to_string(t));
  }
  const Corpus c = {make_sentence(forms, tags)};
  JointModel model;
  const auto set = parse_template_spec("form(w)\npos(w-1)\nsuffix1(w)+pos(w+1)");
  TrainConfig config;
  config.iterations = 1;
  model.tagger = train_tagger(c, set, set.all_ids(), config, TargetSpec{}, 1);
  model.parser_templates = default_parser_templates();
  for (std::size_t l = 0; l < num_labels; ++l) model.labels.add("l" + std::to_string(l));
  model.weights = WeightStore(model.num_classes());
  return model;
}

// Visits every item reachable from the initial configuration.
inline void for_each_item(const ParserItem& item, const Candidates& candidates, std::size_t num_labels,
                          const std::function<void(const ParserItem&)>& visit) {
  visit(item);
  for (const auto& t : legal_transitions(item, candidates, num_labels)) {
    for_each_item(apply(item, t), candidates, num_labels, visit);
  }
}

// Gives every (feature, class) pair reachable from the sentence a weight in [-1, 1).
inline void randomize_weights(JointModel& model, WeightStore& weights, const Sentence& sentence,
                              const Candidates& candidates, const std::vector<std::uint32_t>& tagger_best,
                              Rng& rng) {
  const TransitionScorer scorer(model, weights, sentence, tagger_best);
  std::vector<FeatureKey> config, shift;
  for_each_item(ParserItem::initial(sentence.size()), candidates, model.labels.size(), [&](const ParserItem& item) {
    config.clear();
    shift.clear();
    scorer.features(item, config, shift);
    for (const auto k : config) {
      for (std::size_t c = 0; c < model.num_classes(); ++c) {
        if (weights.weight(k, c) == 0.0) weights.add(k, c, 2.0 * rng.uniform() - 1.0);
      }
    }
    for (const auto k : shift) {
      for (std::size_t c = 0; c < model.num_tags(); ++c) {
        if (weights.weight(k, c) == 0.0) weights.add(k, c, 2.0 * rng.uniform() - 1.0);
      }
    }
  });
}

struct ExhaustiveResult {
  double best = -std::numeric_limits<double>::infinity();
  ParserItem item;
  std::size_t derivations = 0;
};

// Scores every complete derivation: the sum of per-step class scores.
inline ExhaustiveResult exhaustive_search(const JointModel& model, const WeightStore& weights,
                                          const Sentence& sentence, const Candidates& candidates,
                                          const std::vector<std::uint32_t>& tagger_best) {
  const TransitionScorer scorer(model, weights, sentence, tagger_best);
  ExhaustiveResult result;
  std::vector<double> scores;
  std::function<void(const ParserItem&)> walk = [&](const ParserItem& item) {
    if (item.terminal()) {
      ++result.derivations;
      if (item.score > result.best) {
        result.best = item.score;
        result.item = item;
      }
      return;
    }
    scorer.score(item, scores);
    const auto legal = legal_transitions(item, candidates, model.labels.size());
    const auto local = scores;
    for (const auto& t : legal) walk(apply(item, t, local[model.class_of(t)]));
  };
  walk(ParserItem::initial(sentence.size()));
  return result;
}

// Random sentence over the toy vocabulary with 1..max_candidates candidates per token.
struct ToyInput {
  Sentence sentence;
  Candidates candidates;
  std::vector<std::uint32_t> tagger_best;
};

inline ToyInput toy_input(std::size_t n, std::size_t num_tags, std::size_t max_candidates, Rng& rng) {
  ToyInput in;
  std::vector<std::string> forms;
  for (std::size_t i = 0; i < n; ++i) forms.push_back("f" + std::to_string(rng.below(num_tags)));
  in.sentence = make_sentence(forms);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::uint32_t> all(num_tags);
    for (std::size_t t = 0; t < num_tags; ++t) all[t] = static_cast<std::uint32_t>(t);
    rng.shuffle(std::span<std::uint32_t>(all));
    const auto k = 1 + rng.below(std::min(max_candidates, num_tags));
    std::vector<std::uint32_t> c(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k));
    in.tagger_best.push_back(c.front());
    in.candidates.push_back(c);
  }
  return in;
}

}  // namespace mtag::fixtures
