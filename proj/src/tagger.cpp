#include "mtag/tagger.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "mtag/error.hpp"
#include "mtag/rng.hpp"

namespace mtag {
namespace {

struct SplitActive {
  std::vector<std::uint32_t> fixed;    // no tag-reading part; same value on every pass
  std::vector<std::uint32_t> dynamic;  // re-extracted per token per pass
};

SplitActive split_active(const TemplateSet& set, const std::vector<std::uint32_t>& active) {
  SplitActive s;
  for (const auto id : active) {
    const auto& parts = set[id].parts;
    const bool reads = std::any_of(parts.begin(), parts.end(), [](const TemplatePart& p) {
      return p.functor.reads_tags();
    });
    (reads ? s.dynamic : s.fixed).push_back(id);
  }
  return s;
}

void set_tag(const TagSet& tags, TagContext& ctx, std::size_t i, std::uint32_t tag) {
  if (tags.target().has_pos()) ctx.pos[i] = tags.pos(tag);
  if (tags.target().has_morph()) ctx.morph[i] = tags.morph(tag);
}

std::uint32_t argmax(const std::vector<double>& scores) {
  std::uint32_t best = 0;
  for (std::uint32_t c = 1; c < scores.size(); ++c) {
    if (scores[c] > scores[best]) best = c;
  }
  return best;
}

NBestList make_nbest(const std::vector<double>& scores) {
  NBestList list(scores.size());
  for (std::uint32_t c = 0; c < scores.size(); ++c) list[c] = {c, scores[c]};
  std::stable_sort(list.begin(), list.end(), [](const ScoredTag& a, const ScoredTag& b) { return a.score > b.score; });
  return list;
}

/// Shared multi-pass sweep. `decide(pass, position, features, scores)` sees
/// each decision after scoring and returns nothing; it may update weights.
template <typename Decide>
std::vector<std::uint32_t> sweep(const TemplateSet& set, const SplitActive& split, int passes, const TagSet& tags,
                                 const WeightStore& weights, const Sentence& sentence, Decide&& decide) {
  const std::size_t n = sentence.size();
  std::vector<std::vector<FeatureKey>> fixed(n);
  for (std::size_t i = 0; i < n; ++i) {
    extract(set, split.fixed, sentence, AnchorFrame::at_word(i), TagContext(), fixed[i]);
  }
  // Non-tag templates never look at the context, so an empty one is fine above.
  TagContext ctx(n);
  std::vector<std::uint32_t> current(n, 0);
  std::vector<FeatureKey> features;
  std::vector<double> scores(tags.size());
  for (int pass = 1; pass <= passes; ++pass) {
    for (std::size_t i = 0; i < n; ++i) {
      features = fixed[i];
      if (!split.dynamic.empty()) extract(set, split.dynamic, sentence, AnchorFrame::at_word(i), ctx, features);
      std::fill(scores.begin(), scores.end(), 0.0);
      weights.score_all(features, scores);
      current[i] = argmax(scores);
      decide(pass, i, features, scores, current[i]);
      set_tag(tags, ctx, i, current[i]);
    }
  }
  return current;
}

}  // namespace

SentenceNBest tag_sentence(const TaggerModel& model, const Sentence& sentence) {
  SentenceNBest out(sentence.size());
  if (sentence.empty() || model.tags.size() == 0) return out;
  const auto split = split_active(model.templates, model.active);
  sweep(model.templates, split, model.passes, model.tags, model.weights, sentence,
        [&](int pass, std::size_t i, const std::vector<FeatureKey>&, const std::vector<double>& scores, std::uint32_t) {
          if (pass == model.passes) out[i] = make_nbest(scores);
        });
  return out;
}

TaggerModel train_tagger(const Corpus& corpus, const TemplateSet& templates, std::vector<std::uint32_t> active,
                         const TrainConfig& config, const TargetSpec& target, int passes, TaggerTrainStats* stats) {
  if (corpus.empty()) throw ConfigError("cannot train a tagger on an empty corpus");
  if (passes < 1) throw ConfigError("tagger needs at least one pass");
  if (config.iterations < 1) throw ConfigError("training needs at least one iteration");
  validate_active(templates, active);

  TaggerModel model;
  model.templates = templates;
  model.active = std::move(active);
  model.passes = passes;
  model.tags = TagSet::build(corpus, target);
  WeightStore weights(model.tags.size());

  std::vector<std::vector<std::uint32_t>> gold(corpus.size());
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    for (const auto& token : corpus[s].tokens) gold[s].push_back(static_cast<std::uint32_t>(model.tags.find(token)));
  }

  const auto split = split_active(model.templates, model.active);
  TaggerTrainStats local;
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(config.seed);
  for (int epoch = 0; epoch < config.iterations; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    std::size_t correct = 0;
    std::size_t total = 0;
    for (const auto s : order) {
      const auto& g = gold[s];
      sweep(model.templates, split, passes, model.tags, weights, corpus[s],
            [&](int pass, std::size_t i, const std::vector<FeatureKey>& features, const std::vector<double>&,
                std::uint32_t predicted) {
              ++local.decisions;
              if (pass == passes) {
                ++total;
                if (predicted == g[i]) ++correct;
              }
              if (predicted != g[i]) {
                const auto r = mira_update(weights, features, features, g[i], predicted, 1.0, config.aggressiveness);
                if (r.updated) ++local.updates;
                if (r.degenerate) ++local.degenerate;
              }
              weights.tick();
            });
    }
    local.epoch_accuracy.push_back(total == 0 ? 100.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total));
    spdlog::debug("tagger epoch {}: train accuracy {:.2f}", epoch + 1, local.epoch_accuracy.back());
  }
  if (local.degenerate > 0) {
    spdlog::warn("tagger training skipped {} updates with an empty feature difference", local.degenerate);
  }
  model.weights = weights.averaged();
  if (stats != nullptr) *stats = std::move(local);
  return model;
}

std::vector<SentenceNBest> tag_corpus(const TaggerModel& model, const Corpus& corpus) {
  std::vector<SentenceNBest> out(corpus.size());
  const auto n = static_cast<std::ptrdiff_t>(corpus.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t s = 0; s < n; ++s) {
    out[static_cast<std::size_t>(s)] = tag_sentence(model, corpus[static_cast<std::size_t>(s)]);
  }
  return out;
}

std::vector<SentenceNBest> tag_corpus_serial(const TaggerModel& model, const Corpus& corpus) {
  std::vector<SentenceNBest> out;
  out.reserve(corpus.size());
  for (const auto& sentence : corpus) out.push_back(tag_sentence(model, sentence));
  return out;
}

Corpus apply_tags(const TaggerModel& model, const Corpus& corpus, const std::vector<SentenceNBest>& nbest) {
  if (nbest.size() != corpus.size()) throw AlignmentError("n-best lists do not match the corpus");
  Corpus out = corpus;
  for (std::size_t s = 0; s < out.size(); ++s) {
    if (nbest[s].size() != out[s].size()) {
      throw AlignmentError("n-best lists do not match sentence " + std::to_string(s + 1));
    }
    for (std::size_t i = 0; i < out[s].size(); ++i) {
      if (!nbest[s][i].empty()) model.tags.assign(nbest[s][i].front().tag, out[s][i]);
    }
  }
  return out;
}

double accuracy(const Corpus& predicted, const Corpus& gold, const TargetSpec& target) {
  if (predicted.size() != gold.size()) {
    throw AlignmentError("corpora differ in sentence count (" + std::to_string(predicted.size()) + " vs " +
                         std::to_string(gold.size()) + ")");
  }
  std::size_t correct = 0;
  std::size_t total = 0;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    if (predicted[s].size() != gold[s].size()) {
      throw AlignmentError("sentence " + std::to_string(s + 1) + " differs in length");
    }
    for (std::size_t i = 0; i < gold[s].size(); ++i) {
      ++total;
      if (target.label_of(predicted[s][i]) == target.label_of(gold[s][i])) ++correct;
    }
  }
  return total == 0 ? 100.0 : 100.0 * static_cast<double>(correct) / static_cast<double>(total);
}

void write_nbest(std::ostream& out, const TaggerModel& model, const std::vector<SentenceNBest>& nbest,
                 std::size_t limit) {
  for (const auto& sentence : nbest) {
    for (const auto& list : sentence) {
      const std::size_t m = limit == 0 ? list.size() : std::min(limit, list.size());
      for (std::size_t j = 0; j < m; ++j) {
        if (j > 0) out << '\t';
        out << model.tags.label(list[j].tag) << ':' << list[j].score;
      }
      out << '\n';
    }
    out << '\n';
  }
}

ModelBundle to_bundle(const TaggerModel& model) {
  ModelBundle b;
  b.kind = "tagger";
  b.templates = model.templates;
  b.active = model.active;
  b.classes = model.tags.labels();
  b.weights = model.weights.averaged();
  b.meta["passes"] = model.passes;
  b.meta["target"] = model.tags.target().field_name();
  b.meta["attributes"] = model.tags.target().attributes;
  b.meta["pos"] = model.tags.pos_parts();
  b.meta["morph"] = model.tags.morph_parts();
  return b;
}

TaggerModel tagger_from_bundle(const ModelBundle& bundle) {
  if (bundle.kind != "tagger") throw ModelError("expected a tagger model, found '" + bundle.kind + "'");
  TaggerModel model;
  try {
    model.templates = bundle.templates;
    model.active = bundle.active;
    model.passes = bundle.meta.at("passes").get<int>();
    const auto target = TargetSpec::parse(bundle.meta.at("target").get<std::string>(),
                                          bundle.meta.at("attributes").get<std::vector<std::string>>());
    model.tags = TagSet::from_parts(target, bundle.meta.at("pos").get<std::vector<std::string>>(),
                                    bundle.meta.at("morph").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("tagger metadata incomplete: ") + e.what());
  }
  if (model.tags.labels() != bundle.classes) throw ModelError("tagger class list does not match its tag parts");
  model.weights = bundle.weights;
  return model;
}

Corpus blind(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& sentence : out) {
    for (auto& token : sentence.tokens) {
      token.pos.clear();
      token.morph = MorphBundle();
      token.head = 0;
      token.deprel.clear();
    }
  }
  return out;
}

}  // namespace mtag
