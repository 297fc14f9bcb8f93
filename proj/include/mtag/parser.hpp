#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/learner.hpp"
#include "mtag/model_io.hpp"
#include "mtag/tagger.hpp"
#include "mtag/tagset.hpp"
#include "mtag/templates.hpp"

namespace mtag {

enum class Move : std::uint8_t { Shift, Left, Right };

/// SHIFT carries a tag index, LEFT/RIGHT a label index.
struct Transition {
  Move move = Move::Shift;
  std::uint32_t arg = 0;

  friend bool operator==(const Transition&, const Transition&) = default;
  friend auto operator<=>(const Transition&, const Transition&) = default;
};

struct BeamConfig {
  int tree_beam = 40;
  int tag_variant_beam = 8;
  int nbest_k = 2;
  double alpha = 0.25;
  /// Cap variants per kept tree instead of over the whole beam.
  bool per_tree_variants = false;
};

/// Top k of a sorted n-best list, minus tags scoring more than alpha below the best.
std::vector<std::uint32_t> filter_candidates(const NBestList& nbest, int k, double alpha);

/// Arc-standard configuration. Vectors are indexed by 1-based token index
/// (slot 0 is the root); -1 marks "none yet".
struct ParserItem {
  std::vector<int> stack{0};
  int cursor = 1;
  std::vector<int> heads;
  std::vector<int> labels;
  std::vector<int> tags;
  std::vector<int> leftmost;
  std::vector<int> rightmost;
  double score = 0.0;
  std::vector<Transition> history;

  static ParserItem initial(std::size_t n);
  std::size_t size() const { return heads.empty() ? 0 : heads.size() - 1; }
  bool buffer_empty() const { return cursor > static_cast<int>(size()); }
  bool terminal() const { return buffer_empty() && stack.size() == 1; }
};

/// Candidate tags per token (0-based position) that SHIFT may choose from.
using Candidates = std::vector<std::vector<std::uint32_t>>;

/// Ordered by move, then argument. SHIFT tags follow the candidate list order.
std::vector<Transition> legal_transitions(const ParserItem& item, const Candidates& candidates,
                                          std::size_t num_labels);
/// Throws OracleError on an illegal transition.
ParserItem apply(const ParserItem& item, const Transition& t, double transition_score = 0.0);

/// Static arc-standard oracle over gold heads, labels and tags, indexed like
/// ParserItem (slot 0 unused). Throws OracleError when no derivation exists.
std::vector<Transition> oracle(const std::vector<int>& heads, const std::vector<int>& labels,
                               const std::vector<int>& tags);

/// Survivors of one beam step: the best item of each of the first tree_beam
/// distinct arc sets (in descending score order), then up to tag_variant_beam
/// further items that repeat a kept arc set with a different tagging. Exact
/// duplicates are dropped. Survivors keep their input order.
std::vector<ParserItem> prune(const std::vector<ParserItem>& items, const BeamConfig& config);

/// Same rule over precomputed keys; `order` lists candidates best first.
/// Returns the kept entries of `order`, still best first.
std::vector<std::size_t> prune_keys(const std::vector<std::size_t>& order, const std::vector<std::uint64_t>& arc_keys,
                                    const std::vector<std::uint64_t>& tag_keys, const BeamConfig& config);

struct JointModel {
  TaggerModel tagger;         // n-best provider; its tag set is the SHIFT vocabulary
  TemplateSet parser_templates;
  Vocabulary labels;
  BeamConfig beam;
  WeightStore weights;        // classes: SHIFT tags, then LEFT labels, then RIGHT labels

  std::size_t num_tags() const { return tagger.tags.size(); }
  std::size_t num_classes() const { return num_tags() + 2 * labels.size(); }
  std::size_t class_of(const Transition& t) const;
  std::string transition_name(const Transition& t) const;
};

/// Default configuration templates for transition scoring.
TemplateSet default_parser_templates();
inline constexpr std::uint32_t kParserHashBase = 1u << 20;

/// Scores transitions of one sentence. Unshifted tokens expose the tagger's
/// 1-best tag to the features, shifted ones the tag chosen by SHIFT.
class TransitionScorer {
 public:
  TransitionScorer(const JointModel& model, const WeightStore& weights, const Sentence& sentence,
                   std::vector<std::uint32_t> tagger_best);

  /// Keys shared by all transitions and the extra keys SHIFT adds.
  void features(const ParserItem& item, std::vector<FeatureKey>& config, std::vector<FeatureKey>& shift) const;
  /// Score of every class from `item` (size model.num_classes()).
  void score(const ParserItem& item, std::vector<double>& scores) const;
  /// Joint feature vector of a whole derivation from the initial item.
  JointFeatures derivation_features(const std::vector<Transition>& history) const;

 private:
  void fill_context(const ParserItem& item, TagContext& ctx) const;

  const JointModel& model_;
  const WeightStore& weights_;
  const Sentence& sentence_;
  std::vector<std::uint32_t> tagger_best_;
};

std::vector<std::uint32_t> one_best(const SentenceNBest& nbest);

/// Breadth-synchronous beam search over 2n steps with dual pruning. Ties go
/// to the lower transition (move, then argument), then to the earlier parent.
ParserItem beam_parse(const JointModel& model, const Sentence& sentence, const SentenceNBest& nbest,
                      const BeamConfig& config);
/// Same search over explicit candidates and weights; used by training and tests.
ParserItem beam_search(const JointModel& model, const WeightStore& weights, const Sentence& sentence,
                       const Candidates& candidates, const std::vector<std::uint32_t>& tagger_best,
                       const BeamConfig& config);

/// Writes tags, heads and labels of a terminal item into a copy of the sentence.
Sentence decode_item(const JointModel& model, const Sentence& sentence, const ParserItem& item);

/// Tags with the model's tagger and parses.
Sentence parse_sentence(const JointModel& model, const Sentence& sentence);
Corpus parse_corpus(const JointModel& model, const Corpus& corpus);
Corpus parse_corpus_serial(const JointModel& model, const Corpus& corpus);

struct JointTrainOptions {
  int jackknife_folds = 10;
  int tagger_passes = 2;
  TargetSpec target;
  /// Tagger settings; the parser uses the TrainConfig passed alongside.
  TrainConfig tagger_config;
  /// Train the jackknife taggers concurrently; false gives the serial reference.
  bool parallel_folds = true;
};

struct JointUpdateInfo {
  bool updated = false;
  bool early = false;
  int step = 0;  // transitions in the compared prefixes
  double loss = 0.0;
  double tau = 0.0;
};

/// Online trainer for the transition weights of a joint model whose tagger
/// and vocabularies are already in place.
class JointTrainer {
 public:
  JointTrainer(JointModel& model, const TrainConfig& config);

  /// One beam-decode-and-update step. `candidates` must contain the gold tags.
  JointUpdateInfo train_sentence(const Sentence& sentence, const Candidates& candidates,
                                 const std::vector<std::uint32_t>& tagger_best);
  WeightStore& weights() { return weights_; }
  /// Averaged weights moved into the model.
  void finish();

 private:
  JointModel& model_;
  TrainConfig config_;
  WeightStore weights_;
};

struct JointTrainStats {
  std::size_t skipped_sentences = 0;  // not derivable by arc-standard
  std::size_t forced_gold_tags = 0;   // gold tag outside the filtered candidates
  std::size_t early_updates = 0;
  std::size_t full_updates = 0;
};

/// Trains the tagger on the whole corpus, builds jackknifed n-best lists for
/// parser training, then trains the transition weights.
JointModel train_joint(const Corpus& corpus, const TemplateSet& templates, std::vector<std::uint32_t> active,
                       const TrainConfig& config, const BeamConfig& beam, const JointTrainOptions& options,
                       JointTrainStats* stats = nullptr);

std::vector<ModelBundle> to_bundles(const JointModel& model);
JointModel joint_from_bundles(const std::vector<ModelBundle>& bundles);

/// Gold annotation as indices, laid out like ParserItem (slot 0 unused).
struct GoldAnalysis {
  std::vector<int> heads;
  std::vector<int> labels;
  std::vector<int> tags;
};
/// Throws OracleError when a tag or label is outside the model vocabularies.
GoldAnalysis gold_analysis(const JointModel& model, const Sentence& sentence);

}  // namespace mtag
