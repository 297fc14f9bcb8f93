#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/learner.hpp"
#include "mtag/model_io.hpp"
#include "mtag/tagset.hpp"
#include "mtag/templates.hpp"

namespace mtag {

struct ScoredTag {
  std::uint32_t tag = 0;
  double score = 0.0;

  friend bool operator==(const ScoredTag&, const ScoredTag&) = default;
};

/// Every tag of the model, best first; ties go to the lower tag index.
using NBestList = std::vector<ScoredTag>;
using SentenceNBest = std::vector<NBestList>;

struct TaggerModel {
  TemplateSet templates;
  std::vector<std::uint32_t> active;
  int passes = 2;
  TagSet tags;
  WeightStore weights;
};

/// Runs the model's passes left to right. Tag-reading templates see this
/// pass's predictions to the left and the previous pass's to the right
/// (<none> during the first pass). Only the model's own predictions enter
/// the tag context; annotations already present in the input are ignored.
SentenceNBest tag_sentence(const TaggerModel& model, const Sentence& sentence);

struct TaggerTrainStats {
  std::uint64_t decisions = 0;
  std::uint64_t updates = 0;
  std::uint64_t degenerate = 0;
  std::vector<double> epoch_accuracy;  // training accuracy of the last pass, per epoch
};

/// Online MIRA with zero-one loss. Decoding during training follows the same
/// multi-pass regime as inference; every pass's decision may trigger an
/// update. The tag set is built from `corpus`.
TaggerModel train_tagger(const Corpus& corpus, const TemplateSet& templates, std::vector<std::uint32_t> active,
                         const TrainConfig& config, const TargetSpec& target, int passes = 2,
                         TaggerTrainStats* stats = nullptr);

std::vector<SentenceNBest> tag_corpus(const TaggerModel& model, const Corpus& corpus);
/// Single-threaded reference for tag_corpus.
std::vector<SentenceNBest> tag_corpus_serial(const TaggerModel& model, const Corpus& corpus);

/// Copies of the sentences with the 1-best tag of each token written into its target fields.
Corpus apply_tags(const TaggerModel& model, const Corpus& corpus, const std::vector<SentenceNBest>& nbest);

/// 100 * share of tokens whose target label matches.
double accuracy(const Corpus& predicted, const Corpus& gold, const TargetSpec& target);

/// One line per token, tab-separated "tag:score" pairs (at most `limit` per line, 0 for all);
/// a blank line ends each sentence.
void write_nbest(std::ostream& out, const TaggerModel& model, const std::vector<SentenceNBest>& nbest,
                 std::size_t limit = 0);

ModelBundle to_bundle(const TaggerModel& model);
TaggerModel tagger_from_bundle(const ModelBundle& bundle);

/// Drops gold annotation that a system is supposed to predict (pos, morph, head, deprel).
Corpus blind(const Corpus& corpus);

}  // namespace mtag
