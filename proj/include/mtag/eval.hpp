#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtag/corpus.hpp"

namespace mtag {

/// Two-sided paired approximate randomization on per-item scores: each pair is
/// swapped with probability 1/2 and the absolute difference of the sums is
/// compared with the observed one. Returns (hits + 1) / (shuffles + 1).
double paired_randomization(std::span<const double> a, std::span<const double> b, int shuffles = 10000,
                            std::uint64_t seed = 1);

struct SentenceScore {
  std::size_t tokens = 0;
  std::size_t pos = 0;
  std::size_t morph = 0;
  std::size_t head = 0;
  std::size_t labeled = 0;
};

struct EvalOptions {
  /// Skip tokens whose gold form is made of punctuation characters only.
  bool exclude_punct = false;
  /// Compare morphology on these attributes only (empty: whole bundle).
  std::vector<std::string> morph_attributes;
};

struct EvalReport {
  double pos = 0.0;
  double morph = 0.0;
  double uas = 0.0;
  double las = 0.0;
  /// False for tag-only systems; UAS/LAS are then meaningless and left out.
  bool parsed = true;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  double sec_per_sentence = -1.0;  // negative when not timed
  std::size_t template_count = 0;
  std::size_t full_template_count = 0;
  std::vector<SentenceScore> per_sentence;

  /// 100 * (1 - active / full); 0 without a full count.
  double reduction() const;
  nlohmann::json to_json(bool with_sentences = false) const;
  static EvalReport from_json(const nlohmann::json& j);
};

bool is_punctuation(std::string_view form);

/// Throws AlignmentError naming the first sentence whose length differs.
EvalReport evaluate(const Corpus& gold, const Corpus& predicted, const EvalOptions& options = {});

struct MetricDelta {
  std::string metric;
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // b - a
  double p = 1.0;
};

/// Per-metric deltas (B minus A) with paired randomization p-values over
/// per-sentence correct counts. Both reports must cover the same gold corpus.
std::vector<MetricDelta> compare_runs(const EvalReport& a, const EvalReport& b, int shuffles = 10000,
                                      std::uint64_t seed = 1);

void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows);
void print_comparison(std::ostream& out, const std::vector<MetricDelta>& deltas);

}  // namespace mtag
