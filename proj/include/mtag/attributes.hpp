#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtag/corpus.hpp"
#include "mtag/eval.hpp"
#include "mtag/learner.hpp"
#include "mtag/parser.hpp"
#include "mtag/templates.hpp"

namespace mtag {

struct AttributeOptions {
  int folds = 10;
  std::uint64_t seed = 1;
  double min_delta = 0.1;  // LAS points
  double max_p = 0.01;
  int shuffles = 10000;
  TemplateSet templates;
  std::vector<std::uint32_t> active;
  TrainConfig config;
  BeamConfig beam;
  int jackknife_folds = 10;
  int tagger_passes = 2;
  /// Run the CV folds concurrently; false gives the serial reference.
  bool parallel_folds = true;
};

struct AttributeRow {
  std::string attribute;
  bool present = true;
  double las = 0.0;  // pooled over all folds
  double uas = 0.0;
  double delta_las = 0.0;
  double delta_uas = 0.0;
  double p = 1.0;
  bool accepted = false;
  std::string note;

  nlohmann::json to_json() const;
};

struct AttributeReport {
  double baseline_las = 0.0;
  double baseline_uas = 0.0;
  std::size_t sentences = 0;
  std::vector<AttributeRow> rows;

  std::vector<std::string> accepted() const;
  nlohmann::json to_json() const;
};

/// Attribute names in order of first appearance.
std::vector<std::string> attributes_in(const Corpus& corpus);

/// Per-sentence scores of a k-fold cross-validation of the joint system
/// predicting POS plus the listed morph attributes, in corpus order.
EvalReport cross_validate_joint(const Corpus& corpus, const std::vector<std::string>& attributes,
                                const AttributeOptions& options);

/// Each attribute is tested on its own against the POS-only baseline over the
/// same folds. Accepted iff the pooled LAS gain is at least min_delta and the
/// paired randomization test over per-sentence labeled counts gives p <= max_p.
AttributeReport select_attributes(const Corpus& corpus, const std::vector<std::string>& attributes,
                                  const AttributeOptions& options);

/// Re-applies the thresholds to an existing report.
AttributeReport rethreshold(AttributeReport report, double min_delta, double max_p);

void print_attribute_report(std::ostream& out, const AttributeReport& report);

}  // namespace mtag
