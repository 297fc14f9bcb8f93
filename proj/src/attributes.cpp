#include "mtag/attributes.hpp"

#include <iomanip>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "mtag/error.hpp"

namespace mtag {

nlohmann::json AttributeRow::to_json() const {
  nlohmann::json j;
  j["attribute"] = attribute;
  j["present"] = present;
  j["las"] = las;
  j["uas"] = uas;
  j["delta_las"] = delta_las;
  j["delta_uas"] = delta_uas;
  j["p"] = p;
  j["accepted"] = accepted;
  if (!note.empty()) j["note"] = note;
  return j;
}

std::vector<std::string> AttributeReport::accepted() const {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    if (r.accepted) out.push_back(r.attribute);
  }
  return out;
}

nlohmann::json AttributeReport::to_json() const {
  nlohmann::json j;
  j["baseline_las"] = baseline_las;
  j["baseline_uas"] = baseline_uas;
  j["sentences"] = sentences;
  auto& rs = j["attributes"] = nlohmann::json::array();
  for (const auto& r : rows) rs.push_back(r.to_json());
  return j;
}

std::vector<std::string> attributes_in(const Corpus& corpus) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& s : corpus) {
    for (const auto& t : s.tokens) {
      for (const auto& [attr, value] : t.morph.entries()) {
        if (seen.insert(attr).second) out.push_back(attr);
      }
    }
  }
  return out;
}

EvalReport cross_validate_joint(const Corpus& corpus, const std::vector<std::string>& attributes,
                                const AttributeOptions& options) {
  const auto folds = kfold(corpus, options.folds, options.seed);
  JointTrainOptions joint;
  joint.jackknife_folds = options.jackknife_folds;
  joint.tagger_passes = options.tagger_passes;
  joint.target = attributes.empty() ? TargetSpec{} : TargetSpec::parse("pos+morph", attributes);
  joint.tagger_config = options.config;
  joint.parallel_folds = options.parallel_folds;

  Corpus predicted(corpus.size());
  const auto k = static_cast<std::ptrdiff_t>(folds.size());
  // Each fold owns its trainer; an exception inside the parallel region is
  // carried out by hand.
  std::string failure;
#pragma omp parallel for schedule(dynamic, 1) if (options.parallel_folds)
  for (std::ptrdiff_t f = 0; f < k; ++f) {
    try {
      const auto& fold = folds[static_cast<std::size_t>(f)];
      const auto model = train_joint(fold.train, options.templates, options.active, options.config, options.beam, joint);
      const auto parsed = parse_corpus_serial(model, blind(fold.test));
      for (std::size_t i = 0; i < parsed.size(); ++i) predicted[fold.test_indices[i]] = parsed[i];
    } catch (const std::exception& e) {
#pragma omp critical(mtag_cv_failure)
      failure = e.what();
    }
  }
  if (!failure.empty()) throw Error("cross-validation failed: " + failure);
  return evaluate(corpus, predicted);
}

AttributeReport rethreshold(AttributeReport report, double min_delta, double max_p) {
  for (auto& r : report.rows) r.accepted = r.present && r.delta_las >= min_delta && r.p <= max_p;
  return report;
}

AttributeReport select_attributes(const Corpus& corpus, const std::vector<std::string>& attributes,
                                  const AttributeOptions& options) {
  if (corpus.empty()) throw ConfigError("attribute selection needs a non-empty corpus");
  if (options.folds < 2) throw ConfigError("attribute selection needs at least 2 folds");
  const auto present = attributes_in(corpus);
  const std::set<std::string> present_set(present.begin(), present.end());

  AttributeReport report;
  report.sentences = corpus.size();
  spdlog::info("attribute selection: {}-fold baseline (POS only)", options.folds);
  const auto base = cross_validate_joint(corpus, {}, options);
  report.baseline_las = base.las;
  report.baseline_uas = base.uas;
  std::vector<double> base_labeled;
  for (const auto& s : base.per_sentence) base_labeled.push_back(static_cast<double>(s.labeled));

  for (const auto& attr : attributes) {
    AttributeRow row;
    row.attribute = attr;
    if (!present_set.count(attr)) {
      row.present = false;
      row.note = "not present in the corpus; skipped";
      spdlog::warn("attribute {} does not occur in the corpus; skipped", attr);
      report.rows.push_back(row);
      continue;
    }
    spdlog::info("attribute selection: testing {}", attr);
    const auto with = cross_validate_joint(corpus, {attr}, options);
    std::vector<double> labeled;
    for (const auto& s : with.per_sentence) labeled.push_back(static_cast<double>(s.labeled));
    row.las = with.las;
    row.uas = with.uas;
    row.delta_las = with.las - base.las;
    row.delta_uas = with.uas - base.uas;
    row.p = paired_randomization(labeled, base_labeled, options.shuffles, options.seed);
    report.rows.push_back(row);
  }
  return rethreshold(std::move(report), options.min_delta, options.max_p);
}

void print_attribute_report(std::ostream& out, const AttributeReport& report) {
  out << std::fixed << std::setprecision(2) << "baseline (POS only): LAS " << report.baseline_las << " UAS "
      << report.baseline_uas << " over " << report.sentences << " sentences\n";
  out << std::left << std::setw(16) << "attribute" << std::right << std::setw(8) << "LAS" << std::setw(8) << "UAS"
      << std::setw(9) << "dLAS" << std::setw(9) << "dUAS" << std::setw(9) << "p" << std::setw(10) << "accepted"
      << '\n';
  for (const auto& r : report.rows) {
    out << std::left << std::setw(16) << r.attribute << std::right;
    if (!r.present) {
      out << "  " << r.note << '\n';
      continue;
    }
    out << std::setprecision(2) << std::setw(8) << r.las << std::setw(8) << r.uas << std::setw(9) << r.delta_las
        << std::setw(9) << r.delta_uas << std::setprecision(4) << std::setw(9) << r.p << std::setw(10)
        << (r.accepted ? "yes" : "no") << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace mtag
