#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mtag/corpus.hpp"
#include "mtag/tagset.hpp"
#include "mtag/templates.hpp"

namespace mtag {

/// Dense joint counts of two discrete variables, row-major.
struct ContingencyTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> counts;

  ContingencyTable() = default;
  ContingencyTable(std::size_t r, std::size_t c) : rows(r), cols(c), counts(r * c, 0.0) {}
  double& at(std::size_t x, std::size_t y) { return counts[x * cols + y]; }
  double at(std::size_t x, std::size_t y) const { return counts[x * cols + y]; }
  double total() const;
};

/// Plug-in estimate in bits; empty cells contribute nothing. Zero total gives 0.
double mutual_information(const ContingencyTable& table);
double entropy(std::span<const double> counts);

/// Same estimate from two aligned code sequences (codes are small integers).
double mutual_information(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y);
double entropy(std::span<const std::uint32_t> codes);

struct MITable {
  std::vector<double> relevance;   // I(X_i; C)
  std::vector<double> redundancy;  // I(X_i; X_j), row-major, size n*n
  double class_entropy = 0.0;
  std::size_t samples = 0;
  int rare_threshold = 2;

  std::size_t size() const { return relevance.size(); }
  double red(std::size_t i, std::size_t j) const { return redundancy[i * size() + j]; }
  double& red(std::size_t i, std::size_t j) { return redundancy[i * size() + j]; }
};

/// Every token of the corpus is one sample. Template values are computed with
/// the gold tags as context; values seen fewer than `rare_threshold` times
/// collapse into a single RARE value.
struct VariableCodes {
  std::vector<std::vector<std::uint32_t>> templates;  // one code sequence per template
  std::vector<std::uint32_t> classes;
};
VariableCodes encode_variables(const Corpus& corpus, const TemplateSet& set, const TargetSpec& target,
                               int rare_threshold = 2);

MITable build_mi_table(const Corpus& corpus, const TemplateSet& set, const TargetSpec& target,
                       int rare_threshold = 2);
/// Table from already encoded variables; the pair loop runs in parallel.
MITable mi_table_from_codes(const VariableCodes& codes, int rare_threshold = 2);
/// Single-threaded reference for mi_table_from_codes.
MITable mi_table_from_codes_serial(const VariableCodes& codes, int rare_threshold = 2);

}  // namespace mtag
