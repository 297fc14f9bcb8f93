#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtag/error.hpp"
#include "mtag/mutual_info.hpp"

namespace mtag {

/// Mean relevance over X; 0 for the empty set.
double relevance_D(std::span<const std::uint32_t> x, const MITable& table);
/// Mean of I(X_i; X_j) over all |X|^2 ordered pairs, diagonal included unless
/// `exclude_diagonal` (then over the |X|(|X|-1) off-diagonal pairs). 0 for the empty set.
double redundancy_R(std::span<const std::uint32_t> x, const MITable& table, bool exclude_diagonal = false);
double phi(std::span<const std::uint32_t> x, const MITable& table, bool exclude_diagonal = false);

/// Remaining candidates by descending gain Phi(S + {i}) - Phi(S), computed
/// from running sums; ties go to the lower id.
std::vector<std::uint32_t> mrmr_order(std::span<const std::uint32_t> remaining, std::span<const std::uint32_t> selected,
                                      const MITable& table, bool exclude_diagonal = false);

enum class Ordering { Static, Mrmr };

struct SelectionConfig {
  double delta = 0.02;
  Ordering ordering = Ordering::Static;
  /// Accept when M + delta > B instead of requiring M >= B + delta.
  bool lenient_accept = false;
  /// Start from B = 0 instead of the empty-set metric.
  bool zero_baseline = false;
  bool exclude_diagonal = false;
};

struct TraceRow {
  int iteration = 0;
  std::uint32_t candidate = 0;
  double metric = 0.0;
  double best_before = 0.0;
  double best_after = 0.0;
  bool accepted = false;
  std::vector<std::uint32_t> ordering;  // remaining candidates in test order (dynamic only)
  double seconds = 0.0;

  nlohmann::json to_json() const;
};

struct SelectionTrace {
  double baseline = 0.0;
  std::vector<TraceRow> rows;
};

struct SelectionResult {
  std::vector<std::uint32_t> selected;
  double best = 0.0;
  SelectionTrace trace;
};

/// M(X): trains a system on the active set X and returns its metric.
using MetricOracle = std::function<double(const std::vector<std::uint32_t>&)>;
using TraceSink = std::function<void(const TraceRow&)>;

class SelectionAborted : public Error {
 public:
  SelectionAborted(const std::string& what, SelectionResult partial)
      : Error(what), partial_(std::move(partial)) {}
  const SelectionResult& partial() const { return partial_; }

 private:
  SelectionResult partial_;
};

/// Greedy forward selection. `candidates` is the static order; with MRMR
/// ordering `table` must cover every candidate id. Each candidate is trained
/// exactly once (plus the empty-set baseline unless zero_baseline). A failing
/// oracle raises SelectionAborted carrying the rows finished so far.
SelectionResult greedy_select(std::span<const std::uint32_t> candidates, const SelectionConfig& config,
                              const MetricOracle& metric, const MITable* table = nullptr,
                              const TraceSink& sink = nullptr);

}  // namespace mtag
