#include "mtag/selection.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include <spdlog/spdlog.h>

namespace mtag {

double relevance_D(std::span<const std::uint32_t> x, const MITable& table) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (const auto i : x) s += table.relevance[i];
  return s / static_cast<double>(x.size());
}

double redundancy_R(std::span<const std::uint32_t> x, const MITable& table, bool exclude_diagonal) {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (const auto i : x) {
    for (const auto j : x) {
      if (exclude_diagonal && i == j) continue;
      s += table.red(i, j);
    }
  }
  const double m = static_cast<double>(x.size());
  const double pairs = exclude_diagonal ? m * (m - 1.0) : m * m;
  return pairs > 0.0 ? s / pairs : 0.0;
}

double phi(std::span<const std::uint32_t> x, const MITable& table, bool exclude_diagonal) {
  return relevance_D(x, table) - redundancy_R(x, table, exclude_diagonal);
}

std::vector<std::uint32_t> mrmr_order(std::span<const std::uint32_t> remaining, std::span<const std::uint32_t> selected,
                                      const MITable& table, bool exclude_diagonal) {
  const double m = static_cast<double>(selected.size());
  double rel_sum = 0.0;
  double red_sum = 0.0;
  for (const auto i : selected) {
    rel_sum += table.relevance[i];
    for (const auto j : selected) {
      if (!(exclude_diagonal && i == j)) red_sum += table.red(i, j);
    }
  }
  const auto pairs = [&](double k) { return exclude_diagonal ? k * (k - 1.0) : k * k; };
  const double current = (m > 0 ? rel_sum / m : 0.0) - (pairs(m) > 0 ? red_sum / pairs(m) : 0.0);

  std::vector<std::pair<double, std::uint32_t>> scored;
  scored.reserve(remaining.size());
  for (const auto c : remaining) {
    double cross = 0.0;
    for (const auto j : selected) cross += table.red(c, j);
    const double rel = (rel_sum + table.relevance[c]) / (m + 1.0);
    const double red_total = red_sum + 2.0 * cross + (exclude_diagonal ? 0.0 : table.red(c, c));
    const double red = pairs(m + 1.0) > 0 ? red_total / pairs(m + 1.0) : 0.0;
    scored.emplace_back(rel - red - current, c);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::uint32_t> out;
  out.reserve(scored.size());
  for (const auto& s : scored) out.push_back(s.second);
  return out;
}

nlohmann::json TraceRow::to_json() const {
  nlohmann::json j;
  j["iteration"] = iteration;
  j["template"] = candidate;
  j["metric"] = metric;
  j["B_before"] = best_before;
  j["B"] = best_after;
  j["accepted"] = accepted;
  if (!ordering.empty()) j["ordering"] = ordering;
  j["seconds"] = seconds;
  return j;
}

SelectionResult greedy_select(std::span<const std::uint32_t> candidates, const SelectionConfig& config,
                              const MetricOracle& metric, const MITable* table, const TraceSink& sink) {
  if (config.delta < 0.0) throw ConfigError("selection delta must be non-negative");
  if (config.ordering == Ordering::Mrmr) {
    if (table == nullptr) throw ConfigError("MRMR ordering needs a mutual-information table");
    for (const auto c : candidates) {
      if (c >= table->size()) throw ConfigError("candidate " + std::to_string(c) + " missing from the MI table");
    }
  }
  SelectionResult result;
  const auto run = [&](const std::vector<std::uint32_t>& active) {
    try {
      return metric(active);
    } catch (const std::exception& e) {
      throw SelectionAborted(std::string("metric oracle failed: ") + e.what(), result);
    }
  };

  result.best = config.zero_baseline ? 0.0 : run({});
  result.trace.baseline = result.best;
  std::vector<std::uint32_t> pool(candidates.begin(), candidates.end());
  int iteration = 0;
  while (!pool.empty()) {
    TraceRow row;
    row.iteration = ++iteration;
    if (config.ordering == Ordering::Mrmr) {
      pool = mrmr_order(pool, result.selected, *table, config.exclude_diagonal);
      row.ordering = pool;
    }
    const auto candidate = pool.front();
    pool.erase(pool.begin());
    auto trial = result.selected;
    trial.push_back(candidate);

    const auto start = std::chrono::steady_clock::now();
    const double m = run(trial);
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    row.candidate = candidate;
    row.metric = m;
    row.best_before = result.best;
    row.accepted = config.lenient_accept ? (m + config.delta > result.best) : (m >= result.best + config.delta);
    if (row.accepted) {
      result.best = m;
      result.selected = std::move(trial);
    }
    row.best_after = result.best;
    spdlog::info("selection {}: template {} metric {:.4f} B {:.4f}{}", row.iteration, candidate, m, result.best,
                 row.accepted ? " accepted" : "");
    if (sink) sink(row);
    result.trace.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace mtag
