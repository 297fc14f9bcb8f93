#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "mtag/hash.hpp"

namespace mtag {

enum class LossKind { ZeroOne, Hamming };

struct TrainConfig {
  int iterations = 12;
  std::uint64_t seed = 1;
  double aggressiveness = 1.0;  // MIRA's C
  LossKind loss = LossKind::ZeroOne;
};

/// Per-class weights over hashed features. Each feature key owns a short
/// row of (class, weight) cells holding only the classes it was ever updated
/// for, so scoring cost follows the number of nonzero weights.
///
/// While training, every add() also feeds an accumulator so that averaged()
/// returns the mean of the weight vectors observed after each tick().
class WeightStore {
 public:
  WeightStore() = default;
  explicit WeightStore(std::size_t num_classes) : classes_(num_classes) {}

  std::size_t num_classes() const { return classes_; }
  std::size_t num_features() const { return rows_.size(); }
  bool frozen() const { return frozen_; }
  std::uint64_t steps() const { return steps_; }

  double weight(FeatureKey key, std::size_t cls) const;
  /// Adds the row of every key into `scores` (size num_classes()).
  void score_all(std::span<const FeatureKey> features, std::span<double> scores) const;
  /// Sum over features of the class weight. Throws ConfigError on a bad class.
  double score(std::span<const FeatureKey> features, std::size_t cls) const;

  void add(FeatureKey key, std::size_t cls, double delta);
  /// Marks the end of one training step (one averaging sample).
  void tick() { ++steps_; }

  /// Averaged, frozen copy. Averaging a frozen store returns it unchanged.
  WeightStore averaged() const;

  /// Direct write used by model loading; marks the store frozen.
  void set_frozen(FeatureKey key, std::size_t cls, double value);

  template <typename F>
  void for_each_nonzero(F&& f) const {
    for (const auto& [key, row] : rows_) {
      for (const auto& cell : cells_[row]) {
        if (cell.weight != 0.0) f(key, static_cast<std::size_t>(cell.cls), cell.weight);
      }
    }
  }

 private:
  struct Cell {
    std::uint32_t cls;
    double weight;
    double accum;
  };

  Cell& cell_for(FeatureKey key, std::size_t cls);

  std::size_t classes_ = 0;
  // Keys are already well-mixed hashes.
  struct KeyHash {
    std::size_t operator()(FeatureKey k) const { return static_cast<std::size_t>(k); }
  };
  absl::flat_hash_map<FeatureKey, std::uint32_t, KeyHash> rows_;
  std::vector<std::vector<Cell>> cells_;
  std::uint64_t steps_ = 0;
  bool frozen_ = false;
};

inline double score(const WeightStore& ws, std::span<const FeatureKey> features, std::size_t cls) {
  return ws.score(features, cls);
}

WeightStore average_and_freeze(const WeightStore& ws);

/// Sparse joint feature vector over (class, key) pairs. Entries are merged
/// and sorted by compact().
class JointFeatures {
 public:
  struct Entry {
    std::uint32_t cls;
    FeatureKey key;
    double value;
  };

  void add(std::size_t cls, std::span<const FeatureKey> keys, double value = 1.0);
  void add(std::size_t cls, FeatureKey key, double value = 1.0);
  void compact();
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  /// this - other, both compacted.
  JointFeatures minus(const JointFeatures& other) const;
  double squared_norm() const;
  double dot(const WeightStore& ws) const;

 private:
  std::vector<Entry> entries_;
  bool compacted_ = true;
};

struct MiraResult {
  double tau = 0.0;
  bool updated = false;
  bool degenerate = false;  // zero feature difference with a positive required gain
};

/// 1-best MIRA on joint feature vectors: tau = min(C, max(0, (loss - margin) / |dphi|^2)).
/// Degenerate updates are skipped and flagged; trainers count them and warn once per run.
MiraResult mira_update(WeightStore& ws, const JointFeatures& gold, const JointFeatures& predicted, double loss,
                       double aggressiveness = 1.0);

/// Single-decision form used by the tagger: phi(f, class) for gold and prediction.
MiraResult mira_update(WeightStore& ws, std::span<const FeatureKey> gold_features,
                       std::span<const FeatureKey> predicted_features, std::size_t gold, std::size_t predicted,
                       double loss, double aggressiveness = 1.0);

}  // namespace mtag
