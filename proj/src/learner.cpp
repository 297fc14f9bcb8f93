#include "mtag/learner.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "mtag/error.hpp"

namespace mtag {

double WeightStore::weight(FeatureKey key, std::size_t cls) const {
  auto it = rows_.find(key);
  if (it == rows_.end()) return 0.0;
  for (const auto& cell : cells_[it->second]) {
    if (cell.cls == cls) return cell.weight;
  }
  return 0.0;
}

void WeightStore::score_all(std::span<const FeatureKey> features, std::span<double> scores) const {
  for (const auto key : features) {
    auto it = rows_.find(key);
    if (it == rows_.end()) continue;
    for (const auto& cell : cells_[it->second]) scores[cell.cls] += cell.weight;
  }
}

double WeightStore::score(std::span<const FeatureKey> features, std::size_t cls) const {
  if (cls >= classes_) throw ConfigError("class " + std::to_string(cls) + " outside the class vocabulary");
  double total = 0.0;
  for (const auto key : features) total += weight(key, cls);
  return total;
}

WeightStore::Cell& WeightStore::cell_for(FeatureKey key, std::size_t cls) {
  auto [it, inserted] = rows_.try_emplace(key, static_cast<std::uint32_t>(cells_.size()));
  if (inserted) cells_.emplace_back();
  auto& row = cells_[it->second];
  auto pos = std::lower_bound(row.begin(), row.end(), cls,
                              [](const Cell& c, std::size_t v) { return c.cls < v; });
  if (pos == row.end() || pos->cls != cls) pos = row.insert(pos, Cell{static_cast<std::uint32_t>(cls), 0.0, 0.0});
  return *pos;
}

void WeightStore::add(FeatureKey key, std::size_t cls, double delta) {
  if (frozen_) throw ModelError("cannot update a frozen weight store");
  if (cls >= classes_) throw ConfigError("class " + std::to_string(cls) + " outside the class vocabulary");
  auto& cell = cell_for(key, cls);
  cell.weight += delta;
  // The update lands in step steps_+1, so it is missing from the first steps_ samples.
  cell.accum += static_cast<double>(steps_) * delta;
}

WeightStore WeightStore::averaged() const {
  if (frozen_) return *this;
  WeightStore out = *this;
  out.frozen_ = true;
  const double t = static_cast<double>(steps_);
  for (auto& row : out.cells_) {
    for (auto& cell : row) {
      if (steps_ > 0) cell.weight -= cell.accum / t;
      cell.accum = 0.0;
    }
  }
  return out;
}

void WeightStore::set_frozen(FeatureKey key, std::size_t cls, double value) {
  if (cls >= classes_) throw ModelError("class " + std::to_string(cls) + " outside the class vocabulary");
  frozen_ = true;
  cell_for(key, cls).weight = value;
}

WeightStore average_and_freeze(const WeightStore& ws) { return ws.averaged(); }

void JointFeatures::add(std::size_t cls, std::span<const FeatureKey> keys, double value) {
  for (const auto k : keys) entries_.push_back({static_cast<std::uint32_t>(cls), k, value});
  compacted_ = false;
}

void JointFeatures::add(std::size_t cls, FeatureKey key, double value) {
  entries_.push_back({static_cast<std::uint32_t>(cls), key, value});
  compacted_ = false;
}

void JointFeatures::compact() {
  if (compacted_) return;
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.cls != b.cls ? a.cls < b.cls : a.key < b.key;
  });
  std::size_t out = 0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (out > 0 && entries_[out - 1].cls == entries_[i].cls && entries_[out - 1].key == entries_[i].key) {
      entries_[out - 1].value += entries_[i].value;
    } else {
      entries_[out++] = entries_[i];
    }
  }
  entries_.resize(out);
  std::erase_if(entries_, [](const Entry& e) { return e.value == 0.0; });
  compacted_ = true;
}

JointFeatures JointFeatures::minus(const JointFeatures& other) const {
  JointFeatures out;
  out.entries_ = entries_;
  for (const auto& e : other.entries_) out.entries_.push_back({e.cls, e.key, -e.value});
  out.compacted_ = false;
  out.compact();
  return out;
}

double JointFeatures::squared_norm() const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

double JointFeatures::dot(const WeightStore& ws) const {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * ws.weight(e.key, e.cls);
  return s;
}

MiraResult mira_update(WeightStore& ws, const JointFeatures& gold, const JointFeatures& predicted, double loss,
                       double aggressiveness) {
  JointFeatures g = gold;
  JointFeatures p = predicted;
  g.compact();
  p.compact();
  const JointFeatures delta = g.minus(p);
  const double margin = delta.dot(ws);
  const double gain = loss - margin;
  MiraResult result;
  if (gain <= 0.0) return result;
  const double norm = delta.squared_norm();
  if (norm == 0.0) {
    spdlog::debug("MIRA update skipped: identical feature vectors with loss {}", loss);
    result.degenerate = true;
    return result;
  }
  result.tau = std::min(aggressiveness, gain / norm);
  for (const auto& e : delta.entries()) ws.add(e.key, e.cls, result.tau * e.value);
  result.updated = true;
  return result;
}

MiraResult mira_update(WeightStore& ws, std::span<const FeatureKey> gold_features,
                       std::span<const FeatureKey> predicted_features, std::size_t gold, std::size_t predicted,
                       double loss, double aggressiveness) {
  JointFeatures g;
  JointFeatures p;
  g.add(gold, gold_features);
  p.add(predicted, predicted_features);
  return mira_update(ws, g, p, loss, aggressiveness);
}

}  // namespace mtag
