#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtag/learner.hpp"
#include "mtag/templates.hpp"

namespace mtag {

inline constexpr std::uint32_t kModelFormatVersion = 1;

/// One trained component: its templates, the active subset, the class
/// vocabulary and frozen weights. `meta` carries component-specific settings
/// and the run configuration that produced it.
struct ModelBundle {
  std::string kind;
  nlohmann::json meta = nlohmann::json::object();
  TemplateSet templates;
  std::vector<std::uint32_t> active;
  std::vector<std::string> classes;
  WeightStore weights;
};

/// Layout: "MTAGMODL", u32 version, u32 bundle count, then per bundle the
/// kind, meta JSON, template spec text, hash base, active ids, class names
/// and sparse (class, key, weight) triples. Integers are little-endian and
/// weights are stored as raw IEEE-754 bits.
void save_models(std::ostream& out, const std::vector<ModelBundle>& bundles);
void save_models(const std::filesystem::path& path, const std::vector<ModelBundle>& bundles);
std::vector<ModelBundle> load_models(std::istream& in);
std::vector<ModelBundle> load_models(const std::filesystem::path& path);

}  // namespace mtag
