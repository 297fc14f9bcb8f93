#pragma once

#include <cstdint>
#include <string_view>

namespace mtag {

using FeatureKey = std::uint64_t;

// FNV-1a over the value bytes, seeded with the template id, followed by the
// splitmix64 finalizer for avalanche. The function is part of the model file
// contract: changing it invalidates every saved model.
inline FeatureKey feature_hash(std::uint32_t template_id, std::string_view value) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ (static_cast<std::uint64_t>(template_id) * 0x9e3779b97f4a7c15ULL);
  for (const char c : value) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace mtag
