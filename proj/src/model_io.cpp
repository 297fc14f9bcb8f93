#include "mtag/model_io.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <tuple>

#include "mtag/error.hpp"

namespace mtag {
namespace {

constexpr char kMagic[8] = {'M', 'T', 'A', 'G', 'M', 'O', 'D', 'L'};

template <typename T>
void put(std::ostream& out, T value) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<unsigned char>((value >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& in) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw ModelError("model file is truncated");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(buf[i]) << (8 * i);
  return value;
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  if (n > (std::uint64_t{1} << 32)) throw ModelError("model file is corrupt (string length " + std::to_string(n) + ")");
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), static_cast<std::streamsize>(n))) throw ModelError("model file is truncated");
  return s;
}

void save_bundle(std::ostream& out, const ModelBundle& b) {
  put_string(out, b.kind);
  put_string(out, b.meta.dump());
  put_string(out, b.templates.name);
  put_string(out, b.templates.spec_text());
  put<std::uint32_t>(out, b.templates.hash_base);
  put<std::uint64_t>(out, b.active.size());
  for (const auto id : b.active) put<std::uint32_t>(out, id);
  put<std::uint64_t>(out, b.classes.size());
  for (const auto& c : b.classes) put_string(out, c);

  const WeightStore frozen = b.weights.averaged();
  std::vector<std::tuple<std::uint32_t, std::uint64_t, double>> triples;
  frozen.for_each_nonzero([&](FeatureKey key, std::size_t cls, double w) {
    triples.emplace_back(static_cast<std::uint32_t>(cls), key, w);
  });
  // Hash-map order is not stable across processes; sorting keeps files byte-identical.
  std::sort(triples.begin(), triples.end());
  put<std::uint64_t>(out, triples.size());
  for (const auto& [cls, key, w] : triples) {
    put<std::uint32_t>(out, cls);
    put<std::uint64_t>(out, key);
    put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(w));
  }
}

ModelBundle load_bundle(std::istream& in) {
  ModelBundle b;
  b.kind = get_string(in);
  try {
    b.meta = nlohmann::json::parse(get_string(in));
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("model metadata is not valid JSON: ") + e.what());
  }
  const std::string name = get_string(in);
  b.templates = parse_template_spec(get_string(in), name);
  b.templates.hash_base = get<std::uint32_t>(in);
  const auto n_active = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_active; ++i) b.active.push_back(get<std::uint32_t>(in));
  validate_active(b.templates, b.active);
  const auto n_classes = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_classes; ++i) b.classes.push_back(get_string(in));
  b.weights = WeightStore(b.classes.size());
  const auto n_triples = get<std::uint64_t>(in);
  for (std::uint64_t i = 0; i < n_triples; ++i) {
    const auto cls = get<std::uint32_t>(in);
    const auto key = get<std::uint64_t>(in);
    const auto bits = get<std::uint64_t>(in);
    b.weights.set_frozen(key, cls, std::bit_cast<double>(bits));
  }
  if (n_triples == 0) b.weights = b.weights.averaged();
  return b;
}

}  // namespace

void save_models(std::ostream& out, const std::vector<ModelBundle>& bundles) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kModelFormatVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(bundles.size()));
  for (const auto& b : bundles) save_bundle(out, b);
  if (!out) throw IoError("failed writing model");
}

void save_models(const std::filesystem::path& path, const std::vector<ModelBundle>& bundles) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  save_models(out, bundles);
}

std::vector<ModelBundle> load_models(std::istream& in) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic))) throw ModelError("model file is truncated");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ModelError("not a model file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  if (version != kModelFormatVersion) {
    throw ModelError("model format version " + std::to_string(version) + " is not supported (expected " +
                     std::to_string(kModelFormatVersion) + ")");
  }
  const auto count = get<std::uint32_t>(in);
  std::vector<ModelBundle> bundles;
  for (std::uint32_t i = 0; i < count; ++i) bundles.push_back(load_bundle(in));
  return bundles;
}

std::vector<ModelBundle> load_models(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file " + path.string());
  return load_models(in);
}

}  // namespace mtag
