#include "mtag/mutual_info.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace mtag {
namespace {

std::uint32_t cardinality(std::span<const std::uint32_t> codes) {
  std::uint32_t m = 0;
  for (const auto c : codes) m = std::max(m, c + 1);
  return m;
}

// Sum over cells of c * log2(c), the building block of every plug-in estimate:
// H = log2 N - S/N and I = (S_xy - S_x - S_y)/N + log2 N.
double sum_clogc(std::span<const double> counts) {
  double s = 0.0;
  for (const double c : counts) {
    if (c > 0.0) s += c * std::log2(c);
  }
  return s;
}

double pair_mi(std::span<const std::uint32_t> x, std::uint32_t cx, std::span<const std::uint32_t> y,
               std::uint32_t cy) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  std::vector<double> mx(cx, 0.0);
  std::vector<double> my(cy, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    mx[x[i]] += 1.0;
    my[y[i]] += 1.0;
  }
  double sxy = 0.0;
  const auto cells = static_cast<std::uint64_t>(cx) * cy;
  if (cells <= 4 * n + 1024) {
    std::vector<double> joint(cells, 0.0);
    for (std::size_t i = 0; i < n; ++i) joint[static_cast<std::uint64_t>(x[i]) * cy + y[i]] += 1.0;
    sxy = sum_clogc(joint);
  } else {
    std::vector<std::uint64_t> keys(n);
    for (std::size_t i = 0; i < n; ++i) keys[i] = static_cast<std::uint64_t>(x[i]) * cy + y[i];
    std::sort(keys.begin(), keys.end());
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j < n && keys[j] == keys[i]) ++j;
      const auto c = static_cast<double>(j - i);
      sxy += c * std::log2(c);
      i = j;
    }
  }
  const double dn = static_cast<double>(n);
  const double mi = (sxy - sum_clogc(mx) - sum_clogc(my)) / dn + std::log2(dn);
  return std::max(mi, 0.0);
}

MITable table_shell(const VariableCodes& codes, int rare_threshold) {
  MITable t;
  const std::size_t m = codes.templates.size();
  t.relevance.assign(m, 0.0);
  t.redundancy.assign(m * m, 0.0);
  t.samples = codes.classes.size();
  t.rare_threshold = rare_threshold;
  t.class_entropy = entropy(codes.classes);
  return t;
}

}  // namespace

double ContingencyTable::total() const {
  double s = 0.0;
  for (const double c : counts) s += c;
  return s;
}

double mutual_information(const ContingencyTable& table) {
  const double n = table.total();
  if (n <= 0.0) return 0.0;
  std::vector<double> px(table.rows, 0.0);
  std::vector<double> py(table.cols, 0.0);
  for (std::size_t x = 0; x < table.rows; ++x) {
    for (std::size_t y = 0; y < table.cols; ++y) {
      px[x] += table.at(x, y);
      py[y] += table.at(x, y);
    }
  }
  double mi = 0.0;
  for (std::size_t x = 0; x < table.rows; ++x) {
    for (std::size_t y = 0; y < table.cols; ++y) {
      const double c = table.at(x, y);
      if (c <= 0.0) continue;
      mi += (c / n) * std::log2((c * n) / (px[x] * py[y]));
    }
  }
  return mi;
}

double entropy(std::span<const double> counts) {
  double n = 0.0;
  for (const double c : counts) n += c;
  if (n <= 0.0) return 0.0;
  double h = 0.0;
  for (const double c : counts) {
    if (c > 0.0) h -= (c / n) * std::log2(c / n);
  }
  return h;
}

double mutual_information(std::span<const std::uint32_t> x, std::span<const std::uint32_t> y) {
  return pair_mi(x, cardinality(x), y, cardinality(y));
}

double entropy(std::span<const std::uint32_t> codes) {
  std::vector<double> counts(cardinality(codes), 0.0);
  for (const auto c : codes) counts[c] += 1.0;
  return entropy(counts);
}

VariableCodes encode_variables(const Corpus& corpus, const TemplateSet& set, const TargetSpec& target,
                               int rare_threshold) {
  VariableCodes out;
  out.templates.resize(set.size());
  std::vector<std::unordered_map<std::string, std::uint32_t>> index(set.size());
  std::vector<std::vector<std::uint32_t>> freq(set.size());
  std::vector<std::vector<std::uint32_t>> raw(set.size());
  std::unordered_map<std::string, std::uint32_t> class_index;

  for (const auto& sentence : corpus) {
    TagContext ctx(sentence.size());
    std::vector<std::string> morph(sentence.size());
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      morph[i] = sentence[i].morph.str();
      ctx.pos[i] = sentence[i].pos;
      ctx.morph[i] = morph[i];
      ctx.deprel[i] = sentence[i].deprel;
    }
    for (std::size_t i = 0; i < sentence.size(); ++i) {
      const auto frame = AnchorFrame::at_word(i);
      for (std::size_t t = 0; t < set.size(); ++t) {
        auto value = template_value(set[t], sentence, frame, ctx);
        auto [it, inserted] = index[t].try_emplace(std::move(value), static_cast<std::uint32_t>(freq[t].size()));
        if (inserted) freq[t].push_back(0);
        ++freq[t][it->second];
        raw[t].push_back(it->second);
      }
      auto [cit, cinserted] =
          class_index.try_emplace(target.label_of(sentence[i]), static_cast<std::uint32_t>(class_index.size()));
      out.classes.push_back(cit->second);
    }
  }

  // Code 0 is RARE; frequent values are renumbered from 1 in first-seen order.
  for (std::size_t t = 0; t < set.size(); ++t) {
    std::vector<std::uint32_t> remap(freq[t].size(), 0);
    std::uint32_t next = 1;
    for (std::size_t v = 0; v < freq[t].size(); ++v) {
      if (static_cast<int>(freq[t][v]) >= rare_threshold) remap[v] = next++;
    }
    out.templates[t].reserve(raw[t].size());
    for (const auto v : raw[t]) out.templates[t].push_back(remap[v]);
  }
  return out;
}

MITable mi_table_from_codes(const VariableCodes& codes, int rare_threshold) {
  MITable t = table_shell(codes, rare_threshold);
  const std::size_t m = codes.templates.size();
  std::vector<std::uint32_t> card(m);
  for (std::size_t i = 0; i < m; ++i) card[i] = cardinality(codes.templates[i]);
  const std::uint32_t cc = cardinality(codes.classes);
  for (std::size_t i = 0; i < m; ++i) t.relevance[i] = pair_mi(codes.templates[i], card[i], codes.classes, cc);

  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (std::uint32_t i = 0; i < m; ++i) {
    for (std::uint32_t j = i; j < m; ++j) pairs.emplace_back(i, j);
  }
  const auto np = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t p = 0; p < np; ++p) {
    const auto [i, j] = pairs[static_cast<std::size_t>(p)];
    const double v = pair_mi(codes.templates[i], card[i], codes.templates[j], card[j]);
    t.red(i, j) = v;
    t.red(j, i) = v;
  }
  return t;
}

MITable mi_table_from_codes_serial(const VariableCodes& codes, int rare_threshold) {
  MITable t = table_shell(codes, rare_threshold);
  const std::size_t m = codes.templates.size();
  for (std::size_t i = 0; i < m; ++i) t.relevance[i] = mutual_information(codes.templates[i], codes.classes);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i; j < m; ++j) {
      const double v = mutual_information(codes.templates[i], codes.templates[j]);
      t.red(i, j) = v;
      t.red(j, i) = v;
    }
  }
  return t;
}

MITable build_mi_table(const Corpus& corpus, const TemplateSet& set, const TargetSpec& target, int rare_threshold) {
  return mi_table_from_codes(encode_variables(corpus, set, target, rare_threshold), rare_threshold);
}

}  // namespace mtag
