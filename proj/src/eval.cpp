#include "mtag/eval.hpp"

#include <cctype>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "mtag/error.hpp"
#include "mtag/rng.hpp"
#include "mtag/utf8.hpp"

namespace mtag {
namespace {

double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 100.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::vector<double> column(const EvalReport& r, std::size_t SentenceScore::*field) {
  std::vector<double> out;
  out.reserve(r.per_sentence.size());
  for (const auto& s : r.per_sentence) out.push_back(static_cast<double>(s.*field));
  return out;
}

}  // namespace

double paired_randomization(std::span<const double> a, std::span<const double> b, int shuffles, std::uint64_t seed) {
  if (a.size() != b.size()) throw AlignmentError("paired test needs equally many scores on both sides");
  std::vector<double> diff(a.size());
  double observed = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff[i] = a[i] - b[i];
    observed += diff[i];
  }
  observed = std::fabs(observed);
  // Scores are small counts; the tolerance only absorbs summation-order noise.
  const double eps = 1e-9 * (1.0 + observed);
  Rng rng(seed);
  int hits = 0;
  for (int r = 0; r < shuffles; ++r) {
    double s = 0.0;
    for (const double d : diff) s += rng.coin() ? -d : d;
    if (std::fabs(s) >= observed - eps) ++hits;
  }
  return (static_cast<double>(hits) + 1.0) / (static_cast<double>(shuffles) + 1.0);
}

bool is_punctuation(std::string_view form) {
  if (form.empty()) return false;
  for (const char c : form) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || !std::ispunct(u)) return false;
  }
  return true;
}

double EvalReport::reduction() const {
  if (full_template_count == 0) return 0.0;
  return 100.0 * (1.0 - static_cast<double>(template_count) / static_cast<double>(full_template_count));
}

nlohmann::json EvalReport::to_json(bool with_sentences) const {
  nlohmann::json j;
  j["pos"] = pos;
  j["morph"] = morph;
  if (parsed) {
    j["uas"] = uas;
    j["las"] = las;
  }
  j["sentences"] = sentences;
  j["tokens"] = tokens;
  if (sec_per_sentence >= 0.0) j["sec_per_sentence"] = sec_per_sentence;
  j["templates"] = template_count;
  j["full_templates"] = full_template_count;
  j["reduction_pct"] = reduction();
  if (with_sentences) {
    auto& rows = j["per_sentence"] = nlohmann::json::array();
    for (const auto& s : per_sentence) rows.push_back({s.tokens, s.pos, s.morph, s.head, s.labeled});
  }
  return j;
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  EvalReport r;
  try {
    r.pos = j.at("pos").get<double>();
    r.morph = j.at("morph").get<double>();
    r.parsed = j.contains("uas");
    if (r.parsed) {
      r.uas = j.at("uas").get<double>();
      r.las = j.at("las").get<double>();
    }
    r.sentences = j.at("sentences").get<std::size_t>();
    r.tokens = j.at("tokens").get<std::size_t>();
    r.sec_per_sentence = j.value("sec_per_sentence", -1.0);
    r.template_count = j.value("templates", std::size_t{0});
    r.full_template_count = j.value("full_templates", std::size_t{0});
    if (j.contains("per_sentence")) {
      for (const auto& row : j.at("per_sentence")) {
        r.per_sentence.push_back({row.at(0).get<std::size_t>(), row.at(1).get<std::size_t>(),
                                  row.at(2).get<std::size_t>(), row.at(3).get<std::size_t>(),
                                  row.at(4).get<std::size_t>()});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed evaluation report: ") + e.what());
  }
  return r;
}

EvalReport evaluate(const Corpus& gold, const Corpus& predicted, const EvalOptions& options) {
  if (gold.size() != predicted.size()) {
    const auto first = std::min(gold.size(), predicted.size()) + 1;
    throw AlignmentError("corpora differ in sentence count (" + std::to_string(gold.size()) + " gold vs " +
                         std::to_string(predicted.size()) + " predicted); first unmatched sentence " +
                         std::to_string(first));
  }
  EvalReport r;
  SentenceScore total;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s];
    const auto& p = predicted[s];
    if (g.size() != p.size()) {
      throw AlignmentError("sentence " + std::to_string(s + 1) + " has " + std::to_string(g.size()) +
                           " gold tokens but " + std::to_string(p.size()) + " predicted");
    }
    SentenceScore sc;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const auto& gt = g[i];
      const auto& pt = p[i];
      if (gt.form != pt.form) {
        throw AlignmentError("sentence " + std::to_string(s + 1) + " token " + std::to_string(i + 1) +
                             ": form '" + pt.form + "' does not match gold '" + gt.form + "'");
      }
      if (options.exclude_punct && is_punctuation(gt.form)) continue;
      ++sc.tokens;
      if (gt.pos == pt.pos) ++sc.pos;
      const bool morph_ok = options.morph_attributes.empty()
                                ? gt.morph == pt.morph
                                : gt.morph.restricted(options.morph_attributes) ==
                                      pt.morph.restricted(options.morph_attributes);
      if (morph_ok) ++sc.morph;
      if (gt.head == pt.head) {
        ++sc.head;
        if (gt.deprel == pt.deprel) ++sc.labeled;
      }
    }
    total.tokens += sc.tokens;
    total.pos += sc.pos;
    total.morph += sc.morph;
    total.head += sc.head;
    total.labeled += sc.labeled;
    r.per_sentence.push_back(sc);
  }
  r.sentences = gold.size();
  r.tokens = total.tokens;
  r.pos = pct(total.pos, total.tokens);
  r.morph = pct(total.morph, total.tokens);
  r.uas = pct(total.head, total.tokens);
  r.las = pct(total.labeled, total.tokens);
  return r;
}

std::vector<MetricDelta> compare_runs(const EvalReport& a, const EvalReport& b, int shuffles, std::uint64_t seed) {
  if (a.per_sentence.size() != b.per_sentence.size()) {
    throw AlignmentError("reports cover different corpora (" + std::to_string(a.per_sentence.size()) + " vs " +
                         std::to_string(b.per_sentence.size()) + " sentences)");
  }
  for (std::size_t s = 0; s < a.per_sentence.size(); ++s) {
    if (a.per_sentence[s].tokens != b.per_sentence[s].tokens) {
      throw AlignmentError("reports cover different corpora (sentence " + std::to_string(s + 1) + " differs)");
    }
  }
  const std::pair<const char*, std::size_t SentenceScore::*> metrics[] = {
      {"POS", &SentenceScore::pos}, {"MOR", &SentenceScore::morph}, {"UAS", &SentenceScore::head},
      {"LAS", &SentenceScore::labeled}};
  const double values_a[] = {a.pos, a.morph, a.uas, a.las};
  const double values_b[] = {b.pos, b.morph, b.uas, b.las};
  std::vector<MetricDelta> out;
  const std::size_t count = a.parsed && b.parsed ? 4 : 2;
  for (std::size_t m = 0; m < count; ++m) {
    MetricDelta d;
    d.metric = metrics[m].first;
    d.a = values_a[m];
    d.b = values_b[m];
    d.delta = d.b - d.a;
    const auto ca = column(a, metrics[m].second);
    const auto cb = column(b, metrics[m].second);
    d.p = paired_randomization(ca, cb, shuffles, seed);
    out.push_back(d);
  }
  return out;
}

void print_report_table(std::ostream& out, const std::vector<std::pair<std::string, EvalReport>>& rows) {
  out << std::left << std::setw(28) << "system" << std::right << std::setw(8) << "POS" << std::setw(8) << "MOR"
      << std::setw(8) << "UAS" << std::setw(8) << "LAS" << std::setw(6) << "#" << std::setw(9) << "red.%"
      << std::setw(12) << "sec/sent" << '\n';
  out << std::fixed;
  for (const auto& [name, r] : rows) {
    out << std::left << std::setw(28) << name << std::right << std::setprecision(2) << std::setw(8) << r.pos
        << std::setw(8) << r.morph;
    if (r.parsed) {
      out << std::setw(8) << r.uas << std::setw(8) << r.las;
    } else {
      out << std::setw(8) << "-" << std::setw(8) << "-";
    }
    out << std::setw(6) << r.template_count << std::setw(9) << std::setprecision(1) << r.reduction() << std::setw(12);
    if (r.sec_per_sentence >= 0.0) {
      out << std::setprecision(5) << r.sec_per_sentence;
    } else {
      out << "-";
    }
    out << '\n';
  }
  out << std::defaultfloat;
}

void print_comparison(std::ostream& out, const std::vector<MetricDelta>& deltas) {
  out << std::left << std::setw(6) << "metric" << std::right << std::setw(10) << "A" << std::setw(10) << "B"
      << std::setw(10) << "B-A" << std::setw(10) << "p" << '\n'
      << std::fixed;
  for (const auto& d : deltas) {
    out << std::left << std::setw(6) << d.metric << std::right << std::setprecision(2) << std::setw(10) << d.a
        << std::setw(10) << d.b << std::setw(10) << d.delta << std::setprecision(4) << std::setw(10) << d.p << '\n';
  }
  out << std::defaultfloat;
}

}  // namespace mtag
