#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "helpers.hpp"
#include "mtag/attributes.hpp"
#include "mtag/eval.hpp"
#include "mtag/mutual_info.hpp"
#include "mtag/rng.hpp"
#include "mtag/selection.hpp"
#include "mtag/synthetic.hpp"
#include "selection_oracles.hpp"

using namespace mtag;

namespace {

ContingencyTable table2x2(double a, double b, double c, double d) {
  ContingencyTable t(2, 2);
  t.at(0, 0) = a;
  t.at(0, 1) = b;
  t.at(1, 0) = c;
  t.at(1, 1) = d;
  return t;
}

double entropy_of(const std::vector<std::string>& values) {
  std::map<std::string, double> counts;
  for (const auto& v : values) counts[v] += 1.0;
  double h = 0.0;
  for (const auto& [v, c] : counts) {
    const double p = c / static_cast<double>(values.size());
    h -= p * std::log2(p);
  }
  return h;
}

// Three-template table: 0 selected, 1 a copy of 0, 2 independent of both.
MITable copy_table() {
  MITable t;
  t.relevance = {0.5, 0.5, 0.5};
  t.redundancy = {1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0};
  return t;
}

}  // namespace

TEST(MutualInformation, Examples) {
  EXPECT_NEAR(mutual_information(table2x2(0.5, 0, 0, 0.5)), 1.0, 1e-12);
  EXPECT_NEAR(mutual_information(table2x2(0.25, 0.25, 0.25, 0.25)), 0.0, 1e-12);
  EXPECT_NEAR(mutual_information(table2x2(0.4, 0.1, 0.1, 0.4)), 0.278072, 1e-6);
  EXPECT_EQ(mutual_information(ContingencyTable(2, 2)), 0.0);
}

TEST(MutualInformation, MatchesBruteForceSummation) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto t = fixtures::random_table(rng);
    EXPECT_NEAR(mutual_information(t), fixtures::brute_force_mi(t), 1e-12);
  }
}

TEST(MutualInformation, CodesAgreeWithTable) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(300);
    std::vector<std::uint32_t> x(n), y(n);
    ContingencyTable t(5, 4);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = static_cast<std::uint32_t>(rng.below(5));
      y[i] = rng.coin() ? x[i] % 4 : static_cast<std::uint32_t>(rng.below(4));
      t.at(x[i], y[i]) += 1.0;
    }
    const double mi = mutual_information(x, y);
    EXPECT_NEAR(mi, fixtures::brute_force_mi(t), 1e-12);
    EXPECT_GE(mi, -1e-12);
    EXPECT_LE(mi, std::min(entropy(x), entropy(y)) + 1e-12);
  }
}

TEST(BuildMiTable, ConstantTemplate) {
  Corpus c;
  for (int s = 0; s < 10; ++s) c.push_back(fixtures::make_sentence({"ax", "bx", "ax"}, {"A", "B", "A"}));
  const auto set = parse_template_spec("suffix1(w)\nform(w)\nprefix1(w)");
  const auto t = build_mi_table(c, set, TargetSpec{});
  EXPECT_NEAR(t.relevance[0], 0.0, 1e-12);
  for (std::size_t j = 0; j < t.size(); ++j) {
    EXPECT_NEAR(t.red(0, j), 0.0, 1e-12);
    EXPECT_NEAR(t.red(j, 0), 0.0, 1e-12);
  }
  EXPECT_EQ(t.samples, 30u);
}

TEST(BuildMiTable, DuplicateTemplateGivesItsEntropy) {
  const auto corpus = synth::english_like(100, 3);
  const auto set = parse_template_spec("suffix2(w)\nsuffix2(w)\nform(w-1)");
  const auto t = build_mi_table(corpus, set, TargetSpec{});
  EXPECT_NEAR(t.red(0, 1), t.red(0, 0), 1e-12);
  const auto codes = encode_variables(corpus, set, TargetSpec{});
  EXPECT_NEAR(t.red(0, 1), entropy(codes.templates[0]), 1e-12);
}

TEST(BuildMiTable, TagDeterminedBySuffixHasFullRelevance) {
  // 100 tokens, tag = last letter
  Rng rng(4);
  Corpus c;
  std::vector<std::string> tags;
  const std::string letters = "abcde";
  for (int s = 0; s < 20; ++s) {
    std::vector<std::string> forms, t;
    for (int i = 0; i < 5; ++i) {
      const char last = letters[rng.below(letters.size())];
      forms.push_back(std::string("w") + static_cast<char>('k' + rng.below(5)) + last);
      t.push_back(std::string(1, last));
      tags.push_back(t.back());
    }
    c.push_back(fixtures::make_sentence(forms, t));
  }
  const auto set = parse_template_spec("suffix1(w)\nform(w)");
  const auto t = build_mi_table(c, set, TargetSpec{}, 1);
  EXPECT_EQ(t.samples, 100u);
  EXPECT_NEAR(t.class_entropy, entropy_of(tags), 1e-12);
  EXPECT_NEAR(t.relevance[0], entropy_of(tags), 1e-12);
}

TEST(BuildMiTable, RareValuesMerge) {
  Corpus c = {fixtures::make_sentence({"a", "b", "c", "a"}, {"X", "Y", "Y", "X"})};
  const auto set = parse_template_spec("form(w)");
  // b and c are singletons and collapse into one value
  const auto codes = encode_variables(c, set, TargetSpec{}, 2);
  EXPECT_EQ(codes.templates[0][1], codes.templates[0][2]);
  EXPECT_NE(codes.templates[0][0], codes.templates[0][1]);
  EXPECT_NEAR(build_mi_table(c, set, TargetSpec{}, 2).relevance[0], 1.0, 1e-12);
}

TEST(BuildMiTable, ParallelMatchesSerial) {
  const auto corpus = synth::english_like(300, 5);
  const auto set = load_template_file(MTAG_DATA_DIR "/pos.templates");
  const auto codes = encode_variables(corpus, set, TargetSpec{});
  const auto a = mi_table_from_codes(codes);
  const auto b = mi_table_from_codes_serial(codes);
  EXPECT_EQ(a.relevance, b.relevance);
  EXPECT_EQ(a.redundancy, b.redundancy);
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) {
      EXPECT_EQ(a.red(i, j), a.red(j, i));
      EXPECT_LE(a.red(i, j), std::min(a.red(i, i), a.red(j, j)) + 1e-12);
    }
  }
}

TEST(Relevance, Examples) {
  MITable t;
  t.relevance = {0.4, 0.6, 0.2};
  t.redundancy.assign(9, 0.0);
  const std::vector<std::uint32_t> one{1}, two{0, 1}, swapped{1, 0};
  EXPECT_DOUBLE_EQ(relevance_D(one, t), 0.6);
  EXPECT_DOUBLE_EQ(relevance_D(two, t), 0.5);
  EXPECT_DOUBLE_EQ(relevance_D(swapped, t), relevance_D(two, t));
  EXPECT_EQ(relevance_D({}, t), 0.0);
}

TEST(Redundancy, Examples) {
  MITable t;
  t.relevance = {0.0, 0.0};
  t.redundancy = {1.0, 0.0, 0.0, 1.0};
  const std::vector<std::uint32_t> single{0}, pair{0, 1}, swapped{1, 0};
  EXPECT_DOUBLE_EQ(redundancy_R(single, t), 1.0);
  EXPECT_DOUBLE_EQ(redundancy_R(pair, t), 0.5);
  EXPECT_DOUBLE_EQ(redundancy_R(swapped, t), 0.5);
  EXPECT_DOUBLE_EQ(redundancy_R(pair, t, true), 0.0);
  EXPECT_EQ(redundancy_R({}, t), 0.0);
}

TEST(MrmrOrder, Examples) {
  MITable t;
  t.relevance = {0.9, 0.1};
  t.redundancy = {1.0, 0.0, 0.0, 1.0};
  const std::vector<std::uint32_t> both{1, 0};
  EXPECT_EQ(mrmr_order(both, {}, t), (std::vector<std::uint32_t>{0, 1}));

  const auto c = copy_table();
  const std::vector<std::uint32_t> rest{1, 2}, selected{0};
  EXPECT_EQ(mrmr_order(rest, selected, c), (std::vector<std::uint32_t>{2, 1}));
}

TEST(MrmrOrder, MatchesExhaustivePhi) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const auto t = fixtures::random_mi_table(1 + rng.below(6), rng);
    const bool exclude = rng.coin();
    std::vector<std::uint32_t> selected, remaining;
    for (std::uint32_t i = 0; i < t.size(); ++i) (rng.below(3) == 0 ? selected : remaining).push_back(i);
    if (remaining.empty()) continue;
    const auto order = mrmr_order(remaining, selected, t, exclude);
    EXPECT_EQ(order, fixtures::brute_force_mrmr(remaining, selected, t, exclude));
  }
}

TEST(GreedySelect, NothingClearsALargeDelta) {
  const std::vector<std::uint32_t> cands{0, 1, 2};
  SelectionConfig config;
  config.delta = 100.0;
  const auto r = greedy_select(cands, config, fixtures::half_per_useful({0, 2}));
  EXPECT_TRUE(r.selected.empty());
  EXPECT_EQ(r.trace.rows.size(), 3u);
}

TEST(GreedySelect, StaticToyOracle) {
  const std::vector<std::uint32_t> cands{0, 1, 2};  // A, B, C
  int calls = 0;
  const auto inner = fixtures::half_per_useful({0, 2});
  const MetricOracle oracle = [&](const std::vector<std::uint32_t>& x) {
    ++calls;
    return inner(x);
  };
  const auto r = greedy_select(cands, SelectionConfig{}, oracle);
  EXPECT_EQ(r.selected, (std::vector<std::uint32_t>{0, 2}));
  EXPECT_DOUBLE_EQ(r.best, 1.0);
  EXPECT_EQ(calls, 4);
  std::vector<double> bs{r.trace.baseline};
  std::vector<bool> accepted;
  for (const auto& row : r.trace.rows) {
    bs.push_back(row.best_after);
    accepted.push_back(row.accepted);
  }
  EXPECT_EQ(bs, (std::vector<double>{0.0, 0.5, 0.5, 1.0}));
  EXPECT_EQ(accepted, (std::vector<bool>{true, false, true}));
}

TEST(GreedySelect, RedundantPairAcceptsOne) {
  // 0 and 1 are copies, both useful; 2 is independent and useful
  MITable t;
  t.relevance = {0.8, 0.8, 0.5};
  t.redundancy = {0.5, 0.5, 0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.5};
  const auto oracle = fixtures::redundant_pair_oracle();
  for (const auto ordering : {Ordering::Static, Ordering::Mrmr}) {
    SelectionConfig config;
    config.ordering = ordering;
    const std::vector<std::uint32_t> cands{0, 1, 2};
    const auto r = greedy_select(cands, config, oracle, &t);
    int from_pair = 0;
    for (const auto& row : r.trace.rows) from_pair += row.accepted && row.candidate < 2;
    EXPECT_EQ(from_pair, 1);
    EXPECT_EQ(r.trace.rows.size(), 3u);
    EXPECT_DOUBLE_EQ(r.best, 1.5);
    if (ordering == Ordering::Mrmr) {
      EXPECT_FALSE(r.trace.rows.front().ordering.empty());
      // after one copy is in, the independent template outranks the other copy
      EXPECT_EQ(r.trace.rows[1].candidate, 2u);
    }
  }
}

TEST(GreedySelect, TraceContractOnRandomOracles) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<std::uint32_t> cands(n);
    std::iota(cands.begin(), cands.end(), 0u);
    rng.shuffle(std::span<std::uint32_t>(cands));
    SelectionConfig config;
    config.delta = rng.uniform() * 0.3;
    config.ordering = rng.coin() ? Ordering::Mrmr : Ordering::Static;
    config.zero_baseline = rng.below(4) == 0;
    const auto table = fixtures::random_mi_table(n, rng);
    int calls = 0;
    const auto inner = fixtures::random_set_oracle(rng.next());
    const MetricOracle oracle = [&](const std::vector<std::uint32_t>& x) {
      ++calls;
      return inner(x);
    };
    const auto r = greedy_select(cands, config, oracle, &table);
    ASSERT_EQ(r.trace.rows.size(), n);
    EXPECT_EQ(calls, static_cast<int>(n) + (config.zero_baseline ? 0 : 1));
    double b = r.trace.baseline;
    std::vector<std::uint32_t> seen;
    for (const auto& row : r.trace.rows) {
      EXPECT_EQ(row.best_before, b);
      if (row.accepted) EXPECT_GE(row.metric, b + config.delta);
      EXPECT_GE(row.best_after, b);
      b = row.best_after;
      seen.push_back(row.candidate);
    }
    std::sort(seen.begin(), seen.end());
    std::vector<std::uint32_t> sorted = cands;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(seen, sorted);
    EXPECT_LE(r.selected.size(), n);
  }
}

TEST(GreedySelect, LenientRuleAndZeroBaseline) {
  const std::vector<std::uint32_t> cands{0, 1, 2};
  SelectionConfig literal;
  literal.lenient_accept = true;
  // M + delta > B accepts candidates that do not hurt by delta or more
  const auto r = greedy_select(cands, literal, fixtures::half_per_useful({0, 2}));
  EXPECT_EQ(r.selected, (std::vector<std::uint32_t>{0, 1, 2}));

  SelectionConfig zero;
  zero.zero_baseline = true;
  const auto z = greedy_select(cands, zero, [](const std::vector<std::uint32_t>&) { return 0.01; });
  EXPECT_EQ(z.trace.baseline, 0.0);
  EXPECT_TRUE(z.selected.empty());
}

TEST(GreedySelect, FailingOracleKeepsPartialTrace) {
  const std::vector<std::uint32_t> cands{0, 1, 2};
  std::vector<TraceRow> streamed;
  const MetricOracle oracle = [](const std::vector<std::uint32_t>& x) -> double {
    if (std::find(x.begin(), x.end(), 1u) != x.end()) throw std::runtime_error("disk full");
    return static_cast<double>(x.size());
  };
  try {
    greedy_select(cands, SelectionConfig{}, oracle, nullptr, [&](const TraceRow& r) { streamed.push_back(r); });
    FAIL() << "expected SelectionAborted";
  } catch (const SelectionAborted& e) {
    EXPECT_EQ(e.partial().trace.rows.size(), 1u);
    EXPECT_EQ(e.partial().selected, (std::vector<std::uint32_t>{0}));
    EXPECT_EQ(streamed.size(), 1u);
  }
}

TEST(GreedySelect, MrmrNeedsTable) {
  SelectionConfig config;
  config.ordering = Ordering::Mrmr;
  const std::vector<std::uint32_t> cands{0};
  EXPECT_THROW(greedy_select(cands, config, fixtures::half_per_useful({0})), ConfigError);
}

TEST(TraceRow, Json) {
  TraceRow r;
  r.iteration = 2;
  r.candidate = 7;
  r.metric = 95.5;
  r.accepted = true;
  const auto j = r.to_json();
  EXPECT_EQ(j["template"], 7);
  EXPECT_EQ(j["accepted"], true);
  EXPECT_FALSE(j.contains("ordering"));
}

TEST(Attributes, ThresholdsAreMonotone) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    AttributeReport report;
    for (int a = 0; a < 6; ++a) {
      AttributeRow row;
      row.attribute = "a" + std::to_string(a);
      row.delta_las = rng.uniform() - 0.3;
      row.p = rng.uniform() * 0.05;
      report.rows.push_back(row);
    }
    const double d = rng.uniform() * 0.5, p = rng.uniform() * 0.03;
    const auto base = rethreshold(report, d, p).accepted();
    const auto stricter = rethreshold(report, d + rng.uniform() * 0.2, p * rng.uniform()).accepted();
    EXPECT_LE(stricter.size(), base.size());
    for (const auto& a : stricter) EXPECT_NE(std::find(base.begin(), base.end(), a), base.end());
  }
}

TEST(Attributes, IdenticalSystemsAreNeverSignificant) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> a(1 + rng.below(300));
    for (auto& x : a) x = static_cast<double>(rng.below(20));
    EXPECT_EQ(paired_randomization(a, a, 2000, rng.next()), 1.0);
  }
}

TEST(Attributes, ConstantAndAbsentAttributes) {
  const auto corpus = synth::agreement(120, 5);
  AttributeOptions options;
  options.folds = 2;
  options.templates = parse_template_spec("form(w)\nsuffix1(w)\npos(w-1)");
  options.active = options.templates.all_ids();
  options.config.iterations = 2;
  options.beam.tree_beam = 4;
  options.beam.tag_variant_beam = 2;
  options.jackknife_folds = 2;
  options.shuffles = 500;
  const auto report = select_attributes(corpus, {"Dummy", "Nope"}, options);
  ASSERT_EQ(report.rows.size(), 2u);
  EXPECT_EQ(report.rows[0].attribute, "Dummy");
  EXPECT_DOUBLE_EQ(report.rows[0].delta_las, 0.0);
  EXPECT_FALSE(report.rows[0].accepted);
  EXPECT_FALSE(report.rows[1].present);
  EXPECT_FALSE(report.rows[1].accepted);
  EXPECT_FALSE(report.rows[1].note.empty());
}

TEST(Attributes, SerialFoldsMatchParallel) {
  const auto corpus = synth::agreement(60, 8);
  AttributeOptions options;
  options.folds = 2;
  options.templates = parse_template_spec("form(w)\nsuffix1(w)");
  options.active = options.templates.all_ids();
  options.config.iterations = 1;
  options.beam.tree_beam = 2;
  options.beam.tag_variant_beam = 1;
  options.jackknife_folds = 2;
  const auto a = cross_validate_joint(corpus, {"Gender"}, options);
  options.parallel_folds = false;
  const auto b = cross_validate_joint(corpus, {"Gender"}, options);
  EXPECT_EQ(a.to_json(true), b.to_json(true));
}
