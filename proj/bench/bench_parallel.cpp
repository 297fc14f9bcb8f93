// Serial references against their OpenMP versions. Arg 0 is serial, 1 parallel.

#include <benchmark/benchmark.h>
#include <spdlog/spdlog.h>

#include "mtag/attributes.hpp"
#include "mtag/mutual_info.hpp"
#include "mtag/parser.hpp"
#include "mtag/synthetic.hpp"
#include "mtag/tagger.hpp"

using namespace mtag;

namespace {

const char* kSpec = "form(w)\nsuffix1(w)\nsuffix2(w)\nsuffix3(w)\nprefix2(w)\npos(w-1)\npos(w+1)\nform(w+1)";

struct Fixture {
  Corpus train = synth::english_like(400, 1);
  Corpus test = blind(synth::english_like(200, 2));
  TemplateSet templates = parse_template_spec(kSpec);
  TaggerModel tagger;
  JointModel joint;
  BeamConfig beam;
  TrainConfig config;

  Fixture() {
    config.iterations = 3;
    beam.tree_beam = 8;
    tagger = train_tagger(train, templates, templates.all_ids(), config, TargetSpec{});
    JointTrainOptions options;
    options.jackknife_folds = 4;
    options.tagger_config = config;
    joint = train_joint(train, templates, templates.all_ids(), config, beam, options);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

void BM_MiTable(benchmark::State& state) {
  const auto corpus = synth::english_like(2000, 3);
  const auto codes = encode_variables(corpus, parse_template_spec(kSpec), TargetSpec{});
  for (auto _ : state) {
    auto t = state.range(0) ? mi_table_from_codes(codes) : mi_table_from_codes_serial(codes);
    benchmark::DoNotOptimize(t);
  }
}

void BM_TagCorpus(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto out = state.range(0) ? tag_corpus(f.tagger, f.test) : tag_corpus_serial(f.tagger, f.test);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.test.size()));
}

void BM_ParseCorpus(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto out = state.range(0) ? parse_corpus(f.joint, f.test) : parse_corpus_serial(f.joint, f.test);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.test.size()));
}

void BM_JackknifeFolds(benchmark::State& state) {
  const auto& f = fixture();
  JointTrainOptions options;
  options.jackknife_folds = 4;
  options.tagger_config = f.config;
  options.parallel_folds = state.range(0) != 0;
  TrainConfig parser_config;
  parser_config.iterations = 1;
  for (auto _ : state) {
    auto m = train_joint(f.train, f.templates, f.templates.all_ids(), parser_config, f.beam, options);
    benchmark::DoNotOptimize(m);
  }
}

void BM_CrossValidationFolds(benchmark::State& state) {
  const auto corpus = synth::agreement(200, 4);
  AttributeOptions options;
  options.folds = 4;
  options.jackknife_folds = 2;
  options.templates = parse_template_spec("form(w)\nsuffix2(w)\npos(w-1)\npos(w+1)");
  options.active = options.templates.all_ids();
  options.config.iterations = 2;
  options.beam.tree_beam = 4;
  options.parallel_folds = state.range(0) != 0;
  for (auto _ : state) {
    auto r = cross_validate_joint(corpus, {}, options);
    benchmark::DoNotOptimize(r);
  }
}

}  // namespace

BENCHMARK(BM_MiTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TagCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ParseCorpus)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_JackknifeFolds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK(BM_CrossValidationFolds)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
}
