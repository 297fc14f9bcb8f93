// mtag: train, apply and select features for the tagger and joint tagger-parser.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mtag/attributes.hpp"
#include "mtag/error.hpp"
#include "mtag/pipeline.hpp"
#include "mtag/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mtag;

namespace {

struct Paths {
  std::string train, dev, input, output, model, gold, pred, a, b, trace, selected, report, nbest_out, data, out_dir;
};

struct Strings {
  std::string regime = "final";
  std::string system = "standalone";
  std::string ordering = "static";
  std::string metric = "pos";
};

void add_model_options(CLI::App* cmd, RunConfig& cfg, Strings& s) {
  cmd->add_option("--templates", cfg.templates, "template file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--active", cfg.active, "active template ids: all, none, 0,3,7-9 or @file");
  cmd->add_option("--field", cfg.field, "pos, morph or pos+morph");
  cmd->add_option("--attrs", cfg.attributes, "morph attributes predicted (default: whole bundle)")->delimiter(',');
  cmd->add_option("--passes", cfg.passes, "tagger passes")->check(CLI::Range(1, 10));
  cmd->add_option("--regime", s.regime, "selection (beam 8, 12 iterations) or final (beam 40, 25 iterations)");
  cmd->add_option("--iters", cfg.iterations, "training iterations (0: regime default)");
  cmd->add_option("--C", cfg.aggressiveness, "MIRA aggressiveness");
  cmd->add_option("--seed", cfg.seed);
}

void add_beam_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--tree-beam", cfg.tree_beam, "distinct trees kept (0: regime default)");
  cmd->add_option("--variant-beam", cfg.variant_beam, "tag variants kept");
  cmd->add_option("--k", cfg.nbest_k, "tag candidates per token");
  cmd->add_option("--alpha", cfg.alpha, "score margin for tag candidates");
  cmd->add_flag("--per-tree-variants", cfg.per_tree_variants, "cap variants per tree instead of globally");
  cmd->add_option("--jackknife", cfg.jackknife_folds, "folds for training-time tagger n-best lists");
}

void finish_config(RunConfig& cfg, const Strings& s, const std::string& command, int argc, char** argv) {
  cfg.command = command;
  cfg.argv.assign(argv, argv + argc);
  cfg.regime = parse_regime(s.regime);
  cfg.system = parse_system(s.system);
  cfg.ordering = parse_ordering(s.ordering);
  cfg.metric = parse_metric(s.metric);
}

std::vector<std::string> header_comments(const RunConfig& cfg) {
  return {"mtag-run " + artifact_header(cfg).dump()};
}

Corpus read_input(const std::string& path) {
  if (path.empty() || path == "-") return read_conll(std::cin);
  return read_conll(fs::path(path));
}

void write_output(const std::string& path, const Corpus& corpus, const RunConfig& cfg) {
  if (path.empty() || path == "-") {
    write_conll(std::cout, corpus, true, header_comments(cfg));
  } else {
    write_conll(fs::path(path), corpus, true, header_comments(cfg));
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump() << '\n';
}

void print_timing(const TrainedSystem& system, const Corpus& input, int repeats) {
  const auto t = time_decoding({&system}, input, repeats);
  std::cerr << "decoding: " << t.front() << " sec/sentence over " << input.size() << " sentences (min of " << repeats
            << " single-threaded runs)\n";
}

Corpus load_training(const std::string& path) {
  auto corpus = read_conll(fs::path(path));
  if (corpus.empty()) throw ConfigError("training corpus " + path + " holds no sentences");
  return corpus;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Morphosyntactic tagging and joint tagging-parsing with template selection"};
  app.set_config("--config", "", "read options from a TOML/INI file");
  app.require_subcommand(1);
  bool verbose = false, quiet = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");
  app.add_flag("-q,--quiet", quiet, "warnings only");

  RunConfig cfg;
  Strings s;
  Paths p;
  int nbest = 0;
  int timing = 0;
  int shuffles = 10000;
  bool exclude_punct = false;
  std::vector<std::string> morph_attrs;

  // synth
  std::string kind = "english";
  std::size_t sentences = 1000;
  auto* synth = app.add_subcommand("synth", "write a synthetic treebank");
  synth->add_option("--kind", kind, "english, right-context or agreement")
      ->check(CLI::IsMember({"english", "right-context", "agreement"}));
  synth->add_option("-n,--sentences", sentences);
  synth->add_option("--seed", cfg.seed);
  synth->add_option("-o,--output", p.output)->required();

  auto* train_tagger_cmd = app.add_subcommand("train-tagger", "train a standalone tagger");
  train_tagger_cmd->add_option("--train", p.train)->required()->check(CLI::ExistingFile);
  train_tagger_cmd->add_option("--dev", p.dev, "score on this corpus after training")->check(CLI::ExistingFile);
  train_tagger_cmd->add_option("--model", p.model)->required();
  add_model_options(train_tagger_cmd, cfg, s);

  auto* train_joint_cmd = app.add_subcommand("train-joint", "train the joint tagger-parser");
  train_joint_cmd->add_option("--train", p.train)->required()->check(CLI::ExistingFile);
  train_joint_cmd->add_option("--dev", p.dev, "score on this corpus after training")->check(CLI::ExistingFile);
  train_joint_cmd->add_option("--model", p.model)->required();
  add_model_options(train_joint_cmd, cfg, s);
  add_beam_options(train_joint_cmd, cfg);

  auto* tag_cmd = app.add_subcommand("tag", "tag a CoNLL file");
  tag_cmd->add_option("--model", p.model)->required()->check(CLI::ExistingFile);
  tag_cmd->add_option("-i,--input", p.input, "CoNLL input (default stdin)");
  tag_cmd->add_option("-o,--output", p.output, "CoNLL output (default stdout)");
  tag_cmd->add_option("--nbest", nbest, "also write the n best tags per token");
  tag_cmd->add_option("--nbest-out", p.nbest_out, "file for the n-best lists");
  tag_cmd->add_option("--timing", timing, "report single-threaded sec/sentence, min over N runs");

  auto* parse_cmd = app.add_subcommand("parse", "tag and parse a CoNLL file with a joint model");
  parse_cmd->add_option("--model", p.model)->required()->check(CLI::ExistingFile);
  parse_cmd->add_option("-i,--input", p.input, "CoNLL input (default stdin)");
  parse_cmd->add_option("-o,--output", p.output, "CoNLL output (default stdout)");
  parse_cmd->add_option("--timing", timing, "report single-threaded sec/sentence, min over N runs");

  auto* select_cmd = app.add_subcommand("select-features", "greedy forward template selection");
  select_cmd->add_option("--train", p.train)->required()->check(CLI::ExistingFile);
  select_cmd->add_option("--dev", p.dev, "held-out corpus (default: 20% of --train)")->check(CLI::ExistingFile);
  select_cmd->add_option("--system", s.system, "standalone or joint");
  select_cmd->add_option("--ordering", s.ordering, "static or mrmr");
  select_cmd->add_option("--delta", cfg.delta, "required improvement")->check(CLI::NonNegativeNumber);
  select_cmd->add_option("--metric", s.metric, "pos, morph or las");
  select_cmd->add_flag("--lenient-accept", cfg.lenient_accept, "accept when M + delta > B");
  select_cmd->add_flag("--zero-baseline", cfg.zero_baseline, "start from B = 0");
  select_cmd->add_flag("--exclude-diagonal", cfg.exclude_diagonal, "redundancy over distinct pairs only");
  select_cmd->add_option("--rare", cfg.rare_threshold, "MI values seen fewer times merge into one symbol");
  select_cmd->add_option("--trace", p.trace, "line-delimited trace")->required();
  select_cmd->add_option("--selected", p.selected, "selected ids, usable as --active @file")->required();
  add_model_options(select_cmd, cfg, s);
  add_beam_options(select_cmd, cfg);

  AttributeOptions attr_options;
  auto* attrs_cmd = app.add_subcommand("select-attrs", "cross-validated morphological attribute selection");
  attrs_cmd->add_option("--train", p.train)->required()->check(CLI::ExistingFile);
  attrs_cmd->add_option("--folds", attr_options.folds)->check(CLI::Range(2, 100));
  attrs_cmd->add_option("--min-delta", attr_options.min_delta, "required LAS gain");
  attrs_cmd->add_option("--max-p", attr_options.max_p, "required significance");
  attrs_cmd->add_option("--shuffles", attr_options.shuffles);
  attrs_cmd->add_option("--report", p.report, "JSON report");
  add_model_options(attrs_cmd, cfg, s);
  add_beam_options(attrs_cmd, cfg);

  auto* eval_cmd = app.add_subcommand("eval", "score predictions against gold");
  eval_cmd->add_option("--gold", p.gold)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--pred", p.pred)->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--exclude-punct", exclude_punct, "skip punctuation tokens");
  eval_cmd->add_option("--morph-attrs", morph_attrs, "compare only these morph attributes")->delimiter(',');
  eval_cmd->add_option("--json", p.report, "line-delimited report");

  auto* compare_cmd = app.add_subcommand("compare", "deltas and significance between two runs");
  compare_cmd->add_option("--gold", p.gold)->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--a", p.a)->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("--b", p.b)->required()->check(CLI::ExistingFile);
  compare_cmd->add_flag("--exclude-punct", exclude_punct);
  compare_cmd->add_option("--shuffles", shuffles);
  compare_cmd->add_option("--seed", cfg.seed);

  ReproduceOptions repro;
  std::size_t synthetic = 0;
  std::vector<std::string> systems{"standalone", "joint"};
  bool no_selection = false;
  auto* repro_cmd = app.add_subcommand("reproduce", "selection grid over systems and orderings, with a summary report");
  repro_cmd->add_option("--data", p.data, "CoNLL treebank sample");
  repro_cmd->add_option("--synthetic", synthetic, "use a synthetic treebank of N sentences instead");
  repro_cmd->add_option("--out", p.out_dir, "directory for traces and reports")->required();
  repro_cmd->add_option("--systems", systems)->delimiter(',');
  repro_cmd->add_flag("--no-selection", no_selection, "full template set only");
  repro_cmd->add_option("--timing", repro.timing_repeats, "timed decoding runs per cell");
  repro_cmd->add_option("--selection-jackknife", repro.selection_jackknife_folds,
                        "jackknife folds for joint models inside selection");
  repro_cmd->add_option("--delta", cfg.delta);
  repro_cmd->add_option("--metric", s.metric);
  repro_cmd->add_option("--rare", cfg.rare_threshold);
  add_model_options(repro_cmd, cfg, s);
  add_beam_options(repro_cmd, cfg);

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S] %^%l%$ %v");

  try {
    if (synth->parsed()) {
      finish_config(cfg, s, "synth", argc, argv);
      Corpus corpus;
      if (kind == "english") corpus = synth::english_like(sentences, cfg.seed);
      if (kind == "right-context") corpus = synth::right_context(sentences, cfg.seed);
      if (kind == "agreement") corpus = synth::agreement(sentences, cfg.seed);
      write_conll(fs::path(p.output), corpus, false, header_comments(cfg));
      return 0;
    }

    if (train_tagger_cmd->parsed() || train_joint_cmd->parsed()) {
      const bool joint = train_joint_cmd->parsed();
      s.system = joint ? "joint" : "standalone";
      finish_config(cfg, s, joint ? "train-joint" : "train-tagger", argc, argv);
      const auto templates = load_template_file(cfg.templates);
      const auto active = parse_active(cfg.active, templates.size());
      const auto train = load_training(p.train);
      spdlog::info("training {} on {} sentences with {} of {} templates", to_string(cfg.system), train.size(),
                   active.size(), templates.size());
      const auto system = train_system(SystemSpec::from(cfg), templates, active, train);
      save_models(fs::path(p.model), system.bundles(cfg));
      if (!p.dev.empty()) {
        EvalOptions eo;
        eo.exclude_punct = cfg.exclude_punct;
        auto report = evaluate_system(system, read_conll(fs::path(p.dev)), eo);
        print_report_table(std::cout, {{cfg.command, report}});
      }
      return 0;
    }

    if (tag_cmd->parsed() || parse_cmd->parsed()) {
      finish_config(cfg, s, tag_cmd->parsed() ? "tag" : "parse", argc, argv);
      const auto system = TrainedSystem::from_bundles(load_models(fs::path(p.model)));
      if (parse_cmd->parsed() && system.kind != SystemKind::Joint) {
        throw ConfigError(p.model + " holds a standalone tagger; use 'tag'");
      }
      const auto input = read_input(p.input);
      Corpus output;
      if (tag_cmd->parsed()) {
        const auto& model = system.tagging_model();
        const auto lists = tag_corpus(model, input);
        output = apply_tags(model, input, lists);
        if (nbest > 0) {
          if (p.nbest_out.empty()) throw ConfigError("--nbest needs --nbest-out");
          std::ofstream out(p.nbest_out);
          if (!out) throw IoError("cannot write " + p.nbest_out);
          write_nbest(out, model, lists, static_cast<std::size_t>(nbest));
        }
      } else {
        output = system.decode(input);
      }
      write_output(p.output, output, cfg);
      if (timing > 0) {
        if (tag_cmd->parsed()) {
          TrainedSystem tagger;
          tagger.tagger = system.tagging_model();
          print_timing(tagger, input, timing);
        } else {
          print_timing(system, input, timing);
        }
      }
      return 0;
    }

    if (select_cmd->parsed()) {
      if (select_cmd->count("--regime") == 0) s.regime = "selection";
      finish_config(cfg, s, "select-features", argc, argv);
      const auto templates = load_template_file(cfg.templates);
      auto train = load_training(p.train);
      Corpus dev;
      if (p.dev.empty()) {
        auto split = split_train_dev(train, SplitSpec{cfg.train_fraction, 10, cfg.seed});
        train = std::move(split.train);
        dev = std::move(split.dev);
      } else {
        dev = read_conll(fs::path(p.dev));
      }
      std::ofstream trace(p.trace);
      if (!trace) throw IoError("cannot write " + p.trace);
      trace << artifact_header(cfg).dump() << '\n' << std::flush;
      const TraceSink sink = [&](const TraceRow& row) {
        spdlog::info("template {}: {:.3f} (B {:.3f}){}", row.candidate, row.metric, row.best_after,
                     row.accepted ? " accepted" : "");
        trace << row.to_json().dump() << '\n' << std::flush;
      };
      SelectionResult result;
      try {
        result = run_selection(cfg, templates, train, dev, sink);
      } catch (const SelectionAborted& e) {
        trace << nlohmann::json{{"aborted", e.what()}, {"selected", e.partial().selected}}.dump() << '\n';
        throw;
      }
      trace << nlohmann::json{{"baseline", result.trace.baseline}, {"selected", result.selected}, {"B", result.best}}
                   .dump()
            << '\n';
      std::ofstream ids(p.selected);
      if (!ids) throw IoError("cannot write " + p.selected);
      ids << "# " << artifact_header(cfg).dump() << '\n';
      for (const auto id : result.selected) ids << id << '\n';
      std::cout << "selected " << result.selected.size() << " of " << result.trace.rows.size()
                << " templates: " << format_active(result.selected) << "\nB = " << result.best << '\n';
      return 0;
    }

    if (attrs_cmd->parsed()) {
      s.system = "joint";
      if (attrs_cmd->count("--regime") == 0) s.regime = "selection";
      finish_config(cfg, s, "select-attrs", argc, argv);
      const auto corpus = load_training(p.train);
      attr_options.seed = cfg.seed;
      attr_options.templates = load_template_file(cfg.templates);
      attr_options.active = parse_active(cfg.active, attr_options.templates.size());
      attr_options.config = cfg.train_config();
      attr_options.beam = cfg.beam_config();
      attr_options.jackknife_folds = cfg.jackknife_folds;
      attr_options.tagger_passes = cfg.passes;
      const auto attributes = cfg.attributes.empty() ? attributes_in(corpus) : cfg.attributes;
      const auto report = select_attributes(corpus, attributes, attr_options);
      print_attribute_report(std::cout, report);
      if (!p.report.empty()) {
        auto j = report.to_json();
        j["header"] = artifact_header(cfg);
        write_json(p.report, j);
      }
      return 0;
    }

    if (eval_cmd->parsed() || compare_cmd->parsed()) {
      EvalOptions eo;
      eo.exclude_punct = exclude_punct;
      eo.morph_attributes = morph_attrs;
      const auto gold = read_conll(fs::path(p.gold));
      if (eval_cmd->parsed()) {
        const auto report = evaluate(gold, read_conll(fs::path(p.pred)), eo);
        print_report_table(std::cout, {{p.pred, report}});
        if (!p.report.empty()) write_json(p.report, report.to_json(true));
      } else {
        const auto ra = evaluate(gold, read_conll(fs::path(p.a)), eo);
        const auto rb = evaluate(gold, read_conll(fs::path(p.b)), eo);
        print_comparison(std::cout, compare_runs(ra, rb, shuffles, cfg.seed));
      }
      return 0;
    }

    if (repro_cmd->parsed()) {
      finish_config(cfg, s, "reproduce", argc, argv);
      Corpus corpus;
      if (!p.data.empty()) {
        if (!fs::exists(p.data)) {
          throw IoError("treebank sample " + p.data +
                        " not found. Download a Universal Dependencies treebank (https://universaldependencies.org, "
                        "e.g. UD_English-EWT en_ewt-ud-train.conllu), keep at most 5000 sentences and pass it with "
                        "--data, or use --synthetic N");
        }
        corpus = read_conll(fs::path(p.data));
      } else if (synthetic > 0) {
        corpus = synth::english_like(synthetic, cfg.seed);
      } else {
        throw ConfigError("reproduce needs --data FILE (a CoNLL treebank sample) or --synthetic N");
      }
      const auto filtered = filter_derivable(corpus);
      if (filtered.skipped > 0) {
        spdlog::warn("{} of {} sentences are not projective single-root trees; skipped", filtered.skipped,
                     corpus.size());
      }
      fs::create_directories(p.out_dir);
      repro.base = cfg;
      repro.out_dir = p.out_dir;
      repro.selection = !no_selection;
      repro.systems.clear();
      for (const auto& name : systems) repro.systems.push_back(parse_system(name));
      const auto result = reproduce(filtered.kept, load_template_file(cfg.templates), repro);
      print_grid(std::cout, result);
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
