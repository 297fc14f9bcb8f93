#include "mtag/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <ostream>

#include <spdlog/spdlog.h>

#include "mtag/error.hpp"

namespace mtag {

namespace {

template <typename E>
E parse_enum(std::string_view s, std::initializer_list<std::pair<std::string_view, E>> names, const char* what) {
  for (const auto& [name, value] : names) {
    if (s == name) return value;
  }
  std::string known;
  for (const auto& [name, value] : names) known += (known.empty() ? "" : ", ") + std::string(name);
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(s) + "' (expected " + known + ")");
}

std::uint32_t parse_id(std::string_view s, std::size_t count) {
  std::uint32_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ConfigError("bad template id '" + std::string(s) + "'");
  }
  if (v >= count) {
    throw ConfigError("template id " + std::to_string(v) + " out of range (set has " + std::to_string(count) + ")");
  }
  return v;
}

std::vector<std::uint32_t> all_ids(std::size_t n) {
  std::vector<std::uint32_t> ids(n);
  std::iota(ids.begin(), ids.end(), 0u);
  return ids;
}

}  // namespace

Regime parse_regime(std::string_view s) {
  return parse_enum<Regime>(s, {{"selection", Regime::Selection}, {"final", Regime::Final}}, "regime");
}
SystemKind parse_system(std::string_view s) {
  return parse_enum<SystemKind>(s, {{"standalone", SystemKind::Standalone}, {"joint", SystemKind::Joint}}, "system");
}
Metric parse_metric(std::string_view s) {
  return parse_enum<Metric>(s, {{"pos", Metric::Pos}, {"morph", Metric::Morph}, {"las", Metric::Las}}, "metric");
}
Ordering parse_ordering(std::string_view s) {
  return parse_enum<Ordering>(
      s, {{"static", Ordering::Static}, {"mrmr", Ordering::Mrmr}, {"dynamic", Ordering::Mrmr}}, "ordering");
}
std::string to_string(Regime r) { return r == Regime::Selection ? "selection" : "final"; }
std::string to_string(SystemKind s) { return s == SystemKind::Joint ? "joint" : "standalone"; }
std::string to_string(Metric m) {
  switch (m) {
    case Metric::Pos: return "pos";
    case Metric::Morph: return "morph";
    case Metric::Las: return "las";
  }
  return "pos";
}
std::string to_string(Ordering o) { return o == Ordering::Mrmr ? "mrmr" : "static"; }

TrainConfig RunConfig::train_config() const {
  TrainConfig c;
  c.iterations = iterations > 0 ? iterations : (regime == Regime::Selection ? 12 : 25);
  c.seed = seed;
  c.aggressiveness = aggressiveness;
  return c;
}

BeamConfig RunConfig::beam_config() const {
  BeamConfig b;
  b.tree_beam = tree_beam > 0 ? tree_beam : (regime == Regime::Selection ? 8 : 40);
  b.tag_variant_beam = variant_beam;
  b.nbest_k = nbest_k;
  b.alpha = alpha;
  b.per_tree_variants = per_tree_variants;
  return b;
}

TargetSpec RunConfig::target() const { return TargetSpec::parse(field, attributes); }

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["seed"] = seed;
  j["regime"] = to_string(regime);
  j["system"] = to_string(system);
  j["templates"] = templates;
  j["active"] = active;
  j["field"] = field;
  j["attributes"] = attributes;
  j["passes"] = passes;
  j["iterations"] = iterations;
  j["aggressiveness"] = aggressiveness;
  j["tree_beam"] = tree_beam;
  j["variant_beam"] = variant_beam;
  j["nbest_k"] = nbest_k;
  j["alpha"] = alpha;
  j["per_tree_variants"] = per_tree_variants;
  j["jackknife_folds"] = jackknife_folds;
  j["train_fraction"] = train_fraction;
  j["delta"] = delta;
  j["ordering"] = to_string(ordering);
  j["metric"] = to_string(metric);
  j["lenient_accept"] = lenient_accept;
  j["zero_baseline"] = zero_baseline;
  j["exclude_diagonal"] = exclude_diagonal;
  j["rare_threshold"] = rare_threshold;
  j["exclude_punct"] = exclude_punct;
  return j;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.command = j.value("command", c.command);
    c.argv = j.value("argv", c.argv);
    c.seed = j.value("seed", c.seed);
    c.regime = parse_regime(j.value("regime", to_string(c.regime)));
    c.system = parse_system(j.value("system", to_string(c.system)));
    c.templates = j.value("templates", c.templates);
    c.active = j.value("active", c.active);
    c.field = j.value("field", c.field);
    c.attributes = j.value("attributes", c.attributes);
    c.passes = j.value("passes", c.passes);
    c.iterations = j.value("iterations", c.iterations);
    c.aggressiveness = j.value("aggressiveness", c.aggressiveness);
    c.tree_beam = j.value("tree_beam", c.tree_beam);
    c.variant_beam = j.value("variant_beam", c.variant_beam);
    c.nbest_k = j.value("nbest_k", c.nbest_k);
    c.alpha = j.value("alpha", c.alpha);
    c.per_tree_variants = j.value("per_tree_variants", c.per_tree_variants);
    c.jackknife_folds = j.value("jackknife_folds", c.jackknife_folds);
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.delta = j.value("delta", c.delta);
    c.ordering = parse_ordering(j.value("ordering", to_string(c.ordering)));
    c.metric = parse_metric(j.value("metric", to_string(c.metric)));
    c.lenient_accept = j.value("lenient_accept", c.lenient_accept);
    c.zero_baseline = j.value("zero_baseline", c.zero_baseline);
    c.exclude_diagonal = j.value("exclude_diagonal", c.exclude_diagonal);
    c.rare_threshold = j.value("rare_threshold", c.rare_threshold);
    c.exclude_punct = j.value("exclude_punct", c.exclude_punct);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed run configuration: ") + e.what());
  }
  return c;
}

nlohmann::json artifact_header(const RunConfig& config) {
  return {{"version", std::string(kCodeVersion)}, {"run", config.to_json()}};
}

std::vector<std::uint32_t> parse_active(std::string_view text, std::size_t template_count) {
  if (text == "all") return all_ids(template_count);
  if (text.empty() || text == "none") return {};
  std::vector<std::uint32_t> ids;
  if (text.front() == '@') {
    const std::string path(text.substr(1));
    std::ifstream in(path);
    if (!in) throw IoError("cannot open active-id file " + path);
    std::string word;
    while (in >> word) {
      if (word.front() == '#') {
        std::getline(in, word);
        continue;
      }
      ids.push_back(parse_id(word, template_count));
    }
  } else {
    std::size_t start = 0;
    while (start <= text.size()) {
      const auto comma = std::min(text.find(',', start), text.size());
      const auto item = text.substr(start, comma - start);
      const auto dash = item.find('-');
      if (dash == std::string_view::npos) {
        ids.push_back(parse_id(item, template_count));
      } else {
        const auto lo = parse_id(item.substr(0, dash), template_count);
        const auto hi = parse_id(item.substr(dash + 1), template_count);
        if (hi < lo) throw ConfigError("empty id range '" + std::string(item) + "'");
        for (auto v = lo; v <= hi; ++v) ids.push_back(v);
      }
      start = comma + 1;
    }
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::string format_active(const std::vector<std::uint32_t>& ids) {
  if (ids.empty()) return "none";
  std::string out;
  for (const auto id : ids) out += (out.empty() ? "" : ",") + std::to_string(id);
  return out;
}

SystemSpec SystemSpec::from(const RunConfig& config) {
  SystemSpec s;
  s.kind = config.system;
  s.target = config.target();
  s.passes = config.passes;
  s.train = config.train_config();
  s.beam = config.beam_config();
  s.jackknife_folds = config.jackknife_folds;
  return s;
}

Corpus TrainedSystem::decode(const Corpus& input) const {
  if (kind == SystemKind::Joint) return parse_corpus(joint, input);
  return apply_tags(tagger, input, tag_corpus(tagger, input));
}

Corpus TrainedSystem::decode_serial(const Corpus& input) const {
  if (kind == SystemKind::Joint) return parse_corpus_serial(joint, input);
  return apply_tags(tagger, input, tag_corpus_serial(tagger, input));
}

std::vector<ModelBundle> TrainedSystem::bundles(const RunConfig& config) const {
  auto out = kind == SystemKind::Joint ? to_bundles(joint) : std::vector<ModelBundle>{to_bundle(tagger)};
  const auto header = artifact_header(config);
  for (auto& b : out) {
    b.meta["version"] = header["version"];
    b.meta["run"] = header["run"];
  }
  return out;
}

TrainedSystem TrainedSystem::from_bundles(const std::vector<ModelBundle>& bundles) {
  if (bundles.empty()) throw ModelError("model file holds no models");
  TrainedSystem s;
  if (bundles.size() == 1 && bundles.front().kind == "tagger") {
    s.kind = SystemKind::Standalone;
    s.tagger = tagger_from_bundle(bundles.front());
  } else {
    s.kind = SystemKind::Joint;
    s.joint = joint_from_bundles(bundles);
  }
  return s;
}

TrainedSystem train_system(const SystemSpec& spec, const TemplateSet& templates,
                           const std::vector<std::uint32_t>& active, const Corpus& train) {
  TrainedSystem s;
  s.kind = spec.kind;
  if (spec.kind == SystemKind::Joint) {
    JointTrainOptions options;
    options.jackknife_folds = spec.jackknife_folds;
    options.tagger_passes = spec.passes;
    options.target = spec.target;
    options.tagger_config = spec.train;
    s.joint = train_joint(train, templates, active, spec.train, spec.beam, options);
  } else {
    s.tagger = train_tagger(train, templates, active, spec.train, spec.target, spec.passes);
  }
  return s;
}

EvalReport evaluate_system(const TrainedSystem& system, const Corpus& gold, const EvalOptions& options) {
  auto opts = options;
  const auto& target = system.tagging_model().tags.target();
  if (opts.morph_attributes.empty()) opts.morph_attributes = target.attributes;
  auto report = evaluate(gold, system.decode(blind(gold)), opts);
  report.parsed = system.kind == SystemKind::Joint;
  const auto& tagger = system.tagging_model();
  report.template_count = tagger.active.size();
  report.full_template_count = tagger.templates.size();
  return report;
}

std::vector<double> time_decoding(const std::vector<const TrainedSystem*>& systems, const Corpus& input, int repeats) {
  using Clock = std::chrono::steady_clock;
  std::vector<double> best(systems.size(), -1.0);
  if (input.empty()) return best;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    for (std::size_t i = 0; i < systems.size(); ++i) {
      const auto t0 = Clock::now();
      const auto out = systems[i]->decode_serial(input);
      const double sec = std::chrono::duration<double>(Clock::now() - t0).count();
      if (best[i] < 0.0 || sec < best[i]) best[i] = sec;
    }
  }
  for (auto& b : best) b /= static_cast<double>(input.size());
  return best;
}

double metric_value(const EvalReport& report, Metric metric) {
  switch (metric) {
    case Metric::Pos: return report.pos;
    case Metric::Morph: return report.morph;
    case Metric::Las:
      if (!report.parsed) throw ConfigError("LAS needs the joint system");
      return report.las;
  }
  return report.pos;
}

MetricOracle make_oracle(const SystemSpec& spec, const TemplateSet& templates, const Corpus& train, const Corpus& dev,
                         Metric metric) {
  if (metric == Metric::Las && spec.kind != SystemKind::Joint) {
    throw ConfigError("selecting on LAS needs --system joint");
  }
  return [spec, &templates, &train, &dev, metric](const std::vector<std::uint32_t>& active) {
    const auto system = train_system(spec, templates, active, train);
    return metric_value(evaluate_system(system, dev), metric);
  };
}

SelectionResult run_selection(const RunConfig& config, const TemplateSet& templates, const Corpus& train,
                              const Corpus& dev, const TraceSink& sink) {
  const auto candidates = parse_active(config.active, templates.size());
  SelectionConfig sc;
  sc.delta = config.delta;
  sc.ordering = config.ordering;
  sc.lenient_accept = config.lenient_accept;
  sc.zero_baseline = config.zero_baseline;
  sc.exclude_diagonal = config.exclude_diagonal;
  std::optional<MITable> table;
  if (config.ordering == Ordering::Mrmr) {
    table = build_mi_table(train, templates, config.target(), config.rare_threshold);
  }
  const auto oracle = make_oracle(SystemSpec::from(config), templates, train, dev, config.metric);
  return greedy_select(candidates, sc, oracle, table ? &*table : nullptr, sink);
}

void write_trace(std::ostream& out, const RunConfig& config, const SelectionResult& result) {
  auto header = artifact_header(config);
  header["baseline"] = result.trace.baseline;
  out << header.dump() << '\n';
  for (const auto& row : result.trace.rows) out << row.to_json().dump() << '\n';
  out << nlohmann::json{{"selected", result.selected}, {"B", result.best}}.dump() << '\n';
}

const GridCell* ReproduceResult::find(SystemKind system, std::string_view variant) const {
  for (const auto& c : cells) {
    if (c.system == system && c.variant == variant) return &c;
  }
  return nullptr;
}

nlohmann::json ReproduceResult::to_json() const {
  nlohmann::json j;
  j["train_sentences"] = train_sentences;
  j["dev_sentences"] = dev_sentences;
  auto& rows = j["cells"] = nlohmann::json::array();
  for (const auto& c : cells) {
    nlohmann::json r;
    r["system"] = to_string(c.system);
    r["variant"] = c.variant;
    r["active"] = c.active;
    r["report"] = c.report.to_json();
    if (c.selection) r["selection_baseline"] = c.selection->trace.baseline;
    rows.push_back(r);
  }
  return j;
}

ReproduceResult reproduce(const Corpus& corpus, const TemplateSet& templates, const ReproduceOptions& options) {
  if (corpus.empty()) throw ConfigError("reproduce needs a non-empty corpus");
  const auto& base = options.base;
  const auto split = split_train_dev(corpus, SplitSpec{base.train_fraction, 10, base.seed});
  ReproduceResult result;
  result.train_sentences = split.train.size();
  result.dev_sentences = split.dev.size();
  const auto full = parse_active(base.active, templates.size());

  struct Job {
    SystemKind system;
    std::string variant;
    std::vector<std::uint32_t> active;
    std::optional<SelectionResult> selection;
  };
  std::vector<Job> jobs;
  for (const auto system : options.systems) {
    jobs.push_back({system, "full", full, std::nullopt});
    if (options.selection) {
      jobs.push_back({system, "static", {}, std::nullopt});
      jobs.push_back({system, "dynamic", {}, std::nullopt});
    }
  }

  // Selection runs, one per worker.
  std::vector<std::size_t> selecting;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (jobs[i].variant != "full") selecting.push_back(i);
  }
  std::string failure;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(selecting.size()); ++s) {
    auto& job = jobs[selecting[static_cast<std::size_t>(s)]];
    try {
      auto config = base;
      config.system = job.system;
      config.regime = Regime::Selection;
      config.iterations = 0;
      config.tree_beam = 0;
      config.ordering = job.variant == "dynamic" ? Ordering::Mrmr : Ordering::Static;
      config.jackknife_folds = options.selection_jackknife_folds;
      config.command = "select-features";
      std::unique_ptr<std::ofstream> trace;
      if (!options.out_dir.empty()) {
        const auto path = options.out_dir / ("trace_" + to_string(job.system) + "_" + job.variant + ".jsonl");
        trace = std::make_unique<std::ofstream>(path);
        if (!*trace) throw IoError("cannot write " + path.string());
        *trace << artifact_header(config).dump() << '\n';
      }
      spdlog::info("selection: {} {}", to_string(job.system), job.variant);
      const TraceSink sink = [&](const TraceRow& row) {
        spdlog::debug("{} {}: template {} metric {:.3f} B {:.3f}{}", to_string(job.system), job.variant,
                      row.candidate, row.metric, row.best_after, row.accepted ? " accepted" : "");
        if (trace) *trace << row.to_json().dump() << '\n' << std::flush;
      };
      job.selection = run_selection(config, templates, split.train, split.dev, sink);
      job.active = job.selection->selected;
      std::sort(job.active.begin(), job.active.end());
      if (trace) {
        *trace << nlohmann::json{{"baseline", job.selection->trace.baseline},
                                 {"selected", job.selection->selected},
                                 {"B", job.selection->best}}
                      .dump()
               << '\n';
      }
    } catch (const std::exception& e) {
#pragma omp critical(mtag_reproduce_failure)
      failure = e.what();
    }
  }
  if (!failure.empty()) throw Error("selection failed: " + failure);

  // Final models, one per worker.
  std::vector<TrainedSystem> systems(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(jobs.size()); ++i) {
    const auto& job = jobs[static_cast<std::size_t>(i)];
    try {
      auto config = base;
      config.system = job.system;
      spdlog::info("training {} {} with {} templates", to_string(job.system), job.variant, job.active.size());
      systems[static_cast<std::size_t>(i)] = train_system(SystemSpec::from(config), templates, job.active, split.train);
    } catch (const std::exception& e) {
#pragma omp critical(mtag_reproduce_failure)
      failure = e.what();
    }
  }
  if (!failure.empty()) throw Error("training failed: " + failure);

  EvalOptions eval_options;
  eval_options.exclude_punct = base.exclude_punct;
  std::vector<const TrainedSystem*> timed;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    GridCell cell;
    cell.system = jobs[i].system;
    cell.variant = jobs[i].variant;
    cell.active = jobs[i].active;
    cell.selection = std::move(jobs[i].selection);
    cell.report = evaluate_system(systems[i], split.dev, eval_options);
    result.cells.push_back(std::move(cell));
    timed.push_back(&systems[i]);
  }
  if (options.timing_repeats > 0) {
    const auto times = time_decoding(timed, blind(split.dev), options.timing_repeats);
    for (std::size_t i = 0; i < times.size(); ++i) result.cells[i].report.sec_per_sentence = times[i];
  }

  if (!options.out_dir.empty()) {
    auto j = result.to_json();
    j["header"] = artifact_header(base);
    std::ofstream out(options.out_dir / "report.json");
    out << j.dump(2) << '\n';
    std::ofstream table(options.out_dir / "report.txt");
    print_grid(table, result);
  }
  return result;
}

void print_grid(std::ostream& out, const ReproduceResult& result) {
  std::vector<std::pair<std::string, EvalReport>> rows;
  for (const auto& c : result.cells) rows.emplace_back(to_string(c.system) + " " + c.variant, c.report);
  out << "train " << result.train_sentences << " sentences, dev " << result.dev_sentences << " sentences\n";
  print_report_table(out, rows);
}

}  // namespace mtag
