#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mtag/corpus.hpp"
#include "mtag/eval.hpp"
#include "mtag/learner.hpp"
#include "mtag/model_io.hpp"
#include "mtag/mutual_info.hpp"
#include "mtag/parser.hpp"
#include "mtag/selection.hpp"
#include "mtag/tagger.hpp"
#include "mtag/templates.hpp"

namespace mtag {

inline constexpr std::string_view kCodeVersion = "mtag 1.0.0";

/// Training regimes: selection runs use beam 8 and 12 iterations, final models
/// beam 40 and 25 iterations.
enum class Regime { Selection, Final };
enum class SystemKind { Standalone, Joint };
enum class Metric { Pos, Morph, Las };

Regime parse_regime(std::string_view s);
SystemKind parse_system(std::string_view s);
Metric parse_metric(std::string_view s);
Ordering parse_ordering(std::string_view s);
std::string to_string(Regime r);
std::string to_string(SystemKind s);
std::string to_string(Metric m);
std::string to_string(Ordering o);

/// Everything a run depends on. Serialized into every artifact it produces.
struct RunConfig {
  std::string command;
  std::vector<std::string> argv;
  std::uint64_t seed = 1;
  Regime regime = Regime::Final;
  SystemKind system = SystemKind::Standalone;
  std::string templates;  // template file path
  std::string active = "all";
  std::string field = "pos";
  std::vector<std::string> attributes;
  int passes = 2;
  int iterations = 0;  // 0: regime default
  double aggressiveness = 1.0;
  int tree_beam = 0;   // 0: regime default
  int variant_beam = 8;
  int nbest_k = 2;
  double alpha = 0.25;
  bool per_tree_variants = false;
  int jackknife_folds = 10;
  double train_fraction = 0.8;
  // selection
  double delta = 0.02;
  Ordering ordering = Ordering::Static;
  Metric metric = Metric::Pos;
  bool lenient_accept = false;
  bool zero_baseline = false;
  bool exclude_diagonal = false;
  int rare_threshold = 2;
  bool exclude_punct = false;

  TrainConfig train_config() const;
  BeamConfig beam_config() const;
  TargetSpec target() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
};

/// {"version": ..., "run": ...}
nlohmann::json artifact_header(const RunConfig& config);

/// "all", "none", comma lists with ranges ("0,3,7-9"), or "@file" holding
/// whitespace-separated ids.
std::vector<std::uint32_t> parse_active(std::string_view text, std::size_t template_count);
std::string format_active(const std::vector<std::uint32_t>& ids);

struct SystemSpec {
  SystemKind kind = SystemKind::Standalone;
  TargetSpec target;
  int passes = 2;
  TrainConfig train;
  BeamConfig beam;
  int jackknife_folds = 10;

  static SystemSpec from(const RunConfig& config);
};

/// A trained standalone tagger or joint tagger-parser.
struct TrainedSystem {
  SystemKind kind = SystemKind::Standalone;
  TaggerModel tagger;  // standalone only
  JointModel joint;    // joint only

  const TaggerModel& tagging_model() const { return kind == SystemKind::Joint ? joint.tagger : tagger; }
  Corpus decode(const Corpus& input) const;
  Corpus decode_serial(const Corpus& input) const;
  std::vector<ModelBundle> bundles(const RunConfig& config) const;
  static TrainedSystem from_bundles(const std::vector<ModelBundle>& bundles);
};

TrainedSystem train_system(const SystemSpec& spec, const TemplateSet& templates,
                           const std::vector<std::uint32_t>& active, const Corpus& train);

/// Decodes the blinded gold corpus and scores it. The standalone system's
/// report carries no attachment scores.
EvalReport evaluate_system(const TrainedSystem& system, const Corpus& gold, const EvalOptions& options = {});

/// Single-threaded decoding time in sec/sentence for each system over the
/// same input, minimum over `repeats` interleaved rounds.
std::vector<double> time_decoding(const std::vector<const TrainedSystem*>& systems, const Corpus& input, int repeats);

double metric_value(const EvalReport& report, Metric metric);

/// M(X): trains the system with active set X on `train`, scores `dev`.
MetricOracle make_oracle(const SystemSpec& spec, const TemplateSet& templates, const Corpus& train, const Corpus& dev,
                         Metric metric);

/// Greedy selection for one system and ordering; the MI table is only built
/// for MRMR ordering.
SelectionResult run_selection(const RunConfig& config, const TemplateSet& templates, const Corpus& train,
                              const Corpus& dev, const TraceSink& sink = nullptr);

/// Trace as line-delimited JSON: header line, one line per row, then a
/// summary line with the selected ids.
void write_trace(std::ostream& out, const RunConfig& config, const SelectionResult& result);

struct ReproduceOptions {
  RunConfig base;  // target field, passes, seeds, beam settings
  std::vector<SystemKind> systems{SystemKind::Standalone, SystemKind::Joint};
  bool selection = true;
  /// Jackknife folds for joint models trained inside selection loops.
  int selection_jackknife_folds = 10;
  int timing_repeats = 3;
  std::filesystem::path out_dir;  // traces and reports go here when set
};

struct GridCell {
  SystemKind system = SystemKind::Standalone;
  std::string variant;  // "full", "static" or "dynamic"
  std::vector<std::uint32_t> active;
  EvalReport report;
  std::optional<SelectionResult> selection;
};

struct ReproduceResult {
  std::vector<GridCell> cells;
  std::size_t train_sentences = 0;
  std::size_t dev_sentences = 0;

  const GridCell* find(SystemKind system, std::string_view variant) const;
  nlohmann::json to_json() const;
};

/// The {standalone, joint} x {full, static, dynamic} grid on an 80/20 split:
/// selection in the selection regime, every reported model retrained in the
/// base regime, decoding timed over the dev split.
ReproduceResult reproduce(const Corpus& corpus, const TemplateSet& templates, const ReproduceOptions& options);

void print_grid(std::ostream& out, const ReproduceResult& result);

}  // namespace mtag
