#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/evaluation.hpp"
#include "morphsplit/grid.hpp"
#include "morphsplit/segmenter.hpp"
#include "morphsplit/stats.hpp"

namespace morphsplit {

struct CorpusSource {
  std::string language_tag;
  std::filesystem::path path;

  friend bool operator==(const CorpusSource&, const CorpusSource&) = default;
};

struct RunConfig {
  std::vector<CorpusSource> corpora;
  ExperimentPlan plan;
  std::vector<Strategy> new_test_generations{Strategy::kRandom};
  std::vector<Strategy> residual_strategies{Strategy::kRandom, Strategy::kAdversarial};
  std::vector<SegmenterId> models = builtin_segmenters();
  std::size_t seeds_per_model = 3;
  F1Variant f1_variant = F1Variant::kBoundary;
  F1Average f1_average = F1Average::kMicro;
  double collapse_epsilon = kDefaultCollapseEpsilon;
  ModelSettings model_settings;
  std::filesystem::path output_dir = "morphsplit-out";
  std::size_t parallelism = 1;

  // Throws ConfigError.
  void validate() const;
};

// Flat `key = value` text; '#' starts a comment. Keys:
//   corpus                 tag=path or path (tag = file stem); repeatable
//   fractions              comma list of rationals, e.g. 0.1,0.2 or 1/10
//   samples_per_fraction, residual_splits, residual_ratio (a:b)
//   new_test_generation    comma list of random|adversarial
//   residual_strategies    comma list of random|adversarial
//   models                 comma list of segmenter names or external:<cmd>
//   seeds_per_model, master_seed, adversarial_budget
//   f1_variant (boundary|morpheme), f1_average (micro|macro), collapse_epsilon
//   optimizer, max_iterations, convergence_tol, l2_lambda
//   max_ngram, window, position_flags (true|false), unigram_smoothing
//   output_dir, parallelism
// Relative corpus paths resolve against `base_dir`. Unknown keys and
// malformed values throw ConfigError naming the line.
void apply_config_text(RunConfig& config, std::istream& in, const std::filesystem::path& base_dir = {});
void apply_config_entry(RunConfig& config, std::string_view key, std::string_view value,
                        const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

inline constexpr const char* kOutputDirEnv = "MORPHSPLIT_OUTPUT_DIR";
// Replaces output_dir with $MORPHSPLIT_OUTPUT_DIR when set and non-empty.
void apply_environment(RunConfig& config);

nlohmann::json to_json(const RunConfig& c);
RunConfig run_config_from_json(const nlohmann::json& j);

// Hash over every field that affects results, plus the corpus file
// digests. output_dir and parallelism are excluded.
std::string config_hash(const RunConfig& config);

enum class CellStatus { kPending, kDone, kFailed };
std::string_view to_string(CellStatus s);
CellStatus parse_cell_status(std::string_view text);

struct LedgerEntry {
  std::string cell_id;
  std::string language_tag;
  Strategy new_test_generation = Strategy::kRandom;
  Strategy residual_strategy = Strategy::kRandom;
  CellStatus status = CellStatus::kPending;
  double seconds = 0.0;
  std::string artifact;  // relative to the output directory
  std::string error;
};

struct RunLedger {
  std::string config_hash;
  nlohmann::json config;  // the RunConfig that produced the run
  std::string config_path;  // config file, when the run came from one
  std::map<std::string, std::string> corpus_digests;
  std::vector<LedgerEntry> cells;  // sorted by (language, cell id)
  std::vector<std::string> reports;  // relative paths of emitted reports
  std::size_t recomputed = 0;  // cells computed by the call that returned this ledger

  std::size_t count(CellStatus s) const;
  bool all_done() const { return count(CellStatus::kDone) == cells.size(); }
};

nlohmann::json to_json(const RunLedger& l);
RunLedger run_ledger_from_json(const nlohmann::json& j);
RunLedger load_ledger(const std::filesystem::path& path);

inline constexpr const char* kLedgerFile = "ledger.json";

// A cell as persisted: the grid cell with its manifests and the scores.
struct CellArtifact {
  GridCell grid;
  CellResult result;
};

nlohmann::json to_json(const CellArtifact& a);
CellArtifact cell_artifact_from_json(const nlohmann::json& j);

// Trains every model seeds_per_model times on the cell's train set and
// scores eval and new-test sets. Deterministic models are trained once
// and the result is replicated across seeds.
CellResult evaluate_cell(const Corpus& corpus, const GridCell& cell, const RunConfig& config);

// Seed of replicate k of `model` in `cell_id`.
std::uint64_t model_seed(std::uint64_t master_seed, std::string_view cell_id, const SegmenterId& model,
                         std::size_t replicate);

// Builds all grids, evaluates every cell on `parallelism` threads, writes
// cells/<language>/<cell id>.json, ledger.json, and every report. A failed
// cell is recorded in the ledger and does not stop the others. Results do
// not depend on parallelism. `config_path` is recorded for resume.
RunLedger run_experiment(const RunConfig& config, const std::filesystem::path& config_path = {});

// Recomputes cells that are missing, failed, or unreadable, then rewrites
// the reports when anything changed or a report is missing. When the ledger
// records a config file it is re-read (with the environment override), and
// the run is refused with a ConfigError when its hash, or any corpus
// digest, no longer matches the ledger. `override` replaces the recorded
// config for the hash comparison.
RunLedger resume(const std::filesystem::path& ledger_path, const std::optional<RunConfig>& override = std::nullopt,
                 std::optional<std::size_t> parallelism = std::nullopt);

enum class ReportKind { kTables, kRegression, kPlotsData };
std::string_view to_string(ReportKind k);
ReportKind parse_report_kind(std::string_view text);

// Loads the done cells of a ledger. Throws DomainError when there are none.
std::vector<CellResult> load_done_cells(const std::filesystem::path& ledger_path);

// Writes the report files of `kind` next to the ledger and returns their
// paths relative to the output directory.
std::vector<std::string> report(const std::filesystem::path& ledger_path, ReportKind kind);

// ---- report builders, shared by report() and tests ----

// One row per (cell, model), sorted by (fraction, new-test generation,
// residual strategy, cell id, model).
std::string results_csv(std::vector<CellResult> cells);

struct AggregateRow {
  std::string model;
  Strategy residual_strategy = Strategy::kRandom;
  double mean_eval_f1 = 0.0;
  double mean_new_f1 = 0.0;
  double mean_abs_gap = 0.0;
  double consistency = 0.0;
  std::optional<double> sigma;  // absent when no stratum has 2 cells
};

// Cells of one new-test generation. Per language: means over cells,
// consistency over cells, sigma as the mean over fractions of the
// population standard deviation of new-test F1. Languages are then
// weighted equally.
std::vector<AggregateRow> aggregate_rows(const std::vector<CellResult>& cells);
std::string aggregate_csv(const std::vector<CellResult>& cells);

// Most frequent eval and new-test ranking per (new-test generation,
// language, residual strategy); ties broken by ranking text.
std::string best_rankings_csv(const std::vector<CellResult>& cells);

// Per (fraction, residual strategy, model): cross-language mean of the
// population standard deviation of new-test F1.
std::string variability_csv(const std::vector<CellResult>& cells);

// One record per (cell, model) with the new-test F1 as response.
std::vector<RegressionRecord> regression_records(const std::vector<CellResult>& cells);
std::string regression_records_csv(const std::vector<RegressionRecord>& records);
// term, beta, se, t, p, stars
std::string regression_csv(const RegressionResult& result);

}  // namespace morphsplit
