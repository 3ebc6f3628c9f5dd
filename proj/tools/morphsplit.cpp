// morphsplit command-line tool.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/error.hpp"
#include "morphsplit/evaluation.hpp"
#include "morphsplit/runner.hpp"
#include "morphsplit/segmenter.hpp"
#include "morphsplit/splitter.hpp"
#include "morphsplit/stats.hpp"
#include "morphsplit/synthetic.hpp"

namespace {

using namespace morphsplit;
using nlohmann::json;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Corpus load_corpus(const std::string& path, std::string tag) {
  if (tag.empty()) tag = std::filesystem::path(path).stem().string();
  const auto parsed = parse_corpus(std::filesystem::path(path), tag);
  if (parsed.duplicates_dropped > 0) {
    std::cerr << "warning: dropped " << parsed.duplicates_dropped << " duplicate surface(s) from " << path << "\n";
  }
  return parsed.corpus;
}

// --config file, then the environment, then --set key=value in order.
RunConfig resolve_config(const std::string& config_path, const std::vector<std::string>& sets) {
  RunConfig c;
  if (!config_path.empty()) c = load_run_config(config_path);
  apply_environment(c);
  bool corpus_seen = false;
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string key = s.substr(0, eq);
    if (key == "corpus" && !corpus_seen) {
      c.corpora.clear();
      corpus_seen = true;
    }
    apply_config_entry(c, key, s.substr(eq + 1));
  }
  return c;
}

int run(int argc, char** argv) {
  CLI::App app{"Dataset partitioning experiments for morphological segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "morphsplit 0.1.0");

  // split
  auto* split = app.add_subcommand("split", "Partition a corpus and print the split manifest");
  std::string split_corpus, split_strategy = "random", split_ratio = "9:1", split_out, split_tolerance = "0.02";
  std::uint64_t split_seed = 0, split_budget = kDefaultAdversarialBudget;
  split->add_option("corpus", split_corpus, "Corpus file (surface<TAB>morphemes)")->required();
  split->add_option("--strategy", split_strategy, "random, adversarial or heuristic")->capture_default_str();
  split->add_option("--ratio", split_ratio, "Side a : side b")->capture_default_str();
  split->add_option("--seed", split_seed)->capture_default_str();
  split->add_option("--budget", split_budget, "Adversarial swap evaluations")->capture_default_str();
  split->add_option("--tolerance", split_tolerance, "Heuristic share tolerance")->capture_default_str();
  split->add_option("-o,--out", split_out, "Manifest file (default stdout)");

  // train
  auto* train = app.add_subcommand("train", "Train one model and save it as JSON");
  std::string train_corpus, train_model = "crf", train_out, train_config;
  std::vector<std::string> train_sets;
  train->add_option("corpus", train_corpus)->required();
  train->add_option("-m,--model", train_model, "crf, unigram_viterbi, boundary_logistic, longest_match")
      ->capture_default_str();
  train->add_option("-c,--config", train_config, "Config file supplying model settings");
  train->add_option("--set", train_sets, "Override a config key (key=value)");
  train->add_option("-o,--out", train_out, "Model file (default stdout)");

  // segment
  auto* segment = app.add_subcommand("segment", "Segment words with a saved model");
  std::string seg_model, seg_input = "-", seg_out;
  segment->add_option("model", seg_model, "Model JSON from `train`")->required();
  segment->add_option("input", seg_input, "One word per line (default stdin)");
  segment->add_option("-o,--out", seg_out, "Output corpus file (default stdout)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predicted segmentations against gold");
  std::string ev_gold, ev_pred, ev_variant = "boundary", ev_average = "micro";
  evaluate->add_option("gold", ev_gold)->required();
  evaluate->add_option("pred", ev_pred)->required();
  evaluate->add_option("--variant", ev_variant, "boundary or morpheme")->capture_default_str();
  evaluate->add_option("--average", ev_average, "micro or macro")->capture_default_str();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run the full split grid and write reports");
  std::string ex_config;
  std::vector<std::string> ex_sets;
  std::optional<std::string> ex_output;
  std::optional<std::size_t> ex_parallelism;
  experiment->add_option("-c,--config", ex_config, "Config file (key = value)");
  experiment->add_option("--set", ex_sets, "Override a config key (key=value)");
  experiment->add_option("-o,--output-dir", ex_output, "Output directory");
  experiment->add_option("-j,--parallelism", ex_parallelism, "Concurrent cells");

  // resume
  auto* resume_cmd = app.add_subcommand("resume", "Finish an interrupted experiment");
  std::string rs_ledger;
  std::optional<std::size_t> rs_parallelism;
  resume_cmd->add_option("ledger", rs_ledger, "ledger.json of the run")->required();
  resume_cmd->add_option("-j,--parallelism", rs_parallelism, "Concurrent cells");

  // report
  auto* report_cmd = app.add_subcommand("report", "Regenerate report files from a ledger");
  std::string rp_ledger, rp_kind = "tables";
  report_cmd->add_option("ledger", rp_ledger)->required();
  report_cmd->add_option("-k,--kind", rp_kind, "tables, regression or plots-data")->capture_default_str();

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic agglutinative corpus");
  SyntheticSpec spec;
  spec.stem_count = 30;
  spec.suffix_count = 8;
  spec.word_count = 500;
  std::string synth_out;
  synth->add_option("--stems", spec.stem_count)->capture_default_str();
  synth->add_option("--suffixes", spec.suffix_count)->capture_default_str();
  synth->add_option("--min-suffixes", spec.min_suffixes)->capture_default_str();
  synth->add_option("--max-suffixes", spec.max_suffixes)->capture_default_str();
  synth->add_option("-n,--words", spec.word_count)->capture_default_str();
  synth->add_option("--seed", spec.seed)->capture_default_str();
  synth->add_option("--lang", spec.language_tag)->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Corpus file (default stdout)");

  // regress
  auto* regress = app.add_subcommand("regress", "Fit the regression to a records CSV");
  std::string rg_records, rg_out;
  bool rg_drop = false;
  regress->add_option("records", rg_records, "CSV as written to regression_records_<lang>.csv")->required();
  regress->add_flag("--drop-degenerate", rg_drop, "Drop constant and duplicate columns instead of failing");
  regress->add_option("-o,--out", rg_out, "Coefficient CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (*split) {
    const Corpus corpus = load_corpus(split_corpus, "");
    const SplitRatio ratio = SplitRatio::parse(split_ratio);
    const Strategy strategy = parse_strategy(split_strategy);
    SplitManifest m;
    if (strategy == Strategy::kRandom) {
      m = random_split(corpus, ratio, split_seed);
    } else if (strategy == Strategy::kAdversarial) {
      m = adversarial_split(corpus, ratio, split_seed, split_budget);
    } else {
      const auto outcome = heuristic_split(corpus, ratio, Rational::parse(split_tolerance));
      if (!outcome.found()) {
        std::cerr << "no morpheme-count threshold reaches the target share within the tolerance\n";
        return 2;
      }
      m = *outcome.manifest;
    }
    write_text(split_out, to_json(m).dump(2) + "\n");
  } else if (*train) {
    const RunConfig config = resolve_config(train_config, train_sets);
    const Corpus corpus = load_corpus(train_corpus, "");
    const auto model = train_segmenter(parse_segmenter_id(train_model), corpus, config.model_settings);
    write_text(train_out, model->to_json().dump() + "\n");
  } else if (*segment) {
    const auto model = load_segmenter(json::parse(read_text(seg_model)));
    std::vector<std::string> words;
    std::ifstream file;
    if (seg_input != "-") {
      file.open(seg_input);
      if (!file) throw Error("cannot open " + seg_input);
    }
    std::istream& in = seg_input == "-" ? std::cin : file;
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) line.pop_back();
      if (!line.empty()) words.push_back(line);
    }
    std::ostringstream out;
    for (const auto& w : model->segment_all(words)) {
      out << w.surface() << '\t';
      for (std::size_t i = 0; i < w.morphemes().size(); ++i) out << (i ? " " : "") << w.morphemes()[i];
      out << '\n';
    }
    write_text(seg_out, out.str());
  } else if (*evaluate) {
    const Corpus gold = load_corpus(ev_gold, "gold");
    const Corpus pred = load_corpus(ev_pred, "pred");
    const auto variant = parse_f1_variant(ev_variant);
    const auto average = parse_f1_average(ev_average);
    const ScoreTriple s = corpus_f1(gold.words(), pred.words(), variant, average);
    std::cout << json{{"variant", to_string(variant)},
                      {"average", to_string(average)},
                      {"words", gold.size()},
                      {"precision", s.precision},
                      {"recall", s.recall},
                      {"f1", s.f1}}
                     .dump(2)
              << "\n";
  } else if (*experiment) {
    RunConfig config = resolve_config(ex_config, ex_sets);
    if (ex_output) config.output_dir = *ex_output;
    if (ex_parallelism) config.parallelism = *ex_parallelism;
    const RunLedger ledger = run_experiment(config, ex_config);
    std::cerr << ledger.count(CellStatus::kDone) << " of " << ledger.cells.size() << " cells done, "
              << ledger.count(CellStatus::kFailed) << " failed; output in " << config.output_dir.string() << "\n";
    for (const auto& e : ledger.cells) {
      if (e.status == CellStatus::kFailed) std::cerr << "  " << e.language_tag << "/" << e.cell_id << ": " << e.error << "\n";
    }
    return ledger.all_done() ? 0 : 1;
  } else if (*resume_cmd) {
    const RunLedger ledger = resume(rs_ledger, std::nullopt, rs_parallelism);
    std::cerr << "recomputed " << ledger.recomputed << " cell(s); " << ledger.count(CellStatus::kDone) << " of "
              << ledger.cells.size() << " done\n";
    return ledger.all_done() ? 0 : 1;
  } else if (*report_cmd) {
    for (const auto& f : report(rp_ledger, parse_report_kind(rp_kind))) std::cout << f << "\n";
  } else if (*synth) {
    const Corpus corpus = generate_synthetic_corpus(spec);
    std::ostringstream out;
    write_corpus(out, corpus);
    write_text(synth_out, out.str());
  } else if (*regress) {
    std::ifstream in(rg_records);
    if (!in) throw Error("cannot open " + rg_records);
    std::vector<RegressionRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty() || line[0] == '#' || line.rfind("f1,", 0) == 0) continue;
      std::vector<std::string> f;
      std::stringstream ss(line);
      for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
      if (f.size() != 8) throw ParseError(line_no, "expected 8 comma-separated fields");
      try {
        records.push_back({std::stod(f[0]), f[1] == "1", f[2] == "1", std::stod(f[3]), std::stod(f[4]),
                           std::stod(f[5]), std::stod(f[6]), f[7]});
      } catch (const std::logic_error&) {
        throw ParseError(line_no, "malformed number");
      }
    }
    const auto design = build_design_matrix(records, rg_drop);
    for (const auto& w : design.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& d : design.dropped) std::cerr << "dropped: " << d << "\n";
    const auto fit = ols_fit(design);
    write_text(rg_out, regression_csv(fit));
    std::cerr << "n=" << fit.n << " dof=" << fit.dof << " r_squared=" << fit.r_squared << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const morphsplit::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
