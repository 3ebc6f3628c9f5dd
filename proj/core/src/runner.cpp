#include "morphsplit/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <mutex>
#include <numeric>
#include <regex>
#include <set>
#include <sstream>
#include <tuple>

#include "morphsplit/error.hpp"
#include "morphsplit/parallel.hpp"
#include "morphsplit/random.hpp"

namespace morphsplit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const auto item = trim(value.substr(start, comma == std::string_view::npos ? value.npos : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(value) + "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + s + "'");
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::vector<Strategy> parse_strategies(std::string_view key, std::string_view value) {
  std::vector<Strategy> out;
  for (const auto& item : split_list(value)) {
    const Strategy s = parse_strategy(item);
    if (s == Strategy::kHeuristic) throw ConfigError(std::string(key) + ": only random and adversarial are supported");
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ConfigError(std::string(key) + ": empty list");
  return out;
}

bool valid_tag(const std::string& tag) {
  static const std::regex kTag("[A-Za-z0-9_.-]+");
  return std::regex_match(tag, kTag) && tag != "." && tag != "..";
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string fraction_text(double f) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", f);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string report_header(const std::vector<CellResult>& cells) {
  const auto& c = cells.front();
  return std::string("# f1_variant=") + std::string(to_string(c.variant)) +
         "; f1_average=" + std::string(to_string(c.average)) + "; language_weighting=equal\n";
}

double primary_eval(const CellResult& c, const std::string& model) { return c.models.at(model).eval_f1(c.variant); }
double primary_new(const CellResult& c, const std::string& model) { return c.models.at(model).new_f1(c.variant); }

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

ScoreTriple average(const std::vector<ScoreTriple>& xs) {
  ScoreTriple s;
  for (const auto& x : xs) {
    s.precision += x.precision;
    s.recall += x.recall;
    s.f1 += x.f1;
  }
  const double n = static_cast<double>(xs.size());
  return {s.precision / n, s.recall / n, s.f1 / n};
}

}  // namespace

// ---- config ----

void RunConfig::validate() const {
  if (corpora.empty()) throw ConfigError("no corpus given");
  std::set<std::string> tags;
  for (const auto& c : corpora) {
    if (!valid_tag(c.language_tag)) {
      throw ConfigError("language tag '" + c.language_tag + "' must match [A-Za-z0-9_.-]+");
    }
    if (!tags.insert(c.language_tag).second) throw ConfigError("duplicate language tag '" + c.language_tag + "'");
    if (c.path.empty()) throw ConfigError("empty corpus path for '" + c.language_tag + "'");
  }
  plan.validate();
  if (new_test_generations.empty()) throw ConfigError("no new-test generation mode");
  if (residual_strategies.empty()) throw ConfigError("no residual strategy");
  for (const auto* list : {&new_test_generations, &residual_strategies}) {
    for (Strategy s : *list) {
      if (s == Strategy::kHeuristic) throw ConfigError("only random and adversarial strategies run in experiments");
    }
  }
  if (models.empty()) throw ConfigError("no model given");
  std::set<std::string> names;
  for (const auto& m : models) {
    if (!names.insert(m.name()).second) throw ConfigError("duplicate model '" + m.name() + "'");
  }
  if (seeds_per_model == 0) throw ConfigError("seeds_per_model must be at least 1");
  if (parallelism == 0) throw ConfigError("parallelism must be at least 1");
  if (!(collapse_epsilon >= 0) || !std::isfinite(collapse_epsilon)) {
    throw ConfigError("collapse_epsilon must be finite and >= 0");
  }
  model_settings.feature_template.validate();
  model_settings.train.validate();
  if (!(model_settings.unigram_smoothing > 0) || !std::isfinite(model_settings.unigram_smoothing)) {
    throw ConfigError("unigram_smoothing must be > 0");
  }
  if (output_dir.empty()) throw ConfigError("empty output_dir");
}

void apply_config_entry(RunConfig& c, std::string_view key, std::string_view value, const fs::path& base_dir) {
  value = trim(value);
  const std::string k(key);
  if (key == "corpus") {
    const auto eq = value.find('=');
    CorpusSource src;
    if (eq == std::string_view::npos) {
      src.path = std::string(value);
      src.language_tag = src.path.stem().string();
    } else {
      src.language_tag = std::string(trim(value.substr(0, eq)));
      src.path = std::string(trim(value.substr(eq + 1)));
    }
    if (src.path.empty()) throw ConfigError("corpus: empty path");
    if (src.path.is_relative() && !base_dir.empty()) src.path = base_dir / src.path;
    c.corpora.push_back(std::move(src));
  } else if (key == "fractions") {
    std::vector<Rational> fractions;
    for (const auto& item : split_list(value)) {
      try {
        fractions.push_back(Rational::parse(item));
      } catch (const Error& e) {
        throw ConfigError("fractions: " + std::string(e.what()));
      }
    }
    c.plan.new_test_fractions = std::move(fractions);
  } else if (key == "samples_per_fraction") {
    c.plan.samples_per_fraction = parse_integer<std::size_t>(key, value);
  } else if (key == "residual_splits") {
    c.plan.residual_splits_per_strategy = parse_integer<std::size_t>(key, value);
  } else if (key == "residual_ratio") {
    try {
      c.plan.residual_ratio = SplitRatio::parse(value);
    } catch (const Error& e) {
      throw ConfigError("residual_ratio: " + std::string(e.what()));
    }
  } else if (key == "new_test_generation") {
    c.new_test_generations = parse_strategies(key, value);
  } else if (key == "residual_strategies") {
    c.residual_strategies = parse_strategies(key, value);
  } else if (key == "models") {
    std::vector<SegmenterId> models;
    for (const auto& item : split_list(value)) models.push_back(parse_segmenter_id(item));
    c.models = std::move(models);
  } else if (key == "seeds_per_model") {
    c.seeds_per_model = parse_integer<std::size_t>(key, value);
  } else if (key == "master_seed") {
    c.plan.master_seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "adversarial_budget") {
    c.plan.adversarial_budget =
        value == "unlimited" ? kUnlimitedBudget : parse_integer<std::uint64_t>(key, value);
  } else if (key == "f1_variant") {
    c.f1_variant = parse_f1_variant(value);
  } else if (key == "f1_average") {
    c.f1_average = parse_f1_average(value);
  } else if (key == "collapse_epsilon") {
    c.collapse_epsilon = parse_real(key, value);
  } else if (key == "optimizer") {
    c.model_settings.train.optimizer = parse_optimizer(value);
  } else if (key == "max_iterations") {
    c.model_settings.train.max_iterations = parse_integer<int>(key, value);
  } else if (key == "convergence_tol") {
    c.model_settings.train.convergence_tol = parse_real(key, value);
  } else if (key == "l2_lambda") {
    c.model_settings.train.l2_lambda = parse_real(key, value);
  } else if (key == "max_ngram") {
    c.model_settings.feature_template.max_ngram = parse_integer<int>(key, value);
  } else if (key == "window") {
    c.model_settings.feature_template.window = parse_integer<int>(key, value);
  } else if (key == "position_flags") {
    c.model_settings.feature_template.include_position_flags = parse_bool(key, value);
  } else if (key == "unigram_smoothing") {
    c.model_settings.unigram_smoothing = parse_real(key, value);
  } else if (key == "output_dir") {
    if (value.empty()) throw ConfigError("output_dir: empty");
    c.output_dir = std::string(value);
  } else if (key == "parallelism") {
    c.parallelism = parse_integer<std::size_t>(key, value);
  } else {
    throw ConfigError("unknown config key '" + k + "'");
  }
}

void apply_config_text(RunConfig& config, std::istream& in, const fs::path& base_dir) {
  std::string line;
  std::size_t line_no = 0;
  bool corpus_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(text.substr(0, eq));
    if (key == "corpus" && !corpus_seen) {
      config.corpora.clear();
      corpus_seen = true;
    }
    try {
      apply_config_entry(config, key, text.substr(eq + 1), base_dir);
    } catch (const Error& e) {
      throw ConfigError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  RunConfig c;
  apply_config_text(c, in, fs::absolute(path).parent_path());
  return c;
}

void apply_environment(RunConfig& config) {
  if (const char* dir = std::getenv(kOutputDirEnv); dir != nullptr && *dir != '\0') config.output_dir = dir;
}

json to_json(const RunConfig& c) {
  json corpora = json::array();
  for (const auto& s : c.corpora) corpora.push_back({{"language_tag", s.language_tag}, {"path", s.path.string()}});
  json fractions = json::array();
  for (const auto& f : c.plan.new_test_fractions) fractions.push_back(std::to_string(f.num()) + "/" + std::to_string(f.den()));
  json ntg = json::array(), rs = json::array(), models = json::array();
  for (Strategy s : c.new_test_generations) ntg.push_back(to_string(s));
  for (Strategy s : c.residual_strategies) rs.push_back(to_string(s));
  for (const auto& m : c.models) models.push_back(m.name());
  return {{"corpora", corpora},
          {"fractions", fractions},
          {"samples_per_fraction", c.plan.samples_per_fraction},
          {"residual_splits", c.plan.residual_splits_per_strategy},
          {"residual_ratio", c.plan.residual_ratio.to_string()},
          {"master_seed", c.plan.master_seed},
          {"adversarial_budget", c.plan.adversarial_budget},
          {"new_test_generation", ntg},
          {"residual_strategies", rs},
          {"models", models},
          {"seeds_per_model", c.seeds_per_model},
          {"f1_variant", to_string(c.f1_variant)},
          {"f1_average", to_string(c.f1_average)},
          {"collapse_epsilon", c.collapse_epsilon},
          {"model_settings", to_json(c.model_settings)},
          {"output_dir", c.output_dir.string()},
          {"parallelism", c.parallelism}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  c.corpora.clear();
  for (const auto& s : j.at("corpora")) {
    c.corpora.push_back({s.at("language_tag").get<std::string>(), s.at("path").get<std::string>()});
  }
  c.plan.new_test_fractions.clear();
  for (const auto& f : j.at("fractions")) c.plan.new_test_fractions.push_back(Rational::parse(f.get<std::string>()));
  c.plan.samples_per_fraction = j.at("samples_per_fraction").get<std::size_t>();
  c.plan.residual_splits_per_strategy = j.at("residual_splits").get<std::size_t>();
  c.plan.residual_ratio = SplitRatio::parse(j.at("residual_ratio").get<std::string>());
  c.plan.master_seed = j.at("master_seed").get<std::uint64_t>();
  c.plan.adversarial_budget = j.at("adversarial_budget").get<std::uint64_t>();
  c.new_test_generations.clear();
  for (const auto& s : j.at("new_test_generation")) c.new_test_generations.push_back(parse_strategy(s.get<std::string>()));
  c.residual_strategies.clear();
  for (const auto& s : j.at("residual_strategies")) c.residual_strategies.push_back(parse_strategy(s.get<std::string>()));
  c.models.clear();
  for (const auto& m : j.at("models")) c.models.push_back(parse_segmenter_id(m.get<std::string>()));
  c.seeds_per_model = j.at("seeds_per_model").get<std::size_t>();
  c.f1_variant = parse_f1_variant(j.at("f1_variant").get<std::string>());
  c.f1_average = parse_f1_average(j.at("f1_average").get<std::string>());
  c.collapse_epsilon = j.at("collapse_epsilon").get<double>();
  c.model_settings = model_settings_from_json(j.at("model_settings"));
  c.output_dir = j.at("output_dir").get<std::string>();
  c.parallelism = j.at("parallelism").get<std::size_t>();
  return c;
}

std::string config_hash(const RunConfig& config) {
  json j = to_json(config);
  j.erase("output_dir");
  j.erase("parallelism");
  json corpora = json::array();
  for (const auto& s : config.corpora) {
    corpora.push_back({{"language_tag", s.language_tag}, {"digest", hex64(file_digest(s.path))}});
  }
  j["corpora"] = corpora;
  return hex64(fnv1a64(j.dump()));
}

// ---- ledger ----

std::string_view to_string(CellStatus s) {
  switch (s) {
    case CellStatus::kPending: return "pending";
    case CellStatus::kDone: return "done";
    case CellStatus::kFailed: return "failed";
  }
  return "pending";
}

CellStatus parse_cell_status(std::string_view text) {
  if (text == "pending") return CellStatus::kPending;
  if (text == "done") return CellStatus::kDone;
  if (text == "failed") return CellStatus::kFailed;
  throw ConfigError("unknown cell status '" + std::string(text) + "'");
}

std::size_t RunLedger::count(CellStatus s) const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [&](const LedgerEntry& e) { return e.status == s; }));
}

json to_json(const RunLedger& l) {
  json cells = json::array();
  for (const auto& e : l.cells) {
    cells.push_back({{"cell_id", e.cell_id},
                     {"language_tag", e.language_tag},
                     {"new_test_generation", to_string(e.new_test_generation)},
                     {"residual_strategy", to_string(e.residual_strategy)},
                     {"status", to_string(e.status)},
                     {"seconds", e.seconds},
                     {"artifact", e.artifact},
                     {"error", e.error}});
  }
  return {{"version", 1},
          {"config_hash", l.config_hash},
          {"config", l.config},
          {"config_path", l.config_path},
          {"corpus_digests", l.corpus_digests},
          {"cells", cells},
          {"reports", l.reports}};
}

RunLedger run_ledger_from_json(const json& j) {
  RunLedger l;
  l.config_hash = j.at("config_hash").get<std::string>();
  l.config = j.at("config");
  l.config_path = j.value("config_path", std::string());
  l.corpus_digests = j.at("corpus_digests").get<std::map<std::string, std::string>>();
  for (const auto& c : j.at("cells")) {
    LedgerEntry e;
    e.cell_id = c.at("cell_id").get<std::string>();
    e.language_tag = c.at("language_tag").get<std::string>();
    e.new_test_generation = parse_strategy(c.at("new_test_generation").get<std::string>());
    e.residual_strategy = parse_strategy(c.at("residual_strategy").get<std::string>());
    e.status = parse_cell_status(c.at("status").get<std::string>());
    e.seconds = c.at("seconds").get<double>();
    e.artifact = c.at("artifact").get<std::string>();
    e.error = c.at("error").get<std::string>();
    l.cells.push_back(std::move(e));
  }
  l.reports = j.value("reports", std::vector<std::string>{});
  return l;
}

RunLedger load_ledger(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("no ledger at " + path.string());
  try {
    return run_ledger_from_json(json::parse(read_file(path)));
  } catch (const json::exception& e) {
    throw ConfigError("malformed ledger " + path.string() + ": " + e.what());
  }
}

json to_json(const CellArtifact& a) { return {{"grid", to_json(a.grid)}, {"result", to_json(a.result)}}; }

CellArtifact cell_artifact_from_json(const json& j) {
  return {grid_cell_from_json(j.at("grid")), cell_result_from_json(j.at("result"))};
}

// ---- cell evaluation ----

std::uint64_t model_seed(std::uint64_t master_seed, std::string_view cell_id, const SegmenterId& model,
                         std::size_t replicate) {
  return derive_seed(master_seed, {fnv1a64(cell_id), fnv1a64(model.name()), replicate});
}

CellResult evaluate_cell(const Corpus& corpus, const GridCell& cell, const RunConfig& config) {
  const Corpus train = corpus.subset(cell.train);
  const Corpus eval = corpus.subset(cell.eval);
  const Corpus new_test = corpus.subset(cell.new_test);
  std::vector<std::string> eval_surfaces, new_surfaces;
  for (const auto& w : eval.words()) eval_surfaces.push_back(w.surface());
  for (const auto& w : new_test.words()) new_surfaces.push_back(w.surface());

  CellResult r;
  r.cell_id = cell.cell_id;
  r.language_tag = corpus.language_tag();
  r.fraction_index = cell.fraction_index;
  r.fraction = cell.fraction.value();
  r.new_test_generation = cell.new_test_generation;
  r.residual_strategy = cell.residual_strategy;
  r.train_size = train.size();
  r.eval_size = eval.size();
  r.new_test_size = new_test.size();
  r.morpheme_overlap = morpheme_overlap(train, eval);
  const CorpusStats ts = corpus_stats(train), es = corpus_stats(eval);
  r.word_count_ratio = static_cast<double>(ts.word_type_count) / static_cast<double>(es.word_type_count);
  r.morph_per_word_ratio = ts.avg_morphemes_per_word / es.avg_morphemes_per_word;
  r.morph_type_per_word_ratio = ts.avg_morpheme_types_per_word / es.avg_morpheme_types_per_word;
  r.variant = config.f1_variant;
  r.average = config.f1_average;

  for (const auto& id : config.models) {
    const std::size_t runs = id.deterministic() ? 1 : config.seeds_per_model;
    std::vector<ScoreTriple> be, bn, me, mn;
    for (std::size_t k = 0; k < runs; ++k) {
      ModelSettings settings = config.model_settings;
      settings.train.seed = model_seed(config.plan.master_seed, cell.cell_id, id, k);
      const auto model = train_segmenter(id, train, settings);
      const auto pe = model->segment_all(eval_surfaces);
      const auto pn = model->segment_all(new_surfaces);
      be.push_back(corpus_f1(eval.words(), pe, F1Variant::kBoundary, config.f1_average));
      bn.push_back(corpus_f1(new_test.words(), pn, F1Variant::kBoundary, config.f1_average));
      me.push_back(corpus_f1(eval.words(), pe, F1Variant::kMorpheme, config.f1_average));
      mn.push_back(corpus_f1(new_test.words(), pn, F1Variant::kMorpheme, config.f1_average));
    }
    ModelScores s;
    s.boundary_eval = average(be);
    s.boundary_new = average(bn);
    s.morpheme_eval = average(me);
    s.morpheme_new = average(mn);
    s.seeds = config.seeds_per_model;
    r.models.emplace(id.name(), s);
  }
  if (r.models.size() >= 2) {
    rank_cell(r, config.collapse_epsilon);
  } else {
    const std::string only = r.models.begin()->first;
    r.ranking_eval = {{only}, {{only}}, config.collapse_epsilon};
    r.ranking_new = r.ranking_eval;
  }
  return r;
}

// ---- experiment execution ----

namespace {

struct LoadedCorpus {
  Corpus corpus;
  std::string digest;
};

std::map<std::string, LoadedCorpus> load_corpora(const RunConfig& config) {
  std::map<std::string, LoadedCorpus> out;
  for (const auto& src : config.corpora) {
    auto parsed = parse_corpus(src.path, src.language_tag);
    out.emplace(src.language_tag, LoadedCorpus{std::move(parsed.corpus), hex64(file_digest(src.path))});
  }
  return out;
}

std::string artifact_path(const std::string& tag, const std::string& cell_id) {
  return "cells/" + tag + "/" + cell_id + ".json";
}

std::vector<std::string> write_reports(const fs::path& out_dir, const std::vector<CellResult>& cells,
                                       ReportKind kind);

std::vector<CellResult> read_done_cells(const fs::path& out_dir, const RunLedger& ledger) {
  std::vector<CellResult> out;
  for (const auto& e : ledger.cells) {
    if (e.status != CellStatus::kDone) continue;
    out.push_back(cell_artifact_from_json(json::parse(read_file(out_dir / e.artifact))).result);
  }
  return out;
}

bool artifact_ok(const fs::path& out_dir, const LedgerEntry& e) {
  const fs::path p = out_dir / e.artifact;
  if (e.artifact.empty() || !fs::exists(p)) return false;
  try {
    return cell_artifact_from_json(json::parse(read_file(p))).result.cell_id == e.cell_id;
  } catch (const std::exception&) {
    return false;
  }
}

// Computes the entries of `ledger` selected by `todo` and keeps the ledger
// file current after each one.
std::size_t execute_cells(const RunConfig& config, const std::map<std::string, LoadedCorpus>& corpora,
                          const fs::path& out_dir, RunLedger& ledger, const std::vector<bool>& todo) {
  struct Work {
    std::size_t entry;
    const Corpus* corpus;
    GridCell cell;
  };
  std::vector<Work> work;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ledger.cells.size(); ++i) {
    index[ledger.cells[i].language_tag + "/" + ledger.cells[i].cell_id] = i;
  }
  for (const auto& [tag, lc] : corpora) {
    for (Strategy ntg : config.new_test_generations) {
      for (Strategy rs : config.residual_strategies) {
        bool needed = false;
        for (std::size_t i = 0; i < ledger.cells.size(); ++i) {
          const auto& e = ledger.cells[i];
          needed |= todo[i] && e.language_tag == tag && e.new_test_generation == ntg && e.residual_strategy == rs;
        }
        if (!needed) continue;
        ExperimentPlan plan = config.plan;
        plan.new_test_generation = ntg;
        for (auto& cell : build_grid(lc.corpus, plan, rs, config.parallelism)) {
          const auto it = index.find(tag + "/" + cell.cell_id);
          if (it == index.end()) throw Error("grid cell " + cell.cell_id + " is missing from the ledger");
          if (todo[it->second]) work.push_back({it->second, &lc.corpus, std::move(cell)});
        }
      }
    }
  }
  std::sort(work.begin(), work.end(), [](const Work& a, const Work& b) { return a.entry < b.entry; });

  const fs::path ledger_path = out_dir / kLedgerFile;
  std::mutex mutex;
  parallel_for(work.size(), config.parallelism, [&](std::size_t w) {
    const auto& item = work[w];
    const auto start = std::chrono::steady_clock::now();
    LedgerEntry update = ledger.cells[item.entry];
    try {
      CellArtifact artifact{item.cell, evaluate_cell(*item.corpus, item.cell, config)};
      write_file_atomic(out_dir / update.artifact, to_json(artifact).dump(2) + "\n");
      update.status = CellStatus::kDone;
      update.error.clear();
    } catch (const std::exception& e) {
      update.status = CellStatus::kFailed;
      update.error = e.what();
    }
    update.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard lock(mutex);
    ledger.cells[item.entry] = std::move(update);
    write_file_atomic(ledger_path, to_json(ledger).dump(2) + "\n");
  });
  return work.size();
}

void emit_all_reports(const fs::path& out_dir, RunLedger& ledger) {
  ledger.reports.clear();
  if (ledger.count(CellStatus::kDone) == 0) return;
  const auto cells = read_done_cells(out_dir, ledger);
  for (ReportKind k : {ReportKind::kTables, ReportKind::kRegression, ReportKind::kPlotsData}) {
    const auto written = write_reports(out_dir, cells, k);
    ledger.reports.insert(ledger.reports.end(), written.begin(), written.end());
  }
}

}  // namespace

RunLedger run_experiment(const RunConfig& config, const fs::path& config_path) {
  config.validate();
  RunConfig resolved = config;
  for (auto& s : resolved.corpora) s.path = fs::absolute(s.path);
  const auto corpora = load_corpora(resolved);
  const fs::path out_dir = resolved.output_dir;

  RunLedger ledger;
  ledger.config_hash = config_hash(resolved);
  ledger.config = to_json(resolved);
  ledger.config_path = config_path.empty() ? std::string() : fs::absolute(config_path).string();
  for (const auto& [tag, lc] : corpora) ledger.corpus_digests[tag] = lc.digest;

  for (const auto& [tag, lc] : corpora) {
    for (Strategy ntg : resolved.new_test_generations) {
      for (Strategy rs : resolved.residual_strategies) {
        for (std::size_t f = 0; f < resolved.plan.new_test_fractions.size(); ++f) {
          for (std::size_t s = 0; s < resolved.plan.samples_per_fraction; ++s) {
            for (std::size_t k = 0; k < resolved.plan.residual_splits_per_strategy; ++k) {
              LedgerEntry e;
              e.cell_id = make_cell_id(ntg, rs, resolved.plan.new_test_fractions[f], s, k);
              e.language_tag = tag;
              e.new_test_generation = ntg;
              e.residual_strategy = rs;
              e.artifact = artifact_path(tag, e.cell_id);
              ledger.cells.push_back(std::move(e));
            }
          }
        }
      }
    }
  }
  std::sort(ledger.cells.begin(), ledger.cells.end(), [](const LedgerEntry& a, const LedgerEntry& b) {
    return std::tie(a.language_tag, a.cell_id) < std::tie(b.language_tag, b.cell_id);
  });

  fs::create_directories(out_dir);
  write_file_atomic(out_dir / kLedgerFile, to_json(ledger).dump(2) + "\n");
  ledger.recomputed = execute_cells(resolved, corpora, out_dir, ledger, std::vector<bool>(ledger.cells.size(), true));
  emit_all_reports(out_dir, ledger);
  write_file_atomic(out_dir / kLedgerFile, to_json(ledger).dump(2) + "\n");
  return ledger;
}

RunLedger resume(const fs::path& ledger_path, const std::optional<RunConfig>& override,
                 std::optional<std::size_t> parallelism) {
  RunLedger ledger = load_ledger(ledger_path);
  const fs::path out_dir = ledger_path.parent_path().empty() ? fs::path(".") : ledger_path.parent_path();

  RunConfig config;
  std::string source;
  if (override) {
    config = *override;
    source = "the given config";
  } else if (!ledger.config_path.empty() && fs::exists(ledger.config_path)) {
    config = load_run_config(ledger.config_path);
    apply_environment(config);
    source = "config file " + ledger.config_path;
  } else {
    config = run_config_from_json(ledger.config);
    source = "the config stored in the ledger";
  }
  if (parallelism) config.parallelism = *parallelism;
  config.validate();
  for (auto& s : config.corpora) s.path = fs::absolute(s.path);

  const std::string hash = config_hash(config);
  if (hash != ledger.config_hash) {
    std::string detail;
    const auto stored = run_config_from_json(ledger.config);
    for (const auto& s : stored.corpora) {
      if (!fs::exists(s.path)) {
        detail += "; corpus " + s.path.string() + " is missing";
      } else if (const auto it = ledger.corpus_digests.find(s.language_tag);
                 it != ledger.corpus_digests.end() && it->second != hex64(file_digest(s.path))) {
        detail += "; corpus '" + s.language_tag + "' changed since the run";
      }
    }
    throw ConfigError("refusing to resume: " + source + " hashes to " + hash + " but the ledger was written by " +
                      ledger.config_hash + "; results would mix two configurations" + detail +
                      ". Start a new experiment instead.");
  }

  const auto corpora = load_corpora(config);
  std::vector<bool> todo(ledger.cells.size(), false);
  std::size_t needed = 0;
  for (std::size_t i = 0; i < ledger.cells.size(); ++i) {
    const auto& e = ledger.cells[i];
    todo[i] = e.status != CellStatus::kDone || !artifact_ok(out_dir, e);
    needed += todo[i];
  }
  ledger.recomputed = needed == 0 ? 0 : execute_cells(config, corpora, out_dir, ledger, todo);

  bool reports_present = !ledger.reports.empty() || ledger.count(CellStatus::kDone) == 0;
  for (const auto& r : ledger.reports) reports_present &= fs::exists(out_dir / r);
  if (ledger.recomputed > 0 || !reports_present) {
    emit_all_reports(out_dir, ledger);
    write_file_atomic(out_dir / kLedgerFile, to_json(ledger).dump(2) + "\n");
  }
  return ledger;
}

// ---- reports ----

std::string_view to_string(ReportKind k) {
  switch (k) {
    case ReportKind::kTables: return "tables";
    case ReportKind::kRegression: return "regression";
    case ReportKind::kPlotsData: return "plots-data";
  }
  return "tables";
}

ReportKind parse_report_kind(std::string_view text) {
  if (text == "tables") return ReportKind::kTables;
  if (text == "regression") return ReportKind::kRegression;
  if (text == "plots-data") return ReportKind::kPlotsData;
  throw ConfigError("unknown report kind '" + std::string(text) + "' (tables, regression, plots-data)");
}

std::vector<CellResult> load_done_cells(const fs::path& ledger_path) {
  const RunLedger ledger = load_ledger(ledger_path);
  if (ledger.count(CellStatus::kDone) == 0) throw DomainError("ledger has no completed cells");
  return read_done_cells(ledger_path.parent_path().empty() ? fs::path(".") : ledger_path.parent_path(), ledger);
}

std::vector<std::string> report(const fs::path& ledger_path, ReportKind kind) {
  const auto cells = load_done_cells(ledger_path);
  return write_reports(ledger_path.parent_path().empty() ? fs::path(".") : ledger_path.parent_path(), cells, kind);
}

std::string results_csv(std::vector<CellResult> cells) {
  if (cells.empty()) throw DomainError("no cells to report");
  std::sort(cells.begin(), cells.end(), [](const CellResult& a, const CellResult& b) {
    return std::tie(a.fraction_index, a.new_test_generation, a.residual_strategy, a.cell_id) <
           std::tie(b.fraction_index, b.new_test_generation, b.residual_strategy, b.cell_id);
  });
  std::string out = report_header(cells);
  out +=
      "cell_id,language_tag,fraction,new_test_strategy,residual_strategy,model,seed_group,f1_boundary_eval,"
      "f1_boundary_new,f1_morpheme_eval,f1_morpheme_new,morpheme_overlap,train_size,eval_size,new_test_size\n";
  for (const auto& c : cells) {
    for (const auto& [model, s] : c.models) {
      out += csv_field(c.cell_id) + "," + csv_field(c.language_tag) + "," + fraction_text(c.fraction) + "," +
             std::string(to_string(c.new_test_generation)) + "," + std::string(to_string(c.residual_strategy)) + "," +
             csv_field(model) + "," + std::to_string(s.seeds) + "," + num(s.boundary_eval.f1) + "," +
             num(s.boundary_new.f1) + "," + num(s.morpheme_eval.f1) + "," + num(s.morpheme_new.f1) + "," +
             num(c.morpheme_overlap) + "," + std::to_string(c.train_size) + "," + std::to_string(c.eval_size) + "," +
             std::to_string(c.new_test_size) + "\n";
    }
  }
  return out;
}

namespace {

// Cells grouped by language, then by residual strategy.
std::map<std::string, std::map<Strategy, std::vector<CellResult>>> by_language_strategy(
    const std::vector<CellResult>& cells) {
  std::map<std::string, std::map<Strategy, std::vector<CellResult>>> out;
  for (const auto& c : cells) out[c.language_tag][c.residual_strategy].push_back(c);
  for (auto& [tag, m] : out) {
    for (auto& [s, v] : m) {
      std::sort(v.begin(), v.end(), [](const CellResult& a, const CellResult& b) { return a.cell_id < b.cell_id; });
    }
  }
  return out;
}

// Population sigma of new-test F1 per fraction with >= 2 cells; returns
// each model's sigmas across those fractions.
std::map<std::string, std::vector<double>> sigma_by_fraction(
    const std::vector<CellResult>& cells, std::map<std::size_t, std::map<std::string, double>>* per_fraction) {
  std::map<std::size_t, std::vector<CellResult>> strata;
  for (const auto& c : cells) strata[c.fraction_index].push_back(c);
  std::map<std::string, std::vector<double>> out;
  for (const auto& [f, stratum] : strata) {
    if (stratum.size() < 2) continue;
    for (const auto& [m, sigma] : score_variability(stratum)) {
      out[m].push_back(sigma);
      if (per_fraction) (*per_fraction)[f][m] = sigma;
    }
  }
  return out;
}

}  // namespace

std::vector<AggregateRow> aggregate_rows(const std::vector<CellResult>& cells) {
  if (cells.empty()) throw DomainError("no cells to aggregate");
  struct Acc {
    std::vector<double> eval, fresh, gap, consistency, sigma;
  };
  std::map<std::pair<std::string, Strategy>, Acc> acc;
  for (const auto& [tag, strategies] : by_language_strategy(cells)) {
    for (const auto& [strategy, group] : strategies) {
      const double consistency = ranking_consistency(group);
      const auto sigmas = sigma_by_fraction(group, nullptr);
      for (const auto& [m, gap] : generalization_gap(group)) {
        std::vector<double> e, n;
        for (const auto& c : group) {
          if (!c.models.count(m)) continue;
          e.push_back(primary_eval(c, m));
          n.push_back(primary_new(c, m));
        }
        auto& a = acc[{m, strategy}];
        a.eval.push_back(mean(e));
        a.fresh.push_back(mean(n));
        a.gap.push_back(gap.mean_abs);
        a.consistency.push_back(consistency);
        if (const auto it = sigmas.find(m); it != sigmas.end()) a.sigma.push_back(mean(it->second));
      }
    }
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, a] : acc) {
    AggregateRow r;
    r.model = key.first;
    r.residual_strategy = key.second;
    r.mean_eval_f1 = mean(a.eval);
    r.mean_new_f1 = mean(a.fresh);
    r.mean_abs_gap = mean(a.gap);
    r.consistency = mean(a.consistency);
    if (!a.sigma.empty()) r.sigma = mean(a.sigma);
    rows.push_back(r);
  }
  return rows;
}

std::string aggregate_csv(const std::vector<CellResult>& cells) {
  std::string out = report_header(cells);
  out += "model,residual_strategy,mean_eval_f1,mean_new_f1,mean_abs_gap,consistency,sigma\n";
  for (const auto& r : aggregate_rows(cells)) {
    out += csv_field(r.model) + "," + std::string(to_string(r.residual_strategy)) + "," + num(r.mean_eval_f1) + "," +
           num(r.mean_new_f1) + "," + num(r.mean_abs_gap) + "," + num(r.consistency) + "," +
           (r.sigma ? num(*r.sigma) : std::string("NA")) + "\n";
  }
  return out;
}

std::string best_rankings_csv(const std::vector<CellResult>& cells) {
  if (cells.empty()) throw DomainError("no cells to rank");
  std::map<std::tuple<Strategy, std::string, Strategy>, std::vector<const CellResult*>> groups;
  for (const auto& c : cells) groups[{c.new_test_generation, c.language_tag, c.residual_strategy}].push_back(&c);
  std::string out = report_header(cells);
  out += "new_test_strategy,language_tag,residual_strategy,set,ranking,count,total,share\n";
  for (const auto& [key, group] : groups) {
    for (const char* set : {"eval", "new"}) {
      std::map<std::string, std::size_t> counts;
      for (const auto* c : group) {
        ++counts[std::string(set) == "eval" ? c->ranking_eval.to_string() : c->ranking_new.to_string()];
      }
      const auto best = std::max_element(counts.begin(), counts.end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
      out += std::string(to_string(std::get<0>(key))) + "," + csv_field(std::get<1>(key)) + "," +
             std::string(to_string(std::get<2>(key))) + "," + set + "," + csv_field(best->first) + "," +
             std::to_string(best->second) + "," + std::to_string(group.size()) + "," +
             num(static_cast<double>(best->second) / static_cast<double>(group.size())) + "\n";
    }
  }
  return out;
}

std::string variability_csv(const std::vector<CellResult>& cells) {
  if (cells.empty()) throw DomainError("no cells to report");
  // (fraction index, strategy, model) -> per-language sigmas
  std::map<std::tuple<std::size_t, Strategy, std::string>, std::vector<double>> acc;
  std::map<std::size_t, double> fraction_value;
  for (const auto& c : cells) fraction_value[c.fraction_index] = c.fraction;
  for (const auto& [tag, strategies] : by_language_strategy(cells)) {
    for (const auto& [strategy, group] : strategies) {
      std::map<std::size_t, std::map<std::string, double>> per_fraction;
      sigma_by_fraction(group, &per_fraction);
      for (const auto& [f, models] : per_fraction) {
        for (const auto& [m, sigma] : models) acc[{f, strategy, m}].push_back(sigma);
      }
    }
  }
  std::string out = report_header(cells);
  out += "fraction,strategy,model,sigma\n";
  for (const auto& [key, sigmas] : acc) {
    out += fraction_text(fraction_value.at(std::get<0>(key))) + "," + std::string(to_string(std::get<1>(key))) + "," +
           csv_field(std::get<2>(key)) + "," + num(mean(sigmas)) + "\n";
  }
  return out;
}

std::vector<RegressionRecord> regression_records(const std::vector<CellResult>& cells) {
  std::vector<const CellResult*> sorted;
  for (const auto& c : cells) sorted.push_back(&c);
  std::sort(sorted.begin(), sorted.end(), [](const CellResult* a, const CellResult* b) {
    return std::tie(a->language_tag, a->cell_id) < std::tie(b->language_tag, b->cell_id);
  });
  std::vector<RegressionRecord> out;
  for (const auto* c : sorted) {
    for (const auto& [m, s] : c->models) {
      out.push_back({s.new_f1(c->variant), c->residual_strategy == Strategy::kRandom,
                     c->new_test_generation == Strategy::kRandom, c->morpheme_overlap, c->word_count_ratio,
                     c->morph_per_word_ratio, c->morph_type_per_word_ratio, m});
    }
  }
  return out;
}

std::string regression_records_csv(const std::vector<RegressionRecord>& records) {
  std::string out =
      "f1,strategy,new_test_gen,morpheme_overlap,word_count_ratio,morph_per_word_ratio,"
      "morph_type_per_word_ratio,model_arch\n";
  for (const auto& r : records) {
    out += num(r.f1) + "," + (r.random_strategy ? "1" : "0") + "," + (r.random_new_test ? "1" : "0") + "," +
           num(r.morpheme_overlap) + "," + num(r.word_count_ratio) + "," + num(r.morph_per_word_ratio) + "," +
           num(r.morph_type_per_word_ratio) + "," + csv_field(r.model_arch) + "\n";
  }
  return out;
}

std::string regression_csv(const RegressionResult& result) {
  std::string out = "term,beta,se,t,p,stars\n";
  for (std::size_t j = 0; j < result.terms.size(); ++j) {
    out += csv_field(result.terms[j]) + "," + num(result.beta[j]) + "," + num(result.se[j]) + "," +
           num(result.t[j]) + "," + num(result.p[j]) + "," + result.stars[j] + "\n";
  }
  return out;
}

namespace {

std::vector<std::string> write_reports(const fs::path& out_dir, const std::vector<CellResult>& cells,
                                       ReportKind kind) {
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    const std::string rel = "reports/" + name;
    write_file_atomic(out_dir / rel, content);
    written.push_back(rel);
  };
  std::map<std::string, std::vector<CellResult>> by_language;
  std::map<Strategy, std::vector<CellResult>> by_generation;
  for (const auto& c : cells) {
    by_language[c.language_tag].push_back(c);
    by_generation[c.new_test_generation].push_back(c);
  }
  switch (kind) {
    case ReportKind::kTables:
      for (const auto& [tag, group] : by_language) emit("results_" + tag + ".csv", results_csv(group));
      for (const auto& [gen, group] : by_generation) {
        emit("aggregate_newtest-" + std::string(to_string(gen)) + ".csv", aggregate_csv(group));
      }
      emit("best_rankings.csv", best_rankings_csv(cells));
      break;
    case ReportKind::kRegression: {
      std::string summary = report_header(cells) + "language_tag,n,dof,r_squared,status,dropped_terms\n";
      for (const auto& [tag, group] : by_language) {
        const auto records = regression_records(group);
        emit("regression_records_" + tag + ".csv", regression_records_csv(records));
        std::string status = "ok", dropped;
        RegressionResult fit;
        try {
          const auto design = build_design_matrix(records, true);
          for (const auto& d : design.dropped) dropped += (dropped.empty() ? "" : ";") + d;
          fit = ols_fit(design);
        } catch (const Error& e) {
          status = std::string("skipped: ") + e.what();
          fit = RegressionResult{};
          fit.n = records.size();
        }
        emit("regression_" + tag + ".csv", regression_csv(fit));
        summary += csv_field(tag) + "," + std::to_string(fit.n) + "," + std::to_string(fit.dof) + "," +
                   (status == "ok" ? num(fit.r_squared) : std::string("NA")) + "," + csv_field(status) + "," +
                   csv_field(dropped) + "\n";
      }
      emit("regression_summary.csv", summary);
      break;
    }
    case ReportKind::kPlotsData:
      for (const auto& [gen, group] : by_generation) {
        emit("variability_newtest-" + std::string(to_string(gen)) + ".csv", variability_csv(group));
      }
      break;
  }
  return written;
}

}  // namespace

}  // namespace morphsplit
