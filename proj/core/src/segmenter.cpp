#include "morphsplit/segmenter.hpp"

#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "morphsplit/baselines.hpp"
#include "morphsplit/crf.hpp"
#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

extern char** environ;

namespace morphsplit {

SegmenterId SegmenterId::builtin(ModelKind kind) {
  if (kind == ModelKind::kExternal) throw ConfigError("external models need a command");
  return SegmenterId{kind, {}};
}

SegmenterId SegmenterId::external(std::string command) {
  if (command.empty()) throw ConfigError("external model command is empty");
  return SegmenterId{ModelKind::kExternal, std::move(command)};
}

std::string SegmenterId::name() const {
  switch (kind) {
    case ModelKind::kCrf:
      return "crf";
    case ModelKind::kUnigramViterbi:
      return "unigram_viterbi";
    case ModelKind::kBoundaryLogistic:
      return "boundary_logistic";
    case ModelKind::kLongestMatch:
      return "longest_match";
    case ModelKind::kExternal:
      return "external:" + command;
  }
  return {};
}

SegmenterId parse_segmenter_id(std::string_view text) {
  constexpr std::string_view kExt = "external:";
  if (text.substr(0, kExt.size()) == kExt) return SegmenterId::external(std::string(text.substr(kExt.size())));
  for (const auto& id : builtin_segmenters()) {
    if (id.name() == text) return id;
  }
  throw ConfigError("unknown model '" + std::string(text) + "'");
}

std::vector<SegmenterId> builtin_segmenters() {
  return {SegmenterId::builtin(ModelKind::kCrf), SegmenterId::builtin(ModelKind::kUnigramViterbi),
          SegmenterId::builtin(ModelKind::kBoundaryLogistic), SegmenterId::builtin(ModelKind::kLongestMatch)};
}

nlohmann::json to_json(const ModelSettings& s) {
  return {{"feature_template", to_json(s.feature_template)},
          {"train", to_json(s.train)},
          {"unigram_smoothing", s.unigram_smoothing}};
}

ModelSettings model_settings_from_json(const nlohmann::json& j) {
  ModelSettings s;
  s.feature_template = feature_template_from_json(j.at("feature_template"));
  s.train = train_config_from_json(j.at("train"));
  s.unigram_smoothing = j.at("unigram_smoothing").get<double>();
  return s;
}

std::vector<SegmentedWord> Segmenter::segment_all(std::span<const std::string> surfaces) const {
  std::vector<SegmentedWord> out;
  out.reserve(surfaces.size());
  for (const auto& s : surfaces) out.push_back(segment(s));
  return out;
}

namespace {

template <typename Model, ModelKind K>
class Builtin final : public Segmenter {
 public:
  explicit Builtin(Model m) : model_(std::move(m)) {}
  SegmenterId id() const override { return SegmenterId::builtin(K); }
  SegmentedWord segment(std::string_view surface) const override {
    if constexpr (K == ModelKind::kCrf) {
      return crf_segment(model_, surface);
    } else {
      return model_.segment(surface);
    }
  }
  nlohmann::json to_json() const override {
    return {{"model", id().name()}, {"params", morphsplit::to_json(model_)}};
  }

 private:
  Model model_;
};

using CrfSegmenter = Builtin<CrfModel, ModelKind::kCrf>;
using UnigramSegmenter = Builtin<UnigramModel, ModelKind::kUnigramViterbi>;
using LogisticSegmenter = Builtin<BoundaryLogisticModel, ModelKind::kBoundaryLogistic>;
using LongestMatchSegmenter = Builtin<LongestMatchModel, ModelKind::kLongestMatch>;

class ExternalSegmenter final : public Segmenter {
 public:
  ExternalSegmenter(std::string command, Corpus train, std::uint64_t seed)
      : command_(std::move(command)), train_(std::move(train)), seed_(seed) {}
  SegmenterId id() const override { return SegmenterId::external(command_); }
  SegmentedWord segment(std::string_view surface) const override {
    const std::string s(surface);
    return segment_all(std::span<const std::string>(&s, 1)).front();
  }
  std::vector<SegmentedWord> segment_all(std::span<const std::string> surfaces) const override {
    return external_segment(command_, train_, surfaces, seed_);
  }
  nlohmann::json to_json() const override { throw AdapterError("external models cannot be serialised"); }

 private:
  std::string command_;
  Corpus train_;
  std::uint64_t seed_;
};

}  // namespace

std::unique_ptr<Segmenter> train_segmenter(const SegmenterId& id, const Corpus& train, const ModelSettings& settings) {
  switch (id.kind) {
    case ModelKind::kCrf:
      return std::make_unique<CrfSegmenter>(train_crf(train, settings.feature_template, settings.train));
    case ModelKind::kUnigramViterbi:
      return std::make_unique<UnigramSegmenter>(train_unigram_viterbi(train, settings.unigram_smoothing));
    case ModelKind::kBoundaryLogistic:
      return std::make_unique<LogisticSegmenter>(
          train_boundary_logistic(train, settings.feature_template, settings.train));
    case ModelKind::kLongestMatch:
      return std::make_unique<LongestMatchSegmenter>(train_longest_match(train));
    case ModelKind::kExternal:
      if (train.empty()) throw ContractError("cannot train an external model on an empty corpus");
      return std::make_unique<ExternalSegmenter>(id.command, train, settings.train.seed);
  }
  throw ConfigError("unknown model kind");
}

std::unique_ptr<Segmenter> load_segmenter(const nlohmann::json& j) {
  const auto id = parse_segmenter_id(j.at("model").get<std::string>());
  const auto& p = j.at("params");
  switch (id.kind) {
    case ModelKind::kCrf:
      return std::make_unique<CrfSegmenter>(crf_model_from_json(p));
    case ModelKind::kUnigramViterbi:
      return std::make_unique<UnigramSegmenter>(unigram_model_from_json(p));
    case ModelKind::kBoundaryLogistic:
      return std::make_unique<LogisticSegmenter>(boundary_logistic_from_json(p));
    case ModelKind::kLongestMatch:
      return std::make_unique<LongestMatchSegmenter>(longest_match_from_json(p));
    case ModelKind::kExternal:
      break;
  }
  throw ConfigError("model '" + id.name() + "' cannot be loaded from JSON");
}

// ---- external adapter ----

std::string wire_input_line(std::string_view surface) {
  std::string out;
  for (const auto& c : graphemes(surface)) {
    if (!out.empty()) out += ' ';
    out += c;
  }
  return out;
}

void write_wire_train(std::ostream& out, const Corpus& train) {
  for (const auto& w : train.words()) {
    out << wire_input_line(w.surface()) << '\t';
    for (std::size_t i = 0; i < w.morphemes().size(); ++i) {
      if (i > 0) out << " ! ";
      out << wire_input_line(w.morphemes()[i]);
    }
    out << '\n';
  }
}

SegmentedWord parse_wire_output(std::string_view surface, std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
  std::vector<std::string> morphemes(1);
  std::istringstream tokens{std::string(line)};
  std::string tok;
  while (tokens >> tok) {
    if (tok == "!") {
      if (morphemes.back().empty()) throw AdapterError("misplaced boundary marker in output '" + std::string(line) + "'");
      morphemes.emplace_back();
    } else {
      morphemes.back() += tok;
    }
  }
  if (morphemes.back().empty()) throw AdapterError("malformed output line '" + std::string(line) + "'");
  std::string joined;
  for (const auto& m : morphemes) joined += m;
  if (joined != surface) {
    throw AdapterError("output '" + std::string(line) + "' does not spell input '" + std::string(surface) + "'");
  }
  try {
    return SegmentedWord(std::string(surface), std::move(morphemes));
  } catch (const ValidationError& e) {
    throw AdapterError(std::string("invalid segmentation from external model: ") + e.what());
  }
}

namespace {

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "morphsplit-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) throw AdapterError("cannot create a temporary directory");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

int run_shell(const std::string& command, const std::vector<std::string>& args, std::uint64_t seed,
              const std::filesystem::path& stderr_path) {
  std::vector<std::string> argv_s = {"sh", "-c", command + " \"$1\" \"$2\" \"$3\"", "morphsplit-external"};
  argv_s.insert(argv_s.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_s) argv.push_back(a.data());
  argv.push_back(nullptr);

  std::vector<std::string> env_s;
  for (char** e = environ; *e; ++e) {
    if (std::string_view(*e).substr(0, 16) != "MORPHSPLIT_SEED=") env_s.emplace_back(*e);
  }
  env_s.push_back("MORPHSPLIT_SEED=" + std::to_string(seed));
  std::vector<char*> envp;
  for (auto& e : env_s) envp.push_back(e.data());
  envp.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, 0, "/dev/null", O_RDONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 1, "/dev/null", O_WRONLY, 0);
  posix_spawn_file_actions_addopen(&actions, 2, stderr_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  pid_t pid;
  const int rc = posix_spawnp(&pid, "sh", &actions, nullptr, argv.data(), envp.data());
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw AdapterError("cannot start external model: " + std::string(std::strerror(rc)));
  int status = 0;
  while (waitpid(pid, &status, 0) < 0) {
    if (errno != EINTR) throw AdapterError("waitpid failed");
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace

std::vector<SegmentedWord> external_segment(const std::string& command, const Corpus& train,
                                            std::span<const std::string> input_words, std::uint64_t seed) {
  if (command.empty()) throw ConfigError("external model command is empty");
  TempDir dir;
  const auto train_path = dir.path() / "train.txt";
  const auto input_path = dir.path() / "input.txt";
  const auto output_path = dir.path() / "output.txt";
  const auto stderr_path = dir.path() / "stderr.txt";
  {
    std::ofstream out(train_path, std::ios::binary);
    write_wire_train(out, train);
  }
  {
    std::ofstream out(input_path, std::ios::binary);
    for (const auto& w : input_words) out << wire_input_line(w) << '\n';
  }
  const int code = run_shell(command, {train_path.string(), input_path.string(), output_path.string()}, seed,
                             stderr_path);
  const std::string diagnostics = read_file(stderr_path);
  auto fail = [&](const std::string& what) -> AdapterError {
    std::string msg = "external model '" + command + "': " + what;
    if (!diagnostics.empty()) msg += "\nstderr:\n" + diagnostics;
    return AdapterError(msg);
  };
  if (code != 0) throw fail("exited with status " + std::to_string(code));
  if (!std::filesystem::exists(output_path)) throw fail("produced no output file");

  std::ifstream in(output_path, std::ios::binary);
  std::vector<SegmentedWord> out;
  std::string line;
  while (out.size() < input_words.size() && std::getline(in, line)) {
    try {
      out.push_back(parse_wire_output(input_words[out.size()], line));
    } catch (const AdapterError& e) {
      throw fail("line " + std::to_string(out.size() + 1) + ": " + e.what());
    }
  }
  if (out.size() != input_words.size()) {
    throw fail("returned " + std::to_string(out.size()) + " lines for " + std::to_string(input_words.size()) +
               " inputs");
  }
  while (std::getline(in, line)) {
    if (!line.empty() && line != "\r") throw fail("returned more lines than inputs");
  }
  return out;
}

}  // namespace morphsplit
