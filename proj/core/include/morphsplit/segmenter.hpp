#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphsplit/corpus.hpp"
#include "morphsplit/features.hpp"
#include "morphsplit/optimizer.hpp"

namespace morphsplit {

enum class ModelKind { kCrf, kUnigramViterbi, kBoundaryLogistic, kLongestMatch, kExternal };

struct SegmenterId {
  ModelKind kind = ModelKind::kCrf;
  std::string command;  // external only, non-empty

  static SegmenterId builtin(ModelKind kind);
  static SegmenterId external(std::string command);

  // "crf", "unigram_viterbi", "boundary_logistic", "longest_match" or
  // "external:<command>".
  std::string name() const;
  bool deterministic() const { return kind != ModelKind::kExternal; }

  friend bool operator==(const SegmenterId&, const SegmenterId&) = default;
  friend auto operator<=>(const SegmenterId& a, const SegmenterId& b) { return a.name() <=> b.name(); }
};

// Throws ConfigError on an unknown name or an empty external command.
SegmenterId parse_segmenter_id(std::string_view text);

// The four built-in models in their canonical order.
std::vector<SegmenterId> builtin_segmenters();

struct ModelSettings {
  FeatureTemplate feature_template;
  TrainConfig train;
  double unigram_smoothing = 0.1;

  friend bool operator==(const ModelSettings&, const ModelSettings&) = default;
};

nlohmann::json to_json(const ModelSettings& s);
ModelSettings model_settings_from_json(const nlohmann::json& j);

// A trained model. Immutable; segment() may be called concurrently.
class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual SegmenterId id() const = 0;
  virtual SegmentedWord segment(std::string_view surface) const = 0;
  virtual std::vector<SegmentedWord> segment_all(std::span<const std::string> surfaces) const;
  // {"model": name, "params": ...}; external models cannot be serialised.
  virtual nlohmann::json to_json() const = 0;
};

std::unique_ptr<Segmenter> train_segmenter(const SegmenterId& id, const Corpus& train, const ModelSettings& settings);
std::unique_ptr<Segmenter> load_segmenter(const nlohmann::json& j);

// Writes `train` in the adapter wire format.
void write_wire_train(std::ostream& out, const Corpus& train);
// Space-separated clusters of `surface`.
std::string wire_input_line(std::string_view surface);
// Parses one "!"-annotated output line for `surface`. Throws AdapterError
// when the line is malformed or does not spell the surface.
SegmentedWord parse_wire_output(std::string_view surface, std::string_view line);

// Runs `sh -c '<command> "$1" "$2" "$3"'` with the train, input and output
// file paths, MORPHSPLIT_SEED set to `seed`, and reads one segmentation per
// input word. Throws AdapterError with captured stderr on failure.
std::vector<SegmentedWord> external_segment(const std::string& command, const Corpus& train,
                                            std::span<const std::string> input_words, std::uint64_t seed = 0);

}  // namespace morphsplit
