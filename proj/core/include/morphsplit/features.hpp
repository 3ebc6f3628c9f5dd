#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace morphsplit {

struct FeatureTemplate {
  int max_ngram = 3;
  int window = 2;  // radius in grapheme clusters
  bool include_position_flags = true;

  void validate() const;
  friend bool operator==(const FeatureTemplate&, const FeatureTemplate&) = default;
};

nlohmann::json to_json(const FeatureTemplate& t);
FeatureTemplate feature_template_from_json(const nlohmann::json& j);

// Character n-gram features for one position, sorted and unique. Every
// n-gram (1..max_ngram) lying entirely inside both the word and the window
// [position - window, position + window] is named "<n>g<offset>=<text>",
// offset being the n-gram start relative to `position` ("1g+0=a",
// "2g-1=ba"). "BOW" / "EOW" mark the first / last cluster when position
// flags are on. Throws ContractError when position is out of range.
std::vector<std::string> extract_features(std::span<const std::string> clusters, std::size_t position,
                                          const FeatureTemplate& tmpl);
std::vector<std::string> extract_features(std::string_view surface, std::size_t position, const FeatureTemplate& tmpl);

// Dense ids for feature strings, assigned in first-seen order.
class FeatureIndex {
 public:
  std::uint32_t add(const std::string& feature);
  std::optional<std::uint32_t> find(const std::string& feature) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  static FeatureIndex from_names(std::vector<std::string> names);

  friend bool operator==(const FeatureIndex& a, const FeatureIndex& b) { return a.names_ == b.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> ids_;
};

}  // namespace morphsplit
