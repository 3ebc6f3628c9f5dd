#include "morphsplit/features.hpp"

#include <algorithm>

#include "morphsplit/error.hpp"
#include "morphsplit/unicode.hpp"

namespace morphsplit {

void FeatureTemplate::validate() const {
  if (max_ngram < 1) throw ConfigError("max_ngram must be >= 1");
  if (window < 0) throw ConfigError("window must be >= 0");
}

nlohmann::json to_json(const FeatureTemplate& t) {
  return {{"max_ngram", t.max_ngram}, {"window", t.window}, {"include_position_flags", t.include_position_flags}};
}

FeatureTemplate feature_template_from_json(const nlohmann::json& j) {
  FeatureTemplate t;
  t.max_ngram = j.at("max_ngram").get<int>();
  t.window = j.at("window").get<int>();
  t.include_position_flags = j.at("include_position_flags").get<bool>();
  t.validate();
  return t;
}

std::vector<std::string> extract_features(std::span<const std::string> clusters, std::size_t position,
                                          const FeatureTemplate& tmpl) {
  if (position >= clusters.size()) {
    throw ContractError("feature position " + std::to_string(position) + " outside word of length " +
                        std::to_string(clusters.size()));
  }
  const auto len = static_cast<long>(clusters.size());
  const auto pos = static_cast<long>(position);
  const long lo = std::max(0L, pos - tmpl.window);
  const long hi = std::min(len - 1, pos + tmpl.window);  // inclusive

  std::vector<std::string> out;
  for (long n = 1; n <= tmpl.max_ngram; ++n) {
    for (long start = lo; start + n - 1 <= hi; ++start) {
      const long offset = start - pos;
      std::string f = std::to_string(n) + "g" + (offset >= 0 ? "+" : "") + std::to_string(offset) + "=";
      for (long k = start; k < start + n; ++k) f += clusters[static_cast<std::size_t>(k)];
      out.push_back(std::move(f));
    }
  }
  if (tmpl.include_position_flags) {
    if (pos == 0) out.emplace_back("BOW");
    if (pos == len - 1) out.emplace_back("EOW");
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<std::string> extract_features(std::string_view surface, std::size_t position, const FeatureTemplate& tmpl) {
  const auto clusters = graphemes(surface);
  return extract_features(clusters, position, tmpl);
}

std::uint32_t FeatureIndex::add(const std::string& feature) {
  auto [it, inserted] = ids_.try_emplace(feature, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(feature);
  return it->second;
}

std::optional<std::uint32_t> FeatureIndex::find(const std::string& feature) const {
  auto it = ids_.find(feature);
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

FeatureIndex FeatureIndex::from_names(std::vector<std::string> names) {
  FeatureIndex idx;
  for (auto& n : names) {
    if (!idx.ids_.try_emplace(n, static_cast<std::uint32_t>(idx.names_.size())).second) {
      throw ContractError("duplicate feature name '" + n + "'");
    }
    idx.names_.push_back(std::move(n));
  }
  return idx;
}

}  // namespace morphsplit
