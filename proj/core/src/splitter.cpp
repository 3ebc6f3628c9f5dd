#include "morphsplit/splitter.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>

#include "morphsplit/error.hpp"
#include "morphsplit/random.hpp"

namespace morphsplit {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kRandom: return "random";
    case Strategy::kAdversarial: return "adversarial";
    case Strategy::kHeuristic: return "heuristic";
  }
  return "?";
}

std::string_view to_string(Stage s) {
  return s == Stage::kNewTestCarving ? "new_test_carving" : "residual_split";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "random") return Strategy::kRandom;
  if (text == "adversarial") return Strategy::kAdversarial;
  if (text == "heuristic") return Strategy::kHeuristic;
  throw ConfigError("unknown split strategy '" + std::string(text) + "'");
}

Stage parse_stage(std::string_view text) {
  if (text == "new_test_carving") return Stage::kNewTestCarving;
  if (text == "residual_split") return Stage::kResidualSplit;
  throw ConfigError("unknown split stage '" + std::string(text) + "'");
}

double MorphemeDistribution::probability(std::string_view morpheme) const {
  auto it = std::lower_bound(support.begin(), support.end(), morpheme);
  if (it == support.end() || *it != morpheme) return 0.0;
  return probabilities[static_cast<std::size_t>(it - support.begin())];
}

namespace {

std::vector<std::size_t> all_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

std::vector<std::size_t> resolve_parent(const Corpus& corpus, std::span<const std::size_t> parent) {
  if (parent.empty()) return all_indices(corpus.size());
  std::vector<std::size_t> v(parent.begin(), parent.end());
  for (std::size_t i : v) {
    if (i >= corpus.size()) throw ContractError("parent index " + std::to_string(i) + " out of range");
  }
  return v;
}

MorphemeDistribution distribution_of(const std::map<std::string_view, std::size_t>& counts, std::size_t total) {
  MorphemeDistribution d;
  d.support.reserve(counts.size());
  d.probabilities.reserve(counts.size());
  for (const auto& [m, c] : counts) {
    d.support.emplace_back(m);
    d.probabilities.push_back(static_cast<double>(c) / static_cast<double>(total));
  }
  return d;
}

// Morphemes of the parent words mapped to dense ids.
struct MorphemeTable {
  std::vector<std::vector<std::uint32_t>> word_morphemes;  // parallel to parent
  std::vector<std::uint32_t> signature;                    // equal iff same multiset
  std::size_t vocabulary = 0;

  MorphemeTable(const Corpus& corpus, std::span<const std::size_t> parent) {
    std::unordered_map<std::string_view, std::uint32_t> ids;
    std::map<std::vector<std::uint32_t>, std::uint32_t> signatures;
    word_morphemes.reserve(parent.size());
    signature.reserve(parent.size());
    for (std::size_t idx : parent) {
      std::vector<std::uint32_t> ms;
      for (const auto& m : corpus[idx].morphemes()) {
        auto [it, inserted] = ids.try_emplace(m, static_cast<std::uint32_t>(ids.size()));
        ms.push_back(it->second);
      }
      std::vector<std::uint32_t> sorted = ms;
      std::sort(sorted.begin(), sorted.end());
      auto [sit, _] = signatures.try_emplace(std::move(sorted), static_cast<std::uint32_t>(signatures.size()));
      signature.push_back(sit->second);
      word_morphemes.push_back(std::move(ms));
    }
    vocabulary = ids.size();
  }
};

SplitManifest make_manifest(const Corpus& corpus, Strategy strategy, Stage stage, std::uint64_t seed,
                            std::vector<std::size_t> a, std::vector<std::size_t> b, const SplitRatio& ratio,
                            std::uint64_t budget_used) {
  SplitManifest m;
  m.strategy = strategy;
  m.stage = stage;
  m.seed = seed;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  m.achieved_distance = distribution_distance(morpheme_distribution(corpus, a), morpheme_distribution(corpus, b));
  m.indices_a = std::move(a);
  m.indices_b = std::move(b);
  m.target_ratio = ratio;
  m.budget_used = budget_used;
  return m;
}

// Parent positions shuffled and cut at the target size: [0, cut) is side b.
struct RandomCut {
  std::vector<std::size_t> order;  // positions into the parent
  std::size_t cut = 0;
};

RandomCut random_cut(std::size_t n, const SplitRatio& ratio, std::uint64_t seed) {
  if (n < 2) throw SplitError("cannot split fewer than two words");
  const std::size_t nb = ratio.side_b_size(n);
  if (nb == 0 || nb >= n) {
    throw SplitError("ratio " + ratio.to_string() + " leaves an empty side for " + std::to_string(n) + " words");
  }
  RandomCut rc{all_indices(n), nb};
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(rc.order));
  return rc;
}

double total_variation(std::span<const double> ca, std::span<const double> cb, double ta, double tb) {
  double sum = 0.0;
  for (std::size_t m = 0; m < ca.size(); ++m) sum += std::abs(ca[m] / ta - cb[m] / tb);
  return 0.5 * sum;
}

}  // namespace

MorphemeDistribution morpheme_distribution(const Corpus& corpus) {
  return morpheme_distribution(corpus, all_indices(corpus.size()));
}

MorphemeDistribution morpheme_distribution(const Corpus& corpus, std::span<const std::size_t> indices) {
  if (indices.empty()) throw DomainError("morpheme distribution of an empty slice");
  std::map<std::string_view, std::size_t> counts;
  std::size_t total = 0;
  for (std::size_t i : indices) {
    if (i >= corpus.size()) throw ContractError("corpus index " + std::to_string(i) + " out of range");
    for (const auto& m : corpus[i].morphemes()) {
      ++counts[m];
      ++total;
    }
  }
  return distribution_of(counts, total);
}

double distribution_distance(const MorphemeDistribution& p, const MorphemeDistribution& q) {
  // Merge walk over the two sorted supports.
  double sum = 0.0;
  std::size_t i = 0, j = 0;
  while (i < p.support.size() || j < q.support.size()) {
    if (j == q.support.size() || (i < p.support.size() && p.support[i] < q.support[j])) {
      sum += p.probabilities[i++];
    } else if (i == p.support.size() || q.support[j] < p.support[i]) {
      sum += q.probabilities[j++];
    } else {
      sum += std::abs(p.probabilities[i++] - q.probabilities[j++]);
    }
  }
  return std::clamp(0.5 * sum, 0.0, 1.0);
}

nlohmann::json to_json(const SplitManifest& m) {
  return nlohmann::json{{"strategy", to_string(m.strategy)},
                        {"stage", to_string(m.stage)},
                        {"seed", m.seed},
                        {"indices_a", m.indices_a},
                        {"indices_b", m.indices_b},
                        {"target_ratio", m.target_ratio.to_string()},
                        {"achieved_distance", m.achieved_distance},
                        {"budget_used", m.budget_used}};
}

SplitManifest manifest_from_json(const nlohmann::json& j) {
  SplitManifest m;
  m.strategy = parse_strategy(j.at("strategy").get<std::string>());
  m.stage = parse_stage(j.at("stage").get<std::string>());
  m.seed = j.at("seed").get<std::uint64_t>();
  m.indices_a = j.at("indices_a").get<std::vector<std::size_t>>();
  m.indices_b = j.at("indices_b").get<std::vector<std::size_t>>();
  m.target_ratio = SplitRatio::parse(j.at("target_ratio").get<std::string>());
  m.achieved_distance = j.at("achieved_distance").get<double>();
  m.budget_used = j.at("budget_used").get<std::uint64_t>();
  return m;
}

SplitManifest random_split(const Corpus& corpus, const SplitRatio& ratio, std::uint64_t seed,
                           std::span<const std::size_t> parent, Stage stage) {
  const auto members = resolve_parent(corpus, parent);
  const RandomCut rc = random_cut(members.size(), ratio, seed);
  std::vector<std::size_t> a, b;
  for (std::size_t k = 0; k < rc.order.size(); ++k) {
    (k < rc.cut ? b : a).push_back(members[rc.order[k]]);
  }
  return make_manifest(corpus, Strategy::kRandom, stage, seed, std::move(a), std::move(b), ratio, 0);
}

namespace {

// First-improvement single-pair swap search over a fixed parent.
class SwapClimber {
 public:
  explicit SwapClimber(const MorphemeTable& table) : table_(table), delta_(table.vocabulary, 0.0) {}

  struct Result {
    double distance = 0.0;
    std::uint64_t used = 0;
  };

  // Climbs in place from the partition (side_a, side_b) of table positions.
  Result climb(std::vector<std::size_t>& side_a, std::vector<std::size_t>& side_b, std::uint64_t budget) {
    ca_.assign(table_.vocabulary, 0.0);
    cb_.assign(table_.vocabulary, 0.0);
    double ta = 0.0, tb = 0.0;
    for (std::size_t p : side_a) {
      for (auto m : table_.word_morphemes[p]) ca_[m] += 1.0;
      ta += static_cast<double>(table_.word_morphemes[p].size());
    }
    for (std::size_t p : side_b) {
      for (auto m : table_.word_morphemes[p]) cb_[m] += 1.0;
      tb += static_cast<double>(table_.word_morphemes[p].size());
    }
    Result r{total_variation(ca_, cb_, ta, tb), 0};

    const std::size_t na = side_a.size(), nb = side_b.size();
    const std::size_t neighbourhood = na * nb;
    std::size_t since_improvement = 0;
    std::size_t i = 0, j = 0;
    constexpr double kMinGain = 1e-12;
    while (since_improvement < neighbourhood && r.used < budget) {
      const std::size_t x = side_a[i], y = side_b[j];
      ++since_improvement;
      if (table_.signature[x] != table_.signature[y]) {
        ++r.used;
        const double lx = static_cast<double>(table_.word_morphemes[x].size());
        const double ly = static_cast<double>(table_.word_morphemes[y].size());
        const double ta2 = ta - lx + ly, tb2 = tb + lx - ly;
        const double candidate = ta2 == ta ? r.distance + same_total_change(x, y, ta, tb)
                                           : swapped_distance(x, y, ta2, tb2);
        if (candidate > r.distance + kMinGain) {
          apply(x, y, 1.0);
          ta = ta2;
          tb = tb2;
          r.distance = total_variation(ca_, cb_, ta, tb);
          std::swap(side_a[i], side_b[j]);
          since_improvement = 0;
        }
      }
      if (++j == nb) {
        j = 0;
        if (++i == na) i = 0;
      }
    }
    return r;
  }

 private:
  void apply(std::size_t x, std::size_t y, double sign) {
    for (auto m : table_.word_morphemes[x]) ca_[m] -= sign, cb_[m] += sign;
    for (auto m : table_.word_morphemes[y]) ca_[m] += sign, cb_[m] -= sign;
  }

  // Totals unchanged: only morphemes of x and y move.
  double same_total_change(std::size_t x, std::size_t y, double ta, double tb) {
    touched_.clear();
    for (auto m : table_.word_morphemes[x]) {
      if (std::find(touched_.begin(), touched_.end(), m) == touched_.end()) touched_.push_back(m);
      delta_[m] -= 1.0;
    }
    for (auto m : table_.word_morphemes[y]) {
      if (std::find(touched_.begin(), touched_.end(), m) == touched_.end()) touched_.push_back(m);
      delta_[m] += 1.0;
    }
    double change = 0.0;
    for (auto m : touched_) {
      change += std::abs((ca_[m] + delta_[m]) / ta - (cb_[m] - delta_[m]) / tb) - std::abs(ca_[m] / ta - cb_[m] / tb);
      delta_[m] = 0.0;
    }
    return 0.5 * change;
  }

  // Totals change, so every term moves.
  double swapped_distance(std::size_t x, std::size_t y, double ta2, double tb2) {
    apply(x, y, 1.0);
    const double d = total_variation(ca_, cb_, ta2, tb2);
    apply(x, y, -1.0);
    return d;
  }

  const MorphemeTable& table_;
  std::vector<double> ca_, cb_, delta_;
  std::vector<std::uint32_t> touched_;
};

}  // namespace

SplitManifest adversarial_split(const Corpus& corpus, const SplitRatio& ratio, std::uint64_t seed,
                                std::uint64_t budget, std::span<const std::size_t> parent, Stage stage) {
  const auto members = resolve_parent(corpus, parent);
  const MorphemeTable table(corpus, members);
  SwapClimber climber(table);

  auto start = [&](std::uint64_t s, std::vector<std::size_t>& a, std::vector<std::size_t>& b) {
    const RandomCut rc = random_cut(members.size(), ratio, s);
    b.assign(rc.order.begin(), rc.order.begin() + static_cast<std::ptrdiff_t>(rc.cut));
    a.assign(rc.order.begin() + static_cast<std::ptrdiff_t>(rc.cut), rc.order.end());
  };

  std::vector<std::size_t> best_a, best_b;
  start(seed, best_a, best_b);
  auto first = climber.climb(best_a, best_b, budget);
  double best = first.distance;
  std::uint64_t used = first.used;

  // Further climbs from fresh random partitions while budget remains; a
  // restart only replaces the incumbent on strict improvement.
  for (std::size_t r = 1; r < kAdversarialRestarts && used < budget && best < 1.0 - 1e-12; ++r) {
    std::vector<std::size_t> a, b;
    start(derive_seed(seed, {r}), a, b);
    const auto result = climber.climb(a, b, budget - used);
    used += result.used;
    if (result.distance > best + 1e-12) {
      best = result.distance;
      best_a = std::move(a);
      best_b = std::move(b);
    }
  }

  std::vector<std::size_t> a, b;
  for (std::size_t p : best_a) a.push_back(members[p]);
  for (std::size_t p : best_b) b.push_back(members[p]);
  return make_manifest(corpus, Strategy::kAdversarial, stage, seed, std::move(a), std::move(b), ratio, used);
}

HeuristicOutcome heuristic_split(const Corpus& corpus, const SplitRatio& ratio, const Rational& tolerance,
                                 std::span<const std::size_t> parent, Stage stage) {
  const auto members = resolve_parent(corpus, parent);
  if (members.size() < 2) throw SplitError("cannot split fewer than two words");
  std::vector<std::size_t> counts;
  counts.reserve(members.size());
  for (std::size_t idx : members) counts.push_back(corpus[idx].morpheme_count());
  std::vector<std::size_t> thresholds = counts;
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  // Compare |nb/n - b/(a+b)| <= tol exactly: |nb*(a+b) - b*n| * den <= num * n*(a+b).
  const auto n = static_cast<__int128>(members.size());
  const auto parts = static_cast<__int128>(ratio.a() + ratio.b());
  HeuristicOutcome out;
  std::optional<__int128> best_dev;
  for (std::size_t t : thresholds) {
    __int128 nb = 0;
    for (std::size_t c : counts) nb += c >= t ? 1 : 0;
    if (nb == 0 || nb == n) continue;
    __int128 dev = nb * parts - static_cast<__int128>(ratio.b()) * n;
    if (dev < 0) dev = -dev;
    if (dev * tolerance.den() > static_cast<__int128>(tolerance.num()) * n * parts) continue;
    if (!best_dev || dev < *best_dev) {
      best_dev = dev;
      out.threshold = t;
    }
  }
  if (!best_dev) return out;

  std::vector<std::size_t> a, b;
  for (std::size_t k = 0; k < members.size(); ++k) (counts[k] >= out.threshold ? b : a).push_back(members[k]);
  out.achieved_share = static_cast<double>(b.size()) / static_cast<double>(members.size());
  out.manifest = make_manifest(corpus, Strategy::kHeuristic, stage, 0, std::move(a), std::move(b), ratio, 0);
  return out;
}

}  // namespace morphsplit
