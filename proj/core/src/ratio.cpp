#include "morphsplit/ratio.hpp"

#include <charconv>
#include <cstdio>
#include <numeric>

#include "morphsplit/error.hpp"

namespace morphsplit {
namespace {

std::int64_t parse_int(std::string_view s, std::string_view whole) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("cannot parse number '" + std::string(whole) + "'");
  }
  return v;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num < 0) throw ContractError("rational needs num >= 0 and den > 0");
  const std::int64_t g = std::gcd(num, den);
  num_ = num / (g ? g : 1);
  den_ = den / (g ? g : 1);
}

Rational Rational::parse(std::string_view text) {
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    return Rational(parse_int(text.substr(0, slash), text), parse_int(text.substr(slash + 1), text));
  }
  if (auto dot = text.find('.'); dot != std::string_view::npos) {
    const std::string_view frac = text.substr(dot + 1);
    if (frac.size() > 12) throw ConfigError("too many decimals in '" + std::string(text) + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    const std::string_view whole = text.substr(0, dot);
    const std::int64_t w = whole.empty() ? 0 : parse_int(whole, text);
    const std::int64_t f = frac.empty() ? 0 : parse_int(frac, text);
    return Rational(w * den + f, den);
  }
  return Rational(parse_int(text, text), 1);
}

std::string Rational::decimal() const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value());
  return buf;
}

SplitRatio::SplitRatio(std::int64_t a, std::int64_t b) {
  if (a <= 0 || b <= 0) throw ContractError("split ratio parts must be positive");
  const std::int64_t g = std::gcd(a, b);
  a_ = a / g;
  b_ = b / g;
}

SplitRatio SplitRatio::from_share(const Rational& share) {
  if (share.num() <= 0 || share.num() >= share.den()) {
    throw ContractError("share must lie strictly between 0 and 1");
  }
  return SplitRatio(share.den() - share.num(), share.num());
}

SplitRatio SplitRatio::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw ConfigError("split ratio must look like '9:1', got '" + std::string(text) + "'");
  return SplitRatio(parse_int(text.substr(0, colon), text), parse_int(text.substr(colon + 1), text));
}

std::size_t SplitRatio::side_b_size(std::size_t n) const {
  const auto total = static_cast<unsigned __int128>(a_ + b_);
  const auto num = 2 * static_cast<unsigned __int128>(n) * static_cast<unsigned __int128>(b_) + total;
  return static_cast<std::size_t>(num / (2 * total));
}

std::string SplitRatio::to_string() const { return std::to_string(a_) + ":" + std::to_string(b_); }

}  // namespace morphsplit
