#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace morphsplit {

// Exact non-negative rational, kept in lowest terms with den > 0.
class Rational {
 public:
  Rational() = default;
  Rational(std::int64_t num, std::int64_t den);

  // Accepts "3/10", "0.3", or an integer.
  static Rational parse(std::string_view text);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  // Fixed two-decimal rendering used in cell ids and CSV rows ("0.10").
  std::string decimal() const;

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Split ratio a:b between side a and side b (e.g. train:eval = 9:1).
class SplitRatio {
 public:
  SplitRatio() = default;
  SplitRatio(std::int64_t a, std::int64_t b);

  // Ratio whose side-b share equals `share` (0.3 -> 7:3).
  static SplitRatio from_share(const Rational& share);
  // Parses "9:1".
  static SplitRatio parse(std::string_view text);

  std::int64_t a() const { return a_; }
  std::int64_t b() const { return b_; }
  double share_b() const { return static_cast<double>(b_) / static_cast<double>(a_ + b_); }

  // round(share_b * n), halves rounded up, in exact integer arithmetic.
  std::size_t side_b_size(std::size_t n) const;

  std::string to_string() const;

  friend bool operator==(const SplitRatio&, const SplitRatio&) = default;

 private:
  std::int64_t a_ = 9;
  std::int64_t b_ = 1;
};

}  // namespace morphsplit
