#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cotrl {

/// Exact rational with a normalized int64 numerator/denominator.
///
/// Arithmetic reports overflow and division by zero through std::nullopt,
/// so formula evaluation never silently wraps.
class Rational {
 public:
  constexpr Rational() = default;
  constexpr Rational(std::int64_t value) : num_(value), den_(1) {}  // NOLINT: implicit from integers
  /// Requires den != 0.
  static Rational of(std::int64_t num, std::int64_t den);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_zero() const { return num_ == 0; }

  static std::optional<Rational> add(const Rational& a, const Rational& b);
  static std::optional<Rational> sub(const Rational& a, const Rational& b);
  static std::optional<Rational> mul(const Rational& a, const Rational& b);
  static std::optional<Rational> div(const Rational& a, const Rational& b);

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string to_string() const;

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  struct Raw {};
  constexpr Rational(std::int64_t num, std::int64_t den, Raw) : num_(num), den_(den) {}
  friend struct RationalAccess;

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace cotrl
