#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace trainperf {

/// An exact value of the form  a + sum_p c_p * log2(p)  with integer a, c_p and
/// p ranging over odd primes. The logarithms of distinct primes are linearly
/// independent over the rationals, so equality on this representation is
/// mathematical equality. Every analytical feature is such a value.
///
/// Arithmetic is overflow-checked and throws std::overflow_error.
class ExactCount {
 public:
  ExactCount() = default;
  ExactCount(std::int64_t integral) : integral_(integral) {}  // NOLINT(implicit)

  /// log2(x) for x >= 1, with powers of two folded into the integral part.
  static ExactCount log2_of(std::int64_t x);

  std::int64_t integral_part() const noexcept { return integral_; }
  /// (odd prime, coefficient) pairs, sorted by prime, no zero coefficients.
  const std::vector<std::pair<std::int64_t, std::int64_t>>& log2_terms() const noexcept {
    return terms_;
  }
  bool is_integral() const noexcept { return terms_.empty(); }

  /// Evaluated in long double, terms accumulated in prime order.
  double to_double() const;
  std::string to_string() const;

  ExactCount& operator+=(const ExactCount& rhs);
  ExactCount& operator*=(std::int64_t k);

  friend ExactCount operator+(ExactCount lhs, const ExactCount& rhs) { return lhs += rhs; }
  friend ExactCount operator*(ExactCount lhs, std::int64_t k) { return lhs *= k; }
  friend ExactCount operator*(std::int64_t k, ExactCount rhs) { return rhs *= k; }
  friend bool operator==(const ExactCount&, const ExactCount&) = default;

 private:
  std::int64_t integral_ = 0;
  std::vector<std::pair<std::int64_t, std::int64_t>> terms_;
};

std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);

}  // namespace trainperf
