#include "trainperf/exact_count.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace trainperf {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_add_overflow(a, b, &out)) throw std::overflow_error("feature count overflows int64");
  return out;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t out = 0;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("feature count overflows int64");
  return out;
}

ExactCount ExactCount::log2_of(std::int64_t x) {
  if (x < 1) throw std::domain_error("log2 of non-positive value");
  ExactCount out;
  while (x % 2 == 0) {
    x /= 2;
    ++out.integral_;
  }
  for (std::int64_t p = 3; p * p <= x; p += 2) {
    std::int64_t e = 0;
    while (x % p == 0) {
      x /= p;
      ++e;
    }
    if (e != 0) out.terms_.emplace_back(p, e);
  }
  if (x > 1) out.terms_.emplace_back(x, 1);
  return out;
}

ExactCount& ExactCount::operator+=(const ExactCount& rhs) {
  integral_ = checked_add(integral_, rhs.integral_);
  if (rhs.terms_.empty()) return *this;
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  merged.reserve(terms_.size() + rhs.terms_.size());
  auto a = terms_.begin();
  auto b = rhs.terms_.begin();
  while (a != terms_.end() || b != rhs.terms_.end()) {
    if (b == rhs.terms_.end() || (a != terms_.end() && a->first < b->first)) {
      merged.push_back(*a++);
    } else if (a == terms_.end() || b->first < a->first) {
      merged.push_back(*b++);
    } else {
      std::int64_t c = checked_add(a->second, b->second);
      if (c != 0) merged.emplace_back(a->first, c);
      ++a;
      ++b;
    }
  }
  terms_ = std::move(merged);
  return *this;
}

ExactCount& ExactCount::operator*=(std::int64_t k) {
  if (k == 0) {
    integral_ = 0;
    terms_.clear();
    return *this;
  }
  integral_ = checked_mul(integral_, k);
  for (auto& [p, c] : terms_) c = checked_mul(c, k);
  return *this;
}

double ExactCount::to_double() const {
  long double acc = static_cast<long double>(integral_);
  for (const auto& [p, c] : terms_) {
    acc += static_cast<long double>(c) * std::log2(static_cast<long double>(p));
  }
  return static_cast<double>(acc);
}

std::string ExactCount::to_string() const {
  std::ostringstream os;
  os << integral_;
  for (const auto& [p, c] : terms_) os << " + " << c << "*log2(" << p << ")";
  return os.str();
}

}  // namespace trainperf
