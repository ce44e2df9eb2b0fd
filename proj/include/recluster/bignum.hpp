#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace recluster {

/// Arbitrary-precision unsigned integer, just large enough for exact
/// partition counts. Limbs are base 1e9 so printing is a straight dump.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(std::uint64_t v) {
    limbs_.clear();
    do {
      limbs_.push_back(static_cast<std::uint32_t>(v % kBase));
      v /= kBase;
    } while (v != 0);
  }

  static BigUint one() { return BigUint(1); }

  bool is_zero() const { return limbs_.size() == 1 && limbs_[0] == 0; }

  BigUint& mul_small(std::uint32_t m) {
    std::uint64_t carry = 0;
    for (auto& limb : limbs_) {
      std::uint64_t cur = static_cast<std::uint64_t>(limb) * m + carry;
      limb = static_cast<std::uint32_t>(cur % kBase);
      carry = cur / kBase;
    }
    while (carry != 0) {
      limbs_.push_back(static_cast<std::uint32_t>(carry % kBase));
      carry /= kBase;
    }
    return *this;
  }

  BigUint& mul_pow(std::uint32_t p, int exponent) {
    for (int e = 0; e < exponent; ++e) mul_small(p);
    return *this;
  }

  int compare(const BigUint& other) const {
    if (limbs_.size() != other.limbs_.size())
      return limbs_.size() < other.limbs_.size() ? -1 : 1;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
      if (limbs_[i] != other.limbs_[i]) return limbs_[i] < other.limbs_[i] ? -1 : 1;
    }
    return 0;
  }

  bool operator==(const BigUint& o) const { return compare(o) == 0; }
  bool operator<(const BigUint& o) const { return compare(o) < 0; }
  bool operator<=(const BigUint& o) const { return compare(o) <= 0; }

  bool fits_u64() const {
    static const BigUint max_u64{std::numeric_limits<std::uint64_t>::max()};
    return compare(max_u64) <= 0;
  }

  std::uint64_t to_u64() const {
    if (!fits_u64()) throw std::overflow_error("BigUint does not fit in 64 bits");
    std::uint64_t v = 0;
    for (std::size_t i = limbs_.size(); i-- > 0;) v = v * kBase + limbs_[i];
    return v;
  }

  /// Saturates to +inf when the value exceeds double range.
  double to_double() const {
    double v = 0.0;
    for (std::size_t i = limbs_.size(); i-- > 0;) {
      v = v * static_cast<double>(kBase) + static_cast<double>(limbs_[i]);
      if (std::isinf(v)) return std::numeric_limits<double>::infinity();
    }
    return v;
  }

  double log2_approx() const {
    if (is_zero()) return -std::numeric_limits<double>::infinity();
    const double log2_base = std::log2(static_cast<double>(kBase));
    double head = static_cast<double>(limbs_.back());
    if (limbs_.size() >= 2) head = head * kBase + limbs_[limbs_.size() - 2];
    double head_limbs = limbs_.size() >= 2 ? 2.0 : 1.0;
    return std::log2(head) + (static_cast<double>(limbs_.size()) - head_limbs) * log2_base;
  }

  std::string to_string() const {
    std::string out = std::to_string(limbs_.back());
    for (std::size_t i = limbs_.size() - 1; i-- > 0;) {
      std::string part = std::to_string(limbs_[i]);
      out += std::string(9 - part.size(), '0') + part;
    }
    return out;
  }

 private:
  static constexpr std::uint64_t kBase = 1000000000ull;
  std::vector<std::uint32_t> limbs_;  // little-endian
};

}  // namespace recluster
