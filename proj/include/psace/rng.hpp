#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <string_view>

namespace psace {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace detail

/// Seedable, splittable stream (xoshiro256** core). A child stream depends
/// only on the parent's key and the child label, never on how many numbers
/// the parent has produced, so (master seed, label path) fixes a stream.
class RngStream {
 public:
  using result_type = std::uint64_t;

  static RngStream from_seed(std::uint64_t seed) { return RngStream(seed, "root"); }

  RngStream split(std::string_view label) const {
    std::uint64_t mix = key_ ^ detail::fnv1a(label);
    const std::uint64_t child = detail::splitmix64(mix);
    return RngStream(child, label_ + "/" + std::string(label));
  }

  RngStream split(std::uint64_t index) const { return split("#" + std::to_string(index)); }

  result_type operator()() {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  const std::string& label() const { return label_; }
  std::uint64_t key() const { return key_; }

 private:
  RngStream(std::uint64_t key, std::string label) : key_(key), label_(std::move(label)) {
    std::uint64_t sm = key;
    for (auto& word : s_) word = detail::splitmix64(sm);
  }

  std::uint64_t key_;
  std::string label_;
  std::uint64_t s_[4]{};
};

}  // namespace psace
