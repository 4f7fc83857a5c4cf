#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace psace {

/// Principal stratum U = (S(1), S(0)).
enum class Stratum : int {
  SS = 0,        // (1,1)
  SSbar = 1,     // (1,0)
  SbarSbar = 2,  // (0,0)
  SbarS = 3,     // (0,1), excluded under monotonicity
};

inline constexpr std::size_t kNumStrata = 4;

inline constexpr std::array<Stratum, 4> kAllStrata{Stratum::SS, Stratum::SSbar,
                                                    Stratum::SbarSbar, Stratum::SbarS};
inline constexpr std::array<Stratum, 3> kMonotoneStrata{Stratum::SS, Stratum::SSbar,
                                                         Stratum::SbarSbar};

constexpr std::size_t index(Stratum u) { return static_cast<std::size_t>(u); }

inline std::span<const Stratum> active_strata(bool monotone) {
  if (monotone) return {kMonotoneStrata.data(), kMonotoneStrata.size()};
  return {kAllStrata.data(), kAllStrata.size()};
}

constexpr std::size_t num_active_strata(bool monotone) { return monotone ? 3 : 4; }

constexpr std::string_view name(Stratum u) {
  switch (u) {
    case Stratum::SS: return "SS";
    case Stratum::SSbar: return "SSbar";
    case Stratum::SbarSbar: return "SbarSbar";
    case Stratum::SbarS: return "SbarS";
  }
  return "?";
}

/// Potential surrogate value S(z) for a unit in stratum u.
constexpr int surrogate_under(Stratum u, int z) {
  switch (u) {
    case Stratum::SS: return 1;
    case Stratum::SSbar: return z == 1 ? 1 : 0;
    case Stratum::SbarSbar: return 0;
    case Stratum::SbarS: return z == 1 ? 0 : 1;
  }
  return 0;
}

/// The two strata compatible with observing (Z=z, S=s), O(z,s). The second
/// entry is SbarS for the cells that collapse to a single stratum under
/// monotonicity, so callers drop it when the model is monotone.
struct CompatiblePair {
  Stratum first;
  Stratum second;
};

constexpr CompatiblePair compatible_strata(int z, int s) {
  if (z == 1 && s == 1) return {Stratum::SS, Stratum::SSbar};
  if (z == 1 && s == 0) return {Stratum::SbarSbar, Stratum::SbarS};
  if (z == 0 && s == 1) return {Stratum::SS, Stratum::SbarS};
  return {Stratum::SSbar, Stratum::SbarSbar};
}

/// Number of strata in O(z,s) for the given model.
constexpr int num_compatible(int z, int s, bool monotone) {
  if (!monotone) return 2;
  return ((z == 1 && s == 0) || (z == 0 && s == 1)) ? 1 : 2;
}

}  // namespace psace
