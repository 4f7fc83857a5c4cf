#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psace/error.hpp"
#include "psace/stratum.hpp"

namespace psace {

/// Dense 2x2x2xN_R table over observed cells (z, s, y, r). Trials are
/// 0-based here; file formats and reports use 1-based trial ids.
template <class T>
class CountTable {
 public:
  using value_type = T;

  CountTable() = default;
  explicit CountTable(std::size_t n_trials) : n_trials_(n_trials), cells_(8 * n_trials, T{}) {}

  std::size_t n_trials() const { return n_trials_; }

  T& operator()(int z, int s, int y, std::size_t r) { return cells_[offset(z, s, y, r)]; }
  const T& operator()(int z, int s, int y, std::size_t r) const {
    return cells_[offset(z, s, y, r)];
  }

  std::span<T> data() { return cells_; }
  std::span<const T> data() const { return cells_; }

  T total() const {
    T sum{};
    for (const T& c : cells_) sum += c;
    return sum;
  }

  T trial_total(std::size_t r) const {
    T sum{};
    for (int z = 0; z < 2; ++z) sum += arm_total(z, r);
    return sum;
  }

  T arm_total(int z, std::size_t r) const {
    return (*this)(z, 1, 1, r) + (*this)(z, 1, 0, r) + (*this)(z, 0, 1, r) + (*this)(z, 0, 0, r);
  }

  T cell_total(int z, int s, std::size_t r) const { return (*this)(z, s, 1, r) + (*this)(z, s, 0, r); }

  template <class U>
  CountTable<U> cast() const {
    CountTable<U> out(n_trials_);
    for (std::size_t i = 0; i < cells_.size(); ++i) out.data()[i] = static_cast<U>(cells_[i]);
    return out;
  }

  friend bool operator==(const CountTable&, const CountTable&) = default;

  static constexpr std::size_t offset(int z, int s, int y, std::size_t r) {
    return ((r * 2 + static_cast<std::size_t>(z)) * 2 + static_cast<std::size_t>(s)) * 2 +
           static_cast<std::size_t>(y);
  }

 private:
  std::size_t n_trials_ = 0;
  std::vector<T> cells_;
};

using ObservedCounts = CountTable<std::int64_t>;
using WeightedCounts = CountTable<double>;
using CellProbabilities = CountTable<double>;

/// Complete-data table over (z, u, y, r).
template <class T>
class StrataTable {
 public:
  StrataTable() = default;
  explicit StrataTable(std::size_t n_trials) : n_trials_(n_trials), cells_(16 * n_trials, T{}) {}

  std::size_t n_trials() const { return n_trials_; }

  T& operator()(int z, Stratum u, int y, std::size_t r) { return cells_[offset(z, u, y, r)]; }
  const T& operator()(int z, Stratum u, int y, std::size_t r) const {
    return cells_[offset(z, u, y, r)];
  }

  std::span<T> data() { return cells_; }
  std::span<const T> data() const { return cells_; }

  T total() const {
    T sum{};
    for (const T& c : cells_) sum += c;
    return sum;
  }

  /// n_{+++r}
  T trial_total(std::size_t r) const {
    T sum{};
    for (std::size_t i = 16 * r; i < 16 * (r + 1); ++i) sum += cells_[i];
    return sum;
  }

  /// n_{z++r}
  T arm_total(int z, std::size_t r) const {
    T sum{};
    for (Stratum u : kAllStrata) sum += (*this)(z, u, 0, r) + (*this)(z, u, 1, r);
    return sum;
  }

  /// n_{+u+r}
  T stratum_total(Stratum u, std::size_t r) const {
    T sum{};
    for (int z = 0; z < 2; ++z) sum += (*this)(z, u, 0, r) + (*this)(z, u, 1, r);
    return sum;
  }

  /// n_{zuy+}
  T outcome_total(int z, Stratum u, int y) const {
    T sum{};
    for (std::size_t r = 0; r < n_trials_; ++r) sum += (*this)(z, u, y, r);
    return sum;
  }

  /// Observed table implied by the complete table: S is a function of (Z, U).
  CountTable<T> collapse() const {
    CountTable<T> out(n_trials_);
    for (std::size_t r = 0; r < n_trials_; ++r)
      for (int z = 0; z < 2; ++z)
        for (Stratum u : kAllStrata)
          for (int y = 0; y < 2; ++y) out(z, surrogate_under(u, z), y, r) += (*this)(z, u, y, r);
    return out;
  }

  static constexpr std::size_t offset(int z, Stratum u, int y, std::size_t r) {
    return ((r * 2 + static_cast<std::size_t>(z)) * 4 + index(u)) * 2 + static_cast<std::size_t>(y);
  }

 private:
  std::size_t n_trials_ = 0;
  std::vector<T> cells_;
};

using CompleteCounts = StrataTable<std::int64_t>;
using ExpectedCounts = StrataTable<double>;

/// Checks the ObservedCounts invariants. Returns warnings for arms with no
/// units; throws on negative entries or an empty table.
inline std::vector<std::string> validate_counts(const ObservedCounts& counts) {
  if (counts.n_trials() == 0) throw Error(ErrorCode::parse, "count table has no trials");
  for (std::int64_t c : counts.data())
    if (c < 0) throw Error(ErrorCode::parse, "negative cell count");
  if (counts.total() <= 0) throw Error(ErrorCode::parse, "count table is empty");
  std::vector<std::string> warnings;
  for (std::size_t r = 0; r < counts.n_trials(); ++r)
    for (int z = 0; z < 2; ++z)
      if (counts.arm_total(z, r) == 0)
        warnings.push_back("trial " + std::to_string(r + 1) + " has no units with z=" +
                           std::to_string(z));
  return warnings;
}

}  // namespace psace
