#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "quixo/board.hpp"

#if defined(__BMI2__)
#include <immintrin.h>
#endif

namespace quixo {

// The (x, o) tile-count class of a state.
struct ClassId {
  int x = 0;
  int o = 0;

  constexpr auto operator<=>(const ClassId&) const = default;
  int tiles() const { return x + o; }
  std::string str() const { return "(" + std::to_string(x) + "," + std::to_string(o) + ")"; }
};

std::uint64_t binomial(int n, int k);

namespace bits {

// Gather the bits of `value` selected by `mask` into the low bits, keeping order.
inline std::uint32_t extract_portable(std::uint32_t value, std::uint32_t mask) {
  std::uint32_t out = 0;
  for (std::uint32_t bit = 1; mask; bit <<= 1) {
    const std::uint32_t low = mask & (~mask + 1);
    if (value & low) out |= bit;
    mask ^= low;
  }
  return out;
}

// Scatter the low bits of `value` to the positions selected by `mask`.
inline std::uint32_t deposit_portable(std::uint32_t value, std::uint32_t mask) {
  std::uint32_t out = 0;
  for (std::uint32_t bit = 1; mask; bit <<= 1) {
    const std::uint32_t low = mask & (~mask + 1);
    if (value & bit) out |= low;
    mask ^= low;
  }
  return out;
}

inline std::uint32_t extract(std::uint32_t value, std::uint32_t mask) {
#if defined(__BMI2__)
  return _pext_u32(value, mask);
#else
  return extract_portable(value, mask);
#endif
}

inline std::uint32_t deposit(std::uint32_t value, std::uint32_t mask) {
#if defined(__BMI2__)
  return _pdep_u32(value, mask);
#else
  return deposit_portable(value, mask);
#endif
}

}  // namespace bits

// pop/ord lookup over all n*n-bit masks. ord(m) is the rank of m among masks
// with the same population count in ascending numeric order; unrank inverts it.
class RankTables {
 public:
  explicit RankTables(int n);

  int n() const { return n_; }
  int width() const { return width_; }
  static int pop(std::uint32_t mask) { return __builtin_popcount(mask); }
  std::uint32_t ord(std::uint32_t mask) const { return ord_[mask]; }
  std::uint32_t unrank(int pop, std::uint32_t rank) const { return inv_[level_[pop] + rank]; }

 private:
  int n_;
  int width_;
  std::vector<std::uint32_t> ord_;
  std::vector<std::uint32_t> inv_;
  std::vector<std::uint64_t> level_;
};

// Dense bijection between a class C_{x,o} and [0, class_size).
class ClassIndex {
 public:
  // Shared, lazily built instance per board size.
  static const ClassIndex& get(int n);
  explicit ClassIndex(int n);

  int n() const { return board_->n(); }
  const Board& board() const { return *board_; }
  const RankTables& tables() const { return tables_; }

  std::uint64_t class_size(ClassId c) const;
  // All classes with x + o <= n*n, ordered by (x, o).
  std::vector<ClassId> all_classes() const;

  static ClassId class_of(State s) {
    return ClassId{__builtin_popcount(x_field(s)), __builtin_popcount(o_field(s))};
  }

  // S_X is the raw X field; S_O is the O field with X-occupied positions removed
  // and the survivors packed toward bit 0.
  std::pair<std::uint32_t, std::uint32_t> compress(State s) const {
    const std::uint32_t x = x_field(s);
    return {x, bits::extract(o_field(s), ~x & board_->field_mask())};
  }
  State expand(std::uint32_t sx, std::uint32_t so) const {
    return make_state(sx, bits::deposit(so, ~sx & board_->field_mask()));
  }

  // Index of s inside its class; `o_positions` = binomial(n*n - x, o).
  std::uint64_t index_in_class(State s, std::uint64_t o_positions) const {
    const auto [sx, so] = compress(s);
    return static_cast<std::uint64_t>(tables_.ord(sx)) * o_positions + tables_.ord(so);
  }
  State state_in_class(ClassId c, std::uint64_t index, std::uint64_t o_positions) const {
    const auto sx = tables_.unrank(c.x, static_cast<std::uint32_t>(index / o_positions));
    const auto so = tables_.unrank(c.o, static_cast<std::uint32_t>(index % o_positions));
    return expand(sx, so);
  }

  std::pair<ClassId, std::uint64_t> state_to_index(State s) const;
  // Throws std::out_of_range when index >= class_size(c).
  State index_to_state(ClassId c, std::uint64_t index) const;

  std::uint64_t o_positions(ClassId c) const { return binomial(board_->cells() - c.x, c.o); }

 private:
  const Board* board_;
  RankTables tables_;
};

}  // namespace quixo
