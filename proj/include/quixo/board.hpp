#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace quixo {

// A position packed into one word. The O field lives at bit 0, the X field at
// bit 32; inside each field cell (r, c) with k = n*r + c is field-bit n*n-1-k,
// so the field read most-significant-bit first spells the board row-major.
// X is always the player to move.
struct State {
  std::uint64_t bits = 0;

  constexpr auto operator<=>(const State&) const = default;
};

constexpr int kXShift = 32;
constexpr std::uint64_t kFieldMask = 0xffffffffULL;

constexpr std::uint32_t x_field(State s) { return static_cast<std::uint32_t>(s.bits >> kXShift); }
constexpr std::uint32_t o_field(State s) { return static_cast<std::uint32_t>(s.bits & kFieldMask); }
constexpr State make_state(std::uint32_t x, std::uint32_t o) {
  return State{(static_cast<std::uint64_t>(x) << kXShift) | o};
}

// Exchange the two symbol fields.
constexpr State swap_players(State s) { return State{(s.bits << 32) | (s.bits >> 32)}; }

enum class Symbol : std::uint8_t { X, O };

enum class Outcome : std::uint8_t { Draw = 0, Win = 1, Loss = 2, WinOrDraw = 3 };

// The end of the taken tile's row or column where it is pushed back in.
enum class InsertEnd : std::uint8_t { RowLeft = 0, RowRight = 1, ColTop = 2, ColBottom = 3 };

struct Move {
  std::uint8_t cell = 0;
  InsertEnd end = InsertEnd::RowLeft;

  constexpr auto operator<=>(const Move&) const = default;
};

// Per-move constants for the shift formula
//   child = ((((s & segment) << shl) >> shr) & segment) | (s & ~segment) | insert
// Exactly one of shl/shr is non-zero.
struct MoveEntry {
  Move move;
  std::uint64_t segment = 0;   // cells between insertion end and taken cell, both fields
  std::uint64_t insert = 0;    // X bit at the insertion end
  std::uint64_t taken_x = 0;   // X bit of the taken cell
  std::uint64_t taken_o = 0;   // O bit of the taken cell
  std::uint8_t shl = 0;
  std::uint8_t shr = 0;
};

enum class ParentKind : std::uint8_t {
  TakenEmpty = 1,  // the mover took an empty tile (parent has one tile fewer)
  TakenOwn = 2,    // the mover took one of its own tiles (same tile count)
  Both = 3,
};

class RuleError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ParseError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const char* to_string(Outcome o);
const char* to_string(InsertEnd e);
std::optional<InsertEnd> insert_end_from_string(std::string_view s);
std::optional<Outcome> outcome_from_string(std::string_view s);

// Rules and precomputed masks for one board size. Instances are immutable and
// shared; obtain them through Board::get.
class Board {
 public:
  static constexpr int kMinSize = 3;
  static constexpr int kMaxSize = 5;

  static const Board& get(int n);
  static bool supported(int n) { return n >= kMinSize && n <= kMaxSize; }

  int n() const { return n_; }
  int cells() const { return n_ * n_; }
  std::uint32_t field_mask() const { return field_mask_; }
  const std::vector<int>& border_cells() const { return border_; }
  // Row, column, and both diagonals; 2n+2 masks per field.
  const std::vector<std::uint64_t>& line_masks(Symbol sym) const {
    return sym == Symbol::X ? x_lines_ : o_lines_;
  }
  // Every (cell, end) pair allowed by the board geometry, in canonical order.
  const std::vector<MoveEntry>& move_table() const { return moves_; }

  std::uint32_t cell_bit(int cell) const { return 1u << (cells() - 1 - cell); }
  bool is_border(int cell) const;

  bool valid(State s) const;

  bool has_line(State s, Symbol sym) const {
    for (std::uint64_t m : sym == Symbol::X ? x_lines_ : o_lines_)
      if ((s.bits & m) == m) return true;
    return false;
  }
  // Win if X has a line (checked first), Loss if only O has one.
  std::optional<Outcome> terminal_outcome(State s) const {
    if (has_line(s, Symbol::X)) return Outcome::Win;
    if (has_line(s, Symbol::O)) return Outcome::Loss;
    return std::nullopt;
  }
  bool is_terminal(State s) const { return has_line(s, Symbol::X) || has_line(s, Symbol::O); }

  static bool move_allowed(State s, const MoveEntry& m) { return (s.bits & m.taken_o) == 0; }
  static State apply_entry(State s, const MoveEntry& m) {
    const std::uint64_t seg = s.bits & m.segment;
    return State{((((seg << m.shl) >> m.shr)) & m.segment) | (s.bits & ~m.segment) | m.insert};
  }

  std::vector<Move> legal_moves(State s) const;
  State apply_move(State s, Move m) const;
  std::vector<State> children(State s) const;
  std::vector<State> parents(State s) const;

  // Calls fn(const MoveEntry&, State child) for every legal move, child already
  // swapped so that the opponent is X. Duplicated children are not removed.
  template <typename Fn>
  void for_each_child(State s, Fn&& fn) const {
    for (const MoveEntry& m : moves_) {
      if (!move_allowed(s, m)) continue;
      fn(m, swap_players(apply_entry(s, m)));
    }
  }

  // Calls fn(State parent) for every nonterminal parent of s. A parent can be
  // reported more than once if two different moves lead from it to s.
  template <typename Fn>
  void for_each_parent(State s, ParentKind kind, Fn&& fn) const {
    const State t = swap_players(s);
    for (const MoveEntry& m : moves_) {
      if ((t.bits & m.insert) == 0) continue;
      const std::uint64_t seg = t.bits & m.segment;
      const State vacated{((((seg << m.shr) >> m.shl)) & m.segment) | (t.bits & ~m.segment)};
      if ((static_cast<unsigned>(kind) & static_cast<unsigned>(ParentKind::TakenEmpty)) &&
          !is_terminal(vacated))
        fn(vacated);
      if (static_cast<unsigned>(kind) & static_cast<unsigned>(ParentKind::TakenOwn)) {
        const State own{vacated.bits | m.taken_x};
        if (!is_terminal(own)) fn(own);
      }
    }
  }

  // Board string: n rows of '.', 'X', 'O' joined by '/', a space, and the
  // player to move. An 'O' to move is normalized by swapping the symbols.
  State parse(std::string_view text) const;
  std::string render(State s, Symbol to_move = Symbol::X) const;
  // Row-major cell characters only, no player suffix.
  std::string render_cells(State s) const;

 private:
  explicit Board(int n);

  int n_;
  std::uint32_t field_mask_;
  std::vector<int> border_;
  std::vector<std::uint64_t> x_lines_;
  std::vector<std::uint64_t> o_lines_;
  std::vector<MoveEntry> moves_;
};

// Size detection from a board string ("n rows joined by '/'").
int board_size_of(std::string_view text);

// Parse with size detection.
State parse_state(std::string_view text, int* n_out = nullptr);

// The eight dihedral symmetries, numbered so that t = rotations * 1 + 4 * mirrored:
// 0..3 rotate clockwise by 0/90/180/270 degrees, 4..7 mirror left-right first
// and then rotate.
constexpr int kSymmetries = 8;
State transform(const Board& b, State s, int t);
int inverse_transform(int t);
int compose_transforms(int outer, int inner);  // transform(transform(s, inner), outer)
State canonicalize(const Board& b, State s);

}  // namespace quixo

template <>
struct std::hash<quixo::State> {
  std::size_t operator()(quixo::State s) const noexcept {
    std::uint64_t k = s.bits * 0x9E3779B97F4A7C15ULL;
    return static_cast<std::size_t>(k ^ (k >> 29));
  }
};
