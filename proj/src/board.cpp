#include "quixo/board.hpp"

#include <algorithm>
#include <mutex>

namespace quixo {

namespace {

constexpr std::array<const char*, 4> kEndNames = {"row-left", "row-right", "col-top", "col-bottom"};
constexpr std::array<const char*, 4> kOutcomeNames = {"draw", "win", "loss", "win-or-draw"};

}  // namespace

const char* to_string(Outcome o) { return kOutcomeNames[static_cast<int>(o)]; }
const char* to_string(InsertEnd e) { return kEndNames[static_cast<int>(e)]; }

std::optional<InsertEnd> insert_end_from_string(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (s == kEndNames[i]) return static_cast<InsertEnd>(i);
  return std::nullopt;
}

std::optional<Outcome> outcome_from_string(std::string_view s) {
  for (int i = 0; i < 4; ++i)
    if (s == kOutcomeNames[i]) return static_cast<Outcome>(i);
  return std::nullopt;
}

const Board& Board::get(int n) {
  if (!supported(n)) throw std::invalid_argument("unsupported size " + std::to_string(n));
  static const Board b3(3), b4(4), b5(5);
  switch (n) {
    case 3: return b3;
    case 4: return b4;
    default: return b5;
  }
}

Board::Board(int n) : n_(n), field_mask_(static_cast<std::uint32_t>((1ULL << (n * n)) - 1)) {
  auto cell = [n](int r, int c) { return r * n + c; };
  auto both = [this](std::uint32_t field) {
    return (static_cast<std::uint64_t>(field) << kXShift) | field;
  };

  for (int k = 0; k < n * n; ++k)
    if (is_border(k)) border_.push_back(k);

  std::vector<std::uint32_t> lines;
  for (int r = 0; r < n; ++r) {
    std::uint32_t m = 0;
    for (int c = 0; c < n; ++c) m |= cell_bit(cell(r, c));
    lines.push_back(m);
  }
  for (int c = 0; c < n; ++c) {
    std::uint32_t m = 0;
    for (int r = 0; r < n; ++r) m |= cell_bit(cell(r, c));
    lines.push_back(m);
  }
  std::uint32_t diag = 0, anti = 0;
  for (int i = 0; i < n; ++i) {
    diag |= cell_bit(cell(i, i));
    anti |= cell_bit(cell(i, n - 1 - i));
  }
  lines.push_back(diag);
  lines.push_back(anti);
  for (std::uint32_t m : lines) {
    x_lines_.push_back(static_cast<std::uint64_t>(m) << kXShift);
    o_lines_.push_back(m);
  }

  for (int k : border_) {
    const int r = k / n, c = k % n;
    for (int e = 0; e < 4; ++e) {
      MoveEntry m;
      m.move = Move{static_cast<std::uint8_t>(k), static_cast<InsertEnd>(e)};
      std::uint32_t seg = 0;
      int insert_cell = 0;
      switch (m.move.end) {
        case InsertEnd::RowLeft:
          if (c == 0) continue;
          for (int j = 0; j <= c; ++j) seg |= cell_bit(cell(r, j));
          insert_cell = cell(r, 0);
          m.shr = 1;
          break;
        case InsertEnd::RowRight:
          if (c == n - 1) continue;
          for (int j = c; j < n; ++j) seg |= cell_bit(cell(r, j));
          insert_cell = cell(r, n - 1);
          m.shl = 1;
          break;
        case InsertEnd::ColTop:
          if (r == 0) continue;
          for (int i = 0; i <= r; ++i) seg |= cell_bit(cell(i, c));
          insert_cell = cell(0, c);
          m.shr = static_cast<std::uint8_t>(n);
          break;
        case InsertEnd::ColBottom:
          if (r == n - 1) continue;
          for (int i = r; i < n; ++i) seg |= cell_bit(cell(i, c));
          insert_cell = cell(n - 1, c);
          m.shl = static_cast<std::uint8_t>(n);
          break;
      }
      m.segment = both(seg);
      m.insert = static_cast<std::uint64_t>(cell_bit(insert_cell)) << kXShift;
      m.taken_x = static_cast<std::uint64_t>(cell_bit(k)) << kXShift;
      m.taken_o = cell_bit(k);
      moves_.push_back(m);
    }
  }
}

bool Board::is_border(int cell) const {
  const int r = cell / n_, c = cell % n_;
  return r == 0 || c == 0 || r == n_ - 1 || c == n_ - 1;
}

bool Board::valid(State s) const {
  const std::uint32_t x = x_field(s), o = o_field(s);
  return (x & ~field_mask_) == 0 && (o & ~field_mask_) == 0 && (x & o) == 0;
}

std::vector<Move> Board::legal_moves(State s) const {
  if (is_terminal(s)) throw RuleError("terminal state has no moves");
  std::vector<Move> out;
  for (const MoveEntry& m : moves_)
    if (move_allowed(s, m)) out.push_back(m.move);
  return out;
}

State Board::apply_move(State s, Move mv) const {
  if (is_terminal(s)) throw RuleError("terminal state has no moves");
  for (const MoveEntry& m : moves_) {
    if (m.move != mv) continue;
    if (!move_allowed(s, m)) throw RuleError("cannot take an opponent tile");
    return apply_entry(s, m);
  }
  throw RuleError("not a legal move for this board size");
}

std::vector<State> Board::children(State s) const {
  if (is_terminal(s)) throw RuleError("terminal state has no children");
  std::vector<State> out;
  for_each_child(s, [&](const MoveEntry&, State c) { out.push_back(c); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<State> Board::parents(State s) const {
  std::vector<State> out;
  for_each_parent(s, ParentKind::Both, [&](State p) { out.push_back(p); });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

State Board::parse(std::string_view text) const {
  const int n = n_;
  const std::size_t expected = static_cast<std::size_t>(n * (n + 1) - 1);
  if (text.size() != expected + 2 || text[expected] != ' ')
    throw ParseError("expected " + std::to_string(n) + " rows of " + std::to_string(n) +
                     " cells followed by ' X' or ' O'");
  std::uint32_t x = 0, o = 0;
  int k = 0;
  for (std::size_t i = 0; i < expected; ++i) {
    const char ch = text[i];
    if ((i + 1) % static_cast<std::size_t>(n + 1) == 0) {
      if (ch != '/') throw ParseError("expected '/' between rows");
      continue;
    }
    switch (ch) {
      case '.': break;
      case 'X': x |= cell_bit(k); break;
      case 'O': o |= cell_bit(k); break;
      default: throw ParseError(std::string("illegal cell character '") + ch + "'");
    }
    ++k;
  }
  const State s = make_state(x, o);
  switch (text.back()) {
    case 'X': return s;
    case 'O': return swap_players(s);
    default: throw ParseError("active player must be X or O");
  }
}

std::string Board::render_cells(State s) const {
  const std::uint32_t x = x_field(s), o = o_field(s);
  std::string out;
  for (int k = 0; k < cells(); ++k) {
    if (k > 0 && k % n_ == 0) out.push_back('/');
    out.push_back((x & cell_bit(k)) ? 'X' : (o & cell_bit(k)) ? 'O' : '.');
  }
  return out;
}

std::string Board::render(State s, Symbol to_move) const {
  if (to_move == Symbol::O) return render_cells(swap_players(s)) + " O";
  return render_cells(s) + " X";
}

int board_size_of(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) throw ParseError("board string has no '/' row separator");
  return static_cast<int>(slash);
}

State parse_state(std::string_view text, int* n_out) {
  const int n = board_size_of(text);
  if (!Board::supported(n)) throw ParseError("unsupported board size " + std::to_string(n));
  const State s = Board::get(n).parse(text);
  if (n_out) *n_out = n;
  return s;
}

namespace {

// Destination cell of `cell` under symmetry t.
int map_cell(int n, int cell, int t) {
  int r = cell / n, c = cell % n;
  if (t >= 4) c = n - 1 - c;
  for (int i = 0; i < t % 4; ++i) {
    const int nr = c, nc = n - 1 - r;
    r = nr;
    c = nc;
  }
  return r * n + c;
}

}  // namespace

State transform(const Board& b, State s, int t) {
  if (t < 0 || t >= kSymmetries) throw std::invalid_argument("symmetry index out of range");
  const std::uint32_t x = x_field(s), o = o_field(s);
  std::uint32_t tx = 0, to = 0;
  for (int k = 0; k < b.cells(); ++k) {
    const int d = map_cell(b.n(), k, t);
    if (x & b.cell_bit(k)) tx |= b.cell_bit(d);
    if (o & b.cell_bit(k)) to |= b.cell_bit(d);
  }
  return make_state(tx, to);
}

namespace {

// Symmetries act on cells identically for every n >= 3, so a 3x3 probe with
// distinct cell images identifies them.
int identify(const std::array<int, 9>& image) {
  for (int t = 0; t < kSymmetries; ++t) {
    bool same = true;
    for (int k = 0; k < 9 && same; ++k) same = map_cell(3, k, t) == image[k];
    if (same) return t;
  }
  throw std::logic_error("not a dihedral symmetry");
}

}  // namespace

int compose_transforms(int outer, int inner) {
  std::array<int, 9> image{};
  for (int k = 0; k < 9; ++k) image[k] = map_cell(3, map_cell(3, k, inner), outer);
  return identify(image);
}

int inverse_transform(int t) {
  for (int u = 0; u < kSymmetries; ++u)
    if (compose_transforms(u, t) == 0) return u;
  throw std::logic_error("symmetry without inverse");
}

State canonicalize(const Board& b, State s) {
  State best = s;
  for (int t = 1; t < kSymmetries; ++t) best = std::min(best, transform(b, s, t));
  return best;
}

}  // namespace quixo
