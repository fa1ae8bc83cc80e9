#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "quixo/board.hpp"
#include "quixo/class_index.hpp"
#include "quixo/oracle.hpp"
#include "support.hpp"

using namespace quixo;
namespace g = quixo::test::golden;
using quixo::test::bits_from;
using quixo::test::random_state;

TEST_CASE("parse and render round-trip") {
  const Board& b = Board::get(4);
  for (const char* text : {g::kLossIn22, g::kDrawState4, g::kSymBase, "..../..../..../.... X"}) {
    const State s = b.parse(text);
    CHECK(b.render(s) == text);
  }
  // O to move is stored with the symbols exchanged.
  const State s = b.parse("X.../..../..../...O O");
  CHECK(s == swap_players(b.parse("X.../..../..../...O X")));
  CHECK(b.render(s, Symbol::O) == "X.../..../..../...O O");
  CHECK(b.render_cells(b.parse(g::kLossIn22)) == "..OX/..../XOO./....");
}

TEST_CASE("parse rejects malformed boards") {
  const Board& b = Board::get(4);
  CHECK_THROWS_AS(b.parse("..OX/..../XOO X"), ParseError);
  CHECK_THROWS_AS(b.parse("..OX/..../XOO./...Z X"), ParseError);
  CHECK_THROWS_AS(b.parse("..OX/..../XOO./.... Y"), ParseError);
  CHECK_THROWS_AS(b.parse("..OX|..../XOO./.... X"), ParseError);
  CHECK_THROWS_AS(parse_state("....../....../....../....../....../...... X"), ParseError);
  CHECK_THROWS_AS(parse_state("no rows here"), ParseError);
  CHECK_THROWS_AS(Board::get(6), std::invalid_argument);

  int n = 0;
  parse_state("..O../...../...../...../..... X", &n);
  CHECK(n == 5);
  CHECK(board_size_of("X../.O./... O") == 3);
}

TEST_CASE("swap is an involution and exchanges the symbols") {
  const Board& b = Board::get(4);
  const State s = b.parse(g::kSymBase);
  CHECK(swap_players(swap_players(s)) == s);
  CHECK(b.render_cells(swap_players(s)) == g::kSymSwapBoard);

  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const State r = random_state(5, rng);
    CHECK(swap_players(swap_players(r)) == r);
    CHECK(x_field(swap_players(r)) == o_field(r));
  }
}

TEST_CASE("line masks agree with a direct scan on every 3x3 board") {
  const Board& b = Board::get(3);
  for (State s : oracle::all_states(3)) {
    const auto grid = oracle::to_grid(3, s);
    REQUIRE(b.has_line(s, Symbol::X) == oracle::naive_has_line(3, grid, 'X'));
    REQUIRE(b.has_line(s, Symbol::O) == oracle::naive_has_line(3, grid, 'O'));
  }
  CHECK(b.line_masks(Symbol::X).size() == 8);
  CHECK(Board::get(5).line_masks(Symbol::O).size() == 12);
}

TEST_CASE("a board with both lines is a win for the player to move") {
  const Board& b = Board::get(4);
  const State s = b.parse(g::kFinalBoard4 + std::string(" X"));
  CHECK(b.has_line(s, Symbol::X));
  CHECK(*b.terminal_outcome(s) == Outcome::Win);
  const State both = b.parse("XXXX/OOOO/..../.... X");
  CHECK(*b.terminal_outcome(both) == Outcome::Win);
  CHECK(*b.terminal_outcome(b.parse("XXXX/OOOO/..../.... O")) == Outcome::Win);
  CHECK(*b.terminal_outcome(b.parse("OOOO/X.X./..X./.... X")) == Outcome::Loss);
  CHECK_FALSE(b.terminal_outcome(b.parse(g::kLossIn22)).has_value());
}

TEST_CASE("move counts") {
  CHECK(Board::get(5).legal_moves(State{}).size() == 44);
  CHECK(Board::get(4).legal_moves(State{}).size() == 32);
  CHECK(Board::get(3).legal_moves(State{}).size() == 20);
  CHECK(Board::get(5).move_table().size() == 44);
  CHECK(Board::get(4).border_cells().size() == 12);

  const Board& b = Board::get(4);
  CHECK(b.legal_moves(b.parse(g::kLossIn1)).size() == 4);
  CHECK_THROWS_AS(b.legal_moves(b.parse(g::kFinalBoard4 + std::string(" X"))), RuleError);
  CHECK_THROWS_AS(b.children(b.parse(g::kFinalBoard4 + std::string(" O"))), RuleError);
}

TEST_CASE("legal moves match the rule reading") {
  std::mt19937_64 rng(11);
  for (int n = 3; n <= 5; ++n) {
    const Board& b = Board::get(n);
    int tested = 0;
    while (tested < 3000) {
      const State s = random_state(n, rng);
      if (b.is_terminal(s)) continue;
      ++tested;
      REQUIRE(b.legal_moves(s) == oracle::naive_moves(n, oracle::to_grid(n, s)));
    }
  }
}

TEST_CASE("shift formula on a known 5x5 move") {
  const Board& b = Board::get(5);
  const State before = b.parse(g::kEncodedBoard + std::string(" O"));
  // The example word shows X in the upper field while O is to move.
  CHECK(swap_players(before).bits == bits_from(g::kEncodedWord));

  const Move mv{9, InsertEnd::RowLeft};
  const auto it = std::find_if(b.move_table().begin(), b.move_table().end(),
                               [&](const MoveEntry& e) { return e.move == mv; });
  REQUIRE(it != b.move_table().end());
  CHECK(it->segment == bits_from(g::kEncodedSegment));
  CHECK(swap_players(State{it->insert}).bits == bits_from(g::kEncodedInsert));
  CHECK(it->shl == 0);
  CHECK(it->shr == 1);

  const State after = b.apply_move(before, mv);
  CHECK(after == b.parse(g::kEncodedAfter + std::string(" O")));
  CHECK(b.render(after, Symbol::O) == g::kEncodedAfter + std::string(" O"));
}

TEST_CASE("shift formula agrees with cell-by-cell pushes") {
  auto check_state = [](const Board& b, State s) {
    const int n = b.n();
    const auto grid = oracle::to_grid(n, s);
    for (const MoveEntry& m : b.move_table()) {
      if (!Board::move_allowed(s, m)) continue;
      const State fast = Board::apply_entry(s, m);
      const State slow = oracle::from_grid(n, oracle::naive_push(n, grid, m.move.cell, m.move.end));
      if (fast != slow) return false;
    }
    return true;
  };
  const Board& b3 = Board::get(3);
  for (State s : oracle::all_states(3)) REQUIRE(check_state(b3, s));

  const Board& b5 = Board::get(5);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20000; ++i) REQUIRE(check_state(b5, random_state(5, rng)));
}

TEST_CASE("children") {
  CHECK(Board::get(5).children(State{}).size() == 16);
  CHECK(Board::get(4).children(State{}).size() == 12);

  const Board& b = Board::get(3);
  for (State s : oracle::all_states(3)) {
    if (b.is_terminal(s)) continue;
    REQUIRE(b.children(s) == oracle::naive_children(3, s));
  }
}

TEST_CASE("children land in the swapped class or one tile above it") {
  std::mt19937_64 rng(3);
  for (int n = 3; n <= 5; ++n) {
    const Board& b = Board::get(n);
    for (int i = 0; i < 2000; ++i) {
      const State s = random_state(n, rng);
      if (b.is_terminal(s)) continue;
      const ClassId c = ClassIndex::class_of(s);
      b.for_each_child(s, [&](const MoveEntry&, State child) {
        const ClassId d = ClassIndex::class_of(child);
        CHECK(d.x == c.o);
        CHECK((d.o == c.x || d.o == c.x + 1));
        CHECK(b.valid(child));
      });
    }
  }
}

TEST_CASE("parents are exactly the nonterminal states with s as a child") {
  const Board& b = Board::get(3);
  const auto all = oracle::all_states(3);
  std::unordered_map<State, std::vector<State>> expected;
  for (State s : all) {
    if (b.is_terminal(s)) continue;
    for (State c : b.children(s)) expected[c].push_back(s);
  }
  for (State s : all) {
    auto want = expected[s];
    std::sort(want.begin(), want.end());
    REQUIRE(b.parents(s) == want);
  }

  const Board& b4 = Board::get(4);
  CHECK(b4.parents(b4.parse(g::kUnreachable4)).empty());
  CHECK(b4.parents(State{}).empty());
}

TEST_CASE("dihedral transforms") {
  const Board& b = Board::get(4);
  const State base = b.parse(g::kSymBase);
  CHECK(transform(b, base, 0) == base);
  CHECK(transform(b, base, 1) == b.parse(g::kSymRot90));
  CHECK(transform(b, base, 4) == b.parse(g::kSymMirror));

  for (int t = 0; t < kSymmetries; ++t) {
    CHECK(transform(b, transform(b, base, t), inverse_transform(t)) == base);
    for (int u = 0; u < kSymmetries; ++u)
      CHECK(transform(b, transform(b, base, u), t) == transform(b, base, compose_transforms(t, u)));
  }
  std::set<int> rotations;
  for (int t = 0; t < 4; ++t) rotations.insert(compose_transforms(t, t));
  CHECK(rotations == std::set<int>{0, 2});
  CHECK_THROWS_AS(transform(b, base, 8), std::invalid_argument);

  std::set<State> orbit;
  for (int t = 0; t < kSymmetries; ++t) orbit.insert(transform(b, base, t));
  for (State s : orbit) CHECK(canonicalize(b, s) == *orbit.begin());
}

TEST_CASE("transforms commute with moves and terminal checks") {
  const Board& b = Board::get(4);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 500; ++i) {
    const State s = random_state(4, rng);
    for (int t = 0; t < kSymmetries; ++t) {
      const State ts = transform(b, s, t);
      CHECK(b.has_line(ts, Symbol::X) == b.has_line(s, Symbol::X));
      CHECK(b.has_line(ts, Symbol::O) == b.has_line(s, Symbol::O));
      if (b.is_terminal(s)) continue;
      std::vector<State> mapped;
      for (State c : b.children(s)) mapped.push_back(transform(b, c, t));
      std::sort(mapped.begin(), mapped.end());
      CHECK(mapped == b.children(ts));
    }
  }
}

TEST_CASE("outcome and insert end names") {
  CHECK(std::string(to_string(Outcome::Win)) == "win");
  CHECK(*outcome_from_string("draw") == Outcome::Draw);
  CHECK_FALSE(outcome_from_string("maybe").has_value());
  for (auto e : {InsertEnd::RowLeft, InsertEnd::RowRight, InsertEnd::ColTop, InsertEnd::ColBottom})
    CHECK(*insert_end_from_string(to_string(e)) == e);
}
