#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "quixo/board.hpp"

// Brute-force reference solver. It shares only the State type and the text
// format with the rest of the library: rules are simulated on plain cell
// arrays and the game graph is built explicitly in hash maps.
namespace quixo::oracle {

// Row-major cells, each '.', 'X' or 'O'.
using Grid = std::vector<char>;

Grid to_grid(int n, State s);
State from_grid(int n, const Grid& g);

bool naive_has_line(int n, const Grid& g, char symbol);
bool naive_is_border(int n, int cell);

// Remove the tile at `cell`, slide the tiles between it and `end` one step
// toward the hole, and drop an X at `end`. No legality checks.
Grid naive_push(int n, const Grid& g, int cell, InsertEnd end);

// Legal (cell, end) pairs by direct rule reading, in canonical order.
std::vector<Move> naive_moves(int n, const Grid& g);

// Children with the symbols swapped so the opponent is X; duplicates removed.
std::vector<State> naive_children(int n, State s);

struct Verdict {
  Outcome outcome = Outcome::Draw;
  int step = -1;  // -1 for Draw
  bool operator==(const Verdict&) const = default;
};

struct ExplicitGraph {
  int n = 0;
  std::vector<State> states;
  std::unordered_map<State, std::uint32_t> ids;
  std::vector<std::uint64_t> child_begin;  // CSR offsets, size states+1
  std::vector<std::uint32_t> child_ids;
  std::vector<std::optional<Outcome>> terminal;

  std::size_t size() const { return states.size(); }
};

// Closure of `seed` under the children relation (terminal states are not expanded).
ExplicitGraph build_closed_graph(int n, const std::vector<State>& seed);

// Retrograde analysis with undecided-children counters; results are aligned
// with graph.states.
std::vector<Verdict> solve_with_counters(const ExplicitGraph& graph);

// Repeated full sweeps over the outcome and step definitions until nothing changes.
std::vector<Verdict> solve_with_sweeps(const ExplicitGraph& graph);

// Convenience wrapper: closure + counter solve, keyed by state.
std::unordered_map<State, Verdict> solve_closed_set(int n, const std::vector<State>& seed);

// Every valid board of the given size (3^(n*n) states); intended for n = 3.
std::vector<State> all_states(int n);

// Every board with exactly x Xs and o Os, by nested combination enumeration.
std::vector<State> states_in_class(int n, int x, int o);

// Every board with at least `min_tiles` tiles; such sets are closed under play.
std::vector<State> states_with_min_tiles(int n, int min_tiles);

}  // namespace quixo::oracle
