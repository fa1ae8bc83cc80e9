#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "quixo/class_index.hpp"
#include "quixo/outcome_store.hpp"

namespace quixo {

struct ClassSummary {
  ClassId id;
  std::uint64_t entries = 0;
  std::uint64_t win = 0, loss = 0, draw = 0;
  int iterations = 0;  // in-pair sweeps (or step levels) spent on the class pair
  double seconds = 0;
  bool resumed = false;
};

struct SolveSummary {
  int n = 0;
  int threads = 1;
  bool with_steps = false;
  int min_tiles = 0;
  std::vector<ClassSummary> classes;
  Totals totals;
  double wall_seconds = 0;

  std::string to_json() const;
};

struct SolveConfig {
  int n = 4;
  int threads = 1;
  std::filesystem::path out_dir;
  bool with_steps = false;
  // Only classes with at least this many tiles are solved. Such slices are
  // closed under play, so partial runs are exact.
  int min_tiles = 0;
  bool resume = false;
  // Track terminal entries and reject any later write to them.
  bool seal_terminals = false;
  std::function<void(const ClassSummary&)> on_class;
};

// The live class pair C_{x,o} / C_{o,x} and the already solved classes their
// children can fall into. `second` aliases `first` when x == o; the children
// stores are null on full boards.
struct PairStores {
  ClassStore* first = nullptr;                 // C_{x,o}
  ClassStore* second = nullptr;                // C_{o,x}
  const ClassStore* first_children = nullptr;  // C_{o,x+1}
  const ClassStore* second_children = nullptr; // C_{x,o+1}
};

// Mark terminal states, then mark the nonterminal in-pair parents of every
// terminal Loss as Win (step 1). Terminal entries are sealed when sealing is on.
void terminal_pass(PairStores& pair, int threads);

// Seed `target` (= C_{x,o}) from its solved one-tile-more child class
// (= C_{o,x+1}): parents of Loss children become Win, Draw parents of Draw
// children become WinOrDraw.
void cross_class_pass(ClassStore& target, const ClassStore& children, int threads);

// Run the in-pair iteration to its fixpoint and relabel WinOrDraw as Draw.
// Returns the number of sweeps (outcome-only) or step levels (with steps).
int inpair_iterate(PairStores& pair, int threads);

// All three passes on one pair.
int solve_pair(PairStores& pair, int threads);

// Full backward induction over classes, writing one file per class plus the
// manifest into cfg.out_dir.
SolveSummary solve(const SolveConfig& cfg);

// Derive step arrays for an existing outcome-only database in place.
SolveSummary compute_steps(const std::filesystem::path& db_dir, int threads);

// Pair order used by the solver: tile count descending, x ascending, x <= o.
std::vector<ClassId> pair_schedule(int n, int min_tiles);

}  // namespace quixo
