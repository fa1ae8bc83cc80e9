#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "quixo/database.hpp"

namespace quixo {

class PolicyError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct MoveEvaluation {
  Move move;
  State child;                 // normalized: the opponent is X
  Outcome child_outcome;       // stored value, opponent's perspective
  Outcome mover_outcome;       // the same value seen by the player making the move
  std::optional<int> child_step;
};

struct Evaluation {
  State state;
  Outcome outcome = Outcome::Draw;
  std::optional<int> step;
  bool terminal = false;
  std::vector<MoveEvaluation> moves;  // canonical move order; empty when terminal
};

Evaluation evaluate(const Database& db, State s);

enum class Policy { FastestWin, StubbornLoss, HoldDraw, RandomWin, Auto };

const char* to_string(Policy p);
std::optional<Policy> policy_from_string(std::string_view s);

// Picks a move from an evaluation. Auto plays FastestWin, StubbornLoss or
// HoldDraw according to the state's outcome. Ties go to the earliest move in
// canonical order. RandomWin needs an rng. Throws PolicyError when the policy
// does not apply to the state (or the state is terminal).
const MoveEvaluation& choose_move(const Evaluation& e, Policy p, std::mt19937_64* rng = nullptr);

Move best_move(const Database& db, State s, Policy p, std::mt19937_64* rng = nullptr);

struct TranscriptEntry {
  int move_index = 0;  // 1-based
  Symbol mover = Symbol::X;
  int cell = 0;
  InsertEnd insert_end = InsertEnd::RowLeft;
  std::string board_after;  // board string with the next player to move
};

struct Transcript {
  std::string start;
  std::vector<TranscriptEntry> moves;
  std::string status;  // "x-wins", "o-wins" or "draw-cycle"
};

struct SelfplayOptions {
  std::optional<State> start;   // empty board when absent
  Symbol first_mover = Symbol::X;
  Policy policy = Policy::Auto;  // used by both sides
  int cap = 200;                 // stop with "draw-cycle" after this many moves
  std::uint64_t seed = 1;
};

Transcript selfplay(const Database& db, const SelfplayOptions& opts = {});

std::string transcript_to_json(const Transcript& t);

}  // namespace quixo
