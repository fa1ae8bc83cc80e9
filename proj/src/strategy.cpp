#include "quixo/strategy.hpp"

#include <json.hpp>

namespace quixo {

namespace {

Outcome flip(Outcome o) {
  switch (o) {
    case Outcome::Win: return Outcome::Loss;
    case Outcome::Loss: return Outcome::Win;
    default: return o;
  }
}

Symbol other(Symbol s) { return s == Symbol::X ? Symbol::O : Symbol::X; }

}  // namespace

Evaluation evaluate(const Database& db, State s) {
  const Board& b = db.board();
  if (!b.valid(s)) throw std::invalid_argument("invalid state");
  Evaluation e;
  e.state = s;
  const Verdict v = db.lookup(s);
  e.outcome = v.outcome;
  e.step = v.step;
  e.terminal = b.is_terminal(s);
  if (e.terminal) return e;
  for (const MoveEntry& m : b.move_table()) {
    if (!Board::move_allowed(s, m)) continue;
    const State child = swap_players(Board::apply_entry(s, m));
    const Verdict cv = db.lookup(child);
    e.moves.push_back({m.move, child, cv.outcome, flip(cv.outcome), cv.step});
  }
  return e;
}

const char* to_string(Policy p) {
  switch (p) {
    case Policy::FastestWin: return "fastest_win";
    case Policy::StubbornLoss: return "stubborn_loss";
    case Policy::HoldDraw: return "hold_draw";
    case Policy::RandomWin: return "random_win";
    case Policy::Auto: return "auto";
  }
  return "?";
}

std::optional<Policy> policy_from_string(std::string_view s) {
  for (Policy p : {Policy::FastestWin, Policy::StubbornLoss, Policy::HoldDraw, Policy::RandomWin,
                   Policy::Auto})
    if (s == to_string(p)) return p;
  return std::nullopt;
}

const MoveEvaluation& choose_move(const Evaluation& e, Policy p, std::mt19937_64* rng) {
  if (e.terminal || e.moves.empty()) throw PolicyError("terminal state has no moves");
  if (p == Policy::Auto)
    p = e.outcome == Outcome::Win    ? Policy::FastestWin
        : e.outcome == Outcome::Loss ? Policy::StubbornLoss
                                     : Policy::HoldDraw;

  auto need = [&](Outcome o) {
    if (e.outcome != o)
      throw PolicyError(std::string(to_string(p)) + " needs a " + quixo::to_string(o) +
                        " state, this one is " + quixo::to_string(e.outcome));
  };
  const MoveEvaluation* pick = nullptr;
  switch (p) {
    case Policy::FastestWin:
      need(Outcome::Win);
      for (const auto& m : e.moves)
        if (m.child_outcome == Outcome::Loss &&
            (!pick || m.child_step.value_or(0) < pick->child_step.value_or(0)))
          pick = &m;
      break;
    case Policy::StubbornLoss:
      need(Outcome::Loss);
      for (const auto& m : e.moves)
        if (!pick || m.child_step.value_or(0) > pick->child_step.value_or(0)) pick = &m;
      break;
    case Policy::HoldDraw:
      need(Outcome::Draw);
      for (const auto& m : e.moves)
        if (m.child_outcome == Outcome::Draw) {
          pick = &m;
          break;
        }
      break;
    case Policy::RandomWin: {
      need(Outcome::Win);
      if (!rng) throw PolicyError("random_win needs a random generator");
      std::vector<const MoveEvaluation*> wins;
      for (const auto& m : e.moves)
        if (m.child_outcome == Outcome::Loss) wins.push_back(&m);
      if (!wins.empty())
        pick = wins[std::uniform_int_distribution<std::size_t>(0, wins.size() - 1)(*rng)];
      break;
    }
    case Policy::Auto:
      break;
  }
  if (!pick) throw PolicyError("database inconsistent: no move fits " + std::string(to_string(p)));
  return *pick;
}

Move best_move(const Database& db, State s, Policy p, std::mt19937_64* rng) {
  return choose_move(evaluate(db, s), p, rng).move;
}

Transcript selfplay(const Database& db, const SelfplayOptions& opts) {
  const Board& b = db.board();
  State s = opts.start.value_or(State{0});
  Symbol mover = opts.first_mover;
  std::mt19937_64 rng(opts.seed);
  Transcript t;
  t.start = b.render(s, mover);
  t.status = "draw-cycle";
  if (auto term = b.terminal_outcome(s)) {
    const Symbol winner = *term == Outcome::Win ? mover : other(mover);
    t.status = winner == Symbol::X ? "x-wins" : "o-wins";
    return t;
  }
  for (int i = 1; i <= opts.cap; ++i) {
    const Evaluation e = evaluate(db, s);
    // A policy that does not fit the current outcome falls back to optimal play.
    const MoveEvaluation* m = nullptr;
    try {
      m = &choose_move(e, opts.policy, &rng);
    } catch (const PolicyError&) {
      if (opts.policy == Policy::Auto) throw;
      m = &choose_move(e, Policy::Auto, &rng);
    }
    s = m->child;
    t.moves.push_back({i, mover, m->move.cell, m->move.end, b.render(s, other(mover))});
    if (auto term = b.terminal_outcome(s)) {
      // The child is seen by the next player: Win means the next player has a line.
      const Symbol winner = *term == Outcome::Win ? other(mover) : mover;
      t.status = winner == Symbol::X ? "x-wins" : "o-wins";
      return t;
    }
    mover = other(mover);
  }
  return t;
}

std::string transcript_to_json(const Transcript& t) {
  nlohmann::json moves = nlohmann::json::array();
  for (const TranscriptEntry& m : t.moves)
    moves.push_back({{"move_index", m.move_index},
                     {"mover", m.mover == Symbol::X ? "X" : "O"},
                     {"cell", m.cell},
                     {"insert_end", to_string(m.insert_end)},
                     {"board_after", m.board_after}});
  nlohmann::json j{{"start", t.start}, {"status", t.status}, {"length", t.moves.size()},
                   {"moves", moves}};
  return j.dump(2);
}

}  // namespace quixo
