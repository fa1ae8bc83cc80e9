#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "quixo/database.hpp"

namespace quixo {

struct ClassTally {
  ClassId id;
  std::uint64_t entries = 0;
  std::uint64_t win = 0, loss = 0, draw = 0;
};

struct TallyReport {
  int n = 0;
  bool complete = false;
  std::vector<ClassTally> classes;
  Totals totals;
};

// Counts read from the class payloads, not from the manifest.
TallyReport tally(const Database& db);

// Header: x,o,entries,win,loss,draw,win_pct,loss_pct,draw_pct
std::string per_class_csv(const TallyReport& report);

struct StepRow {
  int step = 0;
  std::uint64_t win = 0, loss = 0;
};

// Rows for steps 0 through (deepest step + 1), so the table ends on an empty row.
std::vector<StepRow> steps_histogram(const Database& db);

// Forward closure from the empty board. Terminal states are counted but not
// expanded; states are X-to-move normalized.
class Reachability {
 public:
  static Reachability compute(int n);
  static Reachability load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int n() const { return n_; }
  std::uint64_t count() const { return count_; }
  std::uint64_t universe() const { return universe_; }
  bool contains(State s) const;

 private:
  explicit Reachability(int n);
  std::uint64_t global_index(State s) const;
  void set(std::uint64_t i) { bits_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool test(std::uint64_t i) const { return (bits_[i >> 6] >> (i & 63)) & 1; }

  int n_;
  const ClassIndex* index_;
  std::vector<std::uint64_t> class_offset_;  // by x * (cells + 1) + o
  std::uint64_t universe_ = 0;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> bits_;
};

using StatePredicate = std::function<bool(State, const Verdict&)>;

// States of the smallest tile count (among classes present in db) that satisfy
// the predicate, in class then index order, at most `limit` of them.
std::vector<State> find_extremal(const Database& db, const StatePredicate& pred,
                                 std::size_t limit = 1000);

struct CheckReport {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::vector<std::string> samples;  // first few violations, human readable
  bool ok() const { return violations == 0; }
};

// Re-derive every stored value from its children: outcome rules, terminal
// values, and (when present) the step equations.
CheckReport verify_soundness(const Database& db, int threads = 1);

// The same checks on `samples` states drawn uniformly from the database.
CheckReport verify_sample(const Database& db, std::uint64_t samples, std::uint64_t seed = 1);

// Solve the closure of `seed` with the reference oracle and compare it with
// the database on every state of the closure.
CheckReport compare_with_oracle(const Database& db, const std::vector<State>& seed);

}  // namespace quixo
