#include "quixo/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <json.hpp>
#include <mutex>
#include <thread>

namespace quixo {

namespace fs = std::filesystem;

namespace {

// One live class of the pair, with where its children live.
struct Side {
  ClassStore* store = nullptr;
  std::uint64_t opos = 0;
  const Side* partner = nullptr;
  const ClassStore* cross = nullptr;
  std::uint64_t cross_opos = 0;
};

template <typename Fn>
void parallel_for(std::uint64_t entries, int threads, Fn&& fn) {
  const auto shards = byte_aligned_shards(entries, threads);
  if (shards.size() <= 1) {
    for (const auto& [b, e] : shards) fn(b, e);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(shards.size());
    for (const auto& [b, e] : shards)
      pool.emplace_back([&, b = b, e = e] {
        try {
          fn(b, e);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

void check_unsealed(const ClassStore& store, std::uint64_t i) {
  if (store.sealing_enabled() && store.is_sealed(i))
    throw StoreError("propagation reached sealed terminal entry " + std::to_string(i) +
                     " of class " + store.id().str());
}

std::uint8_t checked_step(int v) {
  if (v > kMaxStep) throw StoreError("step count exceeds " + std::to_string(kMaxStep));
  return static_cast<std::uint8_t>(v);
}

// Parent-link update: the state at `i` has a Loss child reached in `step - 1`.
void mark_win(ClassStore& store, std::uint64_t i, int step, bool known) {
  check_unsealed(store, i);
  if (known) {
    if (store.outcomes().load(i) != Outcome::Win)
      throw StoreError("inconsistent database: parent of a Loss state is not Win in class " +
                       store.id().str());
  } else {
    store.outcomes().upgrade(i, outcome_set(Outcome::Draw, Outcome::WinOrDraw), Outcome::Win);
  }
  if (store.has_steps()) store.steps().lower_to(i, checked_step(step));
}

std::vector<Side> make_sides(PairStores& pair, const ClassIndex& ci) {
  if (!pair.first) throw std::invalid_argument("pair without a first class");
  if (!pair.second) pair.second = pair.first;
  const ClassId a = pair.first->id(), b = pair.second->id();
  if (b.x != a.o || b.o != a.x)
    throw std::invalid_argument("classes " + a.str() + " and " + b.str() + " do not form a pair");
  const bool full = a.tiles() == ci.board().cells();
  if (!full && (!pair.first_children || !pair.second_children))
    throw StoreError("child classes of pair " + a.str() + " are not loaded");
  auto check_child = [](const ClassStore* c, ClassId want) {
    if (c && c->id() != want)
      throw std::invalid_argument("expected child class " + want.str() + ", got " +
                                  c->id().str());
  };
  check_child(pair.first_children, {a.o, a.x + 1});
  check_child(pair.second_children, {b.o, b.x + 1});

  std::vector<Side> sides(pair.second == pair.first ? 1 : 2);
  sides[0].store = pair.first;
  sides[0].cross = full ? nullptr : pair.first_children;
  if (sides.size() == 2) {
    sides[1].store = pair.second;
    sides[1].cross = full ? nullptr : pair.second_children;
    sides[0].partner = &sides[1];
    sides[1].partner = &sides[0];
  } else {
    sides[0].partner = &sides[0];
  }
  for (Side& s : sides) {
    s.opos = ci.o_positions(s.store->id());
    if (s.cross) s.cross_opos = ci.o_positions(s.cross->id());
  }
  return sides;
}

void terminal_pass_impl(std::vector<Side>& sides, const ClassIndex& ci, int threads, bool known) {
  const Board& board = ci.board();
  for (Side& side : sides) {
    ClassStore& store = *side.store;
    const ClassId id = store.id();
    parallel_for(store.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t i = begin; i < end; ++i) {
        const State s = ci.state_in_class(id, i, side.opos);
        const auto t = board.terminal_outcome(s);
        if (!t) continue;
        if (!known) store.outcomes().upgrade(i, outcome_set(Outcome::Draw), *t);
        if (store.has_steps()) store.steps().lower_to(i, 0);
        store.seal(i);
      }
    });
  }
  for (Side& side : sides) {
    ClassStore& store = *side.store;
    ClassStore& partner = *side.partner->store;
    const ClassId id = store.id();
    parallel_for(store.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
      for (std::uint64_t i = begin; i < end; ++i) {
        if (store.outcomes().load(i) != Outcome::Loss) continue;
        const State s = ci.state_in_class(id, i, side.opos);
        if (board.has_line(s, Symbol::X) || !board.has_line(s, Symbol::O)) continue;
        board.for_each_parent(s, ParentKind::TakenOwn, [&](State p) {
          mark_win(partner, ci.index_in_class(p, side.partner->opos), 1, known);
        });
      }
    });
  }
}

void cross_pass_impl(ClassStore& target, const ClassStore& children, int threads, bool known) {
  const ClassIndex& ci = ClassIndex::get(target.n());
  const Board& board = ci.board();
  const ClassId tid = target.id(), cid = children.id();
  if (cid.x != tid.o || cid.o != tid.x + 1)
    throw std::invalid_argument("class " + cid.str() + " is not the child class of " + tid.str());
  if (target.has_steps() && !children.has_steps())
    throw StoreError("child class " + cid.str() + " has no step data");
  const std::uint64_t topos = ci.o_positions(tid), copos = ci.o_positions(cid);
  parallel_for(children.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t j = begin; j < end; ++j) {
      const Outcome oc = children.outcomes().load(j);
      if (oc == Outcome::Win) continue;
      if (oc == Outcome::WinOrDraw)
        throw StoreError("child class " + cid.str() + " is incomplete (WinOrDraw entry)");
      if (oc == Outcome::Draw && known) continue;
      const State c = ci.state_in_class(cid, j, copos);
      if (oc == Outcome::Loss) {
        const int step = target.has_steps() ? children.steps().load(j) + 1 : 0;
        if (target.has_steps() && step > kMaxStep)
          throw StoreError("child class " + cid.str() + " has a Loss entry without a step");
        board.for_each_parent(c, ParentKind::TakenEmpty, [&](State p) {
          mark_win(target, ci.index_in_class(p, topos), step, known);
        });
      } else {
        board.for_each_parent(c, ParentKind::TakenEmpty, [&](State p) {
          const std::uint64_t i = ci.index_in_class(p, topos);
          check_unsealed(target, i);
          target.outcomes().upgrade(i, outcome_set(Outcome::Draw), Outcome::WinOrDraw);
        });
      }
    }
  });
}

void relabel_transient(ClassStore& store) {
  for (std::uint8_t& b : store.outcomes().bytes()) {
    const std::uint8_t threes = b & (b >> 1) & 0x55;
    b = static_cast<std::uint8_t>(b & ~(threes * 3));
  }
}

int sweep_outcomes(std::vector<Side>& sides, const ClassIndex& ci, int threads) {
  const Board& board = ci.board();
  const auto& moves = board.move_table();
  int sweeps = 0;
  std::atomic<bool> changed;
  do {
    changed = false;
    for (Side& side : sides) {
      ClassStore& store = *side.store;
      ClassStore& partner = *side.partner->store;
      const ClassId id = store.id();
      parallel_for(store.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
        bool local = false;
        for (std::uint64_t i = begin; i < end; ++i) {
          if (store.outcomes().load(i) != Outcome::Draw) continue;
          const State s = ci.state_in_class(id, i, side.opos);
          bool all_win = true;
          for (const MoveEntry& m : moves) {
            // Children outside the pair are all Win for a state still marked Draw.
            if (!Board::move_allowed(s, m) || !(s.bits & m.taken_x)) continue;
            const State c = swap_players(Board::apply_entry(s, m));
            if (partner.outcomes().load(ci.index_in_class(c, side.partner->opos)) !=
                Outcome::Win) {
              all_win = false;
              break;
            }
          }
          if (!all_win || !store.outcomes().upgrade(i, outcome_set(Outcome::Draw), Outcome::Loss))
            continue;
          local = true;
          board.for_each_parent(s, ParentKind::TakenOwn, [&](State p) {
            mark_win(partner, ci.index_in_class(p, side.partner->opos), 0, false);
          });
        }
        if (local) changed = true;
      });
    }
    ++sweeps;
  } while (changed);
  return sweeps;
}

int max_step(const ClassStore* store) {
  if (!store || !store->has_steps()) return 0;
  int m = 0;
  for (std::uint8_t v : store->steps().bytes())
    if (v != kNoStep) m = std::max<int>(m, v);
  return m;
}

// Level d admits Loss states whose children are all Win with steps <= d-1;
// every such step is final before level d starts.
int sweep_levels(std::vector<Side>& sides, const ClassIndex& ci, int threads, bool known) {
  const Board& board = ci.board();
  const auto& moves = board.move_table();
  std::atomic<int> horizon = 0;
  for (const Side& side : sides)
    horizon = std::max({horizon.load(), max_step(side.store), max_step(side.cross)});

  int level = 1;
  for (;; ++level) {
    std::atomic<bool> changed = false;
    for (Side& side : sides) {
      ClassStore& store = *side.store;
      ClassStore& partner = *side.partner->store;
      const ClassId id = store.id();
      parallel_for(store.size(), threads, [&](std::uint64_t begin, std::uint64_t end) {
        bool local = false;
        int local_horizon = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
          const Outcome cur = store.outcomes().load(i);
          if (known ? (cur != Outcome::Loss || store.steps().load(i) != kNoStep)
                    : cur != Outcome::Draw)
            continue;
          const State s = ci.state_in_class(id, i, side.opos);
          int deepest = 0;
          bool ready = true;
          for (const MoveEntry& m : moves) {
            if (!Board::move_allowed(s, m)) continue;
            const State c = swap_players(Board::apply_entry(s, m));
            const bool own = s.bits & m.taken_x;
            const ClassStore& cs = own ? partner : *side.cross;
            const std::uint64_t ix =
                ci.index_in_class(c, own ? side.partner->opos : side.cross_opos);
            const int step = cs.steps().load(ix);
            if (cs.outcomes().load(ix) != Outcome::Win || step >= level) {
              ready = false;
              break;
            }
            deepest = std::max(deepest, step);
          }
          if (!ready) continue;
          if (!known &&
              !store.outcomes().upgrade(i, outcome_set(Outcome::Draw), Outcome::Loss))
            continue;
          store.steps().lower_to(i, checked_step(deepest + 1));
          local = true;
          local_horizon = std::max(local_horizon, deepest + 2);
          board.for_each_parent(s, ParentKind::TakenOwn, [&](State p) {
            mark_win(partner, ci.index_in_class(p, side.partner->opos), deepest + 2, known);
          });
        }
        if (local) changed = true;
        int h = horizon.load();
        while (local_horizon > h && !horizon.compare_exchange_weak(h, local_horizon)) {
        }
      });
    }
    if (!changed && level > horizon.load()) break;
  }
  return level;
}

void tally(const ClassStore& store, ClassSummary& out) {
  out.id = store.id();
  out.entries = store.size();
  out.win = out.loss = out.draw = 0;
  for (std::uint64_t i = 0; i < store.size(); ++i) {
    switch (store.outcomes().load(i)) {
      case Outcome::Win: ++out.win; break;
      case Outcome::Loss: ++out.loss; break;
      default: ++out.draw; break;
    }
  }
}

int run_pair(PairStores& pair, int threads, bool known) {
  const ClassIndex& ci = ClassIndex::get(pair.first->n());
  auto sides = make_sides(pair, ci);
  terminal_pass_impl(sides, ci, threads, known);
  for (Side& side : sides)
    if (side.cross) cross_pass_impl(*side.store, *side.cross, threads, known);
  const bool steps = pair.first->has_steps();
  const int iterations =
      steps ? sweep_levels(sides, ci, threads, known) : sweep_outcomes(sides, ci, threads);
  for (Side& side : sides) {
    relabel_transient(*side.store);
    if (known) {
      for (std::uint64_t i = 0; i < side.store->size(); ++i)
        if (side.store->outcomes().load(i) != Outcome::Draw &&
            side.store->steps().load(i) == kNoStep)
          throw StoreError("inconsistent database: decided state without a step in class " +
                           side.store->id().str());
    }
  }
  return iterations;
}

void validate(const SolveConfig& cfg) {
  if (!Board::supported(cfg.n)) throw std::invalid_argument("unsupported size " + std::to_string(cfg.n));
  if (cfg.threads < 1) throw std::invalid_argument("thread count must be at least 1");
  if (cfg.out_dir.empty()) throw std::invalid_argument("output directory required");
  if (cfg.min_tiles < 0 || cfg.min_tiles > cfg.n * cfg.n)
    throw std::invalid_argument("min_tiles out of range");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ManifestEntry entry_from(const ClassSummary& s, std::uint32_t crc) {
  return ManifestEntry{s.id, s.entries, crc, s.win, s.loss, s.draw};
}

ClassSummary summary_from(const ManifestEntry& e) {
  ClassSummary s;
  s.id = e.id;
  s.entries = e.entries;
  s.win = e.win;
  s.loss = e.loss;
  s.draw = e.draw;
  s.resumed = true;
  return s;
}

}  // namespace

void terminal_pass(PairStores& pair, int threads) {
  const ClassIndex& ci = ClassIndex::get(pair.first->n());
  auto sides = make_sides(pair, ci);
  terminal_pass_impl(sides, ci, threads, false);
}

void cross_class_pass(ClassStore& target, const ClassStore& children, int threads) {
  cross_pass_impl(target, children, threads, false);
}

int inpair_iterate(PairStores& pair, int threads) {
  const ClassIndex& ci = ClassIndex::get(pair.first->n());
  auto sides = make_sides(pair, ci);
  const int iterations = pair.first->has_steps() ? sweep_levels(sides, ci, threads, false)
                                                 : sweep_outcomes(sides, ci, threads);
  for (Side& side : sides) relabel_transient(*side.store);
  return iterations;
}

int solve_pair(PairStores& pair, int threads) { return run_pair(pair, threads, false); }

std::vector<ClassId> pair_schedule(int n, int min_tiles) {
  std::vector<ClassId> out;
  for (int tiles = n * n; tiles >= min_tiles; --tiles)
    for (int x = 0; x <= tiles / 2; ++x) out.push_back({x, tiles - x});
  return out;
}

SolveSummary solve(const SolveConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const int cells = cfg.n * cfg.n;
  const fs::path dir = cfg.out_dir;
  fs::create_directories(dir);
  ClassIndex::get(cfg.n);

  Manifest manifest;
  if (cfg.resume && fs::exists(dir / kManifestName)) {
    manifest = read_manifest(dir);
    if (manifest.n != cfg.n || manifest.with_steps != cfg.with_steps)
      throw StoreError("existing manifest in " + dir.string() +
                       " was written for a different configuration");
  }
  manifest.n = cfg.n;
  manifest.with_steps = cfg.with_steps;
  manifest.threads = cfg.threads;
  manifest.min_tiles = cfg.min_tiles;
  manifest.complete = false;

  SolveSummary summary;
  summary.n = cfg.n;
  summary.threads = cfg.threads;
  summary.with_steps = cfg.with_steps;
  summary.min_tiles = cfg.min_tiles;

  auto done = [&](ClassId c) {
    const ManifestEntry* e = manifest.find(c);
    return e && fs::exists(dir / class_file_name(c));
  };

  for (const ClassId first : pair_schedule(cfg.n, cfg.min_tiles)) {
    const ClassId second{first.o, first.x};
    const bool single = first == second;
    if (cfg.resume && done(first) && done(second)) {
      summary.classes.push_back(summary_from(*manifest.find(first)));
      if (!single) summary.classes.push_back(summary_from(*manifest.find(second)));
      if (cfg.on_class) cfg.on_class(summary.classes.back());
      continue;
    }
    const auto tp = std::chrono::steady_clock::now();
    ClassStore a = allocate(cfg.n, first, cfg.with_steps);
    ClassStore b = single ? ClassStore() : allocate(cfg.n, second, cfg.with_steps);
    if (cfg.seal_terminals) {
      a.enable_sealing();
      if (!single) b.enable_sealing();
    }
    ClassStore ca, cb;
    PairStores pair{&a, single ? &a : &b, nullptr, nullptr};
    if (first.tiles() < cells) {
      auto load_child = [&](ClassId c) {
        const fs::path p = dir / class_file_name(c);
        if (!fs::exists(p)) throw StoreError("child class " + c.str() + " missing in " + dir.string());
        return load(p);
      };
      ca = load_child({first.o, first.x + 1});
      pair.first_children = &ca;
      if (single) {
        pair.second_children = &ca;
      } else {
        cb = load_child({second.o, second.x + 1});
        pair.second_children = &cb;
      }
    }
    const int iterations = run_pair(pair, cfg.threads, false);
    const double secs = seconds_since(tp);

    for (ClassStore* s : single ? std::vector<ClassStore*>{&a} : std::vector<ClassStore*>{&a, &b}) {
      ClassSummary cs;
      tally(*s, cs);
      cs.iterations = iterations;
      cs.seconds = secs;
      const std::uint32_t crc = save(*s, dir / class_file_name(s->id()));
      manifest.upsert(entry_from(cs, crc));
      summary.classes.push_back(cs);
      if (cfg.on_class) cfg.on_class(cs);
    }
    manifest.totals = manifest.recompute_totals();
    write_manifest(dir, manifest);
  }

  summary.totals = manifest.recompute_totals();
  summary.wall_seconds = seconds_since(t0);
  manifest.totals = summary.totals;
  manifest.complete = cfg.min_tiles == 0;
  manifest.wall_seconds += summary.wall_seconds;
  write_manifest(dir, manifest);
  return summary;
}

SolveSummary compute_steps(const fs::path& db_dir, int threads) {
  if (threads < 1) throw std::invalid_argument("thread count must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  Manifest manifest = read_manifest(db_dir);
  const int n = manifest.n;
  const int cells = n * n;
  SolveSummary summary;
  summary.n = n;
  summary.threads = threads;
  summary.with_steps = true;
  summary.min_tiles = manifest.min_tiles;

  auto path_of = [&](ClassId c) { return db_dir / class_file_name(c); };
  auto load_outcomes = [&](ClassId c) {
    if (!manifest.find(c)) throw StoreError("missing outcome class " + c.str());
    ClassStore raw = load(path_of(c));
    ClassStore s(n, c, raw.size(), true);
    std::copy(raw.outcomes().bytes().begin(), raw.outcomes().bytes().end(),
              s.outcomes().bytes().begin());
    return s;
  };

  // Step files are written next to the outcome files and swapped in at the end
  // so that a failed derivation leaves the database untouched.
  const fs::path work = db_dir / "steps.work";
  fs::create_directories(work);
  std::vector<ClassId> written;
  for (const ClassId first : pair_schedule(n, manifest.min_tiles)) {
    const ClassId second{first.o, first.x};
    const bool single = first == second;
    const auto tp = std::chrono::steady_clock::now();
    ClassStore a = load_outcomes(first);
    ClassStore b = single ? ClassStore() : load_outcomes(second);
    ClassStore ca, cb;
    PairStores pair{&a, single ? &a : &b, nullptr, nullptr};
    if (first.tiles() < cells) {
      ca = load(work / class_file_name({first.o, first.x + 1}));
      pair.first_children = &ca;
      if (single) {
        pair.second_children = &ca;
      } else {
        cb = load(work / class_file_name({second.o, second.x + 1}));
        pair.second_children = &cb;
      }
    }
    const int iterations = run_pair(pair, threads, true);
    for (ClassStore* s : single ? std::vector<ClassStore*>{&a} : std::vector<ClassStore*>{&a, &b}) {
      ClassSummary cs;
      tally(*s, cs);
      cs.iterations = iterations;
      cs.seconds = seconds_since(tp);
      const std::uint32_t crc = save(*s, work / class_file_name(s->id()));
      manifest.upsert(entry_from(cs, crc));
      summary.classes.push_back(cs);
      written.push_back(s->id());
    }
  }
  for (ClassId c : written) fs::rename(work / class_file_name(c), path_of(c));
  fs::remove_all(work);
  manifest.with_steps = true;
  manifest.totals = manifest.recompute_totals();
  summary.totals = manifest.totals;
  summary.wall_seconds = seconds_since(t0);
  write_manifest(db_dir, manifest);
  return summary;
}

std::string SolveSummary::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["threads"] = threads;
  j["with_steps"] = with_steps;
  j["min_tiles"] = min_tiles;
  j["wall_seconds"] = wall_seconds;
  j["totals"] = {{"win", totals.win}, {"loss", totals.loss}, {"draw", totals.draw}};
  nlohmann::json cls = nlohmann::json::array();
  for (const auto& c : classes)
    cls.push_back({{"x", c.id.x},
                   {"o", c.id.o},
                   {"entries", c.entries},
                   {"win", c.win},
                   {"loss", c.loss},
                   {"draw", c.draw},
                   {"iterations", c.iterations},
                   {"seconds", c.seconds},
                   {"resumed", c.resumed}});
  j["classes"] = std::move(cls);
  return j.dump(2);
}

}  // namespace quixo
