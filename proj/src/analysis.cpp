#include "quixo/analysis.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cstring>
#include <fstream>
#include <random>
#include <mutex>
#include <sstream>
#include <thread>

#include "quixo/oracle.hpp"

namespace quixo {

namespace fs = std::filesystem;

namespace {

// Per byte: how many of its four 2-bit slots hold Draw, Win, Loss.
constexpr auto kSlotCounts = [] {
  std::array<std::array<std::uint8_t, 4>, 256> t{};
  for (int b = 0; b < 256; ++b)
    for (int k = 0; k < 4; ++k) ++t[b][(b >> (2 * k)) & 3];
  return t;
}();

std::vector<ClassId> classes_by_tiles(const Database& db) {
  std::vector<ClassId> ids;
  for (const ManifestEntry& e : db.manifest().classes) ids.push_back(e.id);
  std::sort(ids.begin(), ids.end(), [](ClassId a, ClassId b) {
    return a.tiles() != b.tiles() ? a.tiles() < b.tiles() : a < b;
  });
  return ids;
}

std::string pct(std::uint64_t part, std::uint64_t whole) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", whole ? 100.0 * part / whole : 0.0);
  return buf;
}

}  // namespace

TallyReport tally(const Database& db) {
  TallyReport r;
  r.n = db.n();
  r.complete = db.manifest().complete;
  for (ClassId c : classes_by_tiles(db)) {
    const auto store = db.class_store(c);
    ClassTally t{c, store->size()};
    const auto bytes = store->outcomes().bytes();
    const std::uint64_t full = store->size() / 4;
    std::array<std::uint64_t, 4> counts{};
    for (std::uint64_t i = 0; i < full; ++i)
      for (int k = 0; k < 4; ++k) counts[k] += kSlotCounts[bytes[i]][k];
    for (std::uint64_t i = full * 4; i < store->size(); ++i)
      ++counts[static_cast<int>(store->outcomes().get(i))];
    if (counts[static_cast<int>(Outcome::WinOrDraw)])
      throw StoreError("class " + c.str() + " holds transient outcomes");
    t.draw = counts[static_cast<int>(Outcome::Draw)];
    t.win = counts[static_cast<int>(Outcome::Win)];
    t.loss = counts[static_cast<int>(Outcome::Loss)];
    r.totals.win += t.win;
    r.totals.loss += t.loss;
    r.totals.draw += t.draw;
    r.classes.push_back(t);
  }
  return r;
}

std::string per_class_csv(const TallyReport& report) {
  std::ostringstream out;
  out << "x,o,entries,win,loss,draw,win_pct,loss_pct,draw_pct\n";
  for (const ClassTally& t : report.classes)
    out << t.id.x << ',' << t.id.o << ',' << t.entries << ',' << t.win << ',' << t.loss << ','
        << t.draw << ',' << pct(t.win, t.entries) << ',' << pct(t.loss, t.entries) << ','
        << pct(t.draw, t.entries) << '\n';
  return out.str();
}

std::vector<StepRow> steps_histogram(const Database& db) {
  if (!db.has_steps()) throw StoreError("database at " + db.dir().string() + " has no step data");
  std::array<std::uint64_t, 256> win{}, loss{};
  for (ClassId c : classes_by_tiles(db)) {
    const auto store = db.class_store(c);
    const auto& oc = store->outcomes();
    const auto& st = store->steps();
    for (std::uint64_t i = 0; i < store->size(); ++i) {
      const Outcome o = oc.load(i);
      if (o == Outcome::Win) ++win[st.load(i)];
      else if (o == Outcome::Loss) ++loss[st.load(i)];
    }
  }
  if (win[kNoStep] || loss[kNoStep]) throw StoreError("decided state without a step");
  int deepest = 0;
  for (int s = 0; s < kNoStep; ++s)
    if (win[s] || loss[s]) deepest = s;
  std::vector<StepRow> rows;
  for (int s = 0; s <= deepest + 1; ++s) rows.push_back({s, win[s], loss[s]});
  return rows;
}

// ---- reachability ----

namespace {

constexpr char kReachMagic[4] = {'Q', 'X', 'O', 'R'};
constexpr std::uint32_t kReachVersion = 1;
constexpr std::size_t kReachHeader = 32;

}  // namespace

Reachability::Reachability(int n) : n_(n), index_(&ClassIndex::get(n)) {
  const int cells = n * n;
  class_offset_.assign(static_cast<std::size_t>((cells + 1) * (cells + 1)), 0);
  for (ClassId c : index_->all_classes()) {
    class_offset_[c.x * (cells + 1) + c.o] = universe_;
    universe_ += index_->class_size(c);
  }
  bits_.assign((universe_ + 63) / 64, 0);
}

std::uint64_t Reachability::global_index(State s) const {
  const ClassId c = ClassIndex::class_of(s);
  const int cells = n_ * n_;
  return class_offset_[c.x * (cells + 1) + c.o] + index_->index_in_class(s, index_->o_positions(c));
}

bool Reachability::contains(State s) const {
  if (!index_->board().valid(s)) throw std::invalid_argument("invalid state");
  return test(global_index(s));
}

Reachability Reachability::compute(int n) {
  if (n > 4) throw std::invalid_argument("reachability bitmap needs 3^(n*n) bits; n <= 4 only");
  Reachability r(n);
  const Board& b = Board::get(n);
  std::vector<State> frontier{State{0}}, next;
  r.set(r.global_index(State{0}));
  r.count_ = 1;
  while (!frontier.empty()) {
    next.clear();
    for (State s : frontier) {
      if (b.is_terminal(s)) continue;
      b.for_each_child(s, [&](const MoveEntry&, State c) {
        const std::uint64_t i = r.global_index(c);
        if (r.test(i)) return;
        r.set(i);
        ++r.count_;
        next.push_back(c);
      });
    }
    frontier.swap(next);
  }
  return r;
}

void Reachability::save(const fs::path& path) const {
  std::array<char, kReachHeader> h{};
  std::memcpy(h.data(), kReachMagic, 4);
  const std::uint32_t version = kReachVersion;
  std::memcpy(h.data() + 4, &version, 4);
  h[8] = static_cast<char>(n_);
  std::memcpy(h.data() + 12, &universe_, 8);
  std::memcpy(h.data() + 20, &count_, 8);
  const auto* payload = reinterpret_cast<const unsigned char*>(bits_.data());
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, payload, static_cast<uInt>(bits_.size() * sizeof(std::uint64_t))));
  std::memcpy(h.data() + 28, &crc, 4);

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    out.write(h.data(), h.size());
    out.write(reinterpret_cast<const char*>(payload),
              static_cast<std::streamsize>(bits_.size() * sizeof(std::uint64_t)));
    if (!out) throw StoreError("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

Reachability Reachability::load(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  std::array<char, kReachHeader> h{};
  if (!in.read(h.data(), h.size())) throw StoreError("truncated reachability file");
  if (std::memcmp(h.data(), kReachMagic, 4) != 0) throw StoreError("not a reachability file");
  std::uint32_t version = 0, crc = 0;
  std::memcpy(&version, h.data() + 4, 4);
  if (version != kReachVersion) throw StoreError("unsupported reachability file version");
  const int n = h[8];
  if (!Board::supported(n)) throw StoreError("reachability file names unsupported size");
  Reachability r(n);
  std::uint64_t universe = 0;
  std::memcpy(&universe, h.data() + 12, 8);
  std::memcpy(&r.count_, h.data() + 20, 8);
  std::memcpy(&crc, h.data() + 28, 4);
  if (universe != r.universe_) throw StoreError("reachability file size mismatch");
  const auto bytes = static_cast<std::streamsize>(r.bits_.size() * sizeof(std::uint64_t));
  if (!in.read(reinterpret_cast<char*>(r.bits_.data()), bytes))
    throw StoreError("truncated reachability file");
  const auto* payload = reinterpret_cast<const unsigned char*>(r.bits_.data());
  if (crc32(0L, payload, static_cast<uInt>(bytes)) != crc)
    throw StoreError("reachability checksum mismatch");
  return r;
}

// ---- extremal states ----

std::vector<State> find_extremal(const Database& db, const StatePredicate& pred, std::size_t limit) {
  std::vector<State> out;
  int found_tiles = -1;
  const ClassIndex& ci = db.index();
  for (ClassId c : classes_by_tiles(db)) {
    if (found_tiles >= 0 && c.tiles() > found_tiles) break;
    const auto store = db.class_store(c);
    const std::uint64_t opos = ci.o_positions(c);
    for (std::uint64_t i = 0; i < store->size(); ++i) {
      Verdict v{store->outcomes().load(i), std::nullopt};
      if (store->has_steps() && v.outcome != Outcome::Draw) v.step = store->steps().load(i);
      const State s = ci.state_in_class(c, i, opos);
      if (!pred(s, v)) continue;
      found_tiles = c.tiles();
      if (out.size() < limit) out.push_back(s);
    }
  }
  return out;
}

// ---- verification ----

namespace {

class Reporter {
 public:
  void fail(std::string msg) {
    violations_.fetch_add(1, std::memory_order_relaxed);
    std::lock_guard lock(mu_);
    if (samples_.size() < 20) samples_.push_back(std::move(msg));
  }
  void finish(CheckReport& r) {
    r.violations = violations_.load();
    r.samples = samples_;
  }

 private:
  std::atomic<std::uint64_t> violations_{0};
  std::mutex mu_;
  std::vector<std::string> samples_;
};

std::string describe(const Board& b, State s, const Verdict& v) {
  std::string out = b.render(s) + " stored " + to_string(v.outcome);
  if (v.step) out += " " + std::to_string(*v.step);
  return out;
}

// Checks one stored value against its children. Child classes are fetched
// once per source class.
class LocalCheck {
 public:
  LocalCheck(const Database& db, ClassId c)
      : db_(db), ci_(db.index()), steps_(db.has_steps()), store_(db.class_store(c)),
        same_{c.o, c.x}, opos_(ci_.o_positions(c)), same_opos_(ci_.o_positions(same_)),
        more_opos_(ci_.o_positions({c.o, c.x + 1})) {
    if (db.covers(same_)) same_store_ = db.class_store(same_);
    if (db.covers({c.o, c.x + 1})) more_store_ = db.class_store({c.o, c.x + 1});
  }

  std::uint64_t size() const { return store_->size(); }

  void check(std::uint64_t i, Reporter& rep) const {
    const Board& b = db_.board();
    const State s = ci_.state_in_class(store_->id(), i, opos_);
    Verdict v{store_->outcomes().load(i), std::nullopt};
    if (steps_ && v.outcome != Outcome::Draw) v.step = store_->steps().load(i);
    if (steps_ && v.outcome == Outcome::Draw && store_->steps().load(i) != kNoStep)
      rep.fail(describe(b, s, v) + ": Draw with a step");

    if (auto term = b.terminal_outcome(s)) {
      if (v.outcome != *term || (steps_ && v.step != 0))
        rep.fail(describe(b, s, v) + ": terminal value should be " + to_string(*term) + " 0");
      return;
    }
    int children = 0, loss_kids = 0, draw_kids = 0, missing = 0;
    int min_loss = 1 << 20, max_win = -1;
    b.for_each_child(s, [&](const MoveEntry&, State ch) {
      ++children;
      const bool in_same = ClassIndex::class_of(ch) == same_;
      const ClassStore* cs = in_same ? same_store_.get() : more_store_.get();
      if (!cs) {
        ++missing;
        return;
      }
      const std::uint64_t j = ci_.index_in_class(ch, in_same ? same_opos_ : more_opos_);
      const Outcome co = cs->outcomes().load(j);
      const int cstep = steps_ ? cs->steps().load(j) : 0;
      if (co == Outcome::Loss) {
        ++loss_kids;
        min_loss = std::min(min_loss, cstep);
      } else if (co == Outcome::Draw) {
        ++draw_kids;
      } else {
        max_win = std::max(max_win, cstep);
      }
    });
    if (missing) {
      rep.fail(describe(b, s, v) + ": child class missing from database");
      return;
    }
    switch (v.outcome) {
      case Outcome::Win:
        if (!loss_kids) rep.fail(describe(b, s, v) + ": Win without a Loss child");
        else if (steps_ && *v.step != min_loss + 1)
          rep.fail(describe(b, s, v) + ": expected step " + std::to_string(min_loss + 1));
        break;
      case Outcome::Loss:
        if (!children || loss_kids || draw_kids)
          rep.fail(describe(b, s, v) + ": Loss with a non-Win child");
        else if (steps_ && *v.step != max_win + 1)
          rep.fail(describe(b, s, v) + ": expected step " + std::to_string(max_win + 1));
        break;
      case Outcome::Draw:
        if (loss_kids || !draw_kids)
          rep.fail(describe(b, s, v) + ": Draw needs a Draw child and no Loss child");
        break;
      case Outcome::WinOrDraw:
        rep.fail(describe(b, s, v) + ": transient outcome persisted");
        break;
    }
  }

 private:
  const Database& db_;
  const ClassIndex& ci_;
  bool steps_;
  std::shared_ptr<const ClassStore> store_, same_store_, more_store_;
  ClassId same_;
  std::uint64_t opos_, same_opos_, more_opos_;
};

}  // namespace

CheckReport verify_soundness(const Database& db, int threads) {
  CheckReport report;
  Reporter rep;
  for (ClassId c : classes_by_tiles(db)) {
    const LocalCheck check(db, c);
    const auto shards = byte_aligned_shards(check.size(), std::max(threads, 1));
    {
      std::vector<std::jthread> pool;
      for (const auto& [lo, hi] : shards)
        pool.emplace_back([&, lo = lo, hi = hi] {
          for (std::uint64_t i = lo; i < hi; ++i) check.check(i, rep);
        });
    }
    report.checked += check.size();
  }
  rep.finish(report);
  return report;
}

CheckReport verify_sample(const Database& db, std::uint64_t samples, std::uint64_t seed) {
  std::vector<ClassId> ids = classes_by_tiles(db);
  std::vector<std::uint64_t> ends;
  std::uint64_t total = 0;
  for (ClassId c : ids) ends.push_back(total += db.manifest().find(c)->entries);
  std::vector<std::uint64_t> picks(samples);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint64_t> dist(0, total - 1);
  for (auto& p : picks) p = dist(rng);
  std::sort(picks.begin(), picks.end());

  CheckReport report;
  Reporter rep;
  std::size_t k = 0;
  std::uint64_t begin = 0;
  for (std::size_t ci = 0; ci < ids.size() && k < picks.size(); begin = ends[ci++]) {
    if (picks[k] >= ends[ci]) continue;
    const LocalCheck check(db, ids[ci]);
    for (; k < picks.size() && picks[k] < ends[ci]; ++k) check.check(picks[k] - begin, rep);
  }
  report.checked = samples;
  rep.finish(report);
  return report;
}

CheckReport compare_with_oracle(const Database& db, const std::vector<State>& seed) {
  const oracle::ExplicitGraph graph = oracle::build_closed_graph(db.n(), seed);
  const std::vector<oracle::Verdict> truth = oracle::solve_with_counters(graph);
  CheckReport report;
  Reporter rep;
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const State s = graph.states[i];
    const Verdict v = db.lookup(s);
    const oracle::Verdict& t = truth[i];
    bool same = v.outcome == t.outcome;
    if (same && db.has_steps() && t.outcome != Outcome::Draw) same = v.step == t.step;
    if (!same)
      rep.fail(describe(db.board(), s, v) + ": oracle says " + to_string(t.outcome) + " " +
               std::to_string(t.step));
  }
  report.checked = graph.size();
  rep.finish(report);
  return report;
}

}  // namespace quixo
