// quixo: solve, inspect and serve Quixo databases.
//
// Exit codes: 0 success, 1 usage error, 2 data error.

#include <CLI11.hpp>

#include <cstdlib>
#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "quixo/analysis.hpp"
#include "quixo/oracle.hpp"
#include "quixo/service.hpp"
#include "quixo/solver.hpp"
#include "quixo/strategy.hpp"

namespace fs = std::filesystem;
using namespace quixo;

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string grouped(std::uint64_t v) {
  std::string s = std::to_string(v);
  for (int i = static_cast<int>(s.size()) - 3; i > 0; i -= 3) s.insert(static_cast<std::size_t>(i), ",");
  return s;
}

std::string verdict_text(const Verdict& v) {
  std::string out = v.outcome == Outcome::Win ? "Win" : v.outcome == Outcome::Loss ? "Loss" : "Draw";
  if (v.step) out += " in " + std::to_string(*v.step);
  return out;
}

void require_size(int n) {
  if (!Board::supported(n)) throw UsageError("unsupported size " + std::to_string(n) + " (3, 4 or 5)");
}

State parse_for(const Database& db, const std::string& text) {
  int n = 0;
  State s;
  try {
    s = parse_state(text, &n);
  } catch (const ParseError& e) {
    throw UsageError(std::string("bad --state: ") + e.what());
  }
  if (n != db.n())
    throw UsageError("state is " + std::to_string(n) + "x" + std::to_string(n) + " but the database is " +
                     std::to_string(db.n()) + "x" + std::to_string(db.n()));
  return s;
}

Symbol active_of(const std::string& text) {
  auto t = text;
  while (!t.empty() && std::isspace(static_cast<unsigned char>(t.back()))) t.pop_back();
  return !t.empty() && t.back() == 'O' ? Symbol::O : Symbol::X;
}

// ---- subcommands ----

struct SolveArgs {
  int size = 0;
  std::string out;
  int threads = 1;
  bool steps = false;
  bool resume = false;
  int min_tiles = 0;
  bool seal = false;
  bool quiet = false;
  std::string json_out;
};

int run_solve(const SolveArgs& a) {
  require_size(a.size);
  if (a.threads < 1) throw UsageError("--threads must be at least 1");
  SolveConfig cfg;
  cfg.n = a.size;
  cfg.out_dir = a.out;
  cfg.threads = a.threads;
  cfg.with_steps = a.steps;
  cfg.resume = a.resume;
  cfg.min_tiles = a.min_tiles;
  cfg.seal_terminals = a.seal;
  if (!a.quiet)
    cfg.on_class = [](const ClassSummary& c) {
      std::cerr << "class " << c.id.str() << (c.resumed ? " (resumed)" : "") << ": " << grouped(c.entries)
                << " states, win " << grouped(c.win) << " loss " << grouped(c.loss) << " draw "
                << grouped(c.draw) << ", " << c.iterations << " iterations, " << c.seconds << " s\n";
    };
  const SolveSummary sum = solve(cfg);
  std::cout << "solved " << a.size << "x" << a.size << " into " << a.out << "\n"
            << "classes " << sum.classes.size() << ", wall " << sum.wall_seconds << " s, threads "
            << sum.threads << "\n"
            << "win " << grouped(sum.totals.win) << "\nloss " << grouped(sum.totals.loss) << "\ndraw "
            << grouped(sum.totals.draw) << "\n";
  if (sum.min_tiles == 0) {
    const auto db = Database::open(a.out);
    std::cout << "initial state: " << verdict_text(db->lookup(State{0})) << "\n";
  }
  if (!a.json_out.empty()) std::ofstream(a.json_out) << sum.to_json() << "\n";
  return 0;
}

int run_steps(const std::string& dir, int threads) {
  const SolveSummary sum = compute_steps(dir, threads);
  std::cout << "steps derived for " << sum.classes.size() << " classes in " << sum.wall_seconds << " s\n";
  return 0;
}

struct StatsArgs {
  std::string db;
  bool per_class = false;
  bool histogram = false;
  std::string csv;
};

int run_stats(const StatsArgs& a) {
  const auto db = Database::open(a.db);
  const TallyReport t = tally(*db);
  std::cout << "size " << t.n << (t.complete ? "" : " (partial: tiles >= " +
                                                        std::to_string(db->manifest().min_tiles) + ")")
            << "\nwin " << grouped(t.totals.win) << "\nloss " << grouped(t.totals.loss) << "\ndraw "
            << grouped(t.totals.draw) << "\ntotal " << grouped(t.totals.sum()) << "\n";
  if (t.totals != db->manifest().totals) {
    std::cerr << "error: class payloads disagree with manifest totals\n";
    return kData;
  }
  if (a.per_class) {
    std::cout << "\nclass      entries          win          loss         draw\n";
    for (const ClassTally& c : t.classes) {
      char line[160];
      std::snprintf(line, sizeof line, "%-8s %12s %12s %12s %12s\n", c.id.str().c_str(),
                    grouped(c.entries).c_str(), grouped(c.win).c_str(), grouped(c.loss).c_str(),
                    grouped(c.draw).c_str());
      std::cout << line;
    }
  }
  if (a.histogram) {
    std::cout << "\nstep          win         loss\n";
    for (const StepRow& r : steps_histogram(*db)) {
      char line[96];
      std::snprintf(line, sizeof line, "%4d %12s %12s\n", r.step, grouped(r.win).c_str(),
                    grouped(r.loss).c_str());
      std::cout << line;
    }
  }
  if (!a.csv.empty()) {
    std::ofstream out(a.csv);
    if (!out) throw StoreError("cannot write " + a.csv);
    out << per_class_csv(t);
  }
  return 0;
}

int run_eval(const std::string& dir, const std::string& text, bool moves) {
  const auto db = Database::open(dir);
  const State s = parse_for(*db, text);
  const Evaluation e = evaluate(*db, s);
  std::cout << verdict_text({e.outcome, e.step}) << (e.terminal ? " (terminal)" : "") << "\n";
  if (moves) {
    const Symbol next = active_of(text) == Symbol::X ? Symbol::O : Symbol::X;
    for (const MoveEvaluation& m : e.moves)
      std::cout << "  cell " << int(m.move.cell) << " " << to_string(m.move.end) << " -> "
                << db->board().render(m.child, next) << "  "
                << verdict_text({m.mover_outcome, m.child_step}) << "\n";
  }
  return 0;
}

int run_bestmove(const std::string& dir, const std::string& text, const std::string& policy_name,
                 std::uint64_t seed) {
  const auto policy = policy_from_string(policy_name);
  if (!policy) throw UsageError("unknown policy " + policy_name);
  const auto db = Database::open(dir);
  const State s = parse_for(*db, text);
  if (db->board().is_terminal(s)) throw UsageError("terminal state has no moves");
  std::mt19937_64 rng(seed);
  const Evaluation e = evaluate(*db, s);
  const MoveEvaluation& m = choose_move(e, *policy, &rng);
  const Symbol next = active_of(text) == Symbol::X ? Symbol::O : Symbol::X;
  std::cout << "cell " << int(m.move.cell) << " (row " << m.move.cell / db->n() << ", col "
            << m.move.cell % db->n() << ") " << to_string(m.move.end) << "\n"
            << "board after: " << db->board().render(m.child, next) << "\n"
            << "opponent then: " << verdict_text({m.child_outcome, m.child_step}) << "\n";
  return 0;
}

int run_reach(int size, const std::string& out, const std::vector<std::string>& checks) {
  require_size(size);
  if (size > 4) throw UsageError("reachability is available for sizes 3 and 4");
  const Reachability r = Reachability::compute(size);
  std::cout << "reachable " << grouped(r.count()) << " of " << grouped(r.universe()) << "\n";
  if (!out.empty()) r.save(out);
  for (const std::string& text : checks) {
    int n = 0;
    const State s = parse_state(text, &n);
    if (n != size) throw UsageError("--check state has the wrong size");
    std::cout << text << ": " << (r.contains(s) ? "reachable" : "unreachable") << "\n";
  }
  return 0;
}

struct SelfplayArgs {
  std::string db;
  std::string start;
  std::string policy = "auto";
  int cap = 200;
  std::uint64_t seed = 1;
};

int run_selfplay(const SelfplayArgs& a) {
  const auto policy = policy_from_string(a.policy);
  if (!policy) throw UsageError("unknown policy " + a.policy);
  if (a.cap < 1) throw UsageError("--cap must be positive");
  const auto db = Database::open(a.db);
  SelfplayOptions opts;
  opts.policy = *policy;
  opts.cap = a.cap;
  opts.seed = a.seed;
  if (!a.start.empty()) {
    opts.start = parse_for(*db, a.start);
    opts.first_mover = active_of(a.start);
  }
  std::cout << transcript_to_json(selfplay(*db, opts)) << "\n";
  return 0;
}

struct VerifyArgs {
  std::string db;
  bool oracle = false;
  int threads = 1;
  int oracle_min_tiles = -1;
  std::vector<std::string> oracle_classes;
  std::uint64_t sample = 0;
};

void print_samples(const CheckReport& r) {
  for (const std::string& s : r.samples) std::cout << "  " << s << "\n";
}

int run_verify(const VerifyArgs& a) {
  const auto db = Database::open(a.db);
  const CheckReport sound = a.sample ? verify_sample(*db, a.sample) : verify_soundness(*db, a.threads);
  std::cout << "soundness: " << grouped(sound.checked) << " states checked, " << grouped(sound.violations)
            << " violations\n";
  print_samples(sound);
  bool ok = sound.ok();
  if (a.oracle) {
    std::vector<State> seed;
    std::string scope;
    if (!a.oracle_classes.empty()) {
      for (const std::string& cls : a.oracle_classes) {
        int x = 0, o = 0;
        if (std::sscanf(cls.c_str(), "%d,%d", &x, &o) != 2) throw UsageError("--oracle-class wants X,O");
        const auto part = oracle::states_in_class(db->n(), x, o);
        seed.insert(seed.end(), part.begin(), part.end());
      }
      scope = "closure of the given classes";
    } else {
      if (db->n() == 5) throw UsageError("5x5 oracle runs need --oracle-class");
      int t = a.oracle_min_tiles;
      if (t < 0) t = db->n() == 3 ? 0 : 14;
      seed = t == 0 ? oracle::all_states(db->n()) : oracle::states_with_min_tiles(db->n(), t);
      scope = t == 0 ? "" : "with at least " + std::to_string(t) + " tiles";
    }
    const CheckReport cmp = compare_with_oracle(*db, seed);
    if (cmp.ok())
      std::cout << "oracle: all " << grouped(cmp.checked) << " states " << (scope.empty() ? "" : scope + " ")
                << "agree\n";
    else
      std::cout << "oracle: " << grouped(cmp.violations) << " of " << grouped(cmp.checked)
                << " states disagree\n";
    print_samples(cmp);
    ok = ok && cmp.ok();
  }
  return ok ? 0 : kData;
}

int run_extremal(const std::string& dir, const std::string& reach_path, std::size_t limit) {
  const auto db = Database::open(dir);
  std::optional<Reachability> reach;
  if (!reach_path.empty()) {
    reach = Reachability::load(reach_path);
    if (reach->n() != db->n()) throw UsageError("reachability file is for another size");
  }
  const auto found = find_extremal(
      *db,
      [&](State s, const Verdict& v) {
        return v.outcome != Outcome::Draw && (!reach || reach->contains(s));
      },
      limit);
  if (found.empty()) {
    std::cout << "no matching state\n";
    return 0;
  }
  const ClassId c = ClassIndex::class_of(found.front());
  std::cout << "fewest tiles: " << c.tiles() << " (" << found.size() << " states listed)\n";
  for (State s : found) std::cout << db->board().render(s) << "  " << verdict_text(db->lookup(s)) << "\n";
  return 0;
}

Service* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int run_serve(std::vector<std::string> dbs, const std::string& host, int port, const std::string& static_dir) {
  if (dbs.empty()) {
    if (const char* env = std::getenv("QUIXO_DB")) {
      std::stringstream ss(env);
      for (std::string item; std::getline(ss, item, ':');)
        if (!item.empty()) dbs.push_back(item);
    }
  }
  if (dbs.empty()) throw UsageError("no database: pass --db or set QUIXO_DB");
  std::vector<fs::path> paths(dbs.begin(), dbs.end());
  std::optional<fs::path> web;
  if (!static_dir.empty()) web = static_dir;
  Service svc(open_databases(paths), web);
  const int bound = svc.bind(host, port);
  if (bound < 0) throw StoreError("cannot bind " + host + ":" + std::to_string(port));
  std::cout << "listening on http://" << host << ":" << bound << std::endl;
  g_service = &svc;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  svc.run();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong solver for Quixo on 3x3, 4x4 and 5x5 boards"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "quixo 1.0");

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Solve all classes (or a tile slice) into a directory");
  solve_cmd->add_option("--size,-n", solve_args.size, "Board size")->required();
  solve_cmd->add_option("--out,-o", solve_args.out, "Output directory")->required();
  solve_cmd->add_option("--threads,-j", solve_args.threads, "Worker threads");
  solve_cmd->add_flag("--steps", solve_args.steps, "Also compute steps to the end of the game");
  solve_cmd->add_flag("--resume", solve_args.resume, "Skip classes already listed in the manifest");
  solve_cmd->add_option("--min-tiles", solve_args.min_tiles, "Only solve classes with at least this many tiles");
  solve_cmd->add_flag("--seal", solve_args.seal, "Reject any write to terminal entries");
  solve_cmd->add_flag("--quiet,-q", solve_args.quiet, "No per-class progress");
  solve_cmd->add_option("--json", solve_args.json_out, "Write the solve summary as JSON");

  std::string steps_db;
  int steps_threads = 1;
  auto* steps_cmd = app.add_subcommand("steps", "Derive step data for an outcome-only database");
  steps_cmd->add_option("--db", steps_db, "Database directory")->required();
  steps_cmd->add_option("--threads,-j", steps_threads, "Worker threads");

  StatsArgs stats_args;
  auto* stats_cmd = app.add_subcommand("stats", "Totals, per-class counts and step histogram");
  stats_cmd->add_option("--db", stats_args.db, "Database directory")->required();
  stats_cmd->add_flag("--per-class", stats_args.per_class, "Print per-class counts");
  stats_cmd->add_flag("--histogram", stats_args.histogram, "Print Win/Loss counts per step");
  stats_cmd->add_option("--csv", stats_args.csv, "Write per-class counts and percentages as CSV");

  std::string eval_db, eval_state;
  bool eval_moves = false;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate one position");
  eval_cmd->add_option("--db", eval_db, "Database directory")->required();
  eval_cmd->add_option("--state", eval_state, "Board string, e.g. \"..../..../..../.... X\"")->required();
  eval_cmd->add_flag("--moves", eval_moves, "List every legal move with its evaluation");

  std::string bm_db, bm_state, bm_policy = "auto";
  std::uint64_t bm_seed = 1;
  auto* bm_cmd = app.add_subcommand("bestmove", "Pick a move under a policy");
  bm_cmd->add_option("--db", bm_db, "Database directory")->required();
  bm_cmd->add_option("--state", bm_state, "Board string")->required();
  bm_cmd->add_option("--policy", bm_policy, "fastest_win, stubborn_loss, hold_draw, random_win or auto");
  bm_cmd->add_option("--seed", bm_seed, "Seed for random_win");

  int reach_size = 0;
  std::string reach_out;
  std::vector<std::string> reach_checks;
  auto* reach_cmd = app.add_subcommand("reach", "Count states reachable from the empty board");
  reach_cmd->add_option("--size,-n", reach_size, "Board size")->required();
  reach_cmd->add_option("--out", reach_out, "Write the reachability bitmap here");
  reach_cmd->add_option("--check", reach_checks, "Report whether these states are reachable");

  SelfplayArgs sp_args;
  auto* sp_cmd = app.add_subcommand("selfplay", "Play both sides and print the transcript as JSON");
  sp_cmd->add_option("--db", sp_args.db, "Database directory")->required();
  sp_cmd->add_option("--start", sp_args.start, "Starting board string (default: empty board, X first)");
  sp_cmd->add_option("--policy", sp_args.policy, "Policy for both sides");
  sp_cmd->add_option("--cap", sp_args.cap, "Stop with draw-cycle after this many moves");
  sp_cmd->add_option("--seed", sp_args.seed, "Seed for random_win");

  VerifyArgs v_args;
  auto* v_cmd = app.add_subcommand("verify", "Re-check every stored value against its children");
  v_cmd->add_option("--db", v_args.db, "Database directory")->required();
  v_cmd->add_flag("--oracle", v_args.oracle, "Also compare with the brute-force oracle");
  v_cmd->add_option("--threads,-j", v_args.threads, "Worker threads");
  v_cmd->add_option("--sample", v_args.sample, "Check this many random states instead of all");
  v_cmd->add_option("--oracle-min-tiles", v_args.oracle_min_tiles, "Oracle seed: states with at least this many tiles");
  v_cmd->add_option("--oracle-class", v_args.oracle_classes, "Oracle seed: every state of class X,O");

  std::string ex_db, ex_reach;
  std::size_t ex_limit = 20;
  auto* ex_cmd = app.add_subcommand("extremal", "Fewest-tile states that are not Draw");
  ex_cmd->add_option("--db", ex_db, "Database directory")->required();
  ex_cmd->add_option("--reachable", ex_reach, "Only reachable states (bitmap written by reach --out)");
  ex_cmd->add_option("--limit", ex_limit, "Maximum states to list");

  std::vector<std::string> serve_dbs;
  std::string serve_host = "127.0.0.1", serve_static;
  int serve_port = 8080;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/JSON evaluation service");
  serve_cmd->add_option("--db", serve_dbs, "Database directories (default: QUIXO_DB, ':'-separated)");
  serve_cmd->add_option("--host", serve_host, "Listen address");
  serve_cmd->add_option("--port", serve_port, "Listen port (0 picks a free one)");
  serve_cmd->add_option("--static", serve_static, "Directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);
    if (*steps_cmd) return run_steps(steps_db, steps_threads);
    if (*stats_cmd) return run_stats(stats_args);
    if (*eval_cmd) return run_eval(eval_db, eval_state, eval_moves);
    if (*bm_cmd) return run_bestmove(bm_db, bm_state, bm_policy, bm_seed);
    if (*reach_cmd) return run_reach(reach_size, reach_out, reach_checks);
    if (*sp_cmd) return run_selfplay(sp_args);
    if (*v_cmd) return run_verify(v_args);
    if (*ex_cmd) return run_extremal(ex_db, ex_reach, ex_limit);
    if (*serve_cmd) return run_serve(serve_dbs, serve_host, serve_port, serve_static);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const PolicyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
