#include "quixo/service.hpp"

#include <httplib.h>

#include <cctype>
#include <json.hpp>
#include <random>
#include <variant>

#include "quixo/strategy.hpp"

namespace quixo {

namespace fs = std::filesystem;
using nlohmann::json;

struct Service::Server {
  httplib::Server http;
};

namespace {

ApiResponse error(int status, const std::string& msg) {
  return {status, json{{"error", msg}, {"status", status}}.dump()};
}

json step_json(const std::optional<int>& s) { return s ? json(*s) : json(nullptr); }

// Resolved request target: the normalized state, who is really to move, and
// the database to answer from.
struct Target {
  State state;
  Symbol to_move = Symbol::X;
  const Database* db = nullptr;
};

std::variant<Target, ApiResponse> resolve(const std::map<int, std::shared_ptr<const Database>>& dbs,
                                          const QueryParams& q) {
  const auto st = q.find("state");
  if (st == q.end() || st->second.empty()) return error(400, "missing state parameter");
  std::string text = st->second;
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();

  int n = 0;
  Target t;
  try {
    t.state = parse_state(text, &n);
  } catch (const std::exception& e) {
    return error(400, std::string("malformed state: ") + e.what());
  }
  t.to_move = text.back() == 'O' ? Symbol::O : Symbol::X;
  if (const auto sz = q.find("size"); sz != q.end()) {
    int requested = 0;
    try {
      requested = std::stoi(sz->second);
    } catch (const std::exception&) {
      return error(400, "size must be an integer");
    }
    if (requested != n) return error(400, "state is " + std::to_string(n) + "x" + std::to_string(n) +
                                              " but size is " + sz->second);
  }
  const auto it = dbs.find(n);
  if (it == dbs.end()) return error(404, "no database for size " + std::to_string(n));
  t.db = it->second.get();
  return t;
}

Symbol other(Symbol s) { return s == Symbol::X ? Symbol::O : Symbol::X; }

json move_json(const Board& b, const MoveEvaluation& m, Symbol to_move) {
  return json{{"cell", m.move.cell},
              {"row", m.move.cell / b.n()},
              {"col", m.move.cell % b.n()},
              {"insert_end", to_string(m.move.end)},
              {"board_after", b.render(m.child, other(to_move))},
              {"outcome", to_string(m.mover_outcome)},
              {"child_outcome", to_string(m.child_outcome)},
              {"step", step_json(m.child_step)}};
}

// Database lookups throw StoreError when a class is outside a partial database.
template <typename Fn>
ApiResponse guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const StoreError& e) {
    return error(404, e.what());
  } catch (const PolicyError& e) {
    return error(422, e.what());
  } catch (const std::exception& e) {
    return error(500, e.what());
  }
}

}  // namespace

Service::Service(std::map<int, std::shared_ptr<const Database>> dbs,
                 std::optional<fs::path> static_dir)
    : dbs_(std::move(dbs)), static_dir_(std::move(static_dir)), server_(std::make_unique<Server>()) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto params = [](const httplib::Request& req) {
    QueryParams q;
    for (const auto& [k, v] : req.params) q[k] = v;
    return q;
  };
  auto& http = server_->http;
  http.Get("/api/v1/eval", [this, reply, params](const httplib::Request& req, httplib::Response& res) {
    reply(res, eval(params(req)));
  });
  http.Get("/api/v1/bestmove",
           [this, reply, params](const httplib::Request& req, httplib::Response& res) {
             reply(res, bestmove(params(req)));
           });
  http.Get("/api/v1/meta", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, meta());
  });
  if (static_dir_ && !http.set_mount_point("/", static_dir_->string()))
    throw std::invalid_argument("static directory " + static_dir_->string() + " does not exist");
}

Service::~Service() = default;

ApiResponse Service::eval(const QueryParams& q) const {
  auto r = resolve(dbs_, q);
  if (auto* err = std::get_if<ApiResponse>(&r)) return *err;
  const Target t = std::get<Target>(r);
  return guarded([&] {
    const Evaluation e = evaluate(*t.db, t.state);
    const Board& b = t.db->board();
    json moves = json::array();
    for (const auto& m : e.moves) moves.push_back(move_json(b, m, t.to_move));
    json j{{"size", b.n()},
           {"state", b.render(t.state, t.to_move)},
           {"to_move", t.to_move == Symbol::X ? "X" : "O"},
           {"outcome", to_string(e.outcome)},
           {"step", step_json(e.step)},
           {"terminal", e.terminal},
           {"moves", moves}};
    return ApiResponse{200, j.dump()};
  });
}

ApiResponse Service::bestmove(const QueryParams& q) const {
  auto r = resolve(dbs_, q);
  if (auto* err = std::get_if<ApiResponse>(&r)) return *err;
  const Target t = std::get<Target>(r);
  Policy policy = Policy::Auto;
  if (const auto p = q.find("policy"); p != q.end()) {
    const auto parsed = policy_from_string(p->second);
    if (!parsed) return error(400, "unknown policy " + p->second);
    policy = *parsed;
  }
  std::uint64_t seed = 1;
  if (const auto s = q.find("seed"); s != q.end()) {
    try {
      seed = std::stoull(s->second);
    } catch (const std::exception&) {
      return error(400, "seed must be an unsigned integer");
    }
  }
  const Board& b = t.db->board();
  if (b.is_terminal(t.state)) return error(422, "terminal state has no moves");
  return guarded([&] {
    std::mt19937_64 rng(seed);
    const Evaluation e = evaluate(*t.db, t.state);
    const MoveEvaluation& m = choose_move(e, policy, &rng);
    json j = move_json(b, m, t.to_move);
    j["policy"] = to_string(policy);
    j["state"] = b.render(t.state, t.to_move);
    j["state_outcome"] = to_string(e.outcome);
    j["state_step"] = step_json(e.step);
    return ApiResponse{200, j.dump()};
  });
}

ApiResponse Service::meta() const {
  json sizes = json::array(), dbs = json::array();
  for (const auto& [n, db] : dbs_) {
    const Manifest& m = db->manifest();
    sizes.push_back(n);
    dbs.push_back({{"size", n},
                   {"path", db->dir().string()},
                   {"complete", m.complete},
                   {"with_steps", m.with_steps},
                   {"min_tiles", m.min_tiles},
                   {"classes", m.classes.size()},
                   {"totals", {{"win", m.totals.win}, {"loss", m.totals.loss}, {"draw", m.totals.draw}}}});
  }
  json policies = json::array();
  for (Policy p : {Policy::FastestWin, Policy::StubbornLoss, Policy::HoldDraw, Policy::RandomWin,
                   Policy::Auto})
    policies.push_back(to_string(p));
  json j{{"api", "v1"}, {"sizes", sizes}, {"databases", dbs}, {"policies", policies},
         {"static", static_dir_.has_value()}};
  return {200, j.dump()};
}

int Service::bind(const std::string& host, int port) {
  if (port == 0) return server_->http.bind_to_any_port(host);
  return server_->http.bind_to_port(host, port) ? port : -1;
}

bool Service::run() { return server_->http.listen_after_bind(); }

void Service::stop() { server_->http.stop(); }

std::map<int, std::shared_ptr<const Database>> open_databases(const std::vector<fs::path>& dirs) {
  std::map<int, std::shared_ptr<const Database>> out;
  for (const fs::path& d : dirs) {
    auto db = Database::open(d);
    out[db->n()] = std::move(db);
  }
  return out;
}

}  // namespace quixo
