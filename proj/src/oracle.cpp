#include "quixo/oracle.hpp"

#include <algorithm>
#include <deque>
#include <stdexcept>

namespace quixo::oracle {

namespace {

// Position of a cell inside a symbol field, independent of Board.
std::uint32_t bit_of(int n, int cell) { return 1u << (n * n - 1 - cell); }

bool end_allowed(int n, int cell, InsertEnd end) {
  const int r = cell / n, c = cell % n;
  switch (end) {
    case InsertEnd::RowLeft: return c != 0;
    case InsertEnd::RowRight: return c != n - 1;
    case InsertEnd::ColTop: return r != 0;
    case InsertEnd::ColBottom: return r != n - 1;
  }
  return false;
}

Grid swapped(const Grid& g) {
  Grid out(g);
  for (char& ch : out) ch = ch == 'X' ? 'O' : ch == 'O' ? 'X' : ch;
  return out;
}

}  // namespace

Grid to_grid(int n, State s) {
  Grid g(static_cast<std::size_t>(n * n), '.');
  for (int k = 0; k < n * n; ++k) {
    const bool x = x_field(s) & bit_of(n, k);
    const bool o = o_field(s) & bit_of(n, k);
    if (x && o) throw std::invalid_argument("cell holds both symbols");
    g[k] = x ? 'X' : o ? 'O' : '.';
  }
  return g;
}

State from_grid(int n, const Grid& g) {
  std::uint32_t x = 0, o = 0;
  for (int k = 0; k < n * n; ++k) {
    if (g[k] == 'X') x |= bit_of(n, k);
    if (g[k] == 'O') o |= bit_of(n, k);
  }
  return make_state(x, o);
}

bool naive_has_line(int n, const Grid& g, char symbol) {
  auto at = [&](int r, int c) { return g[r * n + c] == symbol; };
  for (int i = 0; i < n; ++i) {
    bool row = true, col = true;
    for (int j = 0; j < n; ++j) {
      row = row && at(i, j);
      col = col && at(j, i);
    }
    if (row || col) return true;
  }
  bool diag = true, anti = true;
  for (int i = 0; i < n; ++i) {
    diag = diag && at(i, i);
    anti = anti && at(i, n - 1 - i);
  }
  return diag || anti;
}

bool naive_is_border(int n, int cell) {
  const int r = cell / n, c = cell % n;
  return r == 0 || c == 0 || r == n - 1 || c == n - 1;
}

Grid naive_push(int n, const Grid& g, int cell, InsertEnd end) {
  Grid out(g);
  const int r = cell / n, c = cell % n;
  auto at = [&](int rr, int cc) -> char& { return out[rr * n + cc]; };
  switch (end) {
    case InsertEnd::RowLeft:
      for (int j = c; j > 0; --j) at(r, j) = at(r, j - 1);
      at(r, 0) = 'X';
      break;
    case InsertEnd::RowRight:
      for (int j = c; j < n - 1; ++j) at(r, j) = at(r, j + 1);
      at(r, n - 1) = 'X';
      break;
    case InsertEnd::ColTop:
      for (int i = r; i > 0; --i) at(i, c) = at(i - 1, c);
      at(0, c) = 'X';
      break;
    case InsertEnd::ColBottom:
      for (int i = r; i < n - 1; ++i) at(i, c) = at(i + 1, c);
      at(n - 1, c) = 'X';
      break;
  }
  return out;
}

std::vector<Move> naive_moves(int n, const Grid& g) {
  std::vector<Move> out;
  for (int cell = 0; cell < n * n; ++cell) {
    if (!naive_is_border(n, cell) || g[cell] == 'O') continue;
    for (int e = 0; e < 4; ++e) {
      const auto end = static_cast<InsertEnd>(e);
      if (end_allowed(n, cell, end)) out.push_back({static_cast<std::uint8_t>(cell), end});
    }
  }
  return out;
}

std::vector<State> naive_children(int n, State s) {
  const Grid g = to_grid(n, s);
  std::vector<State> out;
  for (const Move& m : naive_moves(n, g))
    out.push_back(from_grid(n, swapped(naive_push(n, g, m.cell, m.end))));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ExplicitGraph build_closed_graph(int n, const std::vector<State>& seed) {
  ExplicitGraph graph;
  graph.n = n;
  auto intern = [&](State s) {
    auto [it, fresh] = graph.ids.try_emplace(s, static_cast<std::uint32_t>(graph.states.size()));
    if (fresh) graph.states.push_back(s);
    return it->second;
  };
  for (State s : seed) intern(s);

  // states grows while we walk it, so this visits the whole closure in id order.
  graph.child_begin.push_back(0);
  for (std::size_t id = 0; id < graph.states.size(); ++id) {
    const State s = graph.states[id];
    const Grid g = to_grid(n, s);
    std::optional<Outcome> term;
    if (naive_has_line(n, g, 'X'))
      term = Outcome::Win;
    else if (naive_has_line(n, g, 'O'))
      term = Outcome::Loss;
    graph.terminal.push_back(term);
    if (!term)
      for (State c : naive_children(n, s)) graph.child_ids.push_back(intern(c));
    graph.child_begin.push_back(graph.child_ids.size());
  }
  return graph;
}

std::vector<Verdict> solve_with_counters(const ExplicitGraph& graph) {
  const std::size_t count = graph.size();
  std::vector<Verdict> out(count);
  std::vector<bool> decided(count, false);

  // Reverse adjacency in CSR form.
  std::vector<std::uint64_t> parent_begin(count + 1, 0);
  for (std::uint32_t c : graph.child_ids) ++parent_begin[c + 1];
  for (std::size_t i = 0; i < count; ++i) parent_begin[i + 1] += parent_begin[i];
  std::vector<std::uint32_t> parent_ids(graph.child_ids.size());
  {
    std::vector<std::uint64_t> fill(parent_begin.begin(), parent_begin.end() - 1);
    for (std::uint32_t p = 0; p < count; ++p)
      for (auto e = graph.child_begin[p]; e < graph.child_begin[p + 1]; ++e)
        parent_ids[fill[graph.child_ids[e]]++] = p;
  }

  std::vector<std::uint32_t> pending(count);
  std::deque<std::uint32_t> queue;
  for (std::uint32_t i = 0; i < count; ++i) {
    pending[i] = static_cast<std::uint32_t>(graph.child_begin[i + 1] - graph.child_begin[i]);
    if (graph.terminal[i]) {
      out[i] = {*graph.terminal[i], 0};
      decided[i] = true;
      queue.push_back(i);
    }
  }

  // FIFO order pops states by nondecreasing step, so the first Loss child fixes
  // a Win step and the last Win child fixes a Loss step.
  while (!queue.empty()) {
    const std::uint32_t c = queue.front();
    queue.pop_front();
    for (auto e = parent_begin[c]; e < parent_begin[c + 1]; ++e) {
      const std::uint32_t p = parent_ids[e];
      if (decided[p]) continue;
      if (out[c].outcome == Outcome::Loss) {
        out[p] = {Outcome::Win, out[c].step + 1};
        decided[p] = true;
        queue.push_back(p);
      } else if (--pending[p] == 0) {
        out[p] = {Outcome::Loss, out[c].step + 1};
        decided[p] = true;
        queue.push_back(p);
      }
    }
  }
  return out;
}

std::vector<Verdict> solve_with_sweeps(const ExplicitGraph& graph) {
  const std::size_t count = graph.size();
  std::vector<Verdict> out(count);
  int deepest = 0;
  for (std::size_t i = 0; i < count; ++i)
    if (graph.terminal[i]) out[i] = {*graph.terminal[i], 0};

  // A Loss found early can carry step i+1, so quiet sweeps are only conclusive
  // once i passes every step assigned so far.
  for (int i = 1;; ++i) {
    bool changed = false;
    for (std::size_t s = 0; s < count; ++s) {
      if (out[s].step >= 0) continue;
      bool win = false, all_win = true;
      int worst = 0;
      for (auto e = graph.child_begin[s]; e < graph.child_begin[s + 1]; ++e) {
        const Verdict& v = out[graph.child_ids[e]];
        if (v.outcome == Outcome::Loss && v.step == i - 1) win = true;
        if (v.outcome != Outcome::Win || v.step < 0) all_win = false;
        worst = std::max(worst, v.step);
      }
      if (win) {
        out[s] = {Outcome::Win, i};
      } else if (all_win) {
        out[s] = {Outcome::Loss, worst + 1};
      } else {
        continue;
      }
      deepest = std::max(deepest, out[s].step);
      changed = true;
    }
    if (!changed && i > deepest) break;
  }
  return out;
}

std::unordered_map<State, Verdict> solve_closed_set(int n, const std::vector<State>& seed) {
  const ExplicitGraph graph = build_closed_graph(n, seed);
  const std::vector<Verdict> verdicts = solve_with_counters(graph);
  std::unordered_map<State, Verdict> out;
  out.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) out.emplace(graph.states[i], verdicts[i]);
  return out;
}

std::vector<State> all_states(int n) {
  const int cells = n * n;
  std::uint64_t total = 1;
  for (int i = 0; i < cells; ++i) total *= 3;
  std::vector<State> out;
  out.reserve(total);
  Grid g(static_cast<std::size_t>(cells), '.');
  for (std::uint64_t code = 0; code < total; ++code) {
    std::uint64_t v = code;
    for (int k = 0; k < cells; ++k, v /= 3) g[k] = ".XO"[v % 3];
    out.push_back(from_grid(n, g));
  }
  return out;
}

std::vector<State> states_in_class(int n, int x, int o) {
  const int cells = n * n;
  std::vector<State> out;
  // Positions chosen as increasing index lists; X cells first, O cells from the rest.
  std::vector<int> xs(x), os(o);
  auto first = [](std::vector<int>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<int>(i);
  };
  auto next = [](std::vector<int>& v, int limit) {
    for (int i = static_cast<int>(v.size()) - 1; i >= 0; --i) {
      if (v[i] < limit - static_cast<int>(v.size()) + i) {
        ++v[i];
        for (std::size_t j = i + 1; j < v.size(); ++j) v[j] = v[j - 1] + 1;
        return true;
      }
    }
    return false;
  };
  if (x + o > cells || x < 0 || o < 0) return out;
  first(xs);
  do {
    Grid g(static_cast<std::size_t>(cells), '.');
    std::vector<int> free_cells;
    for (int k : xs) g[k] = 'X';
    for (int k = 0; k < cells; ++k)
      if (g[k] == '.') free_cells.push_back(k);
    first(os);
    do {
      Grid h(g);
      for (int i : os) h[free_cells[i]] = 'O';
      out.push_back(from_grid(n, h));
    } while (next(os, cells - x));
  } while (next(xs, cells));
  return out;
}

std::vector<State> states_with_min_tiles(int n, int min_tiles) {
  std::vector<State> out;
  for (int t = std::max(min_tiles, 0); t <= n * n; ++t)
    for (int x = 0; x <= t; ++x) {
      const auto part = states_in_class(n, x, t - x);
      out.insert(out.end(), part.begin(), part.end());
    }
  return out;
}

}  // namespace quixo::oracle
