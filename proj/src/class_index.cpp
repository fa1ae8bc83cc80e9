#include "quixo/class_index.hpp"

#include <array>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace quixo {

namespace {

constexpr int kMaxBinom = 26;

constexpr auto kBinom = [] {
  std::array<std::array<std::uint64_t, kMaxBinom>, kMaxBinom> t{};
  for (int n = 0; n < kMaxBinom; ++n) {
    t[n][0] = 1;
    for (int k = 1; k <= n; ++k) t[n][k] = t[n - 1][k - 1] + (k < n ? t[n - 1][k] : 0);
  }
  return t;
}();

}  // namespace

std::uint64_t binomial(int n, int k) {
  if (n < 0 || k < 0 || k > n) return 0;
  if (n >= kMaxBinom) throw std::out_of_range("binomial table covers n <= 25");
  return kBinom[n][k];
}

RankTables::RankTables(int n)
    : n_(n), width_(n * n), ord_(std::size_t{1} << width_), inv_(std::size_t{1} << width_),
      level_(width_ + 2, 0) {
  for (int k = 0; k <= width_; ++k) level_[k + 1] = level_[k] + binomial(width_, k);
  std::vector<std::uint32_t> next(width_ + 1, 0);
  const std::uint32_t count = static_cast<std::uint32_t>(ord_.size());
  for (std::uint32_t m = 0; m < count; ++m) {
    const int p = pop(m);
    const std::uint32_t r = next[p]++;
    ord_[m] = r;
    inv_[level_[p] + r] = m;
  }
}

const ClassIndex& ClassIndex::get(int n) {
  if (!Board::supported(n)) throw std::invalid_argument("unsupported size " + std::to_string(n));
  static std::once_flag once[3];
  static std::unique_ptr<ClassIndex> idx[3];
  const int slot = n - Board::kMinSize;
  std::call_once(once[slot], [&] { idx[slot] = std::make_unique<ClassIndex>(n); });
  return *idx[slot];
}

ClassIndex::ClassIndex(int n) : board_(&Board::get(n)), tables_(n) {}

std::uint64_t ClassIndex::class_size(ClassId c) const {
  const int cells = board_->cells();
  if (c.x < 0 || c.o < 0 || c.x + c.o > cells) return 0;
  return binomial(cells, c.x) * binomial(cells - c.x, c.o);
}

std::vector<ClassId> ClassIndex::all_classes() const {
  std::vector<ClassId> out;
  const int cells = board_->cells();
  for (int x = 0; x <= cells; ++x)
    for (int o = 0; x + o <= cells; ++o) out.push_back({x, o});
  return out;
}

std::pair<ClassId, std::uint64_t> ClassIndex::state_to_index(State s) const {
  const ClassId c = class_of(s);
  return {c, index_in_class(s, o_positions(c))};
}

State ClassIndex::index_to_state(ClassId c, std::uint64_t index) const {
  if (index >= class_size(c))
    throw std::out_of_range("index " + std::to_string(index) + " outside class " + c.str());
  return state_in_class(c, index, o_positions(c));
}

}  // namespace quixo
