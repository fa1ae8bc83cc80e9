#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "quixo/board.hpp"
#include "quixo/class_index.hpp"

namespace quixo {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 2 bits per entry, least-significant pair first within each byte.
// 0 = Draw, 1 = Win, 2 = Loss, 3 = WinOrDraw (in memory only).
class OutcomeArray {
 public:
  OutcomeArray() = default;
  explicit OutcomeArray(std::uint64_t entries) : size_(entries), bytes_((entries + 3) / 4, 0) {}

  std::uint64_t size() const { return size_; }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> bytes() { return bytes_; }

  Outcome get(std::uint64_t i) const {
    check(i);
    return load(i);
  }
  void set(std::uint64_t i, Outcome v) {
    check(i);
    std::uint8_t& b = bytes_[i >> 2];
    const int sh = static_cast<int>(i & 3) * 2;
    b = static_cast<std::uint8_t>((b & ~(3u << sh)) | (static_cast<unsigned>(v) << sh));
  }

  // Unchecked relaxed read; safe against concurrent upgrade() calls.
  Outcome load(std::uint64_t i) const {
    const std::uint8_t b =
        std::atomic_ref<std::uint8_t>(const_cast<std::uint8_t&>(bytes_[i >> 2]))
            .load(std::memory_order_relaxed);
    return static_cast<Outcome>((b >> ((i & 3) * 2)) & 3);
  }

  // Atomically replace the entry with `to` if its current value is in `from`
  // (a bit set indexed by Outcome). Returns true when the entry changed.
  bool upgrade(std::uint64_t i, unsigned from, Outcome to) {
    std::atomic_ref<std::uint8_t> ref(bytes_[i >> 2]);
    const int sh = static_cast<int>(i & 3) * 2;
    std::uint8_t cur = ref.load(std::memory_order_relaxed);
    for (;;) {
      const unsigned v = (cur >> sh) & 3;
      if (!(from & (1u << v)) || v == static_cast<unsigned>(to)) return false;
      const auto next =
          static_cast<std::uint8_t>((cur & ~(3u << sh)) | (static_cast<unsigned>(to) << sh));
      if (ref.compare_exchange_weak(cur, next, std::memory_order_relaxed)) return true;
    }
  }

 private:
  void check(std::uint64_t i) const {
    if (i >= size_) throw std::out_of_range("outcome index out of range");
  }

  std::uint64_t size_ = 0;
  std::vector<std::uint8_t> bytes_;
};

constexpr unsigned outcome_set(Outcome a) { return 1u << static_cast<unsigned>(a); }
template <typename... Rest>
constexpr unsigned outcome_set(Outcome a, Rest... rest) {
  return outcome_set(a) | outcome_set(rest...);
}

constexpr std::uint8_t kNoStep = 255;
constexpr std::uint8_t kMaxStep = 254;

// One byte per entry; kNoStep marks Draw (or not yet known).
class StepArray {
 public:
  StepArray() = default;
  explicit StepArray(std::uint64_t entries) : bytes_(entries, kNoStep) {}

  std::uint64_t size() const { return bytes_.size(); }
  bool empty() const { return bytes_.empty(); }
  std::span<const std::uint8_t> bytes() const { return bytes_; }
  std::span<std::uint8_t> bytes() { return bytes_; }

  std::uint8_t get(std::uint64_t i) const { return bytes_.at(i); }
  void set(std::uint64_t i, std::uint8_t v) { bytes_.at(i) = v; }

  std::uint8_t load(std::uint64_t i) const {
    return std::atomic_ref<std::uint8_t>(const_cast<std::uint8_t&>(bytes_[i]))
        .load(std::memory_order_relaxed);
  }
  // Atomic min. Returns true when the stored value decreased.
  bool lower_to(std::uint64_t i, std::uint8_t v) {
    std::atomic_ref<std::uint8_t> ref(bytes_[i]);
    std::uint8_t cur = ref.load(std::memory_order_relaxed);
    while (v < cur)
      if (ref.compare_exchange_weak(cur, v, std::memory_order_relaxed)) return true;
    return false;
  }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Outcomes (and optionally steps) for one class.
class ClassStore {
 public:
  ClassStore() = default;
  ClassStore(int n, ClassId id, std::uint64_t entries, bool with_steps);

  int n() const { return n_; }
  ClassId id() const { return id_; }
  std::uint64_t size() const { return outcomes_.size(); }
  bool has_steps() const { return with_steps_; }

  OutcomeArray& outcomes() { return outcomes_; }
  const OutcomeArray& outcomes() const { return outcomes_; }
  StepArray& steps() { return steps_; }
  const StepArray& steps() const { return steps_; }

  Outcome get_outcome(std::uint64_t i) const { return outcomes_.get(i); }
  // Rejects writes to sealed entries while sealing is enabled.
  void set_outcome(std::uint64_t i, Outcome v);
  std::uint8_t get_step(std::uint64_t i) const;
  void set_step(std::uint64_t i, std::uint8_t v);

  void enable_sealing();
  bool sealing_enabled() const { return sealing_; }
  void seal(std::uint64_t i);
  bool is_sealed(std::uint64_t i) const;

  bool contains_transient() const;

 private:
  int n_ = 0;
  ClassId id_{};
  bool with_steps_ = false;
  bool sealing_ = false;
  OutcomeArray outcomes_;
  StepArray steps_;
  std::vector<std::uint64_t> sealed_;
};

// All outcomes Draw, all steps kNoStep.
ClassStore allocate(int n, ClassId c, bool with_steps);

// Contiguous [begin, end) index ranges whose boundaries are multiples of 4, so
// that no two shards share an outcome byte.
std::vector<std::pair<std::uint64_t, std::uint64_t>> byte_aligned_shards(std::uint64_t entries,
                                                                         int parts);

// Class file: 32-byte little-endian header followed by the outcome bytes and,
// when flagged, one step byte per entry.
struct ClassFileHeader {
  static constexpr char kMagic[4] = {'Q', 'X', 'O', 'D'};
  static constexpr std::uint32_t kVersion = 1;
  static constexpr std::size_t kSize = 32;
  static constexpr std::uint8_t kFlagSteps = 1;

  std::uint32_t version = kVersion;
  std::uint8_t n = 0;
  std::uint8_t x = 0;
  std::uint8_t o = 0;
  std::uint8_t flags = 0;
  std::uint64_t entries = 0;
  std::uint32_t crc32 = 0;
};

std::uint32_t payload_crc32(const ClassStore& store);
std::string class_file_name(ClassId c);

// Returns the payload CRC written to the header.
std::uint32_t save(const ClassStore& store, const std::filesystem::path& path);
ClassStore load(const std::filesystem::path& path);
ClassFileHeader read_header(const std::filesystem::path& path);

struct ManifestEntry {
  ClassId id;
  std::uint64_t entries = 0;
  std::uint32_t checksum = 0;
  std::uint64_t win = 0, loss = 0, draw = 0;
};

struct Totals {
  std::uint64_t win = 0, loss = 0, draw = 0;
  std::uint64_t sum() const { return win + loss + draw; }
  bool operator==(const Totals&) const = default;
};

struct Manifest {
  static constexpr int kRuleVersion = 1;

  int n = 0;
  int version = kRuleVersion;
  bool with_steps = false;
  bool complete = false;
  int min_tiles = 0;
  int threads = 1;
  double wall_seconds = 0;  // summed over resumed runs
  std::vector<ManifestEntry> classes;
  Totals totals;

  const ManifestEntry* find(ClassId c) const;
  void upsert(const ManifestEntry& e);
  Totals recompute_totals() const;
};

constexpr const char* kManifestName = "manifest.json";

std::string manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const std::string& text);
void write_manifest(const std::filesystem::path& dir, const Manifest& m);
// Throws StoreError("manifest not found") when missing.
Manifest read_manifest(const std::filesystem::path& dir);

}  // namespace quixo
