#pragma once

#include <cstddef>
#include <filesystem>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>

#include "quixo/class_index.hpp"
#include "quixo/outcome_store.hpp"

namespace quixo {

struct Verdict {
  Outcome outcome = Outcome::Draw;
  std::optional<int> step;  // absent for Draw or when the database has no steps

  bool operator==(const Verdict&) const = default;
};

// Read-only view of a solved directory. Every class listed in the manifest is
// loaded up front for n <= 4; 5x5 classes are loaded on demand and kept in a
// small LRU. All lookups are thread-safe.
class Database {
 public:
  static constexpr std::size_t kDefaultCache = 6;

  static std::shared_ptr<const Database> open(const std::filesystem::path& dir,
                                              std::size_t cache_classes = kDefaultCache);

  int n() const { return manifest_.n; }
  const Board& board() const { return *board_; }
  const ClassIndex& index() const { return *index_; }
  const Manifest& manifest() const { return manifest_; }
  const std::filesystem::path& dir() const { return dir_; }
  bool has_steps() const { return manifest_.with_steps; }

  bool covers(ClassId c) const { return manifest_.find(c) != nullptr; }
  // Throws StoreError when the class is not part of the database.
  std::shared_ptr<const ClassStore> class_store(ClassId c) const;

  Verdict lookup(State s) const;
  Outcome outcome(State s) const { return lookup(s).outcome; }

 private:
  Database(std::filesystem::path dir, Manifest m, std::size_t cache_classes);

  std::filesystem::path dir_;
  Manifest manifest_;
  const Board* board_;
  const ClassIndex* index_;
  std::size_t cache_limit_;
  bool preloaded_ = false;

  mutable std::mutex mu_;
  mutable std::map<ClassId, std::shared_ptr<const ClassStore>> loaded_;
  mutable std::list<ClassId> recent_;  // most recent first; unused when preloaded
};

}  // namespace quixo
