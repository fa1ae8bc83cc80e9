#include "quixo/database.hpp"

namespace quixo {

namespace fs = std::filesystem;

namespace {

std::shared_ptr<const ClassStore> load_checked(const fs::path& dir, const ManifestEntry& e) {
  auto store = std::make_shared<ClassStore>(load(dir / class_file_name(e.id)));
  if (store->size() != e.entries) throw StoreError("class " + e.id.str() + " size disagrees with manifest");
  if (payload_crc32(*store) != e.checksum)
    throw StoreError("class " + e.id.str() + " checksum disagrees with manifest");
  return store;
}

}  // namespace

Database::Database(fs::path dir, Manifest m, std::size_t cache_classes)
    : dir_(std::move(dir)),
      manifest_(std::move(m)),
      board_(&Board::get(manifest_.n)),
      index_(&ClassIndex::get(manifest_.n)),
      cache_limit_(std::max<std::size_t>(cache_classes, 1)) {}

std::shared_ptr<const Database> Database::open(const fs::path& dir, std::size_t cache_classes) {
  Manifest m = read_manifest(dir);
  if (!Board::supported(m.n)) throw StoreError("manifest names unsupported size " + std::to_string(m.n));
  if (m.version != Manifest::kRuleVersion)
    throw StoreError("manifest rule version " + std::to_string(m.version) + " is not supported");
  std::shared_ptr<Database> db(new Database(dir, std::move(m), cache_classes));
  if (db->n() <= 4) {
    for (const ManifestEntry& e : db->manifest_.classes) db->loaded_[e.id] = load_checked(dir, e);
    db->preloaded_ = true;
  }
  return db;
}

std::shared_ptr<const ClassStore> Database::class_store(ClassId c) const {
  const ManifestEntry* e = manifest_.find(c);
  if (!e) throw StoreError("class " + c.str() + " is not in the database at " + dir_.string());
  std::lock_guard lock(mu_);
  if (auto it = loaded_.find(c); it != loaded_.end()) {
    if (!preloaded_) {
      recent_.remove(c);
      recent_.push_front(c);
    }
    return it->second;
  }
  auto store = load_checked(dir_, *e);
  loaded_[c] = store;
  recent_.push_front(c);
  while (recent_.size() > cache_limit_) {
    loaded_.erase(recent_.back());
    recent_.pop_back();
  }
  return store;
}

Verdict Database::lookup(State s) const {
  if (!board_->valid(s)) throw std::invalid_argument("invalid state for size " + std::to_string(n()));
  const auto [c, idx] = index_->state_to_index(s);
  const auto store = class_store(c);
  Verdict v{store->get_outcome(idx), std::nullopt};
  if (store->has_steps() && v.outcome != Outcome::Draw) v.step = store->get_step(idx);
  return v;
}

}  // namespace quixo
