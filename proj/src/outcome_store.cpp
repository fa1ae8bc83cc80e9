#include "quixo/outcome_store.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <json.hpp>

namespace quixo {

namespace fs = std::filesystem;
using nlohmann::json;

ClassStore::ClassStore(int n, ClassId id, std::uint64_t entries, bool with_steps)
    : n_(n), id_(id), with_steps_(with_steps), outcomes_(entries) {
  if (with_steps) steps_ = StepArray(entries);
}

void ClassStore::set_outcome(std::uint64_t i, Outcome v) {
  if (sealing_ && is_sealed(i) && outcomes_.get(i) != v)
    throw StoreError("write to sealed terminal entry " + std::to_string(i) + " of class " +
                     id_.str());
  outcomes_.set(i, v);
}

std::uint8_t ClassStore::get_step(std::uint64_t i) const {
  if (!with_steps_) throw StoreError("class " + id_.str() + " has no step data");
  return steps_.get(i);
}

void ClassStore::set_step(std::uint64_t i, std::uint8_t v) {
  if (!with_steps_) throw StoreError("class " + id_.str() + " has no step data");
  if (sealing_ && is_sealed(i) && steps_.get(i) != v)
    throw StoreError("write to sealed terminal entry " + std::to_string(i));
  steps_.set(i, v);
}

void ClassStore::enable_sealing() {
  sealing_ = true;
  sealed_.assign((size() + 63) / 64, 0);
}

void ClassStore::seal(std::uint64_t i) {
  if (!sealing_) return;
  if (i >= size()) throw std::out_of_range("seal index out of range");
  std::atomic_ref<std::uint64_t>(sealed_[i >> 6]).fetch_or(1ULL << (i & 63),
                                                            std::memory_order_relaxed);
}

bool ClassStore::is_sealed(std::uint64_t i) const {
  if (!sealing_) return false;
  if (i >= size()) throw std::out_of_range("seal index out of range");
  return (sealed_[i >> 6] >> (i & 63)) & 1;
}

bool ClassStore::contains_transient() const {
  // A byte holds a 3 in some slot iff both bits of that slot are set.
  for (std::uint8_t b : outcomes_.bytes())
    if (b & (b >> 1) & 0x55) return true;
  return false;
}

ClassStore allocate(int n, ClassId c, bool with_steps) {
  const std::uint64_t entries = ClassIndex::get(n).class_size(c);
  if (entries == 0) throw std::invalid_argument("empty class " + c.str());
  try {
    return ClassStore(n, c, entries, with_steps);
  } catch (const std::bad_alloc&) {
    throw StoreError("cannot allocate class " + c.str() + " (" + std::to_string(entries) +
                     " entries)");
  }
}

std::vector<std::pair<std::uint64_t, std::uint64_t>> byte_aligned_shards(std::uint64_t entries,
                                                                         int parts) {
  parts = std::max(parts, 1);
  const std::uint64_t blocks = (entries + 3) / 4;
  std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
  std::uint64_t begin = 0;
  for (int p = 0; p < parts; ++p) {
    const std::uint64_t end_block = blocks * (p + 1) / parts;
    const std::uint64_t end = std::min(end_block * 4, entries);
    if (end > begin) out.emplace_back(begin, end);
    begin = std::max(begin, end);
  }
  return out;
}

std::uint32_t payload_crc32(const ClassStore& store) {
  uLong crc = crc32(0L, Z_NULL, 0);
  auto feed = [&crc](std::span<const std::uint8_t> data) {
    // zlib takes uInt lengths; feed large payloads in pieces.
    constexpr std::size_t kChunk = 1u << 30;
    for (std::size_t off = 0; off < data.size(); off += kChunk) {
      const std::size_t len = std::min(kChunk, data.size() - off);
      crc = crc32(crc, data.data() + off, static_cast<uInt>(len));
    }
  };
  feed(store.outcomes().bytes());
  if (store.has_steps()) feed(store.steps().bytes());
  return static_cast<std::uint32_t>(crc);
}

std::string class_file_name(ClassId c) {
  return "class_" + std::to_string(c.x) + "_" + std::to_string(c.o) + ".qxo";
}

namespace {

template <typename T>
void put_le(std::uint8_t* p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

std::array<std::uint8_t, ClassFileHeader::kSize> encode(const ClassFileHeader& h) {
  std::array<std::uint8_t, ClassFileHeader::kSize> buf{};
  std::memcpy(buf.data(), ClassFileHeader::kMagic, 4);
  put_le<std::uint32_t>(buf.data() + 4, h.version);
  buf[8] = h.n;
  buf[9] = h.x;
  buf[10] = h.o;
  buf[11] = h.flags;
  put_le<std::uint64_t>(buf.data() + 16, h.entries);
  put_le<std::uint32_t>(buf.data() + 24, h.crc32);
  return buf;
}

ClassFileHeader decode(const std::uint8_t* buf, const fs::path& path) {
  if (std::memcmp(buf, ClassFileHeader::kMagic, 4) != 0)
    throw StoreError(path.string() + ": bad magic");
  ClassFileHeader h;
  h.version = get_le<std::uint32_t>(buf + 4);
  if (h.version != ClassFileHeader::kVersion)
    throw StoreError(path.string() + ": unsupported format version " + std::to_string(h.version));
  h.n = buf[8];
  h.x = buf[9];
  h.o = buf[10];
  h.flags = buf[11];
  h.entries = get_le<std::uint64_t>(buf + 16);
  h.crc32 = get_le<std::uint32_t>(buf + 24);
  return h;
}

}  // namespace

std::uint32_t save(const ClassStore& store, const fs::path& path) {
  if (store.contains_transient())
    throw StoreError("class " + store.id().str() + " still holds WinOrDraw entries");
  ClassFileHeader h;
  h.n = static_cast<std::uint8_t>(store.n());
  h.x = static_cast<std::uint8_t>(store.id().x);
  h.o = static_cast<std::uint8_t>(store.id().o);
  h.flags = store.has_steps() ? ClassFileHeader::kFlagSteps : 0;
  h.entries = store.size();
  h.crc32 = payload_crc32(store);

  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StoreError("cannot write " + tmp.string());
    const auto head = encode(h);
    out.write(reinterpret_cast<const char*>(head.data()), head.size());
    auto outcomes = store.outcomes().bytes();
    out.write(reinterpret_cast<const char*>(outcomes.data()),
              static_cast<std::streamsize>(outcomes.size()));
    if (store.has_steps()) {
      auto steps = store.steps().bytes();
      out.write(reinterpret_cast<const char*>(steps.data()),
                static_cast<std::streamsize>(steps.size()));
    }
    if (!out) throw StoreError("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
  return h.crc32;
}

ClassFileHeader read_header(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  std::array<std::uint8_t, ClassFileHeader::kSize> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw StoreError(path.string() + ": truncated header");
  return decode(buf.data(), path);
}

ClassStore load(const fs::path& path) {
  const ClassFileHeader h = read_header(path);
  if (!Board::supported(h.n)) throw StoreError(path.string() + ": unsupported board size");
  const ClassId id{h.x, h.o};
  if (ClassIndex::get(h.n).class_size(id) != h.entries)
    throw StoreError(path.string() + ": entry count does not match class " + id.str());
  const bool steps = h.flags & ClassFileHeader::kFlagSteps;
  ClassStore store(h.n, id, h.entries, steps);

  std::ifstream in(path, std::ios::binary);
  in.seekg(ClassFileHeader::kSize);
  auto read_into = [&](std::span<std::uint8_t> dst) {
    in.read(reinterpret_cast<char*>(dst.data()), static_cast<std::streamsize>(dst.size()));
    if (in.gcount() != static_cast<std::streamsize>(dst.size()))
      throw StoreError(path.string() + ": truncated payload");
  };
  read_into(store.outcomes().bytes());
  if (steps) read_into(store.steps().bytes());
  if (in.peek() != std::char_traits<char>::eof())
    throw StoreError(path.string() + ": trailing bytes after payload");
  if (payload_crc32(store) != h.crc32) throw StoreError(path.string() + ": checksum mismatch");
  if (store.contains_transient())
    throw StoreError(path.string() + ": persisted WinOrDraw entry");
  return store;
}

const ManifestEntry* Manifest::find(ClassId c) const {
  for (const auto& e : classes)
    if (e.id == c) return &e;
  return nullptr;
}

void Manifest::upsert(const ManifestEntry& e) {
  for (auto& cur : classes)
    if (cur.id == e.id) {
      cur = e;
      return;
    }
  classes.push_back(e);
  std::sort(classes.begin(), classes.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.id < b.id; });
}

Totals Manifest::recompute_totals() const {
  Totals t;
  for (const auto& e : classes) {
    t.win += e.win;
    t.loss += e.loss;
    t.draw += e.draw;
  }
  return t;
}

std::string manifest_to_json(const Manifest& m) {
  json j;
  j["n"] = m.n;
  j["version"] = m.version;
  j["complete"] = m.complete;
  j["with_steps"] = m.with_steps;
  j["min_tiles"] = m.min_tiles;
  j["solver"] = {{"threads", m.threads}, {"wall_seconds", m.wall_seconds}};
  json classes = json::array();
  for (const auto& e : m.classes)
    classes.push_back({{"x", e.id.x},
                       {"o", e.id.o},
                       {"entries", e.entries},
                       {"checksum", e.checksum},
                       {"win", e.win},
                       {"loss", e.loss},
                       {"draw", e.draw}});
  j["classes"] = std::move(classes);
  j["totals"] = {{"win", m.totals.win}, {"loss", m.totals.loss}, {"draw", m.totals.draw}};
  return j.dump(2);
}

Manifest manifest_from_json(const std::string& text) {
  Manifest m;
  try {
    const json j = json::parse(text);
    m.n = j.at("n").get<int>();
    m.version = j.at("version").get<int>();
    m.complete = j.value("complete", false);
    m.with_steps = j.value("with_steps", false);
    m.min_tiles = j.value("min_tiles", 0);
    if (j.contains("solver")) {
      m.threads = j["solver"].value("threads", 1);
      m.wall_seconds = j["solver"].value("wall_seconds", 0.0);
    }
    for (const auto& c : j.at("classes")) {
      ManifestEntry e;
      e.id = {c.at("x").get<int>(), c.at("o").get<int>()};
      e.entries = c.at("entries").get<std::uint64_t>();
      e.checksum = c.at("checksum").get<std::uint32_t>();
      e.win = c.value("win", std::uint64_t{0});
      e.loss = c.value("loss", std::uint64_t{0});
      e.draw = c.value("draw", std::uint64_t{0});
      m.classes.push_back(e);
    }
    const auto& t = j.at("totals");
    m.totals = {t.at("win").get<std::uint64_t>(), t.at("loss").get<std::uint64_t>(),
                t.at("draw").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw StoreError(std::string("malformed manifest: ") + e.what());
  }
  if (m.version != Manifest::kRuleVersion)
    throw StoreError("manifest rule version " + std::to_string(m.version) + " not supported");
  return m;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  const fs::path tmp = dir / (std::string(kManifestName) + ".tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw StoreError("cannot write manifest in " + dir.string());
    out << manifest_to_json(m) << '\n';
  }
  fs::rename(tmp, dir / kManifestName);
}

Manifest read_manifest(const fs::path& dir) {
  std::ifstream in(dir / kManifestName);
  if (!in) throw StoreError("manifest not found in " + dir.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return manifest_from_json(text);
}

}  // namespace quixo
