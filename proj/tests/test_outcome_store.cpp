#include <fstream>
#include <random>
#include <thread>
#include <vector>

#include "doctest.h"
#include "quixo/outcome_store.hpp"
#include "support.hpp"

using namespace quixo;
using quixo::test::TempDir;
namespace fs = std::filesystem;

namespace {

// Bitwise reflected CRC-32 (polynomial 0xEDB88320).
std::uint32_t slow_crc32(const std::vector<std::uint8_t>& data) {
  std::uint32_t c = 0xffffffffu;
  for (std::uint8_t b : data) {
    c ^= b;
    for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xedb88320u & (0u - (c & 1)));
  }
  return ~c;
}

std::vector<std::uint8_t> read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void write_all(const fs::path& p, const std::vector<std::uint8_t>& data) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

ClassStore filled(ClassId c, bool steps, std::uint64_t seed) {
  ClassStore s = allocate(3, c, steps);
  std::mt19937_64 rng(seed);
  for (std::uint64_t i = 0; i < s.size(); ++i) {
    s.set_outcome(i, static_cast<Outcome>(rng() % 3));
    if (steps) s.set_step(i, static_cast<std::uint8_t>(rng() % 40));
  }
  return s;
}

}  // namespace

TEST_CASE("outcome array packs four entries per byte") {
  OutcomeArray a(13);
  CHECK(a.bytes().size() == 4);
  for (std::uint64_t i = 0; i < a.size(); ++i) CHECK(a.get(i) == Outcome::Draw);

  std::vector<Outcome> model(13, Outcome::Draw);
  std::mt19937_64 rng(1);
  for (int round = 0; round < 2000; ++round) {
    const auto i = rng() % 13;
    const auto v = static_cast<Outcome>(rng() % 4);
    a.set(i, v);
    model[i] = v;
    for (std::uint64_t j = 0; j < 13; ++j) REQUIRE(a.get(j) == model[j]);
  }
  CHECK_THROWS_AS(a.get(13), std::out_of_range);
  CHECK_THROWS_AS(a.set(13, Outcome::Win), std::out_of_range);
}

TEST_CASE("upgrade respects the allowed source set") {
  OutcomeArray a(8);
  CHECK(a.upgrade(3, outcome_set(Outcome::Draw), Outcome::WinOrDraw));
  CHECK_FALSE(a.upgrade(3, outcome_set(Outcome::Draw), Outcome::Win));
  CHECK(a.upgrade(3, outcome_set(Outcome::Draw, Outcome::WinOrDraw), Outcome::Win));
  CHECK_FALSE(a.upgrade(3, outcome_set(Outcome::Win), Outcome::Win));
  CHECK(a.get(3) == Outcome::Win);
  CHECK(a.get(2) == Outcome::Draw);
}

TEST_CASE("concurrent upgrades on shared bytes are not lost") {
  OutcomeArray a(4096);
  std::vector<std::jthread> workers;
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&a, t] {
      for (std::uint64_t i = t; i < a.size(); i += 4)
        a.upgrade(i, outcome_set(Outcome::Draw), i % 3 ? Outcome::Win : Outcome::Loss);
    });
  workers.clear();
  for (std::uint64_t i = 0; i < a.size(); ++i)
    REQUIRE(a.get(i) == (i % 3 ? Outcome::Win : Outcome::Loss));
}

TEST_CASE("step array") {
  StepArray s(5);
  CHECK(s.get(0) == kNoStep);
  CHECK(s.lower_to(0, 7));
  CHECK_FALSE(s.lower_to(0, 9));
  CHECK(s.lower_to(0, 2));
  CHECK(s.get(0) == 2);
}

TEST_CASE("class store save and load round trip") {
  TempDir dir("store");
  for (bool steps : {false, true}) {
    const ClassStore s = filled({2, 3}, steps, 5);
    const fs::path p = dir.path() / class_file_name(s.id());
    const std::uint32_t crc = save(s, p);
    CHECK(crc == payload_crc32(s));

    std::vector<std::uint8_t> payload(s.outcomes().bytes().begin(), s.outcomes().bytes().end());
    if (steps) payload.insert(payload.end(), s.steps().bytes().begin(), s.steps().bytes().end());
    CHECK(crc == slow_crc32(payload));
    CHECK(fs::file_size(p) == ClassFileHeader::kSize + payload.size());

    const ClassFileHeader h = read_header(p);
    CHECK(h.n == 3);
    CHECK(h.x == 2);
    CHECK(h.o == 3);
    CHECK(h.entries == s.size());
    CHECK(h.crc32 == crc);
    CHECK(((h.flags & ClassFileHeader::kFlagSteps) != 0) == steps);

    const ClassStore back = load(p);
    CHECK(back.id() == s.id());
    CHECK(back.has_steps() == steps);
    for (std::uint64_t i = 0; i < s.size(); ++i) {
      REQUIRE(back.get_outcome(i) == s.get_outcome(i));
      if (steps) REQUIRE(back.get_step(i) == s.get_step(i));
    }
  }
  CHECK(class_file_name({12, 3}) == "class_12_3.qxo");
}

TEST_CASE("damaged class files are rejected") {
  TempDir dir("damage");
  const ClassStore s = filled({1, 2}, true, 9);
  const fs::path p = dir.path() / "c.qxo";
  save(s, p);
  const auto good = read_all(p);

  auto expect_rejected = [&](std::vector<std::uint8_t> bytes) {
    write_all(p, bytes);
    CHECK_THROWS_AS(load(p), StoreError);
  };
  auto flipped = good;
  flipped[ClassFileHeader::kSize + 3] ^= 0x10;
  expect_rejected(flipped);

  auto bad_magic = good;
  bad_magic[0] = 'Z';
  expect_rejected(bad_magic);

  auto bad_version = good;
  bad_version[4] = 9;
  expect_rejected(bad_version);

  expect_rejected({good.begin(), good.end() - 1});
  expect_rejected({good.begin(), good.begin() + 10});

  auto trailing = good;
  trailing.push_back(0);
  expect_rejected(trailing);

  CHECK_THROWS_AS(load(dir.path() / "missing.qxo"), StoreError);
}

TEST_CASE("transient entries cannot be persisted") {
  TempDir dir("transient");
  ClassStore s = allocate(3, {1, 1}, false);
  s.set_outcome(4, Outcome::WinOrDraw);
  CHECK(s.contains_transient());
  CHECK_THROWS_AS(save(s, dir.path() / "t.qxo"), StoreError);

  // A hand-made file holding the transient value with a valid checksum.
  s.set_outcome(4, Outcome::Draw);
  save(s, dir.path() / "t.qxo");
  auto bytes = read_all(dir.path() / "t.qxo");
  bytes[ClassFileHeader::kSize + 1] = 0x03;
  ClassStore forged = allocate(3, {1, 1}, false);
  forged.outcomes().bytes()[1] = 0x03;
  const std::uint32_t crc = payload_crc32(forged);
  for (int k = 0; k < 4; ++k) bytes[24 + k] = static_cast<std::uint8_t>(crc >> (8 * k));
  write_all(dir.path() / "t.qxo", bytes);
  CHECK_THROWS_AS(load(dir.path() / "t.qxo"), StoreError);
}

TEST_CASE("sealed entries reject writes") {
  ClassStore s = allocate(3, {2, 2}, true);
  s.set_outcome(0, Outcome::Win);
  s.seal(0);
  CHECK_FALSE(s.is_sealed(0));  // sealing not enabled yet
  s.enable_sealing();
  s.seal(0);
  CHECK(s.is_sealed(0));
  CHECK_FALSE(s.is_sealed(1));
  CHECK_THROWS_AS(s.set_outcome(0, Outcome::Loss), StoreError);
  CHECK_THROWS_AS(s.set_step(0, 3), StoreError);
  s.set_outcome(1, Outcome::Loss);
  CHECK(s.get_outcome(1) == Outcome::Loss);
  CHECK_THROWS_AS(allocate(3, {1, 1}, false).get_step(0), StoreError);
}

TEST_CASE("byte aligned shards cover the range without sharing bytes") {
  for (std::uint64_t entries : {0ULL, 1ULL, 3ULL, 4ULL, 5ULL, 17ULL, 1000ULL, 1'000'003ULL}) {
    for (int parts : {1, 2, 3, 8, 64}) {
      const auto shards = byte_aligned_shards(entries, parts);
      std::uint64_t next = 0;
      for (const auto& [b, e] : shards) {
        REQUIRE(b == next);
        REQUIRE(b < e);
        REQUIRE(b % 4 == 0);
        next = e;
      }
      REQUIRE(next == entries);
      REQUIRE(shards.size() <= static_cast<std::size_t>(parts));
    }
  }
}

TEST_CASE("manifest round trip") {
  TempDir dir("manifest");
  CHECK_THROWS_AS(read_manifest(dir.path()), StoreError);

  Manifest m;
  m.n = 4;
  m.with_steps = true;
  m.complete = false;
  m.min_tiles = 14;
  m.threads = 3;
  m.wall_seconds = 1.5;
  m.upsert({{7, 7}, 100, 0xdeadbeef, 60, 30, 10});
  m.upsert({{7, 8}, 50, 1, 20, 20, 10});
  m.upsert({{7, 7}, 100, 0xfeedf00d, 61, 29, 10});
  m.totals = m.recompute_totals();
  CHECK(m.classes.size() == 2);
  CHECK(m.totals == Totals{81, 49, 20});

  write_manifest(dir.path(), m);
  const Manifest back = read_manifest(dir.path());
  CHECK(back.n == 4);
  CHECK(back.with_steps);
  CHECK_FALSE(back.complete);
  CHECK(back.min_tiles == 14);
  CHECK(back.classes.size() == 2);
  REQUIRE(back.find({7, 7}) != nullptr);
  CHECK(back.find({7, 7})->checksum == 0xfeedf00d);
  CHECK(back.find({1, 1}) == nullptr);
  CHECK(back.totals == m.totals);

  CHECK_THROWS_AS(manifest_from_json("{not json"), StoreError);
  auto text = manifest_to_json(m);
  const auto pos = text.find("\"version\": 1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 12, "\"version\": 9");
  CHECK_THROWS_AS(manifest_from_json(text), StoreError);
}
