#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>

#include "quixo/board.hpp"

namespace quixo::test {

// Directory holding the databases built by the ctest fixtures.
inline std::filesystem::path data_dir() {
  const char* d = std::getenv("QUIXO_TEST_DATA");
  return d ? std::filesystem::path(d) : std::filesystem::path("test-data");
}

inline std::filesystem::path db_dir(int n) { return data_dir() / ("n" + std::to_string(n)); }

// Fresh, empty scratch directory that is removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("quixo-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

// Uniformly random valid state: each cell empty, X or O.
inline State random_state(int n, std::mt19937_64& rng) {
  std::uint32_t x = 0, o = 0;
  for (int k = 0; k < n * n; ++k) {
    const auto v = rng() % 3;
    const std::uint32_t bit = 1u << (n * n - 1 - k);
    if (v == 1) x |= bit;
    if (v == 2) o |= bit;
  }
  return make_state(x, o);
}

// Parse a string of '0'/'1' digits (most significant first, spaces ignored).
inline std::uint64_t bits_from(const std::string& digits) {
  std::uint64_t v = 0;
  for (char c : digits)
    if (c == '0' || c == '1') v = (v << 1) | static_cast<std::uint64_t>(c - '0');
  return v;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

// Reference values.
namespace golden {

// Win / Loss counts per step for the full 4x4 game, steps 0..23.
inline constexpr std::array<std::array<std::uint64_t, 2>, 24> kSteps4 = {{
    {4'697'505, 4'530'779}, {15'277'446, 528},   {0, 3'775'611},     {2'419'938, 0},
    {0, 2'970'384},         {1'740'992, 0},      {0, 1'982'339},     {1'214'497, 0},
    {0, 1'034'097},         {658'834, 0},        {0, 438'138},       {287'864, 0},
    {0, 182'954},           {100'374, 0},        {0, 66'280},        {29'314, 0},
    {0, 18'014},            {6'656, 0},          {0, 4'084},         {1'012, 0},
    {0, 520},               {57, 0},             {0, 8},             {0, 0},
}};
inline constexpr std::uint64_t kWin4 = 26'434'489;
inline constexpr std::uint64_t kLoss4 = 15'003'736;
inline constexpr std::uint64_t kDraw4 = 1'608'496;
inline constexpr std::uint64_t kReachable4 = 41'252'106;

inline constexpr std::uint64_t kWin5 = 441'815'157'309;
inline constexpr std::uint64_t kLoss5 = 279'746'227'956;
inline constexpr std::uint64_t kDraw5 = 125'727'224'178;

// (x, pop(x), ord(x)) for x = 0..23.
inline constexpr std::array<std::array<std::uint32_t, 3>, 24> kRankRows = {{
    {0b00000000, 0, 0}, {0b00000001, 1, 0}, {0b00000010, 1, 1}, {0b00000011, 2, 0},
    {0b00000100, 1, 2}, {0b00000101, 2, 1}, {0b00000110, 2, 2}, {0b00000111, 3, 0},
    {0b00001000, 1, 3}, {0b00001001, 2, 3}, {0b00001010, 2, 4}, {0b00001011, 3, 1},
    {0b00001100, 2, 5}, {0b00001101, 3, 2}, {0b00001110, 3, 3}, {0b00001111, 4, 0},
    {0b00010000, 1, 4}, {0b00010001, 2, 6}, {0b00010010, 2, 7}, {0b00010011, 3, 4},
    {0b00010100, 2, 8}, {0b00010101, 3, 5}, {0b00010110, 3, 6}, {0b00010111, 4, 1},
}};

// 4x4 positions with known values (X to move).
inline constexpr const char* kUnreachable4 = "..XX/OOOX/.XO./X.O. X";
inline constexpr const char* kLossIn1 = "XOOO/OOXO/OXXO/OOOX X";
inline constexpr const char* kLossIn22 = "..OX/..../XOO./.... X";
inline constexpr const char* kDrawState4 = ".XX./O.OX/OXXX/OXXO X";
inline constexpr const char* kFinalBoard4 = "XOOX/X.XO/OO.O/XXXX";

// A 4x4 position and its images under rotation, mirror and colour swap.
inline constexpr const char* kSymBase = "..OO/.XO./X.X./.... X";
inline constexpr const char* kSymRot90 = ".X../..X./.XOO/...O X";
inline constexpr const char* kSymMirror = "OO../.OX./.X.X/.... X";
inline constexpr const char* kSymSwapBoard = "..XX/.OX./O.O./....";

// 5x5 encoding example: board with O to move, the move taking (1,4) and
// pushing in from the left, and the resulting board.
inline constexpr const char* kEncodedBoard = "..OO./.XO../XXXOX/OX.../.OX..";
inline constexpr const char* kEncodedAfter = "..OO./O.XO./XXXOX/OX.../.OX..";
inline constexpr const char* kEncodedWord =
    "0000000 00000 01000 11101 01000 00100 0000000 00110 00100 00010 10000 01000";
inline constexpr const char* kEncodedSegment =
    "0000000 00000 11111 00000 00000 00000 0000000 00000 11111 00000 00000 00000";
inline constexpr const char* kEncodedInsert =
    "0000000 00000 00000 00000 00000 00000 0000000 00000 10000 00000 00000 00000";

// 5x5 class (8,5) example for the O-field compression.
inline constexpr const char* kClassExample = ".XOX./.XX../OO.XX/.O..X/XO... X";
inline constexpr const char* kClassExampleX = "01010 01100 00011 00001 10000";
inline constexpr const char* kClassExampleO = "01000 01100 10010 00";

}  // namespace golden

}  // namespace quixo::test
