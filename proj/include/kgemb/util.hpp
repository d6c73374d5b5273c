#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace kgemb {

// splitmix64, used to derive per-worker seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(mix_seed(seed));
}

std::string sha256_hex(const std::string& bytes);
std::string sha256_file_hex(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// "1.234567" style fixed formatting used by all text artifacts.
std::string format_real(double v, int decimals = 6);

std::vector<std::string> split(const std::string& s, char delim);

}  // namespace kgemb
