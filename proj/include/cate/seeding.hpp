#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace cate {

// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a child seed from a parent seed and a sequence of integer keys.
// Order of keys matters; the result does not depend on any global state.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = mix64(parent);
  for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

// FNV-1a over a string, used to turn labels (scenario ids, learner names) into keys.
constexpr std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace cate
