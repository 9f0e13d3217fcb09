#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string_view>
#include <thread>
#include <vector>

namespace malgo {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Child-seed derivation from (master, purpose, index). Stable across runs and
// independent of scheduling, so parallel workers can own their own generator.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t index = 0) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the purpose tag
  for (unsigned char c : purpose) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) ^ splitmix64(index + 0x51ed270b99b1a3c9ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Runs fn(i) for i in [0, n). Each item must be independent; results are
// deterministic because workers write only to their own slots.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  std::size_t n_workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : static_cast<std::size_t>(hw > 0 ? hw : 1);
  if (n_workers <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  n_workers = std::min(n_workers, n);
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += n_workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace malgo
