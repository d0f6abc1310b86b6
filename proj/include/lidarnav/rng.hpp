#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace lidarnav {

using Rng = std::mt19937_64;

/// Derives independent, named generators from one root seed so that adding a
/// consumer never shifts the draws of another.
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t root_seed) : root_(root_seed) {}

  std::uint64_t root_seed() const { return root_; }

  Rng stream(std::string_view name) const {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (char c : name) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ULL;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(root_), static_cast<std::uint32_t>(root_ >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    return Rng(seq);
  }

 private:
  std::uint64_t root_;
};

}  // namespace lidarnav
