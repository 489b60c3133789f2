#include "blmol/rng.hpp"

#include <cmath>
#include <vector>

namespace blmol {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer.
std::uint64_t mix(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}

std::uint64_t hash_bytes(std::string_view s) {
  // FNV-1a, then one mixing round to spread short tags.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return mix(h ^ (static_cast<std::uint64_t>(s.size()) << 32));
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed) : key_(mix(seed + kGolden)), path_("root") {}

RandomStream::RandomStream(std::uint64_t key, std::string path)
    : key_(key), path_(std::move(path)) {}

RandomStream RandomStream::derive(std::string_view tag) const {
  std::uint64_t child = mix(key_ ^ hash_bytes(tag));
  std::string p = path_;
  p += '/';
  p += tag;
  return RandomStream(child, std::move(p));
}

RandomStream RandomStream::derive(std::uint64_t index) const {
  std::uint64_t child = mix(key_ ^ mix(index + kGolden));
  return RandomStream(child, path_ + '/' + std::to_string(index));
}

std::uint64_t RandomStream::next_u64() { return mix(key_ + (++counter_) * kGolden); }

double RandomStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::int64_t RandomStream::next_int(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // Lemire reduction; bias is negligible for the span sizes used here.
  const auto wide = static_cast<unsigned __int128>(next_u64()) * span;
  return lo + static_cast<std::int64_t>(wide >> 64);
}

double RandomStream::next_normal() {
  double u1 = next_double();
  while (u1 <= 0.0) u1 = next_double();
  const double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

void RandomStream::shuffle_indices(std::size_t n, std::vector<std::uint32_t>& out) {
  out.resize(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(i);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(next_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(out[i - 1], out[j]);
  }
}

RandomStream derive_stream(std::uint64_t seed, std::string_view tag) {
  return RandomStream(seed).derive(tag);
}

}  // namespace blmol
