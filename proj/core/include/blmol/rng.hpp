#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace blmol {

// Counter-based splittable random stream. A stream is a pure value
// (key, counter); derive() maps (key, tag) to a child key without touching
// the parent, so per-index child streams give identical sequences no matter
// which thread consumes them or in what order they are created.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed);

  /// Child stream for a named sub-task. Pure: does not advance this stream.
  [[nodiscard]] RandomStream derive(std::string_view tag) const;
  /// Child stream keyed by index (loop bodies, per-sample work).
  [[nodiscard]] RandomStream derive(std::uint64_t index) const;

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double next_double();
  /// Uniform integer in [lo, hi], inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi);
  /// Standard normal (Box-Muller).
  double next_normal();

  /// Fisher-Yates shuffle of [0, n) indices, written into out.
  void shuffle_indices(std::size_t n, std::vector<std::uint32_t>& out);

  /// Derivation chain, "/"-joined, for diagnostics.
  const std::string& path() const { return path_; }

 private:
  RandomStream(std::uint64_t key, std::string path);

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::string path_;
};

/// Root stream for (seed, tag). Equivalent to RandomStream(seed).derive(tag).
RandomStream derive_stream(std::uint64_t seed, std::string_view tag);

}  // namespace blmol
