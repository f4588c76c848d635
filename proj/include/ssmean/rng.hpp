#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace ssmean {

// Counter-based Philox4x32-10 stream. The 128-bit counter is split into a
// 64-bit block index and the 64-bit stream id, and the 64-bit seed is the
// key, so (seed, stream_id) pins the whole sequence independent of how work
// is scheduled.
class RngStream {
 public:
  static constexpr std::string_view kAlgorithm = "philox4x32-10";

  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  // Independent child stream at position zero. The child id is a hash of
  // (stream_id, label), so substreams of substreams stay distinct.
  RngStream substream(std::uint64_t label) const;

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
};

std::uint64_t mix64(std::uint64_t x);

// Stable label for keying substreams by name (FNV-1a).
std::uint64_t label_hash(std::string_view text);

}  // namespace ssmean
