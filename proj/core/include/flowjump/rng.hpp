#pragma once

#include <array>
#include <cstdint>

namespace flowjump {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the
/// output is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter counter, Key key) noexcept;
};

/// Independent sub-streams carved out of one (seed, stream_id) address.
enum class Channel : std::uint32_t {
  Brownian = 0,
  JumpTimes = 1,
  JumpMarks = 2,
  Bridge = 3,
  Initial = 4,
  Auxiliary = 5,
};

/// Sequential reader over the counter space addressed by
/// (seed, stream_id, channel, draw index). Two readers with the same
/// address produce identical sequences regardless of scheduling.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id, Channel channel) noexcept;

  /// Uniform in the open interval (0, 1), 53-bit resolution.
  double uniform() noexcept;
  /// Standard normal via Box-Muller; consumes uniforms in pairs.
  double normal() noexcept;
  /// Exponential with unit rate.
  double exponential() noexcept;

  std::uint64_t draws() const noexcept { return draw_; }

 private:
  std::uint64_t next_u64() noexcept;

  Philox4x32::Key key_;
  std::uint64_t stream_id_;
  std::uint32_t channel_;
  std::uint64_t draw_ = 0;  // 64-bit words consumed
  Philox4x32::Counter buffer_{};
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Mixes a base stream id with a sub-index so nested ensembles (path index,
/// replica, level) map to distinct stream ids deterministically.
std::uint64_t derive_stream(std::uint64_t base, std::uint64_t sub) noexcept;

}  // namespace flowjump
