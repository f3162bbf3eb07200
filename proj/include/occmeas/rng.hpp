#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace occmeas {

/// Counter-based pseudo-random generator. Every draw is a pure function of
/// (seed, stream, counter), so replays are bit-identical on any platform and
/// replicates can be assigned independent streams without sharing state.
/// Stream ids combine a replicate index and a channel so that the noise draws
/// of replicate r are the same for every control plan compared under common
/// random numbers.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream)
      : seed_(seed), stream_(stream), counter_(0) {}

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::uint64_t bits_at(std::uint64_t counter) const {
    std::uint64_t h = mix(seed_);
    h = mix(h ^ stream_);
    return mix(h ^ counter);
  }

  /// Uniform in [0, 1) from the 53 high bits of the hashed counter.
  double uniform_at(std::uint64_t counter) const {
    return static_cast<double>(bits_at(counter) >> 11) * 0x1.0p-53;
  }

  double uniform() { return uniform_at(counter_++); }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Index sampled by inverse CDF over explicit probabilities.
  std::size_t sample_index(std::span<const double> probs) {
    const double u = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    if (probs.empty()) throw std::invalid_argument("sample_index: empty probabilities");
    return probs.size() - 1;
  }

  std::size_t sample_index_at(std::uint64_t counter, std::span<const double> probs) const {
    const double u = uniform_at(counter);
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    if (probs.empty()) throw std::invalid_argument("sample_index_at: empty probabilities");
    return probs.size() - 1;
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_;
};

/// Stream-id layout shared across the project. Replicate r of a Monte Carlo
/// run draws its noise from channel knNoise of stream r, its policy
/// randomization from channel knPolicy, and so on.
namespace stream_channel {
inline constexpr std::uint64_t kNoise = 0;
inline constexpr std::uint64_t kPolicy = 1;
inline constexpr std::uint64_t kPlanSample = 2;
inline constexpr std::uint64_t kBasis = 3;
inline constexpr std::uint64_t kDirections = 4;
inline constexpr std::uint64_t kMisc = 5;
}  // namespace stream_channel

inline std::uint64_t make_stream(std::uint64_t replicate, std::uint64_t channel) {
  return (replicate << 8) | (channel & 0xff);
}

}  // namespace occmeas
