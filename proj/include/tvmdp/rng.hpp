#pragma once

#include <cstdint>

namespace tvmdp {

// Counter-based pseudo-random generator: draw i of a stream with key k is
//     mix(k + i * 0x9E3779B97F4A7C15)
// where mix is the SplitMix64 finalizer (Steele, Lea & Flood's SplitMix
// update run in counter mode). Pure 64-bit integer arithmetic plus IEEE-754
// doubles, so sequences are bit-identical across platforms and independent of
// call-site history. Not cryptographic.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
        : key_(key), counter_(counter) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        return mix(key_ + counter_++ * 0x9E3779B97F4A7C15ULL);
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Modulo bias is < 2^-53 for the n used here.
    int uniform_int(int n) { return static_cast<int>(next_double() * n); }

    // Independent stream derived from this one's key; deterministic in id and
    // unaffected by draws already made.
    CounterRng substream(std::uint64_t id) const {
        return CounterRng(mix(key_ ^ mix(id)));
    }

    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace tvmdp
