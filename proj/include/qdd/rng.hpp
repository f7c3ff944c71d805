#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace qdd {

// Counter-based generator: Philox 4x64 with 10 rounds. A draw is a pure
// function of (key, counter), so paths can be generated on any thread in any
// order, and two runs that consume different prefixes of a stream still see
// identical values. Output matches the reference 4x64-10 sequence.
namespace philox {

inline constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
inline constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi,
                    std::uint64_t& lo) {
    const unsigned __int128 p =
        static_cast<unsigned __int128>(a) * static_cast<unsigned __int128>(b);
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

inline std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                          std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

}  // namespace philox

// Stream ids: one substream per random object of a scenario, so coupled and
// common-random-number experiments can share exactly the draws they intend to.
enum Stream : std::uint64_t {
    kStreamTheta = 0,
    kStreamMagnitude = 1,
    kStreamNoise = 2,
};

inline double u64_to_open_unit(std::uint64_t x) {
    // (0,1) strictly: 53-bit mantissa shifted off zero.
    return (static_cast<double>(x >> 11) + 0.5) * 0x1p-53;
}

// Sequential sampler for one (master_seed, path_index, stream) substream.
// Block i of the stream sits at counter (i, path_index, stream, 0) under key
// (master_seed, 0); each block carries four 64-bit words = two uniform pairs.
class StreamSampler {
public:
    StreamSampler(std::uint64_t master_seed, std::uint64_t path_index,
                  std::uint64_t stream)
        : key_{master_seed, 0}, path_(path_index), stream_(stream) {}

    double next_uniform() {
        const std::uint64_t i = draw_++;
        fetch(i >> 1);
        return u64_to_open_unit(buf_[2 * (i & 1)]);
    }

    // Box-Muller, one normal per uniform pair.
    double next_normal() {
        const std::uint64_t i = draw_++;
        fetch(i >> 1);
        const double u1 = u64_to_open_unit(buf_[2 * (i & 1)]);
        const double u2 = u64_to_open_unit(buf_[2 * (i & 1) + 1]);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    void fetch(std::uint64_t block_index) {
        if (have_ && block_index == block_) return;
        buf_ = philox::block({block_index, path_, stream_, 0}, key_);
        block_ = block_index;
        have_ = true;
    }

    std::array<std::uint64_t, 2> key_;
    std::uint64_t path_;
    std::uint64_t stream_;
    std::uint64_t draw_ = 0;
    std::uint64_t block_ = 0;
    bool have_ = false;
    std::array<std::uint64_t, 4> buf_{};
};

}  // namespace qdd
