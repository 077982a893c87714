#pragma once

#include <array>
#include <cstdint>

namespace archkernel {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
///
/// Every draw is a pure function of (key, counter), so independent streams are
/// obtained by fixing distinct counter words instead of advancing shared state.
/// This algorithm is part of the reproducibility contract: sample files and
/// Monte Carlo estimates depend on it bit for bit.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
            key[0] += kWeyl0;
            key[1] += kWeyl1;
        }
        return ctr;
    }
};

/// Independent uniform stream identified by (seed, stream). Draw k of a stream
/// never depends on how many draws other streams consumed.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream) {}

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept {
        if (used_ == 2) refill();
        const std::uint64_t bits = (static_cast<std::uint64_t>(buffer_[2 * used_]) << 32) |
                                   buffer_[2 * used_ + 1];
        ++used_;
        return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t stream() const noexcept { return stream_; }

private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                      static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_),
                                      static_cast<std::uint32_t>(stream_ >> 32)};
        buffer_ = Philox4x32::block(ctr, key_);
        ++block_;
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    Philox4x32::Counter buffer_{};
    int used_ = 2;
};

/// Stream ids are partitioned by purpose so that, e.g., sampler rows and
/// Monte Carlo integration points drawn under one seed never coincide.
namespace streams {
inline constexpr std::uint64_t kSampleRows = 0;
inline constexpr std::uint64_t kIntegration = 1ull << 48;
inline constexpr std::uint64_t kReplicates = 2ull << 48;
}  // namespace streams

/// 64-bit seed for sub-run `index` of a run seeded with `seed`, e.g. one
/// simulation replicate. Distinct indices give unrelated seeds.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    const auto out = Philox4x32::block({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                        static_cast<std::uint32_t>(streams::kReplicates >> 32), 0x5EEDu},
                                       {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

}  // namespace archkernel
