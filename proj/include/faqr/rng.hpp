#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace faqr {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// A (key, counter) pair deterministically maps to four 32-bit words, so any
/// replicate can be regenerated without replaying the ones before it.
class Philox4x32 {
public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::string_view algorithm_id = "philox4x32-10";

    static constexpr Counter block(Counter ctr, Key key) noexcept {
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
            const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
            const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const auto lo0 = static_cast<std::uint32_t>(p0);
            const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const auto lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        }
        return ctr;
    }

private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
};

/// Purposes that draw from a shared user seed. Each gets its own family of
/// streams so that, e.g., the lambda simulation and a bootstrap never overlap.
enum class StreamDomain : std::uint16_t {
    generic = 0,
    lambda_simulation = 1,
    multiplier_bootstrap = 2,
    residual_bootstrap = 3,
    dgp_loadings = 4,
    dgp_replicate = 5,
    replicate_seed = 6,
    backtest_window = 7,
};

/// UniformRandomBitGenerator over one Philox stream. The key is the 64-bit
/// seed; the upper half of the counter holds (domain, index), the lower half
/// counts blocks within the stream.
class RandomStream {
public:
    using result_type = std::uint64_t;

    RandomStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_hi_((std::uint64_t{static_cast<std::uint16_t>(domain)} << 48) ^
                     (index & 0x0000FFFFFFFFFFFFull)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        if (pos_ == 2) refill();
        return buffer_[pos_++];
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    double uniform() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// +1 or -1 with equal probability.
    double rademacher() noexcept { return ((*this)() >> 63) ? 1.0 : -1.0; }

private:
    void refill() noexcept {
        const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                      static_cast<std::uint32_t>(stream_hi_),
                                      static_cast<std::uint32_t>(stream_hi_ >> 32)};
        const auto out = Philox4x32::block(ctr, key_);
        buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
        ++block_;
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint64_t stream_hi_;
    std::uint64_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
};

/// Derives a child seed (e.g. one per Monte-Carlo replicate) from a parent seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    RandomStream stream(seed, StreamDomain::replicate_seed, index);
    return stream();
}

}  // namespace faqr
