#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace rbmlab {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer; used to derive keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Independent randomness domains sharing one master seed.
enum class Purpose : std::uint32_t {
    brownian = 1,
    initial = 2,
    partition = 3,
    companion = 4,
    probe = 5,
    test = 6,
};

/// Identifies one Gaussian increment: same key, same value.
struct NoiseKey {
    std::uint32_t replica = 0;
    std::uint32_t particle = 0;
    std::uint32_t step = 0;
    std::uint32_t substep = 0;

    friend bool operator==(const NoiseKey&, const NoiseKey&) = default;
};

/// Counter-based Gaussian source. Stateless: values depend only on (seed, purpose, key).
class NoiseStream {
public:
    explicit NoiseStream(std::uint64_t seed, Purpose purpose = Purpose::brownian) noexcept
        : seed_(seed), purpose_(purpose) {}

    std::uint64_t seed() const noexcept { return seed_; }
    Purpose purpose() const noexcept { return purpose_; }

    /// Same seed, different domain.
    NoiseStream with_purpose(Purpose p) const noexcept { return NoiseStream(seed_, p); }

    /// Fills `out` with independent standard normals for this key.
    void normals(const NoiseKey& key, std::span<double> out) const noexcept;

    double normal(const NoiseKey& key) const noexcept;

    /// 128 raw bits for this key and block, as two 64-bit words.
    std::array<std::uint64_t, 2> bits(const NoiseKey& key, std::uint32_t block = 0) const noexcept;

private:
    std::array<std::uint32_t, 2> key_words(std::uint32_t block) const noexcept;

    std::uint64_t seed_;
    Purpose purpose_;
};

/// Sequential 64-bit generator over a fixed counter key; satisfies
/// UniformRandomBitGenerator. Used for shuffles and index draws.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(const NoiseStream& stream, NoiseKey key) noexcept : stream_(stream), key_(key) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept;

    /// Unbiased integer in [0, bound) (Lemire's multiply-shift rejection).
    std::uint64_t below(std::uint64_t bound) noexcept;

    /// Uniform double in [0, 1).
    double uniform() noexcept;

private:
    NoiseStream stream_;
    NoiseKey key_;
    std::uint32_t block_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int available_ = 0;
};

}  // namespace rbmlab
