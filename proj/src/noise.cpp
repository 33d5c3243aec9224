#include "rbmlab/noise.hpp"

#include <cmath>
#include <numbers>

namespace rbmlab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline std::array<std::uint32_t, 4> philox_round(const std::array<std::uint32_t, 4>& c,
                                                 const std::array<std::uint32_t, 2>& k) noexcept {
    const std::uint64_t p0 = std::uint64_t{kMul0} * c[0];
    const std::uint64_t p1 = std::uint64_t{kMul1} * c[2];
    return {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
            static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
}

constexpr double kTwoPow53Inv = 1.0 / 9007199254740992.0;

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key) noexcept {
    counter = philox_round(counter, key);
    for (int r = 1; r < 10; ++r) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
        counter = philox_round(counter, key);
    }
    return counter;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

std::array<std::uint32_t, 2> NoiseStream::key_words(std::uint32_t block) const noexcept {
    const std::uint64_t tag =
        (static_cast<std::uint64_t>(purpose_) << 32) | static_cast<std::uint64_t>(block);
    const std::uint64_t k = mix64(seed_ ^ mix64(tag));
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
}

std::array<std::uint64_t, 2> NoiseStream::bits(const NoiseKey& key,
                                               std::uint32_t block) const noexcept {
    const auto out =
        philox4x32({key.particle, key.step, key.substep, key.replica}, key_words(block));
    return {(std::uint64_t{out[0]} << 32) | out[1], (std::uint64_t{out[2]} << 32) | out[3]};
}

void NoiseStream::normals(const NoiseKey& key, std::span<double> out) const noexcept {
    std::uint32_t block = 0;
    for (std::size_t c = 0; c < out.size(); c += 2, ++block) {
        const auto w = bits(key, block);
        // u1 in (0, 1), never 0, so the log is finite.
        const double u1 = (static_cast<double>(w[0] >> 11) + 0.5) * kTwoPow53Inv;
        const double u2 = static_cast<double>(w[1] >> 11) * kTwoPow53Inv;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        out[c] = r * std::cos(theta);
        if (c + 1 < out.size()) out[c + 1] = r * std::sin(theta);
    }
}

double NoiseStream::normal(const NoiseKey& key) const noexcept {
    double z = 0.0;
    normals(key, std::span<double>(&z, 1));
    return z;
}

CounterRng::result_type CounterRng::operator()() noexcept {
    if (available_ == 0) {
        buffer_ = stream_.bits(key_, block_++);
        available_ = 2;
    }
    return buffer_[--available_];
}

std::uint64_t CounterRng::below(std::uint64_t bound) noexcept {
    __extension__ typedef unsigned __int128 u128;
    std::uint64_t x = (*this)();
    u128 m = static_cast<u128>(x) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            x = (*this)();
            m = static_cast<u128>(x) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double CounterRng::uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * kTwoPow53Inv;
}

}  // namespace rbmlab
