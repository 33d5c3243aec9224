#include <doctest.h>

#include <cmath>
#include <set>

#include "rbmlab/noise.hpp"

using namespace rbmlab;

TEST_CASE("philox4x32-10 known-answer vectors") {
    using C = std::array<std::uint32_t, 4>;
    using K = std::array<std::uint32_t, 2>;
    CHECK(philox4x32(C{0, 0, 0, 0}, K{0, 0}) == C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32(C{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, K{0xffffffff, 0xffffffff}) ==
          C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32(C{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, K{0xa4093822, 0x299f31d0}) ==
          C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("same key gives the same normal, different keys or purposes differ") {
    const NoiseStream s(7);
    const NoiseKey k{1, 2, 3, 4};
    CHECK(s.normal(k) == s.normal(k));
    CHECK(s.normal(k) != s.normal(NoiseKey{1, 2, 3, 5}));
    CHECK(s.normal(k) != s.with_purpose(Purpose::initial).normal(k));
    CHECK(s.normal(k) != NoiseStream(8).normal(k));
}

TEST_CASE("normals have unit variance and zero mean") {
    const NoiseStream s(11);
    const int n = 200000;
    double m = 0, v = 0;
    for (int i = 0; i < n; ++i) {
        const double z = s.normal(NoiseKey{0, static_cast<std::uint32_t>(i), 0, 0});
        m += z;
        v += z * z;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::abs(m) < 4.0 / std::sqrt(double(n)));
    CHECK(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("bounded integers are uniform and in range") {
    CounterRng rng(NoiseStream(3, Purpose::test), NoiseKey{});
    std::array<int, 7> counts{};
    const int n = 70000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.below(7);
        REQUIRE(v < 7);
        ++counts[v];
    }
    // Chi-square with 6 dof; 22.46 is the 0.999 quantile.
    double chi = 0;
    for (int c : counts) chi += (c - n / 7.0) * (c - n / 7.0) / (n / 7.0);
    CHECK(chi < 22.46);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
