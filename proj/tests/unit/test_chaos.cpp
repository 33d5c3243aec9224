#include <doctest.h>

#include <cmath>

#include "rbmlab/chaos.hpp"
#include "rbmlab/errors.hpp"

using namespace rbmlab;

namespace {

Partition make(std::size_t n, std::size_t p, std::vector<std::uint32_t> m) {
    Partition out;
    out.n = n;
    out.p = p;
    out.members = std::move(m);
    return out;
}

}  // namespace

TEST_CASE("first interval leaves everyone clean with lists of size p") {
    auto s = InfluenceState::initial(8, 2);
    s = advance_influence(s, make(8, 2, {0, 1, 2, 3, 4, 5, 6, 7}));
    for (std::size_t i = 0; i < 8; ++i) {
        CHECK(s.clean[i]);
        CHECK(s.lists[i].size() == 2);
    }
}

TEST_CASE("merging follows the figure's pattern") {
    auto s = InfluenceState::initial(8, 2);
    s = advance_influence(s, make(8, 2, {0, 1, 2, 3, 4, 5, 6, 7}));
    s = advance_influence(s, make(8, 2, {0, 4, 1, 5, 2, 6, 3, 7}));
    CHECK(s.lists[0] == std::vector<std::uint32_t>{0, 1, 4, 5});
    CHECK(s.clean[0]);
    // Rebatching with a former partner: lists overlap, so not clean and |L| < p^k.
    s = advance_influence(s, make(8, 2, {0, 1, 2, 3, 4, 5, 6, 7}));
    CHECK(!s.clean[0]);
    CHECK(s.lists[0].size() < 8);
}

TEST_CASE("exact epsilon for tiny systems") {
    CHECK(epsilon_exact(4, 2, 2).epsilon == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(epsilon_exact(6, 2, 2).epsilon == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(epsilon_exact(8, 2, 1).epsilon == 0.0);
    CHECK(epsilon_exact(4, 2, 2).standard_error == 0.0);
    CHECK(enumerate_partitions(6, 2).size() == 15);
    CHECK(enumerate_partitions(6, 3).size() == 10);
    CHECK_THROWS_AS(epsilon_exact(12, 2, 4), SizeError);
}

TEST_CASE("Monte Carlo epsilon agrees with enumeration") {
    for (auto [n, k] : {std::pair{4, 2}, {6, 2}, {8, 3}}) {
        const auto e = epsilon_exact(n, 2, k);
        const auto m = epsilon_mc(n, 2, k, 40000, 3);
        CHECK(std::abs(m.epsilon - e.epsilon) <= 3.0 * m.standard_error);
        CHECK(m.method == CleanMethod::monte_carlo);
    }
}

TEST_CASE("Monte Carlo epsilon is thread-count independent") {
    CHECK(epsilon_mc(64, 2, 3, 5000, 9, Exec{1}).epsilon == epsilon_mc(64, 2, 3, 5000, 9, Exec{3}).epsilon);
}
