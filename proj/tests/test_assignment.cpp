#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "mcpt/assignment.hpp"
#include "mcpt/error.hpp"
#include "mcpt/rng.hpp"

using namespace mcpt;
using testutil::brute_force_all_optimal;
using testutil::brute_force_min_cost;

TEST_CASE("small matrices match hand results") {
    auto r = solve_assignment({{0, 1}, {1, 0}});
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
    CHECK(r.total_cost == 0.0);

    r = solve_assignment({{4, 1, 3}, {2, 0, 5}, {3, 2, 2}});
    CHECK(r.total_cost == 5.0);
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 1}, {1, 0}, {2, 2}});

    r = solve_assignment({{1, 2, 9}, {9, 1, 2}});
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
    CHECK(r.total_cost == 2.0);
}

TEST_CASE("gating drops expensive pairs after solving") {
    auto r = solve_assignment({{1.5, 1.5}, {1.5, 1.5}}, 0.4);
    CHECK(r.pairs.empty());
    CHECK(r.total_cost == 0.0);

    r = solve_assignment({{0.1, 2.0}, {2.0, 0.9}}, 0.5);
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}});
    CHECK(r.total_cost == doctest::Approx(0.1));
}

TEST_CASE("ties break to the lexicographically smallest pair list") {
    auto r = solve_assignment({{1, 1}, {1, 1}});
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

    r = solve_assignment({{0, 0, 0}, {0, 0, 0}});
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});

    // more rows than columns: earlier rows keep their match on ties
    r = solve_assignment({{0, 0}, {0, 0}, {0, 0}});
    CHECK(r.pairs == std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("empty and degenerate inputs") {
    CHECK(solve_assignment({}).pairs.empty());
    CHECK_THROWS_AS(solve_assignment({{1.0, 2.0}, {3.0}}), error);
    CHECK_THROWS_AS(solve_assignment({{std::nan("")}}), error);
}

TEST_CASE("matches exhaustive search on random square matrices") {
    Rng rng(2024);
    for (int trial = 0; trial < 300; ++trial) {
        int n = 1 + static_cast<int>(rng.next_below(7));
        std::vector<std::vector<double>> cost(n, std::vector<double>(n));
        bool integer = trial % 2 == 0;
        for (auto& row : cost)
            for (auto& v : row)
                v = integer ? static_cast<double>(rng.next_below(10))
                            : rng.next_range(-4.0, 4.0);
        auto r = solve_assignment(cost);
        double expect = brute_force_min_cost(cost);
        REQUIRE(r.pairs.size() == static_cast<size_t>(n));
        if (integer) {
            CHECK(r.total_cost == expect);
        } else {
            CHECK(r.total_cost == doctest::Approx(expect).epsilon(1e-9));
        }
    }
}

TEST_CASE("matches exhaustive search on random rectangular matrices") {
    Rng rng(99);
    for (int trial = 0; trial < 120; ++trial) {
        int rows = 2 + static_cast<int>(rng.next_below(4));
        int cols = 2 + static_cast<int>(rng.next_below(6));
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (auto& row : cost)
            for (auto& v : row) v = static_cast<double>(rng.next_below(12));
        auto r = solve_assignment(cost);
        REQUIRE(r.pairs.size() == static_cast<size_t>(std::min(rows, cols)));
        CHECK(r.total_cost == brute_force_min_cost(cost));
    }
}

TEST_CASE("result is the lexicographic minimum among all optima") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        int rows = 1 + static_cast<int>(rng.next_below(4));
        int cols = 1 + static_cast<int>(rng.next_below(4));
        std::vector<std::vector<double>> cost(rows, std::vector<double>(cols));
        for (auto& row : cost)
            for (auto& v : row) v = static_cast<double>(rng.next_below(3));
        auto r = solve_assignment(cost);
        auto all = brute_force_all_optimal(cost);
        REQUIRE(!all.empty());
        auto best = all[0];
        for (const auto& cand : all)
            if (cand < best) best = cand;
        CHECK(r.pairs == best);
    }
}
