#include <random>

#include "cva/errors.hpp"
#include "cva/matching.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cva;

namespace {

CostVolume integer_volume(int w, int h, int d, int max_cost, std::uint64_t seed) {
    CostVolume v(w, h, d);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> u(0, max_cost);
    for (auto& c : v.costs()) c = static_cast<float>(u(rng));
    return v;
}

/// Costs along the scanline visited by direction dir, in visiting order.
std::vector<std::vector<long>> line(const CostVolume& v, matching::PathDirection dir) {
    std::vector<std::vector<long>> out;
    const int len = dir.dx != 0 ? v.width() : v.height();
    for (int k = 0; k < len; ++k) {
        const int x = dir.dx > 0 ? k : dir.dx < 0 ? v.width() - 1 - k : 0;
        const int y = dir.dy > 0 ? k : dir.dy < 0 ? v.height() - 1 - k : 0;
        std::vector<long> c;
        for (int d = 0; d < v.depth(); ++d) c.push_back(static_cast<long>(v(x, y, d)));
        out.push_back(c);
    }
    return out;
}

}  // namespace

TEST_CASE("path set order") {
    const auto four = matching::sgm_paths(4);
    REQUIRE(four.size() == 4);
    CHECK((four[0].dx == 1 && four[0].dy == 0));
    CHECK((four[3].dx == 0 && four[3].dy == -1));
    CHECK(matching::sgm_paths(8).size() == 8);
    CHECK_THROWS_AS(matching::sgm_paths(6), std::invalid_argument);
}

TEST_CASE("single path cost equals exhaustive enumeration on scanlines") {
    for (int trial = 0; trial < 30; ++trial) {
        const long p1 = 1 + trial % 3, p2 = p1 + trial % 7;
        const auto horizontal = integer_volume(8, 1, 5, 12, 100 + trial);
        for (auto dir : {matching::PathDirection{1, 0}, matching::PathDirection{-1, 0}}) {
            const auto got = matching::sgm_path_cost(horizontal, static_cast<float>(p1), static_cast<float>(p2), dir);
            const auto expect = oracle::path_costs(line(horizontal, dir), p1, p2);
            const auto got_line = line(got, dir);
            CHECK(got_line == expect);
        }
        const auto vertical = integer_volume(1, 7, 4, 9, 200 + trial);
        for (auto dir : {matching::PathDirection{0, 1}, matching::PathDirection{0, -1}}) {
            const auto got = matching::sgm_path_cost(vertical, static_cast<float>(p1), static_cast<float>(p2), dir);
            CHECK(line(got, dir) == oracle::path_costs(line(vertical, dir), p1, p2));
        }
    }
}

TEST_CASE("diagonal path follows the diagonal chain") {
    const auto v = integer_volume(5, 5, 4, 10, 7);
    const auto got = matching::sgm_path_cost(v, 2.0f, 5.0f, {1, 1});
    std::vector<std::vector<long>> diag, got_diag;
    for (int k = 0; k < 5; ++k) {
        std::vector<long> c, g;
        for (int d = 0; d < 4; ++d) {
            c.push_back(static_cast<long>(v(k, k, d)));
            g.push_back(static_cast<long>(got(k, k, d)));
        }
        diag.push_back(c);
        got_diag.push_back(g);
    }
    CHECK(got_diag == oracle::path_costs(diag, 2, 5));
    // Pixels on the top row and left column have no predecessor.
    for (int d = 0; d < 4; ++d) {
        CHECK(got(3, 0, d) == v(3, 0, d));
        CHECK(got(0, 4, d) == v(0, 4, d));
    }
}

TEST_CASE("aggregation sums the per-direction path costs") {
    const auto v = integer_volume(6, 5, 4, 8, 3);
    const auto agg = matching::sgm_aggregate(v, 1.0f, 4.0f, 8);
    CostVolume sum(6, 5, 4);
    for (auto dir : matching::sgm_paths(8)) {
        const auto p = matching::sgm_path_cost(v, 1.0f, 4.0f, dir);
        for (std::size_t i = 0; i < sum.costs().size(); ++i) sum.costs()[i] += p.costs()[i];
    }
    CHECK(agg == sum);
}

TEST_CASE("tiny equal penalties keep a unique raw minimum") {
    const auto v = integer_volume(9, 7, 6, 20, 11);
    const auto agg = matching::sgm_aggregate(v, 1e-3f, 1e-3f, 8);
    const auto raw = matching::wta_disparity(v);
    const auto smooth = matching::wta_disparity(agg);
    int checked = 0;
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 9; ++x) {
            const auto c = v.curve(x, y);
            const float m = *std::min_element(c.begin(), c.end());
            if (std::count(c.begin(), c.end(), m) != 1) continue;
            ++checked;
            CHECK(smooth.at(x, y) == raw.at(x, y));
        }
    CHECK(checked > 30);
}

TEST_CASE("huge penalties on one path select the minimum of the cumulative cost") {
    const auto v = integer_volume(7, 1, 5, 10, 13);
    const auto path = matching::sgm_path_cost(v, 1e6f, 1e6f, {1, 0});
    std::vector<long> cumulative(5, 0);
    for (int x = 0; x < 7; ++x) {
        for (int d = 0; d < 5; ++d) cumulative[d] += static_cast<long>(v(x, 0, d));
        const auto best = std::min_element(cumulative.begin(), cumulative.end()) - cumulative.begin();
        const auto c = path.curve(x, 0);
        CHECK(std::min_element(c.begin(), c.end()) - c.begin() == best);
    }
}

TEST_CASE("path cost per direction stays within raw max plus the large penalty") {
    const auto v = integer_volume(10, 10, 6, 24, 21);
    for (auto dir : matching::sgm_paths(8)) {
        const auto p = matching::sgm_path_cost(v, 2.0f, 96.0f, dir);
        for (float c : p.costs()) {
            CHECK(c >= 0.0f);
            CHECK(c <= 24.0f + 96.0f);
        }
    }
}

TEST_CASE("aggregation preconditions") {
    auto v = integer_volume(3, 3, 3, 5, 1);
    CHECK_THROWS_AS(matching::sgm_aggregate(v, 0.0f, 1.0f, 4), std::invalid_argument);
    CHECK_THROWS_AS(matching::sgm_aggregate(v, 3.0f, 1.0f, 4), std::invalid_argument);
    v.set_normalized(true);
    CHECK_THROWS_AS(matching::sgm_aggregate(v, 1.0f, 2.0f, 4), InvalidStateError);
}
