#include <algorithm>
#include <cmath>

#include "cva/matching.hpp"
#include "cva/synth.hpp"
#include "doctest.h"

using namespace cva;

namespace {

struct Run {
    int begin, end;  // half-open
    float value;
};

/// Maximal equal-value runs strictly lower than whatever borders them.
std::vector<Run> local_minima(const std::vector<float>& c) {
    std::vector<Run> out;
    const int n = static_cast<int>(c.size());
    int i = 0;
    while (i < n) {
        int j = i;
        while (j < n && c[j] == c[i]) ++j;
        const bool left_ok = i == 0 || c[i - 1] > c[i];
        const bool right_ok = j == n || c[j] > c[i];
        if (left_ok && right_ok) out.push_back({i, j, c[i]});
        i = j;
    }
    return out;
}

std::vector<float> sorted_values(std::vector<Run> runs) {
    std::vector<float> v;
    for (const auto& r : runs) v.push_back(r.value);
    std::sort(v.begin(), v.end());
    return v;
}

}  // namespace

TEST_CASE("constant disparity scene is recovered by block matching") {
    synth::SceneSpec spec;
    spec.width = 64;
    spec.height = 48;
    spec.min_disparity = spec.max_disparity = 4;
    spec.seed = 7;
    const auto pair = synth::gen_stereo_pair(spec);
    const auto vol = matching::build_cost_volume_bm(pair.left, pair.right, 8, 5);
    const auto wta = matching::wta_disparity(vol);
    int valid = 0, hits = 0;
    for (int y = 2; y < spec.height - 2; ++y)
        for (int x = 8 + 2; x < spec.width - 2; ++x) {
            if (!pair.ground_truth.is_valid(x, y)) continue;
            CHECK(pair.ground_truth.at(x, y) == 4.0);
            ++valid;
            hits += wta.is_valid(x, y) && wta.at(x, y) == 4;
        }
    REQUIRE(valid > 1000);
    CHECK(hits >= 0.95 * valid);
}

TEST_CASE("fully texture-less scene yields zero census and flat curves") {
    synth::SceneSpec spec;
    spec.width = 32;
    spec.height = 24;
    spec.textureless_fraction = 1.0;
    spec.seed = 2;
    const auto pair = synth::gen_stereo_pair(spec);
    const auto census = matching::census_transform(pair.left, 5);
    for (int y = 2; y < 22; ++y)
        for (int x = 2; x < 30; ++x)
            if (census.is_valid(x, y)) CHECK(matching::to_bit_string(census.at(x, y)) == std::string(24, '0'));
    const auto vol = matching::build_cost_volume_bm(pair.left, pair.right, 8, 5);
    for (int y = 2; y < 22; ++y)
        for (int x = 10; x < 30; ++x) {
            const auto c = vol.curve(x, y);
            CHECK(std::all_of(c.begin(), c.end(), [&](float v) { return v == c[0]; }));
        }
}

TEST_CASE("scenes are deterministic per seed") {
    synth::SceneSpec spec;
    spec.noise_stddev = 0.02;
    spec.textureless_fraction = 0.2;
    spec.texture_density = 0.7;
    spec.seed = 99;
    const auto a = synth::gen_stereo_pair(spec);
    const auto b = synth::gen_stereo_pair(spec);
    CHECK(a.left == b.left);
    CHECK(a.right == b.right);
    CHECK(a.ground_truth == b.ground_truth);
    spec.seed = 100;
    CHECK_FALSE(synth::gen_stereo_pair(spec).left == a.left);
}

TEST_CASE("re-warping the left image by the reference disparity reproduces the right image") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        synth::SceneSpec spec;
        spec.width = 80;
        spec.height = 40;
        spec.min_disparity = 1;
        spec.max_disparity = 20;
        spec.rectangles = 6;
        spec.textureless_fraction = 0.1 * static_cast<double>(seed % 3);
        spec.seed = seed;
        const auto pair = synth::gen_stereo_pair(spec);
        int valid = 0, invalid = 0;
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                if (!pair.ground_truth.is_valid(x, y)) {
                    ++invalid;
                    continue;
                }
                ++valid;
                const double d = pair.ground_truth.at(x, y);
                CHECK(d == std::round(d));
                CHECK((d >= 1 && d <= 20));
                const int xr = x - static_cast<int>(d);
                REQUIRE(xr >= 0);
                CHECK(pair.right(xr, y) == pair.left(x, y));
            }
        CHECK(valid > invalid);
        // Columns left of the smallest disparity project outside the right view.
        for (int y = 0; y < spec.height; ++y) CHECK_FALSE(pair.ground_truth.is_valid(0, y));
    }
}

TEST_CASE("scene spec validation") {
    synth::SceneSpec spec;
    spec.max_disparity = spec.width;
    CHECK_THROWS_AS(synth::gen_stereo_pair(spec), std::invalid_argument);
    synth::SceneSpec neg;
    neg.noise_stddev = -1.0;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);
    synth::SceneSpec range;
    range.min_disparity = 5;
    range.max_disparity = 4;
    CHECK_THROWS_AS(range.validate(), std::invalid_argument);
    synth::SceneSpec density;
    density.texture_density = 1.5;
    CHECK_THROWS_AS(density.validate(), std::invalid_argument);
}

TEST_CASE("ideal curve") {
    synth::CurveParams p;
    p.minimum = 1;
    CHECK(synth::gen_cost_curve(synth::Archetype::kIdeal, 4, p, 0) == std::vector<float>{1, 0, 1, 1});
    for (std::uint64_t s = 0; s < 50; ++s) {
        const auto c = synth::gen_cost_curve(synth::Archetype::kIdeal, 16, {}, s);
        CHECK(std::count(c.begin(), c.end(), 0.0f) == 1);
        CHECK(std::count(c.begin(), c.end(), 1.0f) == 15);
    }
}

TEST_CASE("archetype curves satisfy their predicates under a local-minimum scan") {
    for (std::uint64_t s = 0; s < 200; ++s) {
        const int depth = 4 + static_cast<int>(s % 60);
        {
            const auto c = synth::gen_cost_curve(synth::Archetype::kDistinctMin, depth, {}, s);
            const auto mins = sorted_values(local_minima(c));
            REQUIRE(!mins.empty());
            CHECK(std::count(c.begin(), c.end(), mins[0]) == 1);
            if (mins.size() > 1) CHECK(mins[1] - mins[0] >= 0.2f);
            for (float v : c) CHECK((v >= 0.0f && v <= 1.0f));
        }
        {
            synth::CurveParams p;
            p.gap = 0.05;
            const auto c = synth::gen_cost_curve(synth::Archetype::kDoubleMin, depth, p, s);
            auto runs = local_minima(c);
            std::sort(runs.begin(), runs.end(), [](const Run& a, const Run& b) { return a.value < b.value; });
            REQUIRE(runs.size() >= 2);
            CHECK(runs[1].value - runs[0].value <= 0.05f);
            CHECK(std::abs(runs[1].begin - runs[0].begin) >= 2);
            if (runs.size() > 2) {
                CHECK(runs[2].value > runs[0].value);
                CHECK(runs[2].value > runs[1].value);
            }
        }
        {
            synth::CurveParams p;
            p.plateau_width = 1 + static_cast<int>(s % 4);
            const auto c = synth::gen_cost_curve(synth::Archetype::kFlatMin, depth, p, s);
            const auto runs = local_minima(c);
            const float lo = *std::min_element(c.begin(), c.end());
            CHECK(std::count(c.begin(), c.end(), lo) == p.plateau_width);
            const auto global = std::find_if(runs.begin(), runs.end(), [&](const Run& r) { return r.value == lo; });
            REQUIRE(global != runs.end());
            CHECK(global->end - global->begin == p.plateau_width);
        }
        const auto again = synth::gen_cost_curve(synth::Archetype::kDoubleMin, depth, {}, s);
        CHECK(again == synth::gen_cost_curve(synth::Archetype::kDoubleMin, depth, {}, s));
    }
}

TEST_CASE("cost curve parameter errors") {
    CHECK_THROWS_AS(synth::gen_cost_curve(synth::Archetype::kIdeal, 3, {}, 0), std::invalid_argument);
    synth::CurveParams p;
    p.minimum = 8;
    CHECK_THROWS_AS(synth::gen_cost_curve(synth::Archetype::kDistinctMin, 8, p, 0), std::invalid_argument);
    synth::CurveParams adj;
    adj.minimum = 2;
    adj.second_minimum = 3;
    CHECK_THROWS_AS(synth::gen_cost_curve(synth::Archetype::kDoubleMin, 8, adj, 0), std::invalid_argument);
    synth::CurveParams wide;
    wide.plateau_width = 9;
    CHECK_THROWS_AS(synth::gen_cost_curve(synth::Archetype::kFlatMin, 8, wide, 0), std::invalid_argument);
    CHECK(synth::parse_archetype("flat-min") == synth::Archetype::kFlatMin);
    CHECK_THROWS_AS(synth::parse_archetype("bumpy"), std::invalid_argument);
}
