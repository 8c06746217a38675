#include <random>

#include "cva/matching.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace cva;

namespace {

std::vector<std::vector<float>> rows_of(const GrayImage& img) {
    std::vector<std::vector<float>> rows(static_cast<std::size_t>(img.height()));
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) rows[static_cast<std::size_t>(y)].push_back(img(x, y));
    return rows;
}

GrayImage random_image(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = u(rng);
    return GrayImage(w, h, std::move(v));
}

/// right(x, y) = left(x + shift, y), so left pixel x matches right pixel x - shift.
GrayImage shifted(const GrayImage& left, int shift) {
    std::vector<float> v;
    for (int y = 0; y < left.height(); ++y)
        for (int x = 0; x < left.width(); ++x) v.push_back(left(std::min(x + shift, left.width() - 1), y));
    return GrayImage(left.width(), left.height(), std::move(v));
}

/// Disparity minimizing the oracle cost by exhaustive search.
int exhaustive_argmin(const CostVolume& v, int x, int y) {
    int best = 0;
    for (int d = 1; d < v.depth(); ++d)
        if (v(x, y, d) < v(x, y, best)) best = d;
    return best;
}

}  // namespace

TEST_CASE("census descriptor of the 3x3 hand example") {
    const GrayImage img(3, 3, {0.9f, 0.1f, 0.5f, 0.2f, 0.5f, 0.8f, 0.5f, 0.5f, 0.4f});
    const auto census = matching::census_transform(img, 3);
    // Neighbours 0.9 0.1 0.5 0.2 | 0.8 0.5 0.5 0.4 against 0.5: darker at 1, 3 and 7.
    CHECK(matching::to_bit_string(census.at(1, 1)) == "01010001");
    CHECK(matching::to_bit_string(census.at(1, 1)) == oracle::census_bits(rows_of(img), 1, 1, 3));
    CHECK(census.is_valid(1, 1));
    CHECK_FALSE(census.is_valid(0, 0));
}

TEST_CASE("census window validation") {
    const auto img = GrayImage::filled(6, 4, 0.5f);
    CHECK_THROWS_AS(matching::census_transform(img, 4), std::invalid_argument);
    CHECK_THROWS_AS(matching::census_transform(img, 1), std::invalid_argument);
    CHECK_THROWS_AS(matching::census_transform(img, 5), std::invalid_argument);
    CHECK_NOTHROW(matching::census_transform(img, 3));
}

TEST_CASE("constant image gives all-zero descriptors") {
    const auto census = matching::census_transform(GrayImage::filled(9, 9, 0.3f), 5);
    for (int y = 2; y < 7; ++y)
        for (int x = 2; x < 7; ++x) CHECK(matching::to_bit_string(census.at(x, y)) == std::string(24, '0'));
}

TEST_CASE("strictly darkest pixel has an all-zero descriptor") {
    std::vector<float> v(25, 0.6f);
    v[12] = 0.1f;
    const auto census = matching::census_transform(GrayImage(5, 5, v), 5);
    CHECK(matching::to_bit_string(census.at(2, 2)) == std::string(24, '0'));
}

TEST_CASE("census matches the direct-comparison oracle, windows 3 to 9") {
    const auto img = random_image(21, 17, 5);
    const auto rows = rows_of(img);
    for (int window : {3, 5, 7, 9}) {
        const auto census = matching::census_transform(img, window);
        const int r = window / 2;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const bool interior = x >= r && y >= r && x < img.width() - r && y < img.height() - r;
                CHECK(census.is_valid(x, y) == interior);
                const std::string bits = matching::to_bit_string(census.at(x, y));
                CHECK(bits == (interior ? oracle::census_bits(rows, x, y, window) : std::string(bits.size(), '0')));
            }
    }
}

TEST_CASE("hamming cost") {
    const GrayImage a(3, 3, {0.9f, 0.1f, 0.5f, 0.2f, 0.5f, 0.8f, 0.5f, 0.5f, 0.4f});
    const auto ca = matching::census_transform(a, 3);
    CHECK(matching::hamming_cost(ca.at(1, 1), ca.at(1, 1)) == 0);
    const auto cb = matching::census_transform(GrayImage::filled(3, 3, 0.2f), 3);
    CHECK(matching::hamming_cost(ca.at(1, 1), cb.at(1, 1)) == 3);
    const auto c5 = matching::census_transform(GrayImage::filled(5, 5, 0.2f), 5);
    CHECK_THROWS_AS(matching::hamming_cost(ca.at(1, 1), c5.at(2, 2)), std::invalid_argument);
}

TEST_CASE("hamming cost over two-word descriptors matches the string oracle") {
    const auto a = random_image(11, 11, 1);
    const auto b = random_image(11, 11, 2);
    const auto ca = matching::census_transform(a, 11);
    const auto cb = matching::census_transform(b, 11);
    CHECK(ca.words_per_descriptor() == 2);
    CHECK(matching::hamming_cost(ca.at(5, 5), cb.at(5, 5)) ==
          oracle::hamming(matching::to_bit_string(ca.at(5, 5)), matching::to_bit_string(cb.at(5, 5))));
}

TEST_CASE("block-matching volume equals the census/hamming oracle") {
    const auto left = random_image(16, 11, 11);
    const auto right = random_image(16, 11, 12);
    const int window = 5, dmax = 6;
    const auto vol = matching::build_cost_volume_bm(left, right, dmax, window);
    CHECK(vol.depth() == dmax + 1);
    CHECK_FALSE(vol.normalized());
    const auto lr = rows_of(left), rr = rows_of(right);
    const int r = window / 2;
    auto valid = [&](int x, int y) { return x >= r && y >= r && x < 16 - r && y < 11 - r; };
    for (int y = 0; y < 11; ++y)
        for (int x = 0; x < 16; ++x)
            for (int d = 0; d <= dmax; ++d) {
                float expected = 24.0f;
                if (x - d >= 0 && valid(x, y) && valid(x - d, y))
                    expected = static_cast<float>(
                        oracle::hamming(oracle::census_bits(lr, x, y, window), oracle::census_bits(rr, x - d, y, window)));
                CHECK(vol(x, y, d) == expected);
            }
}

TEST_CASE("shifted pair: WTA recovers the shift on interior textured pixels") {
    const auto left = random_image(40, 20, 99);
    const auto right = shifted(left, 3);
    const auto vol = matching::build_cost_volume_bm(left, right, 8, 5);
    const auto disp = matching::wta_disparity(vol);
    // Interior: both census windows inside the image and clear of the replicated edge.
    // Census codes of random texture occasionally collide, so the true shift must attain
    // the minimum and WTA must agree with exhaustive search; unique minima must be 3.
    int unique = 0, total = 0;
    for (int y = 2; y < 18; ++y)
        for (int x = 3 + 2; x < 40 - 2 - 3; ++x) {
            ++total;
            CHECK(vol(x, y, 3) == 0.0f);
            CHECK(disp.at(x, y) == exhaustive_argmin(vol, x, y));
            const auto c = vol.curve(x, y);
            if (std::count(c.begin(), c.end(), 0.0f) == 1) {
                ++unique;
                CHECK(disp.at(x, y) == 3);
            }
        }
    CHECK(unique >= total * 95 / 100);
}

TEST_CASE("out-of-image right coordinates get the maximum cost") {
    const auto img = random_image(12, 9, 4);
    const auto vol = matching::build_cost_volume_bm(img, img, 5, 3);
    for (int y = 0; y < 9; ++y)
        for (int x = 0; x < 12; ++x)
            for (int d = x + 1; d <= 5; ++d) CHECK(vol(x, y, d) == 8.0f);
}

TEST_CASE("identical images give zero disparity on valid pixels") {
    const auto img = random_image(20, 12, 8);
    const auto disp = matching::wta_disparity(matching::build_cost_volume_bm(img, img, 7, 5));
    for (int y = 2; y < 10; ++y)
        for (int x = 2; x < 18; ++x) CHECK(disp.at(x, y) == 0);
}

TEST_CASE("WTA breaks ties towards the smaller disparity") {
    CostVolume v(2, 1, 4);
    const float a[] = {3, 1, 1, 2};
    const float b[] = {0, 5, 0, 0};
    for (int d = 0; d < 4; ++d) {
        v(0, 0, d) = a[d];
        v(1, 0, d) = b[d];
    }
    const auto disp = matching::wta_disparity(v);
    CHECK(disp.at(0, 0) == 1);
    CHECK(disp.at(1, 0) == 0);
    CHECK(disp.max_disparity() == 3);
}

TEST_CASE("block matching rejects mismatched images and bad disparity ranges") {
    const auto a = random_image(10, 10, 1);
    const auto b = random_image(9, 10, 2);
    CHECK_THROWS_AS(matching::build_cost_volume_bm(a, b, 3, 3), std::invalid_argument);
    CHECK_THROWS_AS(matching::build_cost_volume_bm(a, a, 0, 3), std::invalid_argument);
}
