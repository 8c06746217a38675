#include "cva/matching.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "cva/parallel.hpp"

namespace cva::matching {

CensusImage::CensusImage(int width, int height, int window)
    : width_(width), height_(height), window_(window), words_((window * window - 1 + 63) / 64) {
    if (width < 1 || height < 1) throw std::invalid_argument("CensusImage: dimensions must be >= 1");
    data_.assign(static_cast<std::size_t>(width) * height * words_, 0);
    valid_.assign(static_cast<std::size_t>(width) * height, 0);
}

Descriptor CensusImage::at(int x, int y) const {
    return {std::span<const std::uint64_t>(data_.data() + index(x, y) * words_, static_cast<std::size_t>(words_)),
            bits()};
}

std::span<std::uint64_t> CensusImage::mutable_words(int x, int y) {
    return {data_.data() + index(x, y) * words_, static_cast<std::size_t>(words_)};
}

std::string to_bit_string(Descriptor d) {
    std::string s(static_cast<std::size_t>(d.bits), '0');
    for (int k = 0; k < d.bits; ++k)
        if ((d.words[static_cast<std::size_t>(k / 64)] >> (k % 64)) & 1u) s[static_cast<std::size_t>(k)] = '1';
    return s;
}

CensusImage census_transform(const GrayImage& image, int window) {
    if (window < 3 || window % 2 == 0)
        throw std::invalid_argument("census_transform: window must be odd and >= 3, got " + std::to_string(window));
    if (window > std::min(image.width(), image.height()))
        throw std::invalid_argument("census_transform: window larger than image");
    CensusImage census(image.width(), image.height(), window);
    const int r = window / 2;
    for (int y = r; y < image.height() - r; ++y) {
        for (int x = r; x < image.width() - r; ++x) {
            const float center = image(x, y);
            auto words = census.mutable_words(x, y);
            int k = 0;
            for (int dy = -r; dy <= r; ++dy) {
                for (int dx = -r; dx <= r; ++dx) {
                    if (dx == 0 && dy == 0) continue;
                    if (image(x + dx, y + dy) < center) words[static_cast<std::size_t>(k / 64)] |= std::uint64_t{1} << (k % 64);
                    ++k;
                }
            }
            census.set_valid(x, y, true);
        }
    }
    return census;
}

int hamming_cost(Descriptor a, Descriptor b) {
    if (a.bits != b.bits || a.words.size() != b.words.size())
        throw std::invalid_argument("hamming_cost: descriptor lengths differ (" + std::to_string(a.bits) + " vs " +
                                    std::to_string(b.bits) + ")");
    int n = 0;
    for (std::size_t i = 0; i < a.words.size(); ++i) n += std::popcount(a.words[i] ^ b.words[i]);
    return n;
}

CostVolume build_cost_volume_bm(const GrayImage& left, const GrayImage& right, int max_disparity, int window) {
    if (left.width() != right.width() || left.height() != right.height())
        throw std::invalid_argument("build_cost_volume_bm: left and right image dimensions differ");
    if (max_disparity < 1) throw std::invalid_argument("build_cost_volume_bm: max_disparity must be >= 1");
    const CensusImage cl = census_transform(left, window);
    const CensusImage cr = census_transform(right, window);
    const auto worst = static_cast<float>(window * window - 1);
    CostVolume vol(left.width(), left.height(), max_disparity + 1, worst);
    parallel_for(0, left.height(), [&](int y) {
        for (int x = 0; x < left.width(); ++x) {
            if (!cl.is_valid(x, y)) continue;
            auto curve = vol.curve(x, y);
            const Descriptor dl = cl.at(x, y);
            for (int d = 0; d <= max_disparity && x - d >= 0; ++d) {
                if (!cr.is_valid(x - d, y)) continue;
                curve[static_cast<std::size_t>(d)] = static_cast<float>(hamming_cost(dl, cr.at(x - d, y)));
            }
        }
    });
    return vol;
}

DisparityMap wta_disparity(const CostVolume& volume) {
    DisparityMap map(volume.width(), volume.height(), volume.max_disparity());
    for (int y = 0; y < volume.height(); ++y) {
        for (int x = 0; x < volume.width(); ++x) {
            const auto curve = volume.curve(x, y);
            // min_element returns the first minimum, i.e. the smallest disparity among ties.
            map.set(x, y, static_cast<int>(std::min_element(curve.begin(), curve.end()) - curve.begin()));
        }
    }
    return map;
}

}  // namespace cva::matching
