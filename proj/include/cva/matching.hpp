#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cva/cost_volume.hpp"
#include "cva/maps.hpp"

namespace cva::matching {

/// Packed census bit string. Bit k (word k / 64, bit k % 64) is neighbor k in
/// row-major window order with the center skipped.
struct Descriptor {
    std::span<const std::uint64_t> words;
    int bits = 0;
};

/// Census descriptors of every pixel. Pixels whose window leaves the image hold the
/// all-zero descriptor and are flagged invalid.
class CensusImage {
public:
    CensusImage(int width, int height, int window);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int window() const noexcept { return window_; }
    int bits() const noexcept { return window_ * window_ - 1; }
    int words_per_descriptor() const noexcept { return words_; }

    Descriptor at(int x, int y) const;
    std::span<std::uint64_t> mutable_words(int x, int y);
    bool is_valid(int x, int y) const { return valid_[index(x, y)] != 0; }
    void set_valid(int x, int y, bool valid) { valid_[index(x, y)] = valid ? 1 : 0; }

private:
    std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

    int width_;
    int height_;
    int window_;
    int words_;
    std::vector<std::uint64_t> data_;
    std::vector<std::uint8_t> valid_;
};

/// "0"/"1" characters, character k = bit k.
std::string to_bit_string(Descriptor d);

/// Census transform: bit k is set iff neighbor k is strictly darker than the center.
/// window must be odd, >= 3 and <= min(width, height).
CensusImage census_transform(const GrayImage& image, int window);

/// Number of differing bits. Throws std::invalid_argument on mismatched lengths.
int hamming_cost(Descriptor a, Descriptor b);

/// Census block-matching volume with depth max_disparity + 1. Cells whose right
/// coordinate leaves the image, or that involve an invalid border descriptor, get the
/// maximum cost window^2 - 1.
CostVolume build_cost_volume_bm(const GrayImage& left, const GrayImage& right, int max_disparity, int window);

/// One SGM scanline direction, as the step from a pixel's predecessor to the pixel.
struct PathDirection {
    int dx;
    int dy;
};

/// The 4 axis-aligned directions, or those plus the 4 diagonals.
std::vector<PathDirection> sgm_paths(int count);

struct SgmParams {
    float p1 = 2.0f;
    float p2 = 96.0f;
    std::vector<PathDirection> directions = sgm_paths(8);
};

/// Cost of one aggregation path (no summation over directions).
CostVolume sgm_path_cost(const CostVolume& raw, float p1, float p2, PathDirection direction);

/// Semi-global aggregation: per-pixel sum of path costs, in the order of
/// params.directions. Requires a raw (not normalized) volume and 0 < p1 <= p2.
CostVolume sgm_aggregate(const CostVolume& raw, const SgmParams& params);

/// Convenience form with 4 or 8 standard paths.
CostVolume sgm_aggregate(const CostVolume& raw, float p1, float p2, int paths);

/// Winner-take-all per pixel; ties go to the smallest disparity.
DisparityMap wta_disparity(const CostVolume& volume);

}  // namespace cva::matching
