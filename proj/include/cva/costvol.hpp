#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "cva/cost_volume.hpp"

namespace cva::costvol {

/// Theoretical range of a matcher's cost values.
struct NormalizationBounds {
    double c_min = 0.0;
    double c_max = 1.0;
};

enum class Matcher { kCensusBm, kCensusSgm };

/// Parses "census-bm" / "census-sgm". Throws std::invalid_argument otherwise.
Matcher parse_matcher(std::string_view tag);
std::string_view matcher_name(Matcher matcher);

/// census-bm: (0, window^2 - 1). census-sgm: (0, paths * (window^2 - 1 + p2)), the sum
/// over paths of the per-path bound C_max + P2.
NormalizationBounds default_bounds(Matcher matcher, int window, double p2, int paths);

/// Maps every cost to (cost - c_min) / (c_max - c_min) and sets the normalized flag.
/// Throws InvalidStateError on an already normalized volume and std::out_of_range,
/// naming the cell, on costs outside the bounds.
CostVolume normalize(const CostVolume& volume, NormalizationBounds bounds);

/// N x N x D block of a normalized volume centred on one pixel.
struct PatchTensor {
    int size = 1;
    int depth = 0;
    int center_x = 0;
    int center_y = 0;
    /// (row, column, d) with d fastest.
    std::vector<float> values;

    float operator()(int col, int row, int d) const {
        return values[(static_cast<std::size_t>(row) * size + col) * depth + d];
    }
};

/// Spatial coordinates outside the volume replicate the nearest edge column.
/// Requires a normalized volume (InvalidStateError) and odd size (std::invalid_argument).
PatchTensor extract_patch(const CostVolume& volume, int x, int y, int size);

/// Copies the same block into dst (size * size * depth floats) without allocating.
void extract_patch_into(const CostVolume& volume, int x, int y, int size, std::span<float> dst);

/// "CVAV" container: magic, u16 version, u16 flags (bit 0 = normalized), u32 width,
/// height, depth, then little-endian float32 costs in (y, x, d) order.
inline constexpr std::uint16_t kVolumeFormatVersion = 1;
inline constexpr std::size_t kVolumeHeaderBytes = 20;

void write_volume(const CostVolume& volume, const std::filesystem::path& path);
/// Throws FormatError (with byte offset) on bad magic, version, flags, dimensions,
/// payload size or cost values.
CostVolume read_volume(const std::filesystem::path& path);

std::vector<unsigned char> encode_volume(const CostVolume& volume);
CostVolume decode_volume(std::span<const unsigned char> bytes);

}  // namespace cva::costvol
