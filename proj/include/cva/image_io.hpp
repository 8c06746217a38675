#pragma once

// Netpbm (binary P5 PGM) and single-channel PFM readers/writers, plus the on-disk
// conventions used for disparity, ground-truth and confidence maps:
//
//   disparity map   16-bit PGM, value = disparity, 65535 = invalid
//   ground truth    16-bit PGM, value = round(disparity * 256), 0 = invalid
//   confidence      16-bit PGM, value = round(confidence * 65535) (visualization)
//                   PFM ("Pf", little-endian) for the raw float values

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cva/grid.hpp"
#include "cva/maps.hpp"

namespace cva::io {

struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> samples;
};

inline constexpr std::uint16_t kInvalidDisparity = 0xFFFF;
inline constexpr double kGroundTruthScale = 256.0;

PgmImage read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const PgmImage& image);

/// Loads an 8- or 16-bit P5 file, dividing every sample by maxval.
GrayImage read_gray(const std::filesystem::path& path);
/// Writes an 8-bit P5 file (values scaled by 255 and rounded).
void write_gray(const std::filesystem::path& path, const GrayImage& image);

DisparityMap read_disparity(const std::filesystem::path& path, int max_disparity = 0xFFFE);
void write_disparity(const std::filesystem::path& path, const DisparityMap& map);

GroundTruthMap read_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruthMap& map);

Grid<float> read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const Grid<float>& values);

/// Reads a confidence map from PFM or 16-bit PGM, chosen by the file's magic bytes.
ConfidenceMap read_confidence(const std::filesystem::path& path);
void write_confidence_pgm(const std::filesystem::path& path, const ConfidenceMap& map);
void write_confidence_pfm(const std::filesystem::path& path, const ConfidenceMap& map);

}  // namespace cva::io
