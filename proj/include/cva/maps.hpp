#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cva/grid.hpp"

namespace cva {

/// Grayscale intensities in [0,1], row-major.
class GrayImage {
public:
    GrayImage() = default;
    /// Throws std::invalid_argument on empty dimensions, size mismatch or values outside [0,1].
    GrayImage(int width, int height, std::vector<float> values);

    static GrayImage filled(int width, int height, float value);

    int width() const noexcept { return pixels_.width(); }
    int height() const noexcept { return pixels_.height(); }
    float operator()(int x, int y) const { return pixels_(x, y); }
    std::span<const float> values() const noexcept { return pixels_.values(); }

    bool operator==(const GrayImage&) const = default;

private:
    Grid<float> pixels_;
};

/// Integer per-pixel disparities in [0, max_disparity] plus a validity mask.
class DisparityMap {
public:
    DisparityMap() = default;
    DisparityMap(int width, int height, int max_disparity);

    int width() const noexcept { return disparity_.width(); }
    int height() const noexcept { return disparity_.height(); }
    int max_disparity() const noexcept { return max_disparity_; }

    int at(int x, int y) const { return disparity_(x, y); }
    bool is_valid(int x, int y) const { return valid_(x, y) != 0; }
    void set(int x, int y, int disparity);
    void invalidate(int x, int y);

    bool operator==(const DisparityMap&) const = default;

private:
    Grid<int> disparity_;
    Grid<std::uint8_t> valid_;
    int max_disparity_ = 0;
};

/// Reference disparities (real-valued, px). Pixels start out invalid.
class GroundTruthMap {
public:
    GroundTruthMap() = default;
    GroundTruthMap(int width, int height);

    int width() const noexcept { return disparity_.width(); }
    int height() const noexcept { return disparity_.height(); }

    double at(int x, int y) const { return disparity_(x, y); }
    bool is_valid(int x, int y) const { return valid_(x, y) != 0; }
    void set(int x, int y, double disparity);
    void invalidate(int x, int y);
    std::size_t valid_count() const;

    bool operator==(const GroundTruthMap&) const = default;

private:
    Grid<double> disparity_;
    Grid<std::uint8_t> valid_;
};

/// Per-pixel confidence in [0,1].
class ConfidenceMap {
public:
    ConfidenceMap() = default;
    ConfidenceMap(int width, int height, float fill = 0.0f);

    int width() const noexcept { return confidence_.width(); }
    int height() const noexcept { return confidence_.height(); }

    float at(int x, int y) const { return confidence_(x, y); }
    void set(int x, int y, float confidence);
    std::span<const float> values() const noexcept { return confidence_.values(); }

    bool operator==(const ConfidenceMap&) const = default;

private:
    Grid<float> confidence_;
};

}  // namespace cva
