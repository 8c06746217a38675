#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cva {

/// H x W x D matching costs. Cell (x, y, d) compares left pixel (x, y) with right pixel
/// (x - d, y). Storage is (y, x, d) with d fastest so every cost curve is contiguous.
class CostVolume {
public:
    CostVolume() = default;
    /// Requires width, height >= 1 and depth >= 2.
    CostVolume(int width, int height, int depth, float fill = 0.0f, bool normalized = false);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int depth() const noexcept { return depth_; }
    int max_disparity() const noexcept { return depth_ - 1; }
    bool normalized() const noexcept { return normalized_; }
    void set_normalized(bool normalized) noexcept { normalized_ = normalized; }

    float operator()(int x, int y, int d) const { return costs_[index(x, y, d)]; }
    float& operator()(int x, int y, int d) { return costs_[index(x, y, d)]; }

    std::span<const float> curve(int x, int y) const {
        return {costs_.data() + index(x, y, 0), static_cast<std::size_t>(depth_)};
    }
    std::span<float> curve(int x, int y) {
        return {costs_.data() + index(x, y, 0), static_cast<std::size_t>(depth_)};
    }

    std::span<const float> costs() const noexcept { return costs_; }
    std::span<float> costs() noexcept { return costs_; }

    /// Checks the type invariants: costs finite and >= 0, and <= 1 when normalized.
    /// Throws std::out_of_range naming the first offending cell.
    void validate() const;

    bool operator==(const CostVolume&) const = default;

private:
    std::size_t index(int x, int y, int d) const noexcept {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
                   static_cast<std::size_t>(depth_) +
               static_cast<std::size_t>(d);
    }

    int width_ = 0;
    int height_ = 0;
    int depth_ = 0;
    bool normalized_ = false;
    std::vector<float> costs_;
};

}  // namespace cva
