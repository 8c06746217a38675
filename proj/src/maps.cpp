#include "cva/maps.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cva {

GrayImage::GrayImage(int width, int height, std::vector<float> values) {
    if (width < 1 || height < 1) throw std::invalid_argument("GrayImage: dimensions must be >= 1");
    if (values.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
        throw std::invalid_argument("GrayImage: value count does not match dimensions");
    pixels_ = Grid<float>(width, height);
    auto dst = pixels_.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const float v = values[i];
        if (!std::isfinite(v) || v < 0.0f || v > 1.0f)
            throw std::invalid_argument("GrayImage: intensity outside [0,1] at index " + std::to_string(i));
        dst[i] = v;
    }
}

GrayImage GrayImage::filled(int width, int height, float value) {
    return GrayImage(width, height,
                     std::vector<float>(static_cast<std::size_t>(std::max(0, width)) *
                                            static_cast<std::size_t>(std::max(0, height)),
                                        value));
}

DisparityMap::DisparityMap(int width, int height, int max_disparity)
    : disparity_(width, height, 0), valid_(width, height, 1), max_disparity_(max_disparity) {
    if (width < 1 || height < 1) throw std::invalid_argument("DisparityMap: dimensions must be >= 1");
    if (max_disparity < 0) throw std::invalid_argument("DisparityMap: negative max disparity");
}

void DisparityMap::set(int x, int y, int disparity) {
    if (disparity < 0 || disparity > max_disparity_)
        throw std::out_of_range("DisparityMap: disparity " + std::to_string(disparity) + " outside [0, " +
                                std::to_string(max_disparity_) + "]");
    disparity_(x, y) = disparity;
    valid_(x, y) = 1;
}

void DisparityMap::invalidate(int x, int y) {
    disparity_(x, y) = 0;
    valid_(x, y) = 0;
}

GroundTruthMap::GroundTruthMap(int width, int height) : disparity_(width, height, 0.0), valid_(width, height, 0) {
    if (width < 1 || height < 1) throw std::invalid_argument("GroundTruthMap: dimensions must be >= 1");
}

void GroundTruthMap::set(int x, int y, double disparity) {
    if (!std::isfinite(disparity) || disparity < 0.0)
        throw std::invalid_argument("GroundTruthMap: disparity must be finite and >= 0");
    disparity_(x, y) = disparity;
    valid_(x, y) = 1;
}

void GroundTruthMap::invalidate(int x, int y) {
    disparity_(x, y) = 0.0;
    valid_(x, y) = 0;
}

std::size_t GroundTruthMap::valid_count() const {
    std::size_t n = 0;
    for (auto v : valid_.values()) n += v != 0;
    return n;
}

ConfidenceMap::ConfidenceMap(int width, int height, float fill) : confidence_(width, height, fill) {
    if (width < 1 || height < 1) throw std::invalid_argument("ConfidenceMap: dimensions must be >= 1");
    if (!(fill >= 0.0f && fill <= 1.0f)) throw std::invalid_argument("ConfidenceMap: fill outside [0,1]");
}

void ConfidenceMap::set(int x, int y, float confidence) {
    if (!(confidence >= 0.0f && confidence <= 1.0f))
        throw std::invalid_argument("ConfidenceMap: confidence outside [0,1]");
    confidence_(x, y) = confidence;
}

}  // namespace cva
