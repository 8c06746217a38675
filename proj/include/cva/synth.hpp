#pragma once

// Deterministic synthetic stereo scenes and canonical cost-curve shapes.

#include <cstdint>
#include <string_view>
#include <vector>

#include "cva/maps.hpp"

namespace cva::synth {

struct SceneSpec {
    int width = 64;
    int height = 64;
    /// Integer disparities are drawn from [min_disparity, max_disparity]. The ground-truth
    /// file stores 0 as "invalid", so keep min_disparity >= 1 for files on disk.
    int min_disparity = 1;
    int max_disparity = 16;
    /// Number of fronto-parallel rectangles in front of the background plane.
    int rectangles = 4;
    /// Fraction of textured pixels inside a layer, in [0,1]; the rest are flat grey.
    double texture_density = 1.0;
    /// Approximate fraction of the image covered by constant-intensity patches.
    double textureless_fraction = 0.0;
    double noise_stddev = 0.0;
    std::uint64_t seed = 0;

    /// Throws std::invalid_argument when the spec cannot be realized (e.g. a disparity
    /// range reaching the image width).
    void validate() const;
};

struct StereoPair {
    GrayImage left;
    GrayImage right;
    /// Left-view disparities; invalid where the pixel is occluded in the right view or
    /// projects outside it.
    GroundTruthMap ground_truth;
};

/// Background plane plus rectangles drawn nearest-last. Each layer carries its own
/// texture in left-view coordinates; the right view shows, per pixel, the nearest layer
/// covering it, so re-warping the left image by the ground truth reproduces the right
/// image exactly on valid pixels when noise is 0.
StereoPair gen_stereo_pair(const SceneSpec& spec);

enum class Archetype { kIdeal, kDistinctMin, kDoubleMin, kFlatMin };

/// "ideal", "distinct-min", "double-min", "flat-min".
Archetype parse_archetype(std::string_view name);

struct CurveParams {
    int minimum = -1;         // index of the (first) minimum; -1 picks one from the seed
    int second_minimum = -1;  // double-min only; -1 picks one
    int plateau_width = 3;    // flat-min only
    double gap = 0.02;        // double-min: |c(m1) - c(m2)| <= gap
    double floor = 0.1;       // cost at the minimum (ideal curves always use 0)
};

/// Cost curve of length depth in [0,1]. Every non-minimal value lies in [floor + 0.3, 1],
/// so the designated minima are strictly below all other local minima. Requires depth >= 4.
std::vector<float> gen_cost_curve(Archetype archetype, int depth, const CurveParams& params, std::uint64_t seed);

}  // namespace cva::synth
