#include "cva/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace cva::synth {

void SceneSpec::validate() const {
    if (width < 1 || height < 1) throw std::invalid_argument("SceneSpec: image size must be positive");
    if (min_disparity < 0 || max_disparity < min_disparity)
        throw std::invalid_argument("SceneSpec: disparity range must satisfy 0 <= min <= max");
    if (max_disparity >= width)
        throw std::invalid_argument("SceneSpec: disparity range " + std::to_string(max_disparity) +
                                    " reaches the image width " + std::to_string(width));
    if (rectangles < 0) throw std::invalid_argument("SceneSpec: rectangle count must be >= 0");
    if (!(texture_density >= 0.0 && texture_density <= 1.0))
        throw std::invalid_argument("SceneSpec: texture density must be in [0,1]");
    if (!(textureless_fraction >= 0.0 && textureless_fraction <= 1.0))
        throw std::invalid_argument("SceneSpec: texture-less fraction must be in [0,1]");
    if (!(noise_stddev >= 0.0) || !std::isfinite(noise_stddev))
        throw std::invalid_argument("SceneSpec: noise must be finite and >= 0");
}

namespace {

struct Layer {
    int x0, y0, x1, y1;  // left-view extent, half-open
    int disparity;
    Grid<float> texture;

    bool covers(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

Grid<float> smoothed_noise(int w, int h, double density, std::mt19937_64& rng) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Grid<float> raw(w, h);
    for (auto& v : raw.values()) v = u(rng);
    Grid<float> out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            float sum = 0.0f;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx)
                    sum += raw(std::clamp(x + dx, 0, w - 1), std::clamp(y + dy, 0, h - 1));
            const float stretched = 0.5f + 2.5f * (sum / 9.0f - 0.5f);
            const bool textured = u(rng) < density;
            out(x, y) = textured ? std::clamp(stretched, 0.0f, 1.0f) : 0.5f;
        }
    return out;
}

Grid<std::uint8_t> textureless_mask(int w, int h, double fraction, std::mt19937_64& rng) {
    Grid<std::uint8_t> mask(w, h, 0);
    if (fraction >= 1.0) {
        std::fill(mask.values().begin(), mask.values().end(), std::uint8_t{1});
        return mask;
    }
    const auto target = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(mask.size())));
    std::size_t covered = 0;
    std::uniform_int_distribution<int> px(0, w - 1);
    std::uniform_int_distribution<int> py(0, h - 1);
    std::uniform_int_distribution<int> side(std::max(1, std::min(w, h) / 8), std::max(1, std::min(w, h) / 4));
    for (int attempt = 0; covered < target && attempt < 100000; ++attempt) {
        const int x0 = px(rng), y0 = py(rng);
        const int x1 = std::min(w, x0 + side(rng)), y1 = std::min(h, y0 + side(rng));
        for (int y = y0; y < y1 && covered < target; ++y)
            for (int x = x0; x < x1 && covered < target; ++x)
                if (!mask(x, y)) {
                    mask(x, y) = 1;
                    ++covered;
                }
    }
    return mask;
}

}  // namespace

StereoPair gen_stereo_pair(const SceneSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    const int w = spec.width;
    const int h = spec.height;
    // Textures span every left-view column the right view can reach.
    const int tw = w + spec.max_disparity;
    std::uniform_int_distribution<int> disparity(spec.min_disparity, spec.max_disparity);

    std::vector<Layer> layers;
    layers.push_back({0, 0, tw, h, spec.min_disparity, {}});
    const int min_side = std::max(1, std::min(w, h) / 8);
    const int max_side = std::max(min_side, std::min(w, h) / 3);
    std::uniform_int_distribution<int> side(min_side, max_side);
    std::uniform_int_distribution<int> px(0, w - 1);
    std::uniform_int_distribution<int> py(0, h - 1);
    for (int i = 0; i < spec.rectangles; ++i) {
        const int x0 = px(rng), y0 = py(rng);
        const int x1 = std::min(w, x0 + side(rng)), y1 = std::min(h, y0 + side(rng));
        layers.push_back({x0, y0, x1, y1, disparity(rng), {}});
    }
    std::stable_sort(layers.begin(), layers.end(),
                     [](const Layer& a, const Layer& b) { return a.disparity < b.disparity; });

    const auto flat = textureless_mask(tw, h, spec.textureless_fraction, rng);
    for (auto& layer : layers) {
        layer.texture = smoothed_noise(tw, h, spec.texture_density, rng);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < tw; ++x)
                if (flat(x, y)) layer.texture(x, y) = 0.5f;
    }

    auto left_top = [&](int x, int y) {
        int top = 0;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i].covers(x, y)) top = static_cast<int>(i);
        return top;
    };
    auto right_top = [&](int xr, int y) {
        int top = 0;
        for (std::size_t i = 0; i < layers.size(); ++i)
            if (layers[i].covers(xr + layers[i].disparity, y)) top = static_cast<int>(i);
        return top;
    };

    std::vector<float> left(static_cast<std::size_t>(w) * h);
    std::vector<float> right(left.size());
    GroundTruthMap gt(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int lt = left_top(x, y);
            const Layer& l = layers[static_cast<std::size_t>(lt)];
            left[i] = l.texture(x, y);
            const int rt = right_top(x, y);
            const Layer& r = layers[static_cast<std::size_t>(rt)];
            right[i] = r.texture(x + r.disparity, y);
            const int xr = x - l.disparity;
            if (xr >= 0 && right_top(xr, y) == lt) gt.set(x, y, l.disparity);
        }

    if (spec.noise_stddev > 0.0) {
        std::normal_distribution<double> noise(0.0, spec.noise_stddev);
        for (auto& v : left) v = std::clamp(static_cast<float>(v + noise(rng)), 0.0f, 1.0f);
        for (auto& v : right) v = std::clamp(static_cast<float>(v + noise(rng)), 0.0f, 1.0f);
    }
    return {GrayImage(w, h, std::move(left)), GrayImage(w, h, std::move(right)), std::move(gt)};
}

Archetype parse_archetype(std::string_view name) {
    if (name == "ideal") return Archetype::kIdeal;
    if (name == "distinct-min") return Archetype::kDistinctMin;
    if (name == "double-min") return Archetype::kDoubleMin;
    if (name == "flat-min") return Archetype::kFlatMin;
    throw std::invalid_argument("unknown cost-curve archetype: " + std::string(name));
}

std::vector<float> gen_cost_curve(Archetype archetype, int depth, const CurveParams& params, std::uint64_t seed) {
    if (depth < 4) throw std::invalid_argument("gen_cost_curve: depth must be >= 4");
    if (!(params.floor >= 0.0 && params.floor <= 0.7))
        throw std::invalid_argument("gen_cost_curve: floor must be in [0, 0.7]");
    if (!(params.gap >= 0.0 && params.gap < 0.3)) throw std::invalid_argument("gen_cost_curve: gap must be in [0, 0.3)");
    auto check_index = [&](int i) {
        if (i < -1 || i >= depth) throw std::invalid_argument("gen_cost_curve: minimum index out of range");
    };
    check_index(params.minimum);
    check_index(params.second_minimum);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> index(0, depth - 1);
    const int m1 = params.minimum >= 0 ? params.minimum : index(rng);

    if (archetype == Archetype::kIdeal) {
        std::vector<float> curve(static_cast<std::size_t>(depth), 1.0f);
        curve[static_cast<std::size_t>(m1)] = 0.0f;
        return curve;
    }

    const float low = static_cast<float>(params.floor);
    std::uniform_real_distribution<float> high(low + 0.3f, 1.0f);
    std::vector<float> curve(static_cast<std::size_t>(depth));
    for (auto& c : curve) c = high(rng);

    switch (archetype) {
        case Archetype::kDistinctMin:
            curve[static_cast<std::size_t>(m1)] = low;
            break;
        case Archetype::kDoubleMin: {
            int m2 = params.second_minimum;
            if (m2 < 0) {
                do m2 = index(rng);
                while (std::abs(m2 - m1) < 2);
            } else if (std::abs(m2 - m1) < 2) {
                throw std::invalid_argument("gen_cost_curve: double minima must not be adjacent");
            }
            // 0.9 keeps float rounding of the sum inside the gap.
            std::uniform_real_distribution<float> offset(0.0f, 0.9f * static_cast<float>(params.gap));
            curve[static_cast<std::size_t>(m1)] = low;
            curve[static_cast<std::size_t>(m2)] = low + offset(rng);
            break;
        }
        case Archetype::kFlatMin: {
            const int width = params.plateau_width;
            if (width < 1 || width > depth) throw std::invalid_argument("gen_cost_curve: plateau width out of range");
            int start = params.minimum;
            if (start < 0) start = std::uniform_int_distribution<int>(0, depth - width)(rng);
            if (start + width > depth) throw std::invalid_argument("gen_cost_curve: plateau runs past the curve end");
            std::fill(curve.begin() + start, curve.begin() + start + width, low);
            break;
        }
        case Archetype::kIdeal:
            break;
    }
    return curve;
}

}  // namespace cva::synth
