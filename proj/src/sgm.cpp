#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cva/errors.hpp"
#include "cva/matching.hpp"

namespace cva::matching {

std::vector<PathDirection> sgm_paths(int count) {
    std::vector<PathDirection> dirs = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
    if (count == 4) return dirs;
    if (count == 8) {
        dirs.insert(dirs.end(), {{1, 1}, {-1, -1}, {1, -1}, {-1, 1}});
        return dirs;
    }
    throw std::invalid_argument("sgm_paths: path count must be 4 or 8, got " + std::to_string(count));
}

namespace {

void check_sgm_inputs(const CostVolume& raw, float p1, float p2) {
    if (raw.normalized()) throw InvalidStateError("sgm_aggregate: input volume is already normalized");
    if (!(p1 > 0.0f) || !(p1 <= p2))
        throw std::invalid_argument("sgm_aggregate: penalties must satisfy 0 < p1 <= p2");
}

}  // namespace

CostVolume sgm_path_cost(const CostVolume& raw, float p1, float p2, PathDirection dir) {
    check_sgm_inputs(raw, p1, p2);
    if (dir.dx == 0 && dir.dy == 0) throw std::invalid_argument("sgm_path_cost: zero direction");
    const int w = raw.width();
    const int h = raw.height();
    const int depth = raw.depth();
    CostVolume out(w, h, depth);

    // Every predecessor (x - dx, y - dy) is visited before its successor.
    const int y0 = dir.dy >= 0 ? 0 : h - 1;
    const int ystep = dir.dy >= 0 ? 1 : -1;
    const int x0 = dir.dx >= 0 ? 0 : w - 1;
    const int xstep = dir.dx >= 0 ? 1 : -1;

    for (int iy = 0, y = y0; iy < h; ++iy, y += ystep) {
        for (int ix = 0, x = x0; ix < w; ++ix, x += xstep) {
            const auto cost = raw.curve(x, y);
            auto path = out.curve(x, y);
            const int px = x - dir.dx;
            const int py = y - dir.dy;
            if (px < 0 || py < 0 || px >= w || py >= h) {
                std::copy(cost.begin(), cost.end(), path.begin());
                continue;
            }
            const auto prev = out.curve(px, py);
            const float prev_min = *std::min_element(prev.begin(), prev.end());
            const float jump = prev_min + p2;
            for (int d = 0; d < depth; ++d) {
                float best = std::min(prev[d], jump);
                if (d > 0) best = std::min(best, prev[d - 1] + p1);
                if (d + 1 < depth) best = std::min(best, prev[d + 1] + p1);
                path[d] = cost[d] + (best - prev_min);
            }
        }
    }
    return out;
}

CostVolume sgm_aggregate(const CostVolume& raw, const SgmParams& params) {
    check_sgm_inputs(raw, params.p1, params.p2);
    if (params.directions.empty()) throw std::invalid_argument("sgm_aggregate: no path directions");
    CostVolume total(raw.width(), raw.height(), raw.depth());
    auto acc = total.costs();
    for (const auto& dir : params.directions) {
        const CostVolume path = sgm_path_cost(raw, params.p1, params.p2, dir);
        const auto src = path.costs();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    }
    return total;
}

CostVolume sgm_aggregate(const CostVolume& raw, float p1, float p2, int paths) {
    return sgm_aggregate(raw, SgmParams{p1, p2, sgm_paths(paths)});
}

}  // namespace cva::matching
