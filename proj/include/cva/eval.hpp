#pragma once

// Confidence evaluation: error rate as a function of the fraction of pixels kept in
// decreasing-confidence order, its area, and the best area a map of given overall
// error can reach.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cva/cost_volume.hpp"
#include "cva/maps.hpp"

namespace cva::eval {

enum class PointKind { kBlockBoundary, kIntervalSample };

struct RocPoint {
    double density = 0.0;  // fraction of evaluated pixels kept, in (0,1]
    double error = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    PointKind kind = PointKind::kBlockBoundary;
    std::size_t count = 0;     // pixels kept
    double error_count = 0.0;  // error * count

    bool operator==(const RocPoint&) const = default;
};

/// kInterval is the default. kLegacy keeps only exact block-end values and reads grid
/// densities inside a tied block off the straight line between the surrounding block
/// ends, which is how the older protocol can dip below the optimal curve.
enum class Protocol { kInterval, kLegacy };

struct RocCurve {
    std::vector<RocPoint> points;
    std::size_t pixel_count = 0;
    std::size_t error_pixels = 0;
    double overall_error = 0.0;
    Protocol protocol = Protocol::kInterval;
};

/// Fraction of valid-GT pixels whose disparity is incorrect (invalid estimates count as
/// incorrect). Throws std::invalid_argument without valid GT or on size mismatch.
double overall_error(const DisparityMap& disparity, const GroundTruthMap& ground_truth);

/// Per-pixel inputs with the GT mask already applied.
RocCurve roc_curve(std::span<const float> confidence, std::span<const std::uint8_t> incorrect, double step = 0.05,
                   Protocol protocol = Protocol::kInterval);

RocCurve roc_curve(const ConfidenceMap& confidence, const DisparityMap& disparity, const GroundTruthMap& ground_truth,
                   double step = 0.05, Protocol protocol = Protocol::kInterval);

/// Area under the curve over density [0,1].
///
/// kInterval: the cumulative error count is interpolated linearly between emitted
/// points (starting from zero pixels) and the resulting rate is integrated exactly.
/// Below the first point this is a constant rate. kLegacy: trapezoid on the emitted
/// rates with constant left extension.
double auc(const RocCurve& curve);

/// epsilon + (1 - epsilon) ln(1 - epsilon); 1 at epsilon = 1.
double auc_opt(double epsilon);

/// Best achievable error rate at a density: max(0, (p - (1 - epsilon)) / p).
double optimal_error(double density, double epsilon);

/// 1 - minimum normalized cost per pixel. Throws InvalidStateError on raw volumes.
ConfidenceMap min_cost_confidence(const CostVolume& normalized_volume);

/// Independent uniform confidences.
ConfidenceMap random_confidence(int width, int height, std::uint64_t seed);

/// Columns p,error,lower,upper,kind; kind is boundary, interval or optimal. Optimal rows
/// sample the best curve on the same density grid.
void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve, double step = 0.05);

struct SummaryRow {
    std::string image;
    double epsilon = 0.0;
    double auc = 0.0;
    double auc_opt = 0.0;
};

/// Columns image,epsilon,auc,auc_opt,auc_minus_opt,auc_x100 with a trailing "mean" row.
void write_summary_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows);

}  // namespace cva::eval
