#include "cva/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cva/errors.hpp"
#include "cva/training.hpp"

namespace cva::eval {

namespace {

void check_aligned(int w, int h, int w2, int h2, const char* what) {
    if (w != w2 || h != h2) throw std::invalid_argument(std::string("evaluation inputs misaligned: ") + what);
}

bool is_incorrect(const DisparityMap& d, const GroundTruthMap& gt, int x, int y) {
    return !(d.is_valid(x, y) && training::label_correctness(d.at(x, y), gt.at(x, y)));
}

std::size_t grid_steps(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("roc_curve: step must be in (0,1]");
    const double s = std::round(1.0 / step);
    if (std::abs(s * step - 1.0) > 1e-9) throw std::invalid_argument("roc_curve: 1/step must be an integer");
    return static_cast<std::size_t>(s);
}

const char* kind_name(PointKind k) { return k == PointKind::kBlockBoundary ? "boundary" : "interval"; }

}  // namespace

double overall_error(const DisparityMap& disparity, const GroundTruthMap& ground_truth) {
    check_aligned(disparity.width(), disparity.height(), ground_truth.width(), ground_truth.height(),
                  "disparity vs ground truth");
    std::size_t valid = 0;
    std::size_t wrong = 0;
    for (int y = 0; y < ground_truth.height(); ++y)
        for (int x = 0; x < ground_truth.width(); ++x) {
            if (!ground_truth.is_valid(x, y)) continue;
            ++valid;
            if (is_incorrect(disparity, ground_truth, x, y)) ++wrong;
        }
    if (valid == 0) throw std::invalid_argument("overall_error: no valid ground-truth pixels");
    return static_cast<double>(wrong) / static_cast<double>(valid);
}

RocCurve roc_curve(std::span<const float> confidence, std::span<const std::uint8_t> incorrect, double step,
                   Protocol protocol) {
    if (confidence.size() != incorrect.size())
        throw std::invalid_argument("roc_curve: confidence and label counts differ");
    if (confidence.empty()) throw std::invalid_argument("roc_curve: no evaluated pixels");
    for (float c : confidence)
        if (!std::isfinite(c)) throw std::invalid_argument("roc_curve: non-finite confidence");
    const std::size_t steps = grid_steps(step);
    const std::size_t n = confidence.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });

    // Block ends (pixel counts) and the cumulative error count at each.
    std::vector<std::size_t> ends;
    std::vector<std::size_t> errors;
    std::size_t cumulative = 0;
    for (std::size_t k = 0; k < n; ++k) {
        cumulative += incorrect[order[k]] ? 1 : 0;
        if (k + 1 == n || confidence[order[k + 1]] != confidence[order[k]]) {
            ends.push_back(k + 1);
            errors.push_back(cumulative);
        }
    }

    RocCurve curve;
    curve.pixel_count = n;
    curve.error_pixels = cumulative;
    curve.overall_error = static_cast<double>(cumulative) / static_cast<double>(n);
    curve.protocol = protocol;

    auto boundary = [&](std::size_t b) {
        RocPoint p;
        p.count = ends[b];
        p.density = static_cast<double>(ends[b]) / static_cast<double>(n);
        p.error_count = static_cast<double>(errors[b]);
        p.error = p.lower = p.upper = static_cast<double>(errors[b]) / static_cast<double>(ends[b]);
        p.kind = PointKind::kBlockBoundary;
        return p;
    };

    std::vector<RocPoint> points;
    if (protocol == Protocol::kInterval)
        for (std::size_t b = 0; b < ends.size(); ++b) points.push_back(boundary(b));

    std::size_t b = 0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const std::size_t k = (i * n + steps - 1) / steps;  // ceil(i * n / steps)
        while (ends[b] < k) ++b;
        if (protocol == Protocol::kLegacy) points.push_back(boundary(b));
        if (ends[b] == k) continue;

        const std::size_t k0 = b == 0 ? 0 : ends[b - 1];
        const std::size_t e0 = b == 0 ? 0 : errors[b - 1];
        const std::size_t m = ends[b] - k0;
        const std::size_t bad = errors[b] - e0;
        const std::size_t j = k - k0;
        RocPoint p;
        p.count = k;
        p.density = static_cast<double>(k) / static_cast<double>(n);
        p.kind = PointKind::kIntervalSample;
        if (protocol == Protocol::kInterval) {
            const std::size_t good = m - bad;
            const double lo = static_cast<double>(e0 + (j > good ? j - good : 0));
            const double hi = static_cast<double>(e0 + std::min(j, bad));
            p.lower = lo / static_cast<double>(k);
            p.upper = hi / static_cast<double>(k);
            p.error_count = 0.5 * (lo + hi);
            p.error = p.error_count / static_cast<double>(k);
        } else {
            const double r1 = static_cast<double>(errors[b]) / static_cast<double>(ends[b]);
            const double r0 = k0 == 0 ? r1 : static_cast<double>(e0) / static_cast<double>(k0);
            p.error = p.lower = p.upper =
                r0 + (r1 - r0) * static_cast<double>(j) / static_cast<double>(m);
            p.error_count = p.error * static_cast<double>(k);
        }
        points.push_back(p);
    }

    std::sort(points.begin(), points.end(), [](const RocPoint& a, const RocPoint& c) { return a.count < c.count; });
    points.erase(std::unique(points.begin(), points.end(),
                             [](const RocPoint& a, const RocPoint& c) { return a.count == c.count; }),
                 points.end());
    curve.points = std::move(points);
    return curve;
}

RocCurve roc_curve(const ConfidenceMap& confidence, const DisparityMap& disparity, const GroundTruthMap& ground_truth,
                   double step, Protocol protocol) {
    check_aligned(confidence.width(), confidence.height(), disparity.width(), disparity.height(),
                  "confidence vs disparity");
    check_aligned(confidence.width(), confidence.height(), ground_truth.width(), ground_truth.height(),
                  "confidence vs ground truth");
    std::vector<float> conf;
    std::vector<std::uint8_t> bad;
    for (int y = 0; y < ground_truth.height(); ++y)
        for (int x = 0; x < ground_truth.width(); ++x) {
            if (!ground_truth.is_valid(x, y)) continue;
            conf.push_back(confidence.at(x, y));
            bad.push_back(is_incorrect(disparity, ground_truth, x, y) ? 1 : 0);
        }
    if (conf.empty()) throw std::invalid_argument("roc_curve: no valid ground-truth pixels");
    return roc_curve(conf, bad, step, protocol);
}

double auc(const RocCurve& curve) {
    if (curve.points.empty() || curve.pixel_count == 0) throw std::invalid_argument("auc: empty curve");
    if (curve.protocol == Protocol::kLegacy) {
        const auto& pts = curve.points;
        double area = pts.front().density * pts.front().error;
        for (std::size_t i = 1; i < pts.size(); ++i)
            area += 0.5 * (pts[i].error + pts[i - 1].error) * (pts[i].density - pts[i - 1].density);
        return area;
    }
    // Count-linear segments: the rate (alpha + s k) / k integrates to alpha ln(b/a) + s (b - a).
    double area = 0.0;
    double a = 0.0;
    double ea = 0.0;
    for (const auto& p : curve.points) {
        const double b = static_cast<double>(p.count);
        const double eb = p.error_count;
        const double slope = (eb - ea) / (b - a);
        if (a == 0.0) {
            area += eb;
        } else {
            const double alpha = ea - slope * a;
            area += alpha * std::log(b / a) + slope * (b - a);
        }
        a = b;
        ea = eb;
    }
    return area / static_cast<double>(curve.pixel_count);
}

double auc_opt(double epsilon) {
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("auc_opt: epsilon must be in [0,1]");
    if (epsilon == 1.0) return 1.0;
    return epsilon + (1.0 - epsilon) * std::log1p(-epsilon);
}

double optimal_error(double density, double epsilon) {
    if (!(density > 0.0 && density <= 1.0)) throw std::invalid_argument("optimal_error: density must be in (0,1]");
    return std::max(0.0, (density - (1.0 - epsilon)) / density);
}

ConfidenceMap min_cost_confidence(const CostVolume& volume) {
    if (!volume.normalized()) throw InvalidStateError("min_cost_confidence: volume is not normalized");
    ConfidenceMap map(volume.width(), volume.height());
    for (int y = 0; y < volume.height(); ++y)
        for (int x = 0; x < volume.width(); ++x) {
            const auto c = volume.curve(x, y);
            map.set(x, y, 1.0f - *std::min_element(c.begin(), c.end()));
        }
    return map;
}

ConfidenceMap random_confidence(int width, int height, std::uint64_t seed) {
    ConfidenceMap map(width, height);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) map.set(x, y, std::min(u(rng), 1.0f));
    return map;
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve, double step) {
    const std::size_t steps = grid_steps(step);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(12);
    out << "p,error,lower,upper,kind\n";
    for (const auto& p : curve.points)
        out << p.density << ',' << p.error << ',' << p.lower << ',' << p.upper << ',' << kind_name(p.kind) << '\n';
    for (std::size_t i = 1; i <= steps; ++i) {
        const double d = static_cast<double>(i) / static_cast<double>(steps);
        const double e = optimal_error(d, curve.overall_error);
        out << d << ',' << e << ',' << e << ',' << e << ",optimal\n";
    }
    if (!out) throw IoError("write failed for " + path.string());
}

void write_summary_csv(const std::filesystem::path& path, std::span<const SummaryRow> rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(9);
    out << "image,epsilon,auc,auc_opt,auc_minus_opt,auc_x100\n";
    double eps = 0.0, area = 0.0, opt = 0.0;
    for (const auto& r : rows) {
        out << r.image << ',' << r.epsilon << ',' << r.auc << ',' << r.auc_opt << ',' << r.auc - r.auc_opt << ','
            << 100.0 * r.auc << '\n';
        eps += r.epsilon;
        area += r.auc;
        opt += r.auc_opt;
    }
    if (!rows.empty()) {
        const double n = static_cast<double>(rows.size());
        out << "mean," << eps / n << ',' << area / n << ',' << opt / n << ',' << (area - opt) / n << ','
            << 100.0 * area / n << '\n';
    }
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace cva::eval
