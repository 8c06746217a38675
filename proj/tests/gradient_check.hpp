#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "cva/net/network.hpp"

namespace testing {

struct GradCheckReport {
    std::size_t checked = 0;
    std::size_t failures = 0;
    double worst_excess = 0.0;  // largest |a - n| - tolerance seen
    std::string worst_blob;
};

/// Mean binary cross-entropy written out directly from the network's train-mode output.
inline double reference_loss(const cva::net::NetworkParams<double>& p, const cva::net::Tensor<double>& batch,
                             const std::vector<double>& labels, std::uint64_t seed) {
    const auto pred = cva::net::predict(p, batch, cva::net::Mode::kTrain, seed);
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        sum -= labels[i] * std::log(pred[i]) + (1.0 - labels[i]) * std::log(1.0 - pred[i]);
    return sum / static_cast<double>(pred.size());
}

/// Compares every analytic gradient entry with a central difference of step h; an entry
/// passes when |a - n| <= rel * max(|a|, |n|) + abs_floor.
inline GradCheckReport gradient_check(cva::net::NetworkParams<double> params, const cva::net::Tensor<double>& batch,
                                      const std::vector<double>& labels, std::uint64_t seed, double rel = 1e-3,
                                      double abs_floor = 1e-8, double h = 1e-6) {
    cva::net::BackwardOptions opts;
    opts.dropout_seed = seed;
    const auto analytic = cva::net::backward<double>(params, batch, labels, opts);
    GradCheckReport report;
    report.worst_excess = -1.0;
    for (std::size_t b = 0; b < params.blobs.size(); ++b) {
        auto& values = params.blobs[b].values;
        for (std::size_t i = 0; i < values.size(); ++i) {
            const double saved = values[i];
            values[i] = saved + h;
            const double up = reference_loss(params, batch, labels, seed);
            values[i] = saved - h;
            const double down = reference_loss(params, batch, labels, seed);
            values[i] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic.gradients[b][i];
            const double tol = rel * std::max(std::abs(a), std::abs(numeric)) + abs_floor;
            const double excess = std::abs(a - numeric) - tol;
            ++report.checked;
            if (excess > 0.0) ++report.failures;
            if (excess > report.worst_excess) {
                report.worst_excess = excess;
                report.worst_blob = params.blobs[b].name;
            }
        }
    }
    return report;
}

/// The tiny configuration used for gradient checks: N = 3, D = 8, 4 channels.
inline cva::net::NetworkConfig tiny_config() {
    cva::net::NetworkConfig c;
    c.patch_size = 3;
    c.depth = 8;
    c.channels = 4;
    c.depth_kernels = {2, 3, 8};
    c.head_width = 3;
    return c;
}

}  // namespace testing
