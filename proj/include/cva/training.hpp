#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "cva/cost_volume.hpp"
#include "cva/costvol.hpp"
#include "cva/maps.hpp"
#include "cva/net/network.hpp"

namespace cva::training {

/// True when |d_est - d_gt| < 3 px or |d_est - d_gt| < 5 % of d_gt (both strict).
bool label_correctness(double d_est, double d_gt);

/// -[label ln(pred) + (1 - label) ln(1 - pred)] with the log argument floored at 1e-12.
double bce_loss(double prediction, double label);

/// One training extract. The patch itself is cut from the owning set's volume on demand.
struct TrainSample {
    int image = 0;
    int x = 0;
    int y = 0;
    float label = 0.0f;  // 1 = correct, 0 = incorrect

    bool operator==(const TrainSample&) const = default;
};

struct TrainingSet {
    int patch_size = 13;
    std::vector<CostVolume> volumes;
    std::vector<TrainSample> samples;

    costvol::PatchTensor patch(std::size_t index) const;
    std::size_t positives() const;
};

/// One sample per valid-GT pixel at least patch_size / 2 from every border, labelled
/// against the given (WTA) disparity; invalid estimates count as incorrect. Order is
/// image, then row-major. Throws std::invalid_argument on misaligned inputs and
/// InvalidStateError on unnormalized volumes.
TrainingSet build_training_set(std::vector<CostVolume> volumes, std::span<const DisparityMap> disparities,
                               std::span<const GroundTruthMap> ground_truths, int patch_size);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<std::vector<T>> m;
    std::vector<std::vector<T>> v;
    std::int64_t step = 0;
};

template <typename T>
AdamState<T> make_adam_state(const net::NetworkParams<T>& params);

/// Bias-corrected Adam update of one parameter array; step is the 1-based step index.
template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m, std::span<T> v, std::int64_t step,
                 double lr, const AdamConfig& config);

/// Applies one Adam step to every trainable blob and advances state.step.
template <typename T>
void adam_step(net::NetworkParams<T>& params, const net::Gradients<T>& grads, AdamState<T>& state, double lr,
               const AdamConfig& config);

struct TrainConfig {
    int batch_size = 256;
    int phase1_epochs = 10;
    double phase1_lr = 1e-4;
    int phase2_epochs = 3;
    double phase2_lr = 1e-5;
    AdamConfig adam;
    std::uint64_t seed = 0;
    /// Loss weight for incorrect samples. Not part of the original protocol; 1 disables it.
    double negative_weight = 1.0;

    /// Throws std::invalid_argument on non-positive rates or sizes and negative epochs.
    void validate() const;
};

struct LossRecord {
    int epoch = 0;  // 1-based
    int step = 0;   // 1-based, global
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    net::NetworkParams<float> params;
    std::vector<LossRecord> steps;
    std::vector<double> epoch_losses;  // sample-weighted mean per epoch
};

using EpochCallback = std::function<void(int epoch, const net::NetworkParams<float>& params)>;

/// Initializes from the config seed, then runs phase 1 followed by phase 2. Samples are
/// reshuffled every epoch by a generator seeded from config.seed; the same seed and data
/// give bit-identical parameters. NumericalError propagates from non-finite losses.
TrainResult train(const TrainConfig& config, const net::NetworkConfig& net_config, const TrainingSet& set,
                  const EpochCallback& on_epoch = {});

/// Continues from given parameters instead of a fresh initialization.
TrainResult train(const TrainConfig& config, net::NetworkParams<float> initial, const TrainingSet& set,
                  const EpochCallback& on_epoch = {});

/// The permutation used for epoch `epoch` (1-based) of a set with `count` samples.
std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t count);

/// CSV with header epoch,step,loss,lr.
void write_loss_log(const std::filesystem::path& path, std::span<const LossRecord> log);

}  // namespace cva::training
