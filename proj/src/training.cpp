#include "cva/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "cva/costvol.hpp"
#include "cva/errors.hpp"

namespace cva::training {

bool label_correctness(double d_est, double d_gt) {
    const double error = std::abs(d_est - d_gt);
    // 20 * error < d_gt is the 5 % test without rounding 0.05.
    return error < 3.0 || 20.0 * error < d_gt;
}

double bce_loss(double prediction, double label) {
    constexpr double kFloor = 1e-12;
    return -(label * std::log(std::max(prediction, kFloor)) +
             (1.0 - label) * std::log(std::max(1.0 - prediction, kFloor)));
}

costvol::PatchTensor TrainingSet::patch(std::size_t index) const {
    const TrainSample& s = samples.at(index);
    return costvol::extract_patch(volumes.at(static_cast<std::size_t>(s.image)), s.x, s.y, patch_size);
}

std::size_t TrainingSet::positives() const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(), [](const TrainSample& s) { return s.label == 1.0f; }));
}

TrainingSet build_training_set(std::vector<CostVolume> volumes, std::span<const DisparityMap> disparities,
                               std::span<const GroundTruthMap> ground_truths, int patch_size) {
    if (volumes.size() != disparities.size() || volumes.size() != ground_truths.size())
        throw std::invalid_argument("build_training_set: volume, disparity and ground-truth counts differ");
    if (patch_size < 1 || patch_size % 2 == 0)
        throw std::invalid_argument("build_training_set: patch size must be odd");
    TrainingSet set;
    set.patch_size = patch_size;
    const int r = patch_size / 2;
    for (std::size_t i = 0; i < volumes.size(); ++i) {
        const CostVolume& vol = volumes[i];
        const DisparityMap& disp = disparities[i];
        const GroundTruthMap& gt = ground_truths[i];
        if (!vol.normalized())
            throw InvalidStateError("build_training_set: volume " + std::to_string(i) + " is not normalized");
        if (disp.width() != vol.width() || disp.height() != vol.height() || gt.width() != vol.width() ||
            gt.height() != vol.height())
            throw std::invalid_argument("build_training_set: image " + std::to_string(i) +
                                        " has misaligned dimensions");
        for (int y = r; y < vol.height() - r; ++y)
            for (int x = r; x < vol.width() - r; ++x) {
                if (!gt.is_valid(x, y)) continue;
                const bool correct = disp.is_valid(x, y) && label_correctness(disp.at(x, y), gt.at(x, y));
                set.samples.push_back({static_cast<int>(i), x, y, correct ? 1.0f : 0.0f});
            }
    }
    set.volumes = std::move(volumes);
    return set;
}

template <typename T>
AdamState<T> make_adam_state(const net::NetworkParams<T>& params) {
    AdamState<T> state;
    for (const auto& b : params.blobs) {
        state.m.emplace_back(b.values.size(), T(0));
        state.v.emplace_back(b.values.size(), T(0));
    }
    return state;
}

template <typename T>
void adam_update(std::span<T> values, std::span<const T> grads, std::span<T> m, std::span<T> v, std::int64_t step,
                 double lr, const AdamConfig& config) {
    if (grads.size() != values.size() || m.size() != values.size() || v.size() != values.size())
        throw std::invalid_argument("adam_update: size mismatch");
    if (step < 1) throw std::invalid_argument("adam_update: step index must be >= 1");
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    const T b1 = static_cast<T>(config.beta1);
    const T b2 = static_cast<T>(config.beta2);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const T g = grads[i];
        m[i] = b1 * m[i] + (T(1) - b1) * g;
        v[i] = b2 * v[i] + (T(1) - b2) * g * g;
        const double m_hat = static_cast<double>(m[i]) / c1;
        const double v_hat = static_cast<double>(v[i]) / c2;
        values[i] = static_cast<T>(static_cast<double>(values[i]) - lr * m_hat / (std::sqrt(v_hat) + config.epsilon));
    }
}

template <typename T>
void adam_step(net::NetworkParams<T>& params, const net::Gradients<T>& grads, AdamState<T>& state, double lr,
               const AdamConfig& config) {
    if (grads.size() != params.blobs.size() || state.m.size() != params.blobs.size())
        throw std::invalid_argument("adam_step: gradient/state layout does not match parameters");
    ++state.step;
    for (std::size_t b = 0; b < params.blobs.size(); ++b) {
        if (!params.blobs[b].trainable) continue;
        adam_update<T>(params.blobs[b].values, grads[b], state.m[b], state.v[b], state.step, lr, config);
    }
}

void TrainConfig::validate() const {
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch size must be >= 1");
    if (phase1_epochs < 0 || phase2_epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (!(phase1_lr > 0.0) || !(phase2_lr > 0.0)) throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: Adam betas must be in [0,1)");
    if (!(adam.epsilon > 0.0)) throw std::invalid_argument("TrainConfig: Adam epsilon must be > 0");
    if (!(negative_weight > 0.0)) throw std::invalid_argument("TrainConfig: negative weight must be > 0");
}

namespace {

std::uint64_t splitmix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t kShuffleSalt = 0x53485546464C45ull;
constexpr std::uint64_t kDropoutSalt = 0x44524F504F5554ull;

}  // namespace

std::vector<std::size_t> epoch_order(std::uint64_t seed, int epoch, std::size_t count) {
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(splitmix(seed ^ kShuffleSalt) + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

TrainResult train(const TrainConfig& config, const net::NetworkConfig& net_config, const TrainingSet& set,
                  const EpochCallback& on_epoch) {
    return train(config, net::init_params<float>(net_config, config.seed), set, on_epoch);
}

TrainResult train(const TrainConfig& config, net::NetworkParams<float> initial, const TrainingSet& set,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (set.samples.empty()) throw std::invalid_argument("train: empty training set");
    if (set.patch_size != initial.config.patch_size)
        throw std::invalid_argument("train: training set patch size does not match the network");
    for (const auto& v : set.volumes)
        if (v.depth() != initial.config.depth)
            throw std::invalid_argument("train: volume depth does not match the network");

    TrainResult result;
    result.params = std::move(initial);
    auto state = make_adam_state(result.params);
    const int n = set.patch_size;
    const std::size_t count = set.samples.size();
    const std::size_t patch_floats = static_cast<std::size_t>(n) * n * static_cast<std::size_t>(set.volumes[0].depth());
    const int epochs = config.phase1_epochs + config.phase2_epochs;
    int step = 0;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        const double lr = epoch <= config.phase1_epochs ? config.phase1_lr : config.phase2_lr;
        const auto order = epoch_order(config.seed, epoch, count);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < count; begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t size = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), count - begin);
            net::Tensor<float> batch(net::Shape{static_cast<int>(size), n, n, set.volumes[0].depth(), 1});
            std::vector<float> labels(size);
            for (std::size_t i = 0; i < size; ++i) {
                const TrainSample& s = set.samples[order[begin + i]];
                costvol::extract_patch_into(set.volumes[static_cast<std::size_t>(s.image)], s.x, s.y, n,
                                            batch.values().subspan(i * patch_floats, patch_floats));
                labels[i] = s.label;
            }
            ++step;
            net::BackwardOptions opts;
            opts.dropout_seed = splitmix(config.seed ^ kDropoutSalt) + static_cast<std::uint64_t>(step);
            opts.negative_weight = config.negative_weight;
            const auto br = net::backward<float>(result.params, batch, labels, opts);
            adam_step(result.params, br.gradients, state, lr, config.adam);
            net::update_running_stats(result.params, br);
            result.steps.push_back({epoch, step, static_cast<double>(br.loss), lr});
            epoch_loss += static_cast<double>(br.loss) * static_cast<double>(size);
        }
        result.epoch_losses.push_back(epoch_loss / static_cast<double>(count));
        if (on_epoch) on_epoch(epoch, result.params);
    }
    return result;
}

void write_loss_log(const std::filesystem::path& path, std::span<const LossRecord> log) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(9);
    out << "epoch,step,loss,lr\n";
    for (const auto& r : log) out << r.epoch << ',' << r.step << ',' << r.loss << ',' << r.lr << '\n';
    if (!out) throw IoError("write failed for " + path.string());
}

template AdamState<float> make_adam_state<float>(const net::NetworkParams<float>&);
template AdamState<double> make_adam_state<double>(const net::NetworkParams<double>&);
template void adam_update<float>(std::span<float>, std::span<const float>, std::span<float>, std::span<float>,
                                 std::int64_t, double, const AdamConfig&);
template void adam_update<double>(std::span<double>, std::span<const double>, std::span<double>, std::span<double>,
                                  std::int64_t, double, const AdamConfig&);
template void adam_step<float>(net::NetworkParams<float>&, const net::Gradients<float>&, AdamState<float>&, double,
                               const AdamConfig&);
template void adam_step<double>(net::NetworkParams<double>&, const net::Gradients<double>&, AdamState<double>&,
                                double, const AdamConfig&);

}  // namespace cva::training
