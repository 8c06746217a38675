#pragma once

// Cost-volume confidence network: neighbourhood fusion (valid 3x3x3 convolutions that
// collapse an N x N extract to one cost curve), depth processing (1x1xk convolutions
// with zero padding along the disparity axis) and a classification head. The head's
// fully-connected layers are stored and executed as convolutions so that the same
// parameters run on single extracts and on whole cost volumes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cva/cost_volume.hpp"
#include "cva/maps.hpp"
#include "cva/net/tensor.hpp"

namespace cva::net {

struct NetworkConfig {
    int patch_size = 13;
    int depth = 256;
    std::vector<int> depth_kernels = {8, 16, 32, 64, 64, 64, 64, 64, 64, 64};
    int channels = 32;
    int head_width = 16;
    double bn_epsilon = 1e-5;
    double bn_momentum = 0.9;
    double dropout_rate = 0.5;
    /// Standard deviation of the normal conv-weight initializer (0.05 reads N(0, 0.0025)
    /// as a variance).
    double conv_init_stddev = 0.05;

    static NetworkConfig canonical() { return {}; }

    int fusion_layers() const noexcept { return (patch_size - 1) / 2; }
    /// Depth of the fused cost curve entering depth processing.
    int fused_depth() const noexcept { return depth - 2 * fusion_layers(); }

    /// Throws std::invalid_argument when the configuration is not realizable.
    void validate() const;

    bool operator==(const NetworkConfig&) const = default;
};

enum class LayerKind { kConv3d, kBatchNorm, kRelu, kSigmoid, kDropout, kFullyConnected };
enum class Padding { kValid, kDepthZeroPad };

struct LayerSpec {
    LayerKind kind = LayerKind::kRelu;
    std::string name;
    /// Architecture-table row this op belongs to; 0 is the input normalization.
    int row = 0;
    int kh = 1, kw = 1, kd = 1;
    int in_channels = 1;
    /// Output channels for conv / fully-connected, channel count for batch norm.
    int filters = 1;
    Padding padding = Padding::kValid;
    double dropout_rate = 0.0;

    // Indices into NetworkParams::blobs; -1 when the op has no such parameter.
    int weights = -1;
    int bias = -1;
    int scale = -1;
    int shift = -1;
    int running_mean = -1;
    int running_var = -1;
};

/// The op chain for a configuration, with blob indices assigned in order.
std::vector<LayerSpec> build_layers(const NetworkConfig& config);

/// Output shape of one op; throws std::invalid_argument when the input does not fit.
Shape output_shape(const LayerSpec& layer, const Shape& input);

/// One row of the architecture summary: the numbered layer and its output dimensions.
struct RowShape {
    int row;
    Shape shape;
};

/// Per-row output shapes for a single N x N x D extract, derived from the op chain.
std::vector<RowShape> architecture_shapes(const NetworkConfig& config);

template <typename T>
struct ParamBlob {
    std::string name;
    std::vector<int> shape;
    std::vector<T> values;
    bool trainable = true;
};

template <typename T>
struct NetworkParams {
    NetworkConfig config;
    std::vector<LayerSpec> layers;
    std::vector<ParamBlob<T>> blobs;

    /// Every stored scalar: weights, biases, batch-norm scale/shift and running statistics.
    std::size_t parameter_count() const;
    std::size_t trainable_count() const;
};

/// Gradients aligned with NetworkParams::blobs (zero for non-trainable blobs).
template <typename T>
using Gradients = std::vector<std::vector<T>>;

/// Parameters with zero weights and biases, unit batch-norm scale and running variance.
template <typename T>
NetworkParams<T> make_params(const NetworkConfig& config);

/// Conv kernels ~ N(0, conv_init_stddev^2); fully-connected kernels Glorot-uniform;
/// biases 0; batch-norm scale 1, shift 0. Deterministic per seed.
template <typename T>
NetworkParams<T> init_params(const NetworkConfig& config, std::uint64_t seed);

template <typename To, typename From>
NetworkParams<To> convert_params(const NetworkParams<From>& params);

enum class Mode { kTrain, kInfer };

struct ForwardOptions {
    Mode mode = Mode::kInfer;
    std::uint64_t dropout_seed = 0;
};

/// Per-op state recorded for backpropagation.
template <typename T>
struct LayerTrace {
    Tensor<T> output;
    std::vector<T> mean;     // batch norm: statistics used for normalization
    std::vector<T> var;
    std::vector<T> inv_std;
    std::vector<T> mask;     // dropout: per-element scale (0 or 1 / (1 - rate))
};

template <typename T>
struct ForwardTrace {
    std::vector<LayerTrace<T>> layers;
};

/// Runs the op chain. Input shape (B, H, W, D, 1); output (B, H - N + 1, W - N + 1, 1, 1).
template <typename T>
Tensor<T> forward(const NetworkParams<T>& params, const Tensor<T>& input, const ForwardOptions& options,
                  ForwardTrace<T>* trace = nullptr);

/// Confidence per sample of a (B, N, N, D, 1) batch.
template <typename T>
std::vector<T> predict(const NetworkParams<T>& params, const Tensor<T>& batch, Mode mode = Mode::kInfer,
                       std::uint64_t dropout_seed = 0);

template <typename T>
struct BackwardResult {
    T loss{};
    std::vector<T> predictions;
    Gradients<T> gradients;
    /// Batch statistics of every batch-norm op, in layer order (for running updates).
    std::vector<std::vector<T>> batch_mean;
    std::vector<std::vector<T>> batch_var;
};

struct BackwardOptions {
    std::uint64_t dropout_seed = 0;
    /// Loss weight of label-0 samples. 1 reproduces the unweighted loss.
    double negative_weight = 1.0;
};

/// Train-mode forward pass, mean binary cross-entropy and full backpropagation.
/// labels must be 0 or 1. Throws NumericalError naming the first layer that produced
/// a non-finite value when the loss is not finite.
template <typename T>
BackwardResult<T> backward(const NetworkParams<T>& params, const Tensor<T>& batch, std::span<const T> labels,
                           const BackwardOptions& options = {});

/// running = momentum * running + (1 - momentum) * batch.
template <typename T>
void update_running_stats(NetworkParams<T>& params, const BackwardResult<T>& result);

/// Whole-image confidence in one fully-convolutional pass over an edge-replicated
/// volume. tile > 0 processes tile x tile output blocks with a halo of N / 2; the
/// result is independent of the tile size.
template <typename T>
ConfidenceMap infer_full(const NetworkParams<T>& params, const CostVolume& volume, int tile = 0);

/// Packs patches of a normalized volume into a network batch.
template <typename T>
Tensor<T> make_batch(const CostVolume& volume, std::span<const std::pair<int, int>> centers, int patch_size);

/// "CVAM" checkpoint: magic, u16 version, u16 reserved, the NetworkConfig, then every
/// blob as u32 count followed by little-endian float32 values.
inline constexpr std::uint16_t kModelFormatVersion = 1;

template <typename T>
std::vector<unsigned char> encode_params(const NetworkParams<T>& params);
template <typename T>
NetworkParams<T> decode_params(std::span<const unsigned char> bytes);

template <typename T>
void save_params(const NetworkParams<T>& params, const std::filesystem::path& path);
template <typename T>
NetworkParams<T> load_params(const std::filesystem::path& path);
/// Also requires the stored configuration to equal expected (FormatError otherwise).
template <typename T>
NetworkParams<T> load_params(const std::filesystem::path& path, const NetworkConfig& expected);

}  // namespace cva::net
