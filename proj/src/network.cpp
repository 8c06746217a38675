#include "cva/net/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "cva/costvol.hpp"
#include "cva/errors.hpp"
#include "cva/parallel.hpp"

namespace cva::net {

void NetworkConfig::validate() const {
    if (patch_size < 1 || patch_size % 2 == 0) throw std::invalid_argument("NetworkConfig: patch size must be odd");
    if (depth < 2) throw std::invalid_argument("NetworkConfig: depth must be >= 2");
    if (fused_depth() < 1)
        throw std::invalid_argument("NetworkConfig: depth must exceed twice the number of fusion layers");
    for (int k : depth_kernels)
        if (k < 1) throw std::invalid_argument("NetworkConfig: depth kernel sizes must be >= 1");
    if (channels < 1 || head_width < 1) throw std::invalid_argument("NetworkConfig: channel counts must be >= 1");
    if (!(bn_epsilon > 0.0)) throw std::invalid_argument("NetworkConfig: batch-norm epsilon must be > 0");
    if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
        throw std::invalid_argument("NetworkConfig: batch-norm momentum must be in [0,1)");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw std::invalid_argument("NetworkConfig: dropout rate must be in [0,1)");
    if (!(conv_init_stddev > 0.0)) throw std::invalid_argument("NetworkConfig: init stddev must be > 0");
}

std::vector<LayerSpec> build_layers(const NetworkConfig& config) {
    config.validate();
    std::vector<LayerSpec> layers;
    int blob = 0;

    auto add_bn = [&](const std::string& name, int row, int channels) {
        LayerSpec s;
        s.kind = LayerKind::kBatchNorm;
        s.name = name + "/bn";
        s.row = row;
        s.in_channels = s.filters = channels;
        s.scale = blob++;
        s.shift = blob++;
        s.running_mean = blob++;
        s.running_var = blob++;
        layers.push_back(s);
    };
    auto add_simple = [&](LayerKind kind, const std::string& name, int row, int channels, double rate = 0.0) {
        LayerSpec s;
        s.kind = kind;
        s.name = name;
        s.row = row;
        s.in_channels = s.filters = channels;
        s.dropout_rate = rate;
        layers.push_back(s);
    };
    auto add_conv = [&](LayerKind kind, const std::string& name, int row, int kh, int kw, int kd, int cin, int cout,
                        Padding padding) {
        LayerSpec s;
        s.kind = kind;
        s.name = name + (kind == LayerKind::kConv3d ? "/conv" : "/fc");
        s.row = row;
        s.kh = kh;
        s.kw = kw;
        s.kd = kd;
        s.in_channels = cin;
        s.filters = cout;
        s.padding = padding;
        s.weights = blob++;
        s.bias = blob++;
        layers.push_back(s);
    };

    add_bn("input", 0, 1);
    int row = 1;
    for (int i = 0; i < config.fusion_layers(); ++i, ++row) {
        const std::string name = "fusion" + std::to_string(i + 1);
        add_conv(LayerKind::kConv3d, name, row, 3, 3, 3, i == 0 ? 1 : config.channels, config.channels,
                 Padding::kValid);
        add_bn(name, row, config.channels);
        add_simple(LayerKind::kRelu, name + "/relu", row, config.channels);
    }
    int cin = config.fusion_layers() == 0 ? 1 : config.channels;
    for (std::size_t j = 0; j < config.depth_kernels.size(); ++j, ++row) {
        const std::string name = "depth" + std::to_string(j + 1);
        add_conv(LayerKind::kConv3d, name, row, 1, 1, config.depth_kernels[j], cin, config.channels,
                 Padding::kDepthZeroPad);
        add_bn(name, row, config.channels);
        add_simple(LayerKind::kRelu, name + "/relu", row, config.channels);
        cin = config.channels;
    }
    add_conv(LayerKind::kFullyConnected, "head1", row, 1, 1, config.fused_depth(), cin, config.head_width,
             Padding::kValid);
    add_simple(LayerKind::kRelu, "head1/relu", row, config.head_width);
    add_simple(LayerKind::kDropout, "head1/dropout", row, config.head_width, config.dropout_rate);
    ++row;
    add_conv(LayerKind::kFullyConnected, "head2", row, 1, 1, 1, config.head_width, 1, Padding::kValid);
    add_simple(LayerKind::kSigmoid, "head2/sigmoid", row, 1);
    return layers;
}

Shape output_shape(const LayerSpec& layer, const Shape& in) {
    if (in.channels != layer.in_channels)
        throw std::invalid_argument(layer.name + ": expected " + std::to_string(layer.in_channels) +
                                    " input channels, got " + std::to_string(in.channels));
    if (layer.kind != LayerKind::kConv3d && layer.kind != LayerKind::kFullyConnected) return in;
    Shape out = in;
    out.height = in.height - layer.kh + 1;
    out.width = in.width - layer.kw + 1;
    out.depth = layer.padding == Padding::kDepthZeroPad ? in.depth : in.depth - layer.kd + 1;
    out.channels = layer.filters;
    if (out.height < 1 || out.width < 1 || out.depth < 1)
        throw std::invalid_argument(layer.name + ": kernel larger than input");
    return out;
}

std::vector<RowShape> architecture_shapes(const NetworkConfig& config) {
    const auto layers = build_layers(config);
    Shape s{1, config.patch_size, config.patch_size, config.depth, 1};
    std::vector<RowShape> rows;
    for (const auto& layer : layers) {
        s = output_shape(layer, s);
        if (!rows.empty() && rows.back().row == layer.row)
            rows.back().shape = s;
        else
            rows.push_back({layer.row, s});
    }
    return rows;
}

template <typename T>
std::size_t NetworkParams<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& b : blobs) n += b.values.size();
    return n;
}

template <typename T>
std::size_t NetworkParams<T>::trainable_count() const {
    std::size_t n = 0;
    for (const auto& b : blobs)
        if (b.trainable) n += b.values.size();
    return n;
}

template <typename T>
NetworkParams<T> make_params(const NetworkConfig& config) {
    NetworkParams<T> p;
    p.config = config;
    p.layers = build_layers(config);
    for (const auto& l : p.layers) {
        auto add = [&](int index, const std::string& suffix, std::vector<int> shape, T fill, bool trainable) {
            if (index < 0) return;
            if (static_cast<std::size_t>(index) != p.blobs.size())
                throw std::logic_error("make_params: blob order mismatch");
            std::size_t count = 1;
            for (int d : shape) count *= static_cast<std::size_t>(d);
            p.blobs.push_back({l.name + "/" + suffix, std::move(shape), std::vector<T>(count, fill), trainable});
        };
        add(l.weights, "weights", {l.kh, l.kw, l.kd, l.in_channels, l.filters}, T(0), true);
        add(l.bias, "bias", {l.filters}, T(0), true);
        add(l.scale, "scale", {l.filters}, T(1), true);
        add(l.shift, "shift", {l.filters}, T(0), true);
        add(l.running_mean, "running_mean", {l.filters}, T(0), false);
        add(l.running_var, "running_var", {l.filters}, T(1), false);
    }
    return p;
}

template <typename T>
NetworkParams<T> init_params(const NetworkConfig& config, std::uint64_t seed) {
    NetworkParams<T> p = make_params<T>(config);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, config.conv_init_stddev);
    for (const auto& l : p.layers) {
        if (l.weights < 0) continue;
        auto& w = p.blobs[static_cast<std::size_t>(l.weights)].values;
        if (l.kind == LayerKind::kFullyConnected) {
            const double fan_in = static_cast<double>(l.kh) * l.kw * l.kd * l.in_channels;
            const double limit = std::sqrt(6.0 / (fan_in + l.filters));
            std::uniform_real_distribution<double> uniform(-limit, limit);
            for (auto& v : w) v = static_cast<T>(uniform(rng));
        } else {
            for (auto& v : w) v = static_cast<T>(normal(rng));
        }
    }
    return p;
}

template <typename To, typename From>
NetworkParams<To> convert_params(const NetworkParams<From>& params) {
    NetworkParams<To> out;
    out.config = params.config;
    out.layers = params.layers;
    for (const auto& b : params.blobs)
        out.blobs.push_back({b.name, b.shape, std::vector<To>(b.values.begin(), b.values.end()), b.trainable});
    return out;
}

namespace {

template <typename T>
const T* blob_data(const NetworkParams<T>& p, int index) {
    return p.blobs[static_cast<std::size_t>(index)].values.data();
}

struct DepthRange {
    int lo;
    int hi;
};

// Kernel taps e with input depth oz + e - pad inside [0, depth).
inline DepthRange taps(int oz, int pad, int kd, int depth) {
    return {std::max(0, pad - oz), std::min(kd, depth - oz + pad)};
}

inline int pad_before(const LayerSpec& l) { return l.padding == Padding::kDepthZeroPad ? (l.kd - 1) / 2 : 0; }

template <typename T>
void conv_forward(const LayerSpec& l, const T* weights, const T* bias, const Tensor<T>& x, Tensor<T>& y) {
    const Shape& is = x.shape();
    const Shape& os = y.shape();
    const int cin = l.in_channels;
    const int cout = l.filters;
    const int pad = pad_before(l);
    parallel_for(0, os.batch * os.height, [&](int job) {
        const int n = job / os.height;
        const int oh = job % os.height;
        for (int ow = 0; ow < os.width; ++ow) {
            for (int oz = 0; oz < os.depth; ++oz) {
                T* __restrict out = &y(n, oh, ow, oz, 0);
                std::copy(bias, bias + cout, out);
                const DepthRange r = taps(oz, pad, l.kd, is.depth);
                if (r.lo >= r.hi) continue;
                const int len = (r.hi - r.lo) * cin;
                for (int a = 0; a < l.kh; ++a) {
                    for (int b = 0; b < l.kw; ++b) {
                        const T* __restrict in = &x(n, oh + a, ow + b, oz + r.lo - pad, 0);
                        const T* __restrict w =
                            weights + ((static_cast<std::size_t>(a) * l.kw + b) * l.kd + r.lo) * cin * cout;
                        for (int j = 0; j < len; ++j) {
                            const T v = in[j];
                            const T* __restrict wr = w + static_cast<std::size_t>(j) * cout;
                            for (int co = 0; co < cout; ++co) out[co] += v * wr[co];
                        }
                    }
                }
            }
        }
    });
}

// Accumulates into grad_w / grad_b; writes grad_x when non-null (must be zeroed).
template <typename T>
void conv_backward(const LayerSpec& l, const T* weights, const Tensor<T>& x, const Tensor<T>& gy, Tensor<T>* gx,
                   T* grad_w, T* grad_b) {
    const Shape& is = x.shape();
    const Shape& os = gy.shape();
    const int cin = l.in_channels;
    const int cout = l.filters;
    const int pad = pad_before(l);
    for (int n = 0; n < os.batch; ++n) {
        for (int oh = 0; oh < os.height; ++oh) {
            for (int ow = 0; ow < os.width; ++ow) {
                for (int oz = 0; oz < os.depth; ++oz) {
                    const T* __restrict g = &gy(n, oh, ow, oz, 0);
                    for (int co = 0; co < cout; ++co) grad_b[co] += g[co];
                    const DepthRange r = taps(oz, pad, l.kd, is.depth);
                    if (r.lo >= r.hi) continue;
                    const int len = (r.hi - r.lo) * cin;
                    for (int a = 0; a < l.kh; ++a) {
                        for (int b = 0; b < l.kw; ++b) {
                            const std::size_t woff =
                                ((static_cast<std::size_t>(a) * l.kw + b) * l.kd + r.lo) * cin * cout;
                            const T* __restrict in = &x(n, oh + a, ow + b, oz + r.lo - pad, 0);
                            T* __restrict gw = grad_w + woff;
                            for (int j = 0; j < len; ++j) {
                                const T v = in[j];
                                T* __restrict gwr = gw + static_cast<std::size_t>(j) * cout;
                                for (int co = 0; co < cout; ++co) gwr[co] += v * g[co];
                            }
                            if (gx) {
                                const T* __restrict w = weights + woff;
                                T* __restrict gin = &(*gx)(n, oh + a, ow + b, oz + r.lo - pad, 0);
                                for (int j = 0; j < len; ++j) {
                                    const T* __restrict wr = w + static_cast<std::size_t>(j) * cout;
                                    T acc = 0;
                                    for (int co = 0; co < cout; ++co) acc += wr[co] * g[co];
                                    gin[j] += acc;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}

template <typename T>
void batchnorm_forward(const LayerSpec& l, const NetworkParams<T>& p, Mode mode, const Tensor<T>& x, Tensor<T>& y,
                       LayerTrace<T>* trace) {
    const int c = l.filters;
    const std::size_t positions = x.size() / static_cast<std::size_t>(c);
    const T* gamma = blob_data(p, l.scale);
    const T* beta = blob_data(p, l.shift);
    std::vector<T> mean(static_cast<std::size_t>(c));
    std::vector<T> var(static_cast<std::size_t>(c));
    const T* in = x.data();
    if (mode == Mode::kTrain) {
        // Shifted accumulation keeps a constant channel's mean exact.
        std::vector<T> ref(in, in + c);
        std::vector<T> acc(static_cast<std::size_t>(c), T(0));
        for (std::size_t i = 0; i < positions; ++i)
            for (int k = 0; k < c; ++k) acc[k] += in[i * c + k] - ref[k];
        for (int k = 0; k < c; ++k) mean[k] = ref[k] + acc[k] / static_cast<T>(positions);
        std::fill(acc.begin(), acc.end(), T(0));
        for (std::size_t i = 0; i < positions; ++i)
            for (int k = 0; k < c; ++k) {
                const T dev = in[i * c + k] - mean[k];
                acc[k] += dev * dev;
            }
        for (int k = 0; k < c; ++k) var[k] = acc[k] / static_cast<T>(positions);
    } else {
        const T* rm = blob_data(p, l.running_mean);
        const T* rv = blob_data(p, l.running_var);
        std::copy(rm, rm + c, mean.begin());
        std::copy(rv, rv + c, var.begin());
    }
    std::vector<T> inv_std(static_cast<std::size_t>(c));
    const T eps = static_cast<T>(p.config.bn_epsilon);
    for (int k = 0; k < c; ++k) inv_std[k] = T(1) / std::sqrt(var[k] + eps);
    T* out = y.data();
    for (std::size_t i = 0; i < positions; ++i)
        for (int k = 0; k < c; ++k) out[i * c + k] = (in[i * c + k] - mean[k]) * inv_std[k] * gamma[k] + beta[k];
    if (trace) {
        trace->mean = std::move(mean);
        trace->var = std::move(var);
        trace->inv_std = std::move(inv_std);
    }
}

template <typename T>
void batchnorm_backward(const LayerSpec& l, const NetworkParams<T>& p, const LayerTrace<T>& t, const Tensor<T>& x,
                        const Tensor<T>& gy, Tensor<T>& gx, T* grad_scale, T* grad_shift) {
    const int c = l.filters;
    const std::size_t positions = x.size() / static_cast<std::size_t>(c);
    const T* gamma = blob_data(p, l.scale);
    const T* in = x.data();
    const T* g = gy.data();
    std::vector<T> sum_g(static_cast<std::size_t>(c), T(0));
    std::vector<T> sum_gx(static_cast<std::size_t>(c), T(0));
    for (std::size_t i = 0; i < positions; ++i)
        for (int k = 0; k < c; ++k) {
            const T xhat = (in[i * c + k] - t.mean[k]) * t.inv_std[k];
            sum_g[k] += g[i * c + k];
            sum_gx[k] += g[i * c + k] * xhat;
        }
    for (int k = 0; k < c; ++k) {
        grad_scale[k] += sum_gx[k];
        grad_shift[k] += sum_g[k];
    }
    const T m = static_cast<T>(positions);
    T* out = gx.data();
    for (std::size_t i = 0; i < positions; ++i)
        for (int k = 0; k < c; ++k) {
            const T xhat = (in[i * c + k] - t.mean[k]) * t.inv_std[k];
            out[i * c + k] = gamma[k] * t.inv_std[k] * (g[i * c + k] - sum_g[k] / m - xhat * sum_gx[k] / m);
        }
}

template <typename T>
T sigmoid(T z) {
    if (z >= 0) return T(1) / (T(1) + std::exp(-z));
    const T e = std::exp(z);
    return e / (T(1) + e);
}

std::uint64_t mix_seed(std::uint64_t seed, std::size_t layer) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (layer + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

template <typename T>
Tensor<T> run_layer(const NetworkParams<T>& p, std::size_t index, const Tensor<T>& x, const ForwardOptions& opt,
                    LayerTrace<T>* trace) {
    const LayerSpec& l = p.layers[index];
    Tensor<T> y(output_shape(l, x.shape()));
    switch (l.kind) {
        case LayerKind::kConv3d:
        case LayerKind::kFullyConnected:
            conv_forward(l, blob_data(p, l.weights), blob_data(p, l.bias), x, y);
            break;
        case LayerKind::kBatchNorm:
            batchnorm_forward(l, p, opt.mode, x, y, trace);
            break;
        case LayerKind::kRelu: {
            const T* in = x.data();
            T* out = y.data();
            // Written so that NaN passes through and stays visible to the loss check.
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] < T(0) ? T(0) : in[i];
            break;
        }
        case LayerKind::kSigmoid: {
            const T* in = x.data();
            T* out = y.data();
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid(in[i]);
            break;
        }
        case LayerKind::kDropout: {
            if (opt.mode == Mode::kInfer || l.dropout_rate <= 0.0) {
                y = x;
                if (trace) trace->mask.assign(x.size(), T(1));
                break;
            }
            std::mt19937_64 rng(mix_seed(opt.dropout_seed, index));
            const double keep = 1.0 - l.dropout_rate;
            const T scale = static_cast<T>(1.0 / keep);
            std::vector<T> mask(x.size());
            for (auto& m : mask) m = (static_cast<double>(rng() >> 11) * 0x1.0p-53) < keep ? scale : T(0);
            const T* in = x.data();
            T* out = y.data();
            for (std::size_t i = 0; i < x.size(); ++i) out[i] = in[i] * mask[i];
            if (trace) trace->mask = std::move(mask);
            break;
        }
    }
    return y;
}

template <typename T>
bool all_finite(std::span<const T> values) {
    return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

}  // namespace

template <typename T>
Tensor<T> forward(const NetworkParams<T>& params, const Tensor<T>& input, const ForwardOptions& options,
                  ForwardTrace<T>* trace) {
    const int n = params.config.patch_size;
    const Shape& s = input.shape();
    if (s.height < n || s.width < n || s.depth != params.config.depth || s.channels != 1)
        throw std::invalid_argument("forward: input shape (" + std::to_string(s.height) + ", " +
                                    std::to_string(s.width) + ", " + std::to_string(s.depth) + ", " +
                                    std::to_string(s.channels) + ") does not fit the network (N=" +
                                    std::to_string(n) + ", D=" + std::to_string(params.config.depth) + ")");
    if (trace) trace->layers.assign(params.layers.size(), LayerTrace<T>{});
    Tensor<T> current = input;
    for (std::size_t i = 0; i < params.layers.size(); ++i) {
        LayerTrace<T>* lt = trace ? &trace->layers[i] : nullptr;
        current = run_layer(params, i, current, options, lt);
        if (lt) lt->output = current;
    }
    return current;
}

template <typename T>
std::vector<T> predict(const NetworkParams<T>& params, const Tensor<T>& batch, Mode mode, std::uint64_t dropout_seed) {
    const Tensor<T> out = forward(params, batch, ForwardOptions{mode, dropout_seed});
    if (out.shape().height != 1 || out.shape().width != 1)
        throw std::invalid_argument("predict: batch items must be N x N extracts");
    return {out.values().begin(), out.values().end()};
}

template <typename T>
BackwardResult<T> backward(const NetworkParams<T>& params, const Tensor<T>& batch, std::span<const T> labels,
                           const BackwardOptions& options) {
    const int count = batch.shape().batch;
    if (count < 1) throw std::invalid_argument("backward: empty batch");
    if (labels.size() != static_cast<std::size_t>(count))
        throw std::invalid_argument("backward: label count does not match batch size");
    for (T l : labels)
        if (l != T(0) && l != T(1)) throw std::invalid_argument("backward: labels must be 0 or 1");
    if (batch.shape().height != params.config.patch_size || batch.shape().width != params.config.patch_size)
        throw std::invalid_argument("backward: batch items must be N x N extracts");

    ForwardTrace<T> trace;
    const Tensor<T> out = forward(params, batch, ForwardOptions{Mode::kTrain, options.dropout_seed}, &trace);

    BackwardResult<T> result;
    result.predictions.assign(out.values().begin(), out.values().end());
    const T floor = static_cast<T>(1e-12);
    const T neg_w = static_cast<T>(options.negative_weight);
    T loss = 0;
    for (int i = 0; i < count; ++i) {
        const T pr = result.predictions[static_cast<std::size_t>(i)];
        const T lab = labels[static_cast<std::size_t>(i)];
        const T w = lab == T(1) ? T(1) : neg_w;
        loss -= w * (lab * std::log(std::max(pr, floor)) + (T(1) - lab) * std::log(std::max(T(1) - pr, floor)));
    }
    result.loss = loss / static_cast<T>(count);
    if (!std::isfinite(result.loss)) {
        std::string culprit = "loss";
        for (std::size_t i = 0; i < params.layers.size(); ++i)
            if (!all_finite<T>(trace.layers[i].output.values())) {
                culprit = params.layers[i].name;
                break;
            }
        throw NumericalError(culprit, "non-finite training loss");
    }

    result.gradients.resize(params.blobs.size());
    for (std::size_t b = 0; b < params.blobs.size(); ++b)
        result.gradients[b].assign(params.blobs[b].values.size(), T(0));

    // Gradient of the mean weighted BCE at the sigmoid input: w * (p - label) / B.
    const std::size_t last = params.layers.size() - 1;
    Tensor<T> grad(last == 0 ? batch.shape() : trace.layers[last - 1].output.shape());
    for (int i = 0; i < count; ++i) {
        const T lab = labels[static_cast<std::size_t>(i)];
        const T w = lab == T(1) ? T(1) : neg_w;
        grad.values()[static_cast<std::size_t>(i)] =
            w * (result.predictions[static_cast<std::size_t>(i)] - lab) / static_cast<T>(count);
    }

    for (std::size_t i = last; i-- > 0;) {
        const LayerSpec& l = params.layers[i];
        const Tensor<T>& x = i == 0 ? batch : trace.layers[i - 1].output;
        const LayerTrace<T>& t = trace.layers[i];
        Tensor<T> gin(x.shape());
        switch (l.kind) {
            case LayerKind::kConv3d:
            case LayerKind::kFullyConnected:
                conv_backward(l, blob_data(params, l.weights), x, grad, i == 0 ? nullptr : &gin,
                              result.gradients[static_cast<std::size_t>(l.weights)].data(),
                              result.gradients[static_cast<std::size_t>(l.bias)].data());
                break;
            case LayerKind::kBatchNorm:
                batchnorm_backward(l, params, t, x, grad, gin,
                                   result.gradients[static_cast<std::size_t>(l.scale)].data(),
                                   result.gradients[static_cast<std::size_t>(l.shift)].data());
                result.batch_mean.insert(result.batch_mean.begin(), t.mean);
                result.batch_var.insert(result.batch_var.begin(), t.var);
                break;
            case LayerKind::kRelu: {
                const T* o = t.output.data();
                const T* g = grad.data();
                T* gi = gin.data();
                for (std::size_t k = 0; k < gin.size(); ++k) gi[k] = o[k] > T(0) ? g[k] : T(0);
                break;
            }
            case LayerKind::kDropout: {
                const T* g = grad.data();
                T* gi = gin.data();
                for (std::size_t k = 0; k < gin.size(); ++k) gi[k] = g[k] * t.mask[k];
                break;
            }
            case LayerKind::kSigmoid:
                throw std::logic_error("backward: sigmoid only supported as the final op");
        }
        grad = std::move(gin);
    }
    return result;
}

template <typename T>
void update_running_stats(NetworkParams<T>& params, const BackwardResult<T>& result) {
    const T momentum = static_cast<T>(params.config.bn_momentum);
    std::size_t k = 0;
    for (const auto& l : params.layers) {
        if (l.kind != LayerKind::kBatchNorm) continue;
        if (k >= result.batch_mean.size()) throw std::invalid_argument("update_running_stats: missing statistics");
        auto& rm = params.blobs[static_cast<std::size_t>(l.running_mean)].values;
        auto& rv = params.blobs[static_cast<std::size_t>(l.running_var)].values;
        for (std::size_t c = 0; c < rm.size(); ++c) {
            rm[c] = momentum * rm[c] + (T(1) - momentum) * result.batch_mean[k][c];
            rv[c] = momentum * rv[c] + (T(1) - momentum) * result.batch_var[k][c];
        }
        ++k;
    }
}

template <typename T>
ConfidenceMap infer_full(const NetworkParams<T>& params, const CostVolume& volume, int tile) {
    if (!volume.normalized()) throw InvalidStateError("infer_full: volume is not normalized");
    if (volume.depth() != params.config.depth)
        throw std::invalid_argument("infer_full: volume depth " + std::to_string(volume.depth()) +
                                    " does not match network depth " + std::to_string(params.config.depth));
    if (tile < 0) throw std::invalid_argument("infer_full: negative tile size");
    const int r = params.config.patch_size / 2;
    const int w = volume.width();
    const int h = volume.height();
    const int depth = volume.depth();
    const int tile_w = tile == 0 ? w : tile;
    const int tile_h = tile == 0 ? h : tile;
    ConfidenceMap map(w, h);
    for (int ty = 0; ty < h; ty += tile_h) {
        for (int tx = 0; tx < w; tx += tile_w) {
            const int th = std::min(tile_h, h - ty);
            const int tw = std::min(tile_w, w - tx);
            Tensor<T> in(Shape{1, th + 2 * r, tw + 2 * r, depth, 1});
            for (int row = 0; row < th + 2 * r; ++row) {
                const int sy = std::clamp(ty - r + row, 0, h - 1);
                for (int col = 0; col < tw + 2 * r; ++col) {
                    const int sx = std::clamp(tx - r + col, 0, w - 1);
                    const auto curve = volume.curve(sx, sy);
                    std::copy(curve.begin(), curve.end(), &in(0, row, col, 0, 0));
                }
            }
            const Tensor<T> out = forward(params, in, ForwardOptions{Mode::kInfer, 0});
            for (int row = 0; row < th; ++row)
                for (int col = 0; col < tw; ++col)
                    map.set(tx + col, ty + row, static_cast<float>(out(0, row, col, 0, 0)));
        }
    }
    return map;
}

template <typename T>
Tensor<T> make_batch(const CostVolume& volume, std::span<const std::pair<int, int>> centers, int patch_size) {
    if (centers.empty()) throw std::invalid_argument("make_batch: no centers");
    Tensor<T> batch(Shape{static_cast<int>(centers.size()), patch_size, patch_size, volume.depth(), 1});
    const std::size_t stride = batch.shape().sample_size();
    if constexpr (std::is_same_v<T, float>) {
        for (std::size_t i = 0; i < centers.size(); ++i)
            costvol::extract_patch_into(volume, centers[i].first, centers[i].second, patch_size,
                                        batch.values().subspan(i * stride, stride));
    } else {
        std::vector<float> tmp(stride);
        for (std::size_t i = 0; i < centers.size(); ++i) {
            costvol::extract_patch_into(volume, centers[i].first, centers[i].second, patch_size, tmp);
            std::copy(tmp.begin(), tmp.end(), batch.values().begin() + static_cast<std::ptrdiff_t>(i * stride));
        }
    }
    return batch;
}

namespace {

constexpr unsigned char kModelMagic[4] = {'C', 'V', 'A', 'M'};

class Writer {
public:
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void f32(float v) { put(std::bit_cast<std::uint32_t>(v), 4); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void raw(const unsigned char* p, std::size_t n) { bytes.insert(bytes.end(), p, p + n); }
    std::vector<unsigned char> bytes;

private:
    void put(std::uint64_t v, int n) {
        for (int b = 0; b < n; ++b) bytes.push_back(static_cast<unsigned char>(v >> (8 * b)));
    }
};

class Reader {
public:
    explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    float f32() { return std::bit_cast<float>(static_cast<std::uint32_t>(get(4))); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::uint64_t get(int n) {
        if (remaining() < static_cast<std::size_t>(n)) throw FormatError("truncated model file", bytes_.size());
        std::uint64_t v = 0;
        for (int b = 0; b < n; ++b) v |= std::uint64_t(bytes_[pos_ + b]) << (8 * b);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

template <typename T>
std::vector<unsigned char> encode_params(const NetworkParams<T>& params) {
    Writer w;
    w.raw(kModelMagic, 4);
    w.u16(kModelFormatVersion);
    w.u16(0);
    const NetworkConfig& c = params.config;
    w.u32(static_cast<std::uint32_t>(c.patch_size));
    w.u32(static_cast<std::uint32_t>(c.depth));
    w.u32(static_cast<std::uint32_t>(c.channels));
    w.u32(static_cast<std::uint32_t>(c.head_width));
    w.u32(static_cast<std::uint32_t>(c.depth_kernels.size()));
    for (int k : c.depth_kernels) w.u32(static_cast<std::uint32_t>(k));
    w.f64(c.bn_epsilon);
    w.f64(c.bn_momentum);
    w.f64(c.dropout_rate);
    w.f64(c.conv_init_stddev);
    w.u32(static_cast<std::uint32_t>(params.blobs.size()));
    for (const auto& b : params.blobs) {
        w.u32(static_cast<std::uint32_t>(b.values.size()));
        for (T v : b.values) w.f32(static_cast<float>(v));
    }
    return std::move(w.bytes);
}

template <typename T>
NetworkParams<T> decode_params(std::span<const unsigned char> bytes) {
    if (bytes.size() < 4 || !std::equal(std::begin(kModelMagic), std::end(kModelMagic), bytes.begin()))
        throw FormatError("bad model magic (expected CVAM)", 0);
    Reader r(bytes.subspan(4));
    auto at = [&] { return 4 + r.pos(); };
    const std::size_t version_at = at();
    if (r.u16() != kModelFormatVersion) throw FormatError("unsupported model version", version_at);
    r.u16();
    NetworkConfig c;
    const std::size_t config_at = at();
    c.patch_size = static_cast<int>(r.u32());
    c.depth = static_cast<int>(r.u32());
    c.channels = static_cast<int>(r.u32());
    c.head_width = static_cast<int>(r.u32());
    const std::size_t kernels_at = at();
    const std::uint32_t nk = r.u32();
    if (nk > 4096 || nk * 4ull > r.remaining()) throw FormatError("implausible depth-kernel count", kernels_at);
    c.depth_kernels.resize(nk);
    for (auto& k : c.depth_kernels) {
        const std::uint32_t v = r.u32();
        if (v > (1u << 20)) throw FormatError("implausible depth-kernel size", at() - 4);
        k = static_cast<int>(v);
    }
    c.bn_epsilon = r.f64();
    c.bn_momentum = r.f64();
    c.dropout_rate = r.f64();
    c.conv_init_stddev = r.f64();
    if (c.patch_size < 1 || c.patch_size > (1 << 16) || c.depth < 1 || c.depth > (1 << 20) || c.channels < 1 ||
        c.channels > (1 << 16) || c.head_width < 1 || c.head_width > (1 << 16))
        throw FormatError("implausible network configuration", config_at);
    NetworkParams<T> p;
    try {
        p = make_params<T>(c);
    } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("invalid network configuration: ") + e.what(), config_at);
    }
    const std::size_t count_at = at();
    if (r.u32() != p.blobs.size()) throw FormatError("parameter blob count does not match configuration", count_at);
    for (auto& b : p.blobs) {
        const std::size_t size_at = at();
        if (r.u32() != b.values.size())
            throw FormatError("shape mismatch for parameter " + b.name, size_at);
        for (auto& v : b.values) {
            const float f = r.f32();
            if (!std::isfinite(f)) throw FormatError("non-finite parameter in " + b.name, at() - 4);
            v = static_cast<T>(f);
        }
    }
    if (r.remaining() != 0) throw FormatError("trailing bytes after model payload", at());
    return p;
}

template <typename T>
void save_params(const NetworkParams<T>& params, const std::filesystem::path& path) {
    const auto bytes = encode_params(params);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
NetworkParams<T> load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return decode_params<T>(bytes);
}

template <typename T>
NetworkParams<T> load_params(const std::filesystem::path& path, const NetworkConfig& expected) {
    NetworkParams<T> p = load_params<T>(path);
    if (!(p.config == expected)) throw FormatError("model configuration does not match the expected shape", 8);
    return p;
}

#define CVA_INSTANTIATE(T)                                                                                         \
    template struct NetworkParams<T>;                                                                              \
    template NetworkParams<T> make_params<T>(const NetworkConfig&);                                                \
    template NetworkParams<T> init_params<T>(const NetworkConfig&, std::uint64_t);                                 \
    template Tensor<T> forward<T>(const NetworkParams<T>&, const Tensor<T>&, const ForwardOptions&,                \
                                  ForwardTrace<T>*);                                                               \
    template std::vector<T> predict<T>(const NetworkParams<T>&, const Tensor<T>&, Mode, std::uint64_t);            \
    template BackwardResult<T> backward<T>(const NetworkParams<T>&, const Tensor<T>&, std::span<const T>,          \
                                           const BackwardOptions&);                                                \
    template void update_running_stats<T>(NetworkParams<T>&, const BackwardResult<T>&);                            \
    template ConfidenceMap infer_full<T>(const NetworkParams<T>&, const CostVolume&, int);                         \
    template Tensor<T> make_batch<T>(const CostVolume&, std::span<const std::pair<int, int>>, int);                \
    template std::vector<unsigned char> encode_params<T>(const NetworkParams<T>&);                                 \
    template NetworkParams<T> decode_params<T>(std::span<const unsigned char>);                                    \
    template void save_params<T>(const NetworkParams<T>&, const std::filesystem::path&);                           \
    template NetworkParams<T> load_params<T>(const std::filesystem::path&);                                        \
    template NetworkParams<T> load_params<T>(const std::filesystem::path&, const NetworkConfig&);

CVA_INSTANTIATE(float)
CVA_INSTANTIATE(double)
#undef CVA_INSTANTIATE

template NetworkParams<float> convert_params<float, double>(const NetworkParams<double>&);
template NetworkParams<double> convert_params<double, float>(const NetworkParams<float>&);
template NetworkParams<float> convert_params<float, float>(const NetworkParams<float>&);
template NetworkParams<double> convert_params<double, double>(const NetworkParams<double>&);

}  // namespace cva::net
