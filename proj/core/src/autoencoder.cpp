#include "fallwatch/autoencoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include <Eigen/Core>

#include "fallwatch/error.hpp"

namespace fallwatch {

std::string_view to_string(Activation activation) {
    switch (activation) {
        case Activation::Relu: return "relu";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation parse_activation(std::string_view text) {
    if (text == "relu") return Activation::Relu;
    if (text == "sigmoid") return Activation::Sigmoid;
    if (text == "identity") return Activation::Identity;
    throw ConfigError("unknown activation '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
    if (window_length < 1 || input_height < 1 || input_width < 1) throw ConfigError("model input extent must be positive");
    if (stages.empty()) throw ConfigError("model needs at least one encoder stage");
    Extent3 extent{window_length, input_height, input_width};
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const auto& s = stages[i];
        const std::string where = "stage " + std::to_string(i) + ": ";
        if (s.channels < 1) throw ConfigError(where + "channel count must be positive");
        for (int k : {s.kernel.depth, s.kernel.height, s.kernel.width})
            if (k < 1 || k % 2 == 0) throw ConfigError(where + "kernel extents must be odd and positive");
        for (int p : {s.pool.depth, s.pool.height, s.pool.width})
            if (p < 1) throw ConfigError(where + "pool extents must be positive");
        if (extent.depth % s.pool.depth || extent.height % s.pool.height || extent.width % s.pool.width) {
            throw ConfigError(where + "input " + std::to_string(extent.depth) + "x" + std::to_string(extent.height) +
                              "x" + std::to_string(extent.width) + " is not divisible by pool " +
                              std::to_string(s.pool.depth) + "x" + std::to_string(s.pool.height) + "x" +
                              std::to_string(s.pool.width));
        }
        extent = {extent.depth / s.pool.depth, extent.height / s.pool.height, extent.width / s.pool.width};
    }
}

std::vector<double> frame_squared_errors(std::span<const float> input, std::span<const float> output,
                                         std::size_t frame_elements) {
    if (input.size() != output.size() || frame_elements == 0 || input.size() % frame_elements != 0)
        throw DataError("reconstruction shape mismatch");
    std::vector<double> errors(input.size() / frame_elements);
    for (std::size_t f = 0; f < errors.size(); ++f) {
        double sum = 0.0;
        const std::size_t base = f * frame_elements;
        for (std::size_t p = 0; p < frame_elements; ++p) {
            const double d = static_cast<double>(output[base + p]) - static_cast<double>(input[base + p]);
            sum += d * d;
        }
        errors[f] = sum / static_cast<double>(frame_elements);
    }
    return errors;
}

Reconstruction reconstruct(const Reconstructor& model, const WindowBatch& batch) {
    Reconstruction result;
    result.length = batch.length;
    result.start_indices = batch.start_indices;
    model.reconstruct_volumes(batch, result.volumes);
    if (result.volumes.size() != batch.volumes.size())
        throw DataError("reconstruction of " + batch.clip_id + " has the wrong shape");
    result.frame_errors = frame_squared_errors(batch.volumes, result.volumes, batch.frame_elements());
    return result;
}

namespace {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using StridedMap = Eigen::Map<RowMatrix<Scalar>, Eigen::Unaligned, Eigen::OuterStride<>>;

template <typename Scalar>
using ConstStridedMap = Eigen::Map<const RowMatrix<Scalar>, Eigen::Unaligned, Eigen::OuterStride<>>;

template <typename Scalar>
Scalar activate(Activation a, Scalar z) {
    switch (a) {
        case Activation::Relu: return z > Scalar(0) ? z : Scalar(0);
        case Activation::Sigmoid: return Scalar(1) / (Scalar(1) + std::exp(-z));
        case Activation::Identity: return z;
    }
    return z;
}

// Derivative expressed through the activation output y.
template <typename Scalar>
Scalar activation_slope(Activation a, Scalar y) {
    switch (a) {
        case Activation::Relu: return y > Scalar(0) ? Scalar(1) : Scalar(0);
        case Activation::Sigmoid: return y * (Scalar(1) - y);
        case Activation::Identity: return Scalar(1);
    }
    return Scalar(1);
}

// Column buffer for one output depth slice: rows are (ci, kd, kh, kw), columns (oh, ow).
template <typename Scalar>
void im2col_slice(const Scalar* x, const detail::ConvLayer& L, int od, Scalar* col) {
    const int D = L.extent.depth, H = L.extent.height, W = L.extent.width;
    const int pd = L.kernel.depth / 2, ph = L.kernel.height / 2, pw = L.kernel.width / 2;
    const std::size_t plane = L.plane();
    Scalar* row = col;
    for (int ci = 0; ci < L.in_channels; ++ci) {
        for (int a = 0; a < L.kernel.depth; ++a) {
            const int id = od + a - pd;
            for (int b = 0; b < L.kernel.height; ++b) {
                for (int c = 0; c < L.kernel.width; ++c, row += plane) {
                    if (id < 0 || id >= D) {
                        std::fill(row, row + plane, Scalar(0));
                        continue;
                    }
                    const Scalar* xs = x + (static_cast<std::size_t>(ci) * D + id) * plane;
                    const int lo = std::max(0, pw - c);
                    const int hi = std::min(W, W + pw - c);
                    for (int oh = 0; oh < H; ++oh) {
                        Scalar* dst = row + static_cast<std::size_t>(oh) * W;
                        const int ih = oh + b - ph;
                        if (ih < 0 || ih >= H) {
                            std::fill(dst, dst + W, Scalar(0));
                            continue;
                        }
                        const Scalar* src = xs + static_cast<std::size_t>(ih) * W + (c - pw);
                        std::fill(dst, dst + lo, Scalar(0));
                        std::copy(src + lo, src + hi, dst + lo);
                        std::fill(dst + hi, dst + W, Scalar(0));
                    }
                }
            }
        }
    }
}

template <typename Scalar>
void col2im_slice_add(const Scalar* col, const detail::ConvLayer& L, int od, Scalar* dx) {
    const int D = L.extent.depth, H = L.extent.height, W = L.extent.width;
    const int pd = L.kernel.depth / 2, ph = L.kernel.height / 2, pw = L.kernel.width / 2;
    const std::size_t plane = L.plane();
    const Scalar* row = col;
    for (int ci = 0; ci < L.in_channels; ++ci) {
        for (int a = 0; a < L.kernel.depth; ++a) {
            const int id = od + a - pd;
            for (int b = 0; b < L.kernel.height; ++b) {
                for (int c = 0; c < L.kernel.width; ++c, row += plane) {
                    if (id < 0 || id >= D) continue;
                    Scalar* xs = dx + (static_cast<std::size_t>(ci) * D + id) * plane;
                    const int lo = std::max(0, pw - c);
                    const int hi = std::min(W, W + pw - c);
                    for (int oh = 0; oh < H; ++oh) {
                        const int ih = oh + b - ph;
                        if (ih < 0 || ih >= H) continue;
                        const Scalar* src = row + static_cast<std::size_t>(oh) * W;
                        Scalar* dst = xs + static_cast<std::size_t>(ih) * W + (c - pw);
                        for (int ow = lo; ow < hi; ++ow) dst[ow] += src[ow];
                    }
                }
            }
        }
    }
}

// Layers with very few output channels (the final reconstruction layer) would spend
// most of their time building a huge column buffer for a matrix-vector product, so
// they run as direct shifted-row accumulation instead.
inline bool use_direct(const detail::ConvLayer& L) { return L.out_channels < 4; }

template <typename Scalar>
void conv_forward_direct(const detail::ConvLayer& L, const Scalar* params, const Scalar* x, Scalar* y) {
    const int D = L.extent.depth, H = L.extent.height, W = L.extent.width;
    const int pd = L.kernel.depth / 2, ph = L.kernel.height / 2, pw = L.kernel.width / 2;
    const std::size_t taps = static_cast<std::size_t>(L.kernel.volume());
    std::fill(y, y + L.output_size(), Scalar(0));
    for (int co = 0; co < L.out_channels; ++co)
        for (int od = 0; od < D; ++od)
            for (int oh = 0; oh < H; ++oh) {
                Scalar* yrow = y + ((static_cast<std::size_t>(co) * D + od) * H + oh) * W;
                for (int ci = 0; ci < L.in_channels; ++ci) {
                    const Scalar* w = params + L.weight_offset + (static_cast<std::size_t>(co) * L.in_channels + ci) * taps;
                    for (int a = 0; a < L.kernel.depth; ++a) {
                        const int id = od + a - pd;
                        if (id < 0 || id >= D) continue;
                        for (int b = 0; b < L.kernel.height; ++b) {
                            const int ih = oh + b - ph;
                            if (ih < 0 || ih >= H) continue;
                            const Scalar* xrow = x + ((static_cast<std::size_t>(ci) * D + id) * H + ih) * W;
                            const Scalar* wk = w + (a * L.kernel.height + b) * L.kernel.width;
                            for (int c = 0; c < L.kernel.width; ++c) {
                                const int shift = c - pw;
                                const int lo = std::max(0, -shift), hi = std::min(W, W - shift);
                                const Scalar wv = wk[c];
                                for (int ow = lo; ow < hi; ++ow) yrow[ow] += wv * xrow[ow + shift];
                            }
                        }
                    }
                }
            }
}

template <typename Scalar>
void conv_backward_direct(const detail::ConvLayer& L, const Scalar* params, const Scalar* x, const Scalar* dz,
                          Scalar* grad, Scalar* dx) {
    const int D = L.extent.depth, H = L.extent.height, W = L.extent.width;
    const int pd = L.kernel.depth / 2, ph = L.kernel.height / 2, pw = L.kernel.width / 2;
    const std::size_t taps = static_cast<std::size_t>(L.kernel.volume());
    auto row = [&](const Scalar* base, int channel, int d, int h) {
        return base + ((static_cast<std::size_t>(channel) * D + d) * H + h) * W;
    };

    // Weight gradient: one tap at a time, summing elementwise into a row so the
    // inner loop vectorizes without reassociating a scalar reduction.
    std::vector<Scalar> acc(static_cast<std::size_t>(W));
    for (int co = 0; co < L.out_channels; ++co)
        for (int ci = 0; ci < L.in_channels; ++ci)
            for (int a = 0; a < L.kernel.depth; ++a)
                for (int b = 0; b < L.kernel.height; ++b)
                    for (int c = 0; c < L.kernel.width; ++c) {
                        const int shift = c - pw;
                        const int lo = std::max(0, -shift), hi = std::min(W, W - shift);
                        std::fill(acc.begin(), acc.end(), Scalar(0));
                        for (int od = std::max(0, pd - a); od < std::min(D, D + pd - a); ++od)
                            for (int oh = std::max(0, ph - b); oh < std::min(H, H + ph - b); ++oh) {
                                const Scalar* drow = row(dz, co, od, oh);
                                const Scalar* xrow = row(x, ci, od + a - pd, oh + b - ph) + shift;
                                for (int ow = lo; ow < hi; ++ow) acc[ow] += drow[ow] * xrow[ow];
                            }
                        Scalar sum(0);
                        for (Scalar v : acc) sum += v;
                        grad[L.weight_offset + (static_cast<std::size_t>(co) * L.in_channels + ci) * taps +
                             static_cast<std::size_t>((a * L.kernel.height + b) * L.kernel.width + c)] += sum;
                    }
    if (!dx) return;

    std::fill(dx, dx + L.input_size(), Scalar(0));
    for (int co = 0; co < L.out_channels; ++co)
        for (int od = 0; od < D; ++od)
            for (int oh = 0; oh < H; ++oh) {
                const Scalar* drow = row(dz, co, od, oh);
                for (int ci = 0; ci < L.in_channels; ++ci) {
                    const Scalar* w = params + L.weight_offset + (static_cast<std::size_t>(co) * L.in_channels + ci) * taps;
                    for (int a = 0; a < L.kernel.depth; ++a) {
                        const int id = od + a - pd;
                        if (id < 0 || id >= D) continue;
                        for (int b = 0; b < L.kernel.height; ++b) {
                            const int ih = oh + b - ph;
                            if (ih < 0 || ih >= H) continue;
                            Scalar* dxrow = dx + ((static_cast<std::size_t>(ci) * D + id) * H + ih) * W;
                            const Scalar* wk = w + (a * L.kernel.height + b) * L.kernel.width;
                            for (int c = 0; c < L.kernel.width; ++c) {
                                const int shift = c - pw;
                                const int lo = std::max(0, -shift), hi = std::min(W, W - shift);
                                const Scalar wv = wk[c];
                                for (int ow = lo; ow < hi; ++ow) dxrow[ow + shift] += wv * drow[ow];
                            }
                        }
                    }
                }
            }
}

template <typename Scalar>
void conv_forward(const detail::ConvLayer& L, const Scalar* params, const Scalar* x, Scalar* y,
                  std::vector<Scalar>& columns) {
    const std::size_t plane = L.plane();
    const std::size_t patch = L.patch();
    const int D = L.extent.depth;
    if (use_direct(L)) {
        conv_forward_direct(L, params, x, y);
    } else {
        columns.resize(patch * plane);
        Eigen::Map<const RowMatrix<Scalar>> weights(params + L.weight_offset, L.out_channels,
                                                    static_cast<Eigen::Index>(patch));
        Eigen::Map<const RowMatrix<Scalar>> cols(columns.data(), static_cast<Eigen::Index>(patch),
                                                 static_cast<Eigen::Index>(plane));
        for (int od = 0; od < D; ++od) {
            im2col_slice(x, L, od, columns.data());
            StridedMap<Scalar> out(y + od * plane, L.out_channels, static_cast<Eigen::Index>(plane),
                                   Eigen::OuterStride<>(static_cast<Eigen::Index>(D * plane)));
            out.noalias() = weights * cols;
        }
    }
    const std::size_t per_channel = D * plane;
    for (int co = 0; co < L.out_channels; ++co) {
        const Scalar bias = params[L.bias_offset + co];
        Scalar* yc = y + co * per_channel;
        for (std::size_t i = 0; i < per_channel; ++i) yc[i] = activate(L.activation, yc[i] + bias);
    }
}

// `dz` is the gradient with respect to the pre-activation output. `dx` may be null.
template <typename Scalar>
void conv_backward(const detail::ConvLayer& L, const Scalar* params, const Scalar* x, const Scalar* dz, Scalar* grad,
                   Scalar* dx, std::vector<Scalar>& columns, std::vector<Scalar>& column_grad) {
    const std::size_t plane = L.plane();
    const std::size_t patch = L.patch();
    const int D = L.extent.depth;
    const std::size_t per_channel = D * plane;
    for (int co = 0; co < L.out_channels; ++co) {
        const Scalar* dc = dz + co * per_channel;
        Scalar sum(0);
        for (std::size_t i = 0; i < per_channel; ++i) sum += dc[i];
        grad[L.bias_offset + co] += sum;
    }
    if (use_direct(L)) return conv_backward_direct(L, params, x, dz, grad, dx);

    columns.resize(patch * plane);
    if (dx) {
        column_grad.resize(patch * plane);
        std::fill(dx, dx + L.input_size(), Scalar(0));
    }
    Eigen::Map<const RowMatrix<Scalar>> weights(params + L.weight_offset, L.out_channels, static_cast<Eigen::Index>(patch));
    Eigen::Map<RowMatrix<Scalar>> weight_grad(grad + L.weight_offset, L.out_channels, static_cast<Eigen::Index>(patch));
    Eigen::Map<const RowMatrix<Scalar>> cols(columns.data(), static_cast<Eigen::Index>(patch), static_cast<Eigen::Index>(plane));
    for (int od = 0; od < D; ++od) {
        im2col_slice(x, L, od, columns.data());
        ConstStridedMap<Scalar> dout(dz + od * plane, L.out_channels, static_cast<Eigen::Index>(plane),
                                     Eigen::OuterStride<>(static_cast<Eigen::Index>(D * plane)));
        weight_grad.noalias() += dout * cols.transpose();
        if (dx) {
            Eigen::Map<RowMatrix<Scalar>> dcols(column_grad.data(), static_cast<Eigen::Index>(patch),
                                                static_cast<Eigen::Index>(plane));
            dcols.noalias() = weights.transpose() * dout;
            col2im_slice_add(column_grad.data(), L, od, dx);
        }
    }
}

template <typename Scalar>
void pool_forward(const detail::PoolLayer& P, const Scalar* x, Scalar* y, std::int32_t* argmax) {
    const Extent3 in = P.input;
    const Extent3 out = P.output();
    const std::size_t in_volume = static_cast<std::size_t>(in.volume());
    std::size_t o = 0;
    for (int c = 0; c < P.channels; ++c) {
        const Scalar* xc = x + c * in_volume;
        for (int od = 0; od < out.depth; ++od)
            for (int oh = 0; oh < out.height; ++oh)
                for (int ow = 0; ow < out.width; ++ow, ++o) {
                    std::int32_t best_index = -1;
                    Scalar best = std::numeric_limits<Scalar>::lowest();
                    for (int a = 0; a < P.pool.depth; ++a)
                        for (int b = 0; b < P.pool.height; ++b)
                            for (int e = 0; e < P.pool.width; ++e) {
                                const auto index = static_cast<std::int32_t>(
                                    ((od * P.pool.depth + a) * in.height + oh * P.pool.height + b) * in.width +
                                    ow * P.pool.width + e);
                                if (best_index < 0 || xc[index] > best) {
                                    best = xc[index];
                                    best_index = index;
                                }
                            }
                    y[o] = best;
                    argmax[o] = best_index;
                }
    }
}

// Writes each pooled value back at its argmax position; everything else is zero.
template <typename Scalar>
void unpool_forward(const detail::PoolLayer& P, const Scalar* y, const std::int32_t* argmax, Scalar* x) {
    const std::size_t in_volume = static_cast<std::size_t>(P.input.volume());
    const std::size_t out_volume = static_cast<std::size_t>(P.output().volume());
    std::fill(x, x + P.input_size(), Scalar(0));
    for (int c = 0; c < P.channels; ++c)
        for (std::size_t o = 0; o < out_volume; ++o)
            x[c * in_volume + static_cast<std::size_t>(argmax[c * out_volume + o])] = y[c * out_volume + o];
}

// Gradient routing shared by pool backward (scatter) and unpool backward (gather).
template <typename Scalar>
void scatter_to_argmax(const detail::PoolLayer& P, const Scalar* dy, const std::int32_t* argmax, Scalar* dx) {
    unpool_forward(P, dy, argmax, dx);
}

template <typename Scalar>
void gather_from_argmax(const detail::PoolLayer& P, const Scalar* dx, const std::int32_t* argmax, Scalar* dy) {
    const std::size_t in_volume = static_cast<std::size_t>(P.input.volume());
    const std::size_t out_volume = static_cast<std::size_t>(P.output().volume());
    for (int c = 0; c < P.channels; ++c)
        for (std::size_t o = 0; o < out_volume; ++o)
            dy[c * out_volume + o] = dx[c * in_volume + static_cast<std::size_t>(argmax[c * out_volume + o])];
}

}  // namespace

template <typename Scalar>
Autoencoder3d<Scalar>::Autoencoder3d(ModelConfig config) : config_(std::move(config)) {
    config_.validate();
    Extent3 extent{config_.window_length, config_.input_height, config_.input_width};
    std::size_t offset = 0;

    auto add_conv = [&](const std::string& name, int in_c, int out_c, Extent3 kernel, Extent3 spatial, Activation act) {
        detail::ConvLayer L;
        L.in_channels = in_c;
        L.out_channels = out_c;
        L.kernel = kernel;
        L.extent = spatial;
        L.activation = act;
        L.weight_offset = offset;
        layout_.push_back({name + ".weight", offset, {out_c, in_c, kernel.depth, kernel.height, kernel.width}});
        offset += static_cast<std::size_t>(out_c) * L.patch();
        L.bias_offset = offset;
        layout_.push_back({name + ".bias", offset, {out_c}});
        offset += static_cast<std::size_t>(out_c);
        return L;
    };

    int channels = 1;
    for (std::size_t i = 0; i < config_.stages.size(); ++i) {
        const auto& s = config_.stages[i];
        encoder_convs_.push_back(add_conv("encoder." + std::to_string(i), channels, s.channels, s.kernel, extent,
                                          config_.hidden_activation));
        pools_.push_back({s.channels, extent, s.pool});
        extent = pools_.back().output();
        channels = s.channels;
    }
    for (std::size_t k = 0; k < config_.stages.size(); ++k) {
        const std::size_t i = config_.stages.size() - 1 - k;
        const bool last = i == 0;
        const int out_c = last ? 1 : config_.stages[i - 1].channels;
        decoder_convs_.push_back(add_conv("decoder." + std::to_string(k), config_.stages[i].channels, out_c,
                                          config_.stages[i].kernel, pools_[i].input,
                                          last ? config_.output_activation : config_.hidden_activation));
    }

    params_.assign(offset, Scalar(0));
    std::mt19937_64 rng(config_.seed);
    // He-uniform ahead of rectifiers, Glorot-uniform otherwise; biases start at zero
    auto init = [&](const detail::ConvLayer& L) {
        const double fan_in = static_cast<double>(L.patch());
        const double fan_out = static_cast<double>(L.out_channels) * static_cast<double>(L.kernel.volume());
        const double bound = L.activation == Activation::Relu ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (std::size_t i = 0; i < static_cast<std::size_t>(L.out_channels) * L.patch(); ++i)
            params_[L.weight_offset + i] = static_cast<Scalar>(dist(rng));
    };
    for (const auto& L : encoder_convs_) init(L);
    for (const auto& L : decoder_convs_) init(L);
}

template <typename Scalar>
void Autoencoder3d<Scalar>::set_output_level(double level) {
    const auto& L = decoder_convs_.back();
    double bias = level;
    if (L.activation == Activation::Sigmoid) {
        const double p = std::clamp(level, 1e-3, 1.0 - 1e-3);
        bias = std::log(p / (1.0 - p));
    } else if (L.activation == Activation::Relu) {
        bias = std::max(level, 0.0);
    }
    for (int c = 0; c < L.out_channels; ++c) params_[L.bias_offset + static_cast<std::size_t>(c)] = static_cast<Scalar>(bias);
}

template <typename Scalar>
std::size_t Autoencoder3d<Scalar>::window_elements() const noexcept {
    return static_cast<std::size_t>(config_.window_length) * config_.input_height * config_.input_width;
}

template <typename Scalar>
typename Autoencoder3d<Scalar>::Workspace Autoencoder3d<Scalar>::make_workspace() const {
    Workspace ws;
    const std::size_t n = config_.stages.size();
    ws.encoded.resize(n);
    ws.pooled.resize(n);
    ws.argmax.resize(n);
    ws.unpooled.resize(n);
    ws.decoded.resize(n);
    std::size_t largest = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ws.encoded[i].resize(encoder_convs_[i].output_size());
        ws.pooled[i].resize(pools_[i].output_size());
        ws.argmax[i].resize(pools_[i].output_size());
        ws.unpooled[i].resize(decoder_convs_[i].input_size());
        ws.decoded[i].resize(decoder_convs_[i].output_size());
        largest = std::max({largest, encoder_convs_[i].output_size(), encoder_convs_[i].input_size(),
                            decoder_convs_[i].input_size(), decoder_convs_[i].output_size()});
    }
    ws.grad_a.resize(largest);
    ws.grad_b.resize(largest);
    return ws;
}

template <typename Scalar>
void Autoencoder3d<Scalar>::run_forward(const Scalar* input, Workspace& ws) const {
    const std::size_t n = config_.stages.size();
    const Scalar* params = params_.data();
    const Scalar* current = input;
    for (std::size_t i = 0; i < n; ++i) {
        conv_forward(encoder_convs_[i], params, current, ws.encoded[i].data(), ws.columns);
        pool_forward(pools_[i], ws.encoded[i].data(), ws.pooled[i].data(), ws.argmax[i].data());
        current = ws.pooled[i].data();
    }
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = n - 1 - k;
        unpool_forward(pools_[i], current, ws.argmax[i].data(), ws.unpooled[k].data());
        conv_forward(decoder_convs_[k], params, ws.unpooled[k].data(), ws.decoded[k].data(), ws.columns);
        current = ws.decoded[k].data();
    }
}

template <typename Scalar>
void Autoencoder3d<Scalar>::forward(std::span<const Scalar> input, std::span<Scalar> output, Workspace& ws) const {
    if (input.size() != window_elements() || output.size() != window_elements())
        throw DataError("autoencoder input/output must hold exactly one window");
    run_forward(input.data(), ws);
    const auto& out = ws.decoded.back();
    std::copy(out.begin(), out.end(), output.begin());
}

template <typename Scalar>
double Autoencoder3d<Scalar>::loss(std::span<const Scalar> input, Workspace& ws) const {
    if (input.size() != window_elements()) throw DataError("autoencoder input must hold exactly one window");
    run_forward(input.data(), ws);
    const auto& out = ws.decoded.back();
    double sum = 0.0;
    for (std::size_t p = 0; p < out.size(); ++p) {
        const double d = static_cast<double>(out[p]) - static_cast<double>(input[p]);
        sum += d * d;
    }
    return sum / static_cast<double>(out.size());
}

template <typename Scalar>
double Autoencoder3d<Scalar>::accumulate_gradient(std::span<const Scalar> input, std::span<Scalar> gradient,
                                                  double weight, Workspace& ws) const {
    if (gradient.size() != params_.size()) throw DataError("gradient buffer size differs from parameter count");
    const double value = loss(input, ws);
    const std::size_t n = config_.stages.size();
    const Scalar* params = params_.data();
    Scalar* grad = gradient.data();

    // dL/dy for L = mean (y - x)^2
    auto& g = ws.grad_a;
    auto& scratch = ws.grad_b;
    const auto& out = ws.decoded.back();
    const Scalar scale = static_cast<Scalar>(2.0 * weight / static_cast<double>(out.size()));
    for (std::size_t p = 0; p < out.size(); ++p) g[p] = scale * (out[p] - input[p]);

    for (std::size_t kk = 0; kk < n; ++kk) {
        const std::size_t k = n - 1 - kk;
        const std::size_t i = n - 1 - k;  // encoder stage mirrored by decoder k
        const auto& L = decoder_convs_[k];
        const auto& y = ws.decoded[k];
        for (std::size_t p = 0; p < L.output_size(); ++p) g[p] *= activation_slope(L.activation, y[p]);
        conv_backward(L, params, ws.unpooled[k].data(), g.data(), grad, scratch.data(), ws.columns, ws.column_grad);
        gather_from_argmax(pools_[i], scratch.data(), ws.argmax[i].data(), g.data());
    }
    // g now holds the gradient with respect to the deepest pooled code.
    for (std::size_t kk = 0; kk < n; ++kk) {
        const std::size_t i = n - 1 - kk;
        const auto& L = encoder_convs_[i];
        scatter_to_argmax(pools_[i], g.data(), ws.argmax[i].data(), scratch.data());
        const auto& y = ws.encoded[i];
        for (std::size_t p = 0; p < L.output_size(); ++p) scratch[p] *= activation_slope(L.activation, y[p]);
        const Scalar* x = i == 0 ? input.data() : ws.pooled[i - 1].data();
        conv_backward(L, params, x, scratch.data(), grad, i == 0 ? nullptr : g.data(), ws.columns, ws.column_grad);
    }
    return value;
}

template <typename Scalar>
void Autoencoder3d<Scalar>::reconstruct_volumes(const WindowBatch& batch, std::vector<float>& out) const {
    if (batch.length != static_cast<std::size_t>(config_.window_length) || batch.height != config_.input_height ||
        batch.width != config_.input_width) {
        throw DataError("shape mismatch: batch " + std::to_string(batch.length) + "x" + std::to_string(batch.height) +
                        "x" + std::to_string(batch.width) + " vs model " + std::to_string(config_.window_length) +
                        "x" + std::to_string(config_.input_height) + "x" + std::to_string(config_.input_width));
    }
    out.resize(batch.volumes.size());
    auto ws = make_workspace();
    std::vector<Scalar> in(window_elements());
    std::vector<Scalar> result(window_elements());
    for (std::size_t b = 0; b < batch.batch_size(); ++b) {
        const auto window = batch.window(b);
        std::copy(window.begin(), window.end(), in.begin());
        forward(in, result, ws);
        std::transform(result.begin(), result.end(), out.begin() + static_cast<std::ptrdiff_t>(b * window_elements()),
                       [](Scalar v) { return static_cast<float>(v); });
    }
}

template class Autoencoder3d<float>;
template class Autoencoder3d<double>;

// ---------------------------------------------------------------------------

template <typename Scalar>
Adam<Scalar>::Adam(std::size_t parameter_count, Options options)
    : options_(options), first_(parameter_count, 0.0), second_(parameter_count, 0.0) {
    if (!(options_.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

template <typename Scalar>
void Adam<Scalar>::step(std::span<Scalar> parameters, std::span<const Scalar> gradient) {
    if (parameters.size() != first_.size() || gradient.size() != first_.size())
        throw DataError("optimizer state does not match parameter count");
    ++step_;
    const double correction1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
    const double correction2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
    for (std::size_t i = 0; i < first_.size(); ++i) {
        const double g = static_cast<double>(gradient[i]);
        first_[i] = options_.beta1 * first_[i] + (1.0 - options_.beta1) * g;
        second_[i] = options_.beta2 * second_[i] + (1.0 - options_.beta2) * g * g;
        const double m = first_[i] / correction1;
        const double v = second_[i] / correction2;
        parameters[i] -= static_cast<Scalar>(options_.learning_rate * m / (std::sqrt(v) + options_.epsilon));
    }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace fallwatch
