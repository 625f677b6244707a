#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fallwatch/windowing.hpp"

namespace fallwatch {

struct Extent3 {
    int depth = 1;
    int height = 1;
    int width = 1;

    long long volume() const noexcept { return 1LL * depth * height * width; }
    friend bool operator==(const Extent3&, const Extent3&) = default;
};

enum class Activation { Relu, Sigmoid, Identity };

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

/// One encoder stage: same-padded stride-1 convolution, activation, max-pool with
/// kernel == stride. The decoder mirrors it: max-unpool at the recorded argmax
/// positions, then a convolution back to the previous stage's channel count.
struct StageConfig {
    int channels = 8;
    Extent3 kernel{3, 3, 3};
    Extent3 pool{2, 2, 2};

    friend bool operator==(const StageConfig&, const StageConfig&) = default;
};

struct ModelConfig {
    int window_length = 8;
    int input_height = 64;
    int input_width = 64;
    std::vector<StageConfig> stages = {
        {16, {5, 3, 3}, {1, 2, 2}},
        {8, {3, 3, 3}, {2, 2, 2}},
        {8, {3, 3, 3}, {2, 2, 2}},
    };
    Activation hidden_activation = Activation::Relu;
    Activation output_activation = Activation::Sigmoid;
    std::uint64_t seed = 0;

    /// Throws ConfigError naming the offending stage.
    void validate() const;

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Anything that maps a batch of windows to same-shaped reconstructions.
class Reconstructor {
public:
    virtual ~Reconstructor() = default;
    /// Writes B x 1 x T x H x W reconstructions into `out` (resized by the callee).
    virtual void reconstruct_volumes(const WindowBatch& batch, std::vector<float>& out) const = 0;
};

/// Returns its input unchanged.
class IdentityReconstructor final : public Reconstructor {
public:
    void reconstruct_volumes(const WindowBatch& batch, std::vector<float>& out) const override { out = batch.volumes; }
};

struct Reconstruction {
    std::size_t length = 0;
    std::vector<std::size_t> start_indices;
    std::vector<float> volumes;
    /// errors[b * T + t]: mean squared pixel difference of frame t in window b.
    std::vector<double> frame_errors;

    double error(std::size_t window, std::size_t offset) const { return frame_errors[window * length + offset]; }
};

Reconstruction reconstruct(const Reconstructor& model, const WindowBatch& batch);

/// Per-frame mean squared error between two B x T x H x W volumes.
std::vector<double> frame_squared_errors(std::span<const float> input, std::span<const float> output,
                                         std::size_t frame_elements);

namespace detail {

struct ConvLayer {
    int in_channels = 0;
    int out_channels = 0;
    Extent3 kernel;
    Extent3 extent;  // spatial size of both input and output (same padding)
    Activation activation = Activation::Identity;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;

    std::size_t patch() const noexcept { return static_cast<std::size_t>(in_channels * kernel.volume()); }
    std::size_t plane() const noexcept { return static_cast<std::size_t>(extent.height) * static_cast<std::size_t>(extent.width); }
    std::size_t input_size() const noexcept { return static_cast<std::size_t>(in_channels * extent.volume()); }
    std::size_t output_size() const noexcept { return static_cast<std::size_t>(out_channels * extent.volume()); }
};

struct PoolLayer {
    int channels = 0;
    Extent3 input;
    Extent3 pool;

    Extent3 output() const noexcept { return {input.depth / pool.depth, input.height / pool.height, input.width / pool.width}; }
    std::size_t input_size() const noexcept { return static_cast<std::size_t>(channels * input.volume()); }
    std::size_t output_size() const noexcept { return static_cast<std::size_t>(channels * output().volume()); }
};

}  // namespace detail

template <typename Scalar>
class Autoencoder3d final : public Reconstructor {
public:
    /// Per-window scratch: activations, pooling indices and im2col buffers.
    struct Workspace {
        std::vector<std::vector<Scalar>> encoded;   // post-activation conv output per stage
        std::vector<std::vector<Scalar>> pooled;
        std::vector<std::vector<std::int32_t>> argmax;
        std::vector<std::vector<Scalar>> unpooled;  // decoder order
        std::vector<std::vector<Scalar>> decoded;   // decoder order, last one is the output
        std::vector<Scalar> columns;
        std::vector<Scalar> column_grad;
        std::vector<Scalar> grad_a;
        std::vector<Scalar> grad_b;
    };

    explicit Autoencoder3d(ModelConfig config);

    const ModelConfig& config() const noexcept { return config_; }
    std::size_t window_elements() const noexcept;

    std::span<Scalar> parameters() noexcept { return params_; }
    std::span<const Scalar> parameters() const noexcept { return params_; }

    struct ParameterBlock {
        std::string name;
        std::size_t offset = 0;
        std::vector<int> shape;
    };
    const std::vector<ParameterBlock>& parameter_layout() const noexcept { return layout_; }

    Workspace make_workspace() const;

    /// One window in, one window out (1 x T x H x W each).
    void forward(std::span<const Scalar> input, std::span<Scalar> output, Workspace& ws) const;

    /// Forward pass, per-pixel MSE against the input, and backward pass. Adds
    /// `weight * dLoss/dparam` to `gradient` and returns the unweighted loss.
    double accumulate_gradient(std::span<const Scalar> input, std::span<Scalar> gradient, double weight,
                               Workspace& ws) const;

    /// Loss only; used by finite-difference checks.
    double loss(std::span<const Scalar> input, Workspace& ws) const;

    void reconstruct_volumes(const WindowBatch& batch, std::vector<float>& out) const override;

    /// Sets the output convolution's bias so that a zero pre-activation yields `level`
    /// (the inverse of the output activation; clamped away from 0 and 1 for the sigmoid).
    void set_output_level(double level);

private:
    void run_forward(const Scalar* input, Workspace& ws) const;

    ModelConfig config_;
    std::vector<Scalar> params_;
    std::vector<ParameterBlock> layout_;
    std::vector<detail::ConvLayer> encoder_convs_;
    std::vector<detail::PoolLayer> pools_;
    std::vector<detail::ConvLayer> decoder_convs_;  // application order: deepest stage first
};

extern template class Autoencoder3d<float>;
extern template class Autoencoder3d<double>;

/// Adam with bias correction.
template <typename Scalar>
class Adam {
public:
    struct Options {
        double learning_rate = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    Adam(std::size_t parameter_count, Options options);
    void step(std::span<Scalar> parameters, std::span<const Scalar> gradient);
    long long steps() const noexcept { return step_; }

private:
    Options options_;
    std::vector<double> first_;
    std::vector<double> second_;
    long long step_ = 0;
};

extern template class Adam<float>;
extern template class Adam<double>;

}  // namespace fallwatch
