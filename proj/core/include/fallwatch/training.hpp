#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fallwatch/autoencoder.hpp"
#include "fallwatch/preprocess.hpp"
#include "fallwatch/windowing.hpp"

namespace fallwatch {

struct TrainConfig {
    int epochs = 20;
    std::size_t batch_size = 128;  // windows per optimizer step
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    bool calibrate_output = true;  // start the output bias at the stream's mean intensity

    void validate() const;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// What to do with clips carrying fall labels when building a training stream.
enum class PurityPolicy {
    Reject,             // throw PurityError (default)
    SkipFallWindows,    // explicit override: keep only windows with no fall frames
    KeepAll,            // explicit override for inspection tools; train() refuses such streams
};

/// Windows drawn from ADL clips, referenced rather than copied.
class TrainingStream {
public:
    struct WindowRef {
        std::size_t clip = 0;
        std::size_t start = 0;
        std::size_t fall_frames = 0;
    };

    TrainingStream() = default;

    /// `spec.stride` controls how densely training windows are sampled.
    void add_clip(CanonicalClip clip, const WindowSpec& spec, PurityPolicy policy = PurityPolicy::Reject);

    static TrainingStream from_clips(std::vector<CanonicalClip> clips, const WindowSpec& spec,
                                     PurityPolicy policy = PurityPolicy::Reject);

    std::size_t size() const noexcept { return windows_.size(); }
    bool empty() const noexcept { return windows_.empty(); }
    std::size_t window_length() const noexcept { return length_; }
    const std::vector<WindowRef>& windows() const noexcept { return windows_; }

    /// Copies window i (T x H x W) into `out`.
    template <typename Scalar>
    void fill(std::size_t i, std::span<Scalar> out) const;

    /// Mean pixel value over the frames of every window.
    double mean_intensity() const;

    /// SHA-256 over the referenced frames and window starts.
    std::string fingerprint() const;

private:
    std::vector<CanonicalClip> clips_;
    std::vector<WindowRef> windows_;
    std::size_t length_ = 0;
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double wall_seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> epochs;
    double final_loss = 0.0;
    std::string fingerprint;
};

using EpochCallback = std::function<void(const EpochLog&)>;

/// Exactly `config.epochs` passes over the stream in a seed-determined shuffled order.
/// Throws PurityError if any window overlaps a fall and DataError on an empty stream.
template <typename Scalar>
TrainResult train(Autoencoder3d<Scalar>& model, const TrainingStream& stream, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

/// CSV with header epoch,mean_loss,wall_seconds.
void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path);

}  // namespace fallwatch
