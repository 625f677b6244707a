#include "fallwatch/training.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"

namespace fallwatch {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void TrainingStream::add_clip(CanonicalClip clip, const WindowSpec& spec, PurityPolicy policy) {
    spec.validate();
    if (length_ != 0 && spec.length != length_) throw ConfigError("training windows must share one length");
    const bool has_falls = std::any_of(clip.frame_label.begin(), clip.frame_label.end(), [](auto v) { return v != 0; });
    if (has_falls && policy == PurityPolicy::Reject)
        throw PurityError("clip " + clip_id(clip) + " contains fall frames and cannot be used for training");

    const auto counts = window_fall_counts(clip.frame_label, spec);
    const std::size_t index = clips_.size();
    bool used = false;
    for (std::size_t w = 0; w < counts.size(); ++w) {
        if (counts[w] != 0 && policy == PurityPolicy::SkipFallWindows) continue;
        windows_.push_back({index, w * spec.stride, counts[w]});
        used = true;
    }
    length_ = spec.length;
    if (used) clips_.push_back(std::move(clip));
}

TrainingStream TrainingStream::from_clips(std::vector<CanonicalClip> clips, const WindowSpec& spec, PurityPolicy policy) {
    TrainingStream stream;
    for (auto& clip : clips) stream.add_clip(std::move(clip), spec, policy);
    return stream;
}

template <typename Scalar>
void TrainingStream::fill(std::size_t i, std::span<Scalar> out) const {
    const auto& ref = windows_.at(i);
    const auto& clip = clips_[ref.clip];
    auto it = out.begin();
    for (std::size_t t = 0; t < length_; ++t) {
        const auto& px = clip.frames[ref.start + t].pixels;
        it = std::copy(px.begin(), px.end(), it);
    }
}

template void TrainingStream::fill<float>(std::size_t, std::span<float>) const;
template void TrainingStream::fill<double>(std::size_t, std::span<double>) const;

double TrainingStream::mean_intensity() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& w : windows_) {
        for (std::size_t t = 0; t < length_; ++t) {
            const auto& px = clips_[w.clip].frames[w.start + t].pixels;
            sum += std::accumulate(px.begin(), px.end(), 0.0);
            count += px.size();
        }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::string TrainingStream::fingerprint() const {
    Sha256 h;
    h.update("fallwatch-training-set/1");
    for (const auto& clip : clips_) {
        h.update(clip_id(clip));
        for (const auto& f : clip.frames) h.update_values(std::span<const float>(f.pixels));
    }
    for (const auto& w : windows_) {
        const std::uint64_t fields[2] = {w.clip, w.start};
        h.update_values(std::span<const std::uint64_t>(fields));
    }
    return h.hex_digest();
}

template <typename Scalar>
TrainResult train(Autoencoder3d<Scalar>& model, const TrainingStream& stream, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
    config.validate();
    if (stream.empty()) throw DataError("training stream is empty");
    if (stream.window_length() != static_cast<std::size_t>(model.config().window_length))
        throw ConfigError("training window length differs from the model's");
    for (const auto& w : stream.windows()) {
        if (w.fall_frames != 0)
            throw PurityError("training stream window starting at frame " + std::to_string(w.start) +
                              " overlaps a fall span");
    }

    TrainResult result;
    result.fingerprint = stream.fingerprint();
    if (config.calibrate_output) model.set_output_level(stream.mean_intensity());

    const std::size_t n_params = model.parameters().size();
    Adam<Scalar> optimizer(n_params, {.learning_rate = config.learning_rate});
    auto ws = model.make_workspace();
    std::vector<Scalar> gradient(n_params);
    std::vector<Scalar> input(model.window_elements());
    std::vector<std::size_t> order(stream.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(config.seed);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        for (std::size_t first = 0; first < order.size(); first += config.batch_size) {
            const std::size_t last = std::min(order.size(), first + config.batch_size);
            const double weight = 1.0 / static_cast<double>(last - first);
            std::fill(gradient.begin(), gradient.end(), Scalar(0));
            for (std::size_t b = first; b < last; ++b) {
                stream.fill<Scalar>(order[b], input);
                loss_sum += model.accumulate_gradient(input, gradient, weight, ws);
            }
            optimizer.step(model.parameters(), gradient);
        }
        EpochLog log;
        log.epoch = epoch;
        log.mean_loss = loss_sum / static_cast<double>(order.size());
        log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.epochs.push_back(log);
        if (on_epoch) on_epoch(log);
    }
    result.final_loss = result.epochs.back().mean_loss;
    return result;
}

template TrainResult train<float>(Autoencoder3d<float>&, const TrainingStream&, const TrainConfig&, const EpochCallback&);
template TrainResult train<double>(Autoencoder3d<double>&, const TrainingStream&, const TrainConfig&,
                                   const EpochCallback&);

void write_training_log(const std::vector<EpochLog>& log, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write training log " + path.string());
    out << "epoch,mean_loss,wall_seconds\n";
    char line[128];
    for (const auto& e : log) {
        std::snprintf(line, sizeof line, "%d,%.9g,%.3f\n", e.epoch, e.mean_loss, e.wall_seconds);
        out << line;
    }
}

}  // namespace fallwatch
