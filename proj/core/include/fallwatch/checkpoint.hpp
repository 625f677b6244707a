#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fallwatch/autoencoder.hpp"
#include "fallwatch/training.hpp"

namespace fallwatch {

/// Trained weights plus everything needed to rebuild the model.
///
/// Archive layout (little-endian):
///   8 bytes   magic "FWCKPT01"
///   u64       manifest length, then the manifest JSON
///   u64       weight count, then float32 weights
///   32 bytes  SHA-256 of everything above
struct Checkpoint {
    ModelConfig model;
    TrainConfig train;
    std::string fingerprint;
    int epochs_completed = 0;
    double final_loss = 0.0;
    std::vector<float> weights;

    static Checkpoint capture(const Autoencoder3d<float>& model, const TrainConfig& train, const TrainResult& result);

    /// Throws IntegrityError if the weights do not fit the model config.
    Autoencoder3d<float> instantiate() const;

    std::string manifest_json() const;

    void save(const std::filesystem::path& path) const;
    /// Throws IntegrityError naming the file on any corruption.
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace fallwatch
