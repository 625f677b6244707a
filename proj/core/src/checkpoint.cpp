#include "fallwatch/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>

#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"

namespace fallwatch {

namespace {

constexpr char kMagic[8] = {'F', 'W', 'C', 'K', 'P', 'T', '0', '1'};

nlohmann::ordered_json extent_json(const Extent3& e) { return {e.depth, e.height, e.width}; }

Extent3 extent_from(const nlohmann::json& j) { return {j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

nlohmann::ordered_json model_json(const ModelConfig& m) {
    nlohmann::ordered_json j;
    j["window_length"] = m.window_length;
    j["input_height"] = m.input_height;
    j["input_width"] = m.input_width;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : m.stages)
        j["stages"].push_back({{"channels", s.channels}, {"kernel", extent_json(s.kernel)}, {"pool", extent_json(s.pool)}});
    j["hidden_activation"] = std::string(to_string(m.hidden_activation));
    j["output_activation"] = std::string(to_string(m.output_activation));
    j["seed"] = m.seed;
    return j;
}

ModelConfig model_from(const nlohmann::json& j) {
    ModelConfig m;
    m.window_length = j.at("window_length").get<int>();
    m.input_height = j.at("input_height").get<int>();
    m.input_width = j.at("input_width").get<int>();
    m.stages.clear();
    for (const auto& s : j.at("stages"))
        m.stages.push_back({s.at("channels").get<int>(), extent_from(s.at("kernel")), extent_from(s.at("pool"))});
    m.hidden_activation = parse_activation(j.at("hidden_activation").get<std::string>());
    m.output_activation = parse_activation(j.at("output_activation").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    return m;
}

template <typename T>
void put(std::string& buffer, const T& value) {
    char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    buffer.append(bytes, sizeof(T));
}

}  // namespace

Checkpoint Checkpoint::capture(const Autoencoder3d<float>& model, const TrainConfig& train, const TrainResult& result) {
    Checkpoint c;
    c.model = model.config();
    c.train = train;
    c.fingerprint = result.fingerprint;
    c.epochs_completed = static_cast<int>(result.epochs.size());
    c.final_loss = result.final_loss;
    c.weights.assign(model.parameters().begin(), model.parameters().end());
    return c;
}

Autoencoder3d<float> Checkpoint::instantiate() const {
    Autoencoder3d<float> model(this->model);
    if (model.parameters().size() != weights.size()) {
        throw IntegrityError("checkpoint holds " + std::to_string(weights.size()) + " weights but the model needs " +
                             std::to_string(model.parameters().size()));
    }
    std::copy(weights.begin(), weights.end(), model.parameters().begin());
    return model;
}

std::string Checkpoint::manifest_json() const {
    nlohmann::ordered_json j;
    j["format"] = "fallwatch-checkpoint";
    j["version"] = 1;
    j["model"] = model_json(model);
    j["train"] = {{"epochs", train.epochs},
                  {"batch_size", train.batch_size},
                  {"learning_rate", train.learning_rate},
                  {"calibrate_output", train.calibrate_output},
                  {"seed", train.seed}};
    j["training_set_fingerprint"] = fingerprint;
    j["epochs_completed"] = epochs_completed;
    j["final_loss"] = final_loss;
    j["weight_count"] = weights.size();
    return j.dump(2);
}

void Checkpoint::save(const std::filesystem::path& path) const {
    std::string buffer(kMagic, sizeof kMagic);
    const std::string manifest = manifest_json();
    put<std::uint64_t>(buffer, manifest.size());
    buffer += manifest;
    put<std::uint64_t>(buffer, weights.size());
    buffer.append(reinterpret_cast<const char*>(weights.data()), weights.size() * sizeof(float));
    const auto digest = Sha256().update(buffer).digest();
    buffer.append(reinterpret_cast<const char*>(digest.data()), digest.size());

    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write checkpoint " + path.string());
    out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open checkpoint " + path.string());
    const std::string buffer((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    auto corrupt = [&](const std::string& why) { return IntegrityError("corrupt checkpoint " + path.string() + ": " + why); };

    if (buffer.size() < sizeof kMagic + 8 + 8 + 32 || std::memcmp(buffer.data(), kMagic, sizeof kMagic) != 0)
        throw corrupt("bad header");
    const std::size_t body = buffer.size() - 32;
    const auto digest = Sha256().update(std::string_view(buffer.data(), body)).digest();
    if (std::memcmp(digest.data(), buffer.data() + body, 32) != 0) throw corrupt("checksum mismatch");

    std::size_t pos = sizeof kMagic;
    auto read_u64 = [&]() {
        if (pos + 8 > body) throw corrupt("truncated");
        std::uint64_t v = 0;
        std::memcpy(&v, buffer.data() + pos, 8);
        pos += 8;
        return v;
    };
    const auto manifest_size = read_u64();
    if (manifest_size > body - pos) throw corrupt("truncated manifest");
    const std::string manifest = buffer.substr(pos, manifest_size);
    pos += manifest_size;
    const auto weight_count = read_u64();
    if (weight_count * sizeof(float) != body - pos) throw corrupt("weight block size mismatch");

    Checkpoint c;
    try {
        const auto j = nlohmann::json::parse(manifest);
        c.model = model_from(j.at("model"));
        const auto& t = j.at("train");
        c.train.epochs = t.at("epochs").get<int>();
        c.train.batch_size = t.at("batch_size").get<std::size_t>();
        c.train.learning_rate = t.at("learning_rate").get<double>();
        c.train.calibrate_output = t.value("calibrate_output", true);
        c.train.seed = t.at("seed").get<std::uint64_t>();
        c.fingerprint = j.at("training_set_fingerprint").get<std::string>();
        c.epochs_completed = j.at("epochs_completed").get<int>();
        c.final_loss = j.at("final_loss").get<double>();
        if (j.at("weight_count").get<std::uint64_t>() != weight_count) throw corrupt("weight count mismatch");
    } catch (const nlohmann::json::exception& e) {
        throw corrupt(std::string("bad manifest: ") + e.what());
    } catch (const ConfigError& e) {
        throw corrupt(e.what());
    }
    c.weights.resize(weight_count);
    std::memcpy(c.weights.data(), buffer.data() + pos, weight_count * sizeof(float));
    return c;
}

}  // namespace fallwatch
