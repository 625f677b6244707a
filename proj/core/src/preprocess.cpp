#include "fallwatch/preprocess.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

static_assert(std::endian::native == std::endian::little, "cache and checkpoint files assume little-endian hosts");

void CanonicalClip::validate() const {
    if (frames.empty()) throw DataError("canonical clip has no frames");
    if (fps != kCanonicalFps) throw DataError("canonical clip fps must be 8");
    if (frame_label.size() != frames.size()) throw DataError("canonical label length differs from frame count");
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& f = frames[i];
        if (f.height != kCanonicalSize || f.width != kCanonicalSize || f.size() != f.pixels.size())
            throw DataError("canonical frame " + std::to_string(i) + " is not 64x64");
        for (float v : f.pixels)
            if (!(v >= 0.0f && v <= 1.0f)) throw DataError("canonical frame " + std::to_string(i) + " leaves [0,1]");
    }
    for (auto l : frame_label)
        if (l > 1) throw DataError("canonical labels must be binary");
}

Frame resize_frame(const Frame& frame, int height, int width) {
    if (frame.height < 1 || frame.width < 1) throw DataError("cannot resize an empty frame");
    if (frame.height == height && frame.width == width) return frame;

    Frame out(height, width);
    const double scale_y = static_cast<double>(frame.height) / height;
    const double scale_x = static_cast<double>(frame.width) / width;

    struct Tap {
        int lo, hi;
        double weight;
    };
    auto taps = [](int n_out, int n_in, double scale) {
        std::vector<Tap> result(static_cast<std::size_t>(n_out));
        for (int i = 0; i < n_out; ++i) {
            double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_in - 1));
            int lo = static_cast<int>(std::floor(src));
            result[static_cast<std::size_t>(i)] = {lo, std::min(lo + 1, n_in - 1), src - lo};
        }
        return result;
    };
    const auto rows = taps(height, frame.height, scale_y);
    const auto cols = taps(width, frame.width, scale_x);

    for (int r = 0; r < height; ++r) {
        const auto& ty = rows[static_cast<std::size_t>(r)];
        for (int c = 0; c < width; ++c) {
            const auto& tx = cols[static_cast<std::size_t>(c)];
            const double top = (1.0 - tx.weight) * frame.at(ty.lo, tx.lo) + tx.weight * frame.at(ty.lo, tx.hi);
            const double bottom = (1.0 - tx.weight) * frame.at(ty.hi, tx.lo) + tx.weight * frame.at(ty.hi, tx.hi);
            out.at(r, c) = static_cast<float>((1.0 - ty.weight) * top + ty.weight * bottom);
        }
    }
    return out;
}

std::vector<std::size_t> resample_indices(std::size_t frame_count, double native_fps, double target_fps) {
    if (frame_count == 0) throw DataError("cannot resample an empty clip");
    if (!(native_fps > 0.0) || !(target_fps > 0.0)) throw DataError("frame rates must be positive");
    auto count = static_cast<std::size_t>(std::llround(static_cast<double>(frame_count) * target_fps / native_fps));
    count = std::max<std::size_t>(count, 1);
    std::vector<std::size_t> indices(count);
    for (std::size_t j = 0; j < count; ++j) {
        auto src = static_cast<std::size_t>(std::floor(static_cast<double>(j) * native_fps / target_fps));
        indices[j] = std::min(src, frame_count - 1);
    }
    return indices;
}

Resampled resample_fps(const std::vector<Frame>& frames, double native_fps, const std::vector<std::uint8_t>& frame_label,
                       double target_fps) {
    if (frame_label.size() != frames.size()) throw DataError("label length differs from frame count");
    Resampled out;
    for (std::size_t src : resample_indices(frames.size(), native_fps, target_fps)) {
        out.frames.push_back(frames[src]);
        out.frame_label.push_back(frame_label[src]);
    }
    return out;
}

Frame inpaint_depth(const Frame& frame, const InpaintOptions& options) {
    const int h = frame.height;
    const int w = frame.width;
    std::vector<std::size_t> holes;
    double valid_sum = 0.0;
    float valid_min = 0.0f;
    float valid_max = 0.0f;
    std::size_t valid_count = 0;
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) {
        const float v = frame.pixels[i];
        if (v == 0.0f) {
            holes.push_back(i);
            continue;
        }
        valid_min = valid_count == 0 ? v : std::min(valid_min, v);
        valid_max = valid_count == 0 ? v : std::max(valid_max, v);
        valid_sum += v;
        ++valid_count;
    }
    if (holes.empty()) return frame;
    if (valid_count == 0) throw DataError("depth frame is entirely holes");

    std::vector<double> field(frame.pixels.begin(), frame.pixels.end());
    const double initial = valid_sum / static_cast<double>(valid_count);
    for (auto i : holes) field[i] = initial;

    for (int iteration = 0; iteration < options.max_iterations; ++iteration) {
        double max_change = 0.0;
        for (auto i : holes) {
            const int r = static_cast<int>(i / static_cast<std::size_t>(w));
            const int c = static_cast<int>(i % static_cast<std::size_t>(w));
            double sum = 0.0;
            int n = 0;
            if (r > 0) sum += field[i - static_cast<std::size_t>(w)], ++n;
            if (r + 1 < h) sum += field[i + static_cast<std::size_t>(w)], ++n;
            if (c > 0) sum += field[i - 1], ++n;
            if (c + 1 < w) sum += field[i + 1], ++n;
            if (n == 0) continue;
            const double next = sum / n;
            max_change = std::max(max_change, std::abs(next - field[i]));
            field[i] = next;
        }
        if (max_change < options.tolerance) break;
    }

    Frame out = frame;
    for (auto i : holes)
        out.pixels[i] = std::clamp(static_cast<float>(field[i]), valid_min, valid_max);
    return out;
}

Frame normalize(const Frame& frame, float max_value) {
    if (!(max_value > 0.0f)) throw DataError("normalisation max_value must be positive");
    Frame out = frame;
    for (auto& v : out.pixels) {
        if (!(v >= 0.0f && v <= max_value))
            throw DataError("pixel value " + std::to_string(v) + " outside [0, " + std::to_string(max_value) + "]");
        v = v / max_value;
    }
    return out;
}

CanonicalClip canonicalize(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                           const CanonicalizeOptions& options) {
    if (clip.frames.empty()) throw DataError("clip " + clip.trial.participant + " has no frames");
    if (frame_label.size() != clip.frames.size()) throw DataError("label length differs from frame count");

    // All-hole depth frames cannot be inpainted; they are dropped together with their label.
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < clip.frames.size(); ++i) {
        const auto& px = clip.frames[i].pixels;
        const bool all_hole = std::all_of(px.begin(), px.end(), [](float v) { return v == 0.0f; });
        if (!(clip.modality.is_depth && all_hole)) kept.push_back(i);
    }
    if (kept.empty()) throw DataError("every frame of the depth clip is empty");

    InpaintOptions inpaint = options.inpaint;
    inpaint.tolerance *= clip.max_value;  // tolerance is expressed in normalised units

    CanonicalClip out;
    out.trial = clip.trial;
    out.modality = clip.modality.name;
    out.fps = options.target_fps;

    std::map<std::size_t, std::size_t> processed;  // source index -> position in out.frames
    for (std::size_t src : resample_indices(kept.size(), clip.native_fps, options.target_fps)) {
        const std::size_t original = kept[src];
        out.frame_label.push_back(frame_label[original]);
        if (auto it = processed.find(original); it != processed.end()) {
            out.frames.push_back(out.frames[it->second]);
            continue;
        }
        const Frame& raw = clip.frames[original];
        Frame stage = clip.modality.is_depth ? inpaint_depth(raw, inpaint) : raw;
        stage = resize_frame(stage, options.size, options.size);
        processed.emplace(original, out.frames.size());
        out.frames.push_back(normalize(stage, clip.max_value));
    }
    return out;
}

// ---------------------------------------------------------------------------

CanonicalCache::CanonicalCache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

std::string CanonicalCache::key(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                                const CanonicalizeOptions& options) {
    Sha256 h;
    std::ostringstream params;
    params << "fallwatch-canonical/" << kPipelineVersion << '/' << options.size << '/' << options.target_fps << '/'
           << options.inpaint.tolerance << '/' << options.inpaint.max_iterations << '/'
           << to_string(clip.modality.name) << '/' << clip.native_fps << '/' << clip.max_value;
    h.update(params.str());
    for (const auto& f : clip.frames) {
        const std::int32_t dims[2] = {f.height, f.width};
        h.update_values(std::span<const std::int32_t>(dims));
        h.update_values(std::span<const float>(f.pixels));
    }
    h.update_values(std::span<const std::uint8_t>(frame_label));
    return h.hex_digest();
}

std::optional<CanonicalClip> CanonicalCache::load(const std::string& key) const {
    const auto meta_path = dir_ / (key + ".json");
    const auto data_path = dir_ / (key + ".bin");
    if (!fs::exists(meta_path) || !fs::exists(data_path)) return std::nullopt;

    nlohmann::json meta;
    try {
        std::ifstream in(meta_path);
        meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw IntegrityError("corrupt cache sidecar " + meta_path.string() + ": " + e.what());
    }
    if (meta.value("pipeline_version", -1) != kPipelineVersion) return std::nullopt;
    if (sha256_file(data_path) != meta.value("data_sha256", std::string{}))
        throw IntegrityError("cache payload hash mismatch: " + data_path.string());

    CanonicalClip clip;
    const auto shape = meta.at("shape").get<std::vector<int>>();
    clip.fps = meta.at("fps").get<double>();
    clip.frame_label = meta.at("labels").get<std::vector<std::uint8_t>>();
    clip.trial.participant = meta.at("participant").get<std::string>();
    clip.trial.condition = meta.at("condition").get<std::string>() == "DAY" ? SessionCondition::Day : SessionCondition::Night;
    clip.trial.trial_index = meta.at("trial").get<int>();
    clip.modality = parse_modality(meta.at("modality").get<std::string>()).value_or(ModalityName::Synthetic);

    std::ifstream in(data_path, std::ios::binary);
    for (int i = 0; i < shape.at(0); ++i) {
        Frame f(shape.at(1), shape.at(2));
        in.read(reinterpret_cast<char*>(f.pixels.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
        if (!in) throw IntegrityError("truncated cache payload " + data_path.string());
        clip.frames.push_back(std::move(f));
    }
    clip.validate();
    return clip;
}

void CanonicalCache::store(const std::string& key, const CanonicalClip& clip) const {
    const auto data_path = dir_ / (key + ".bin");
    {
        std::ofstream out(data_path, std::ios::binary);
        for (const auto& f : clip.frames)
            out.write(reinterpret_cast<const char*>(f.pixels.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
        if (!out) throw DataError("cannot write cache entry " + data_path.string());
    }
    nlohmann::ordered_json meta;
    meta["shape"] = {clip.frames.size(), clip.frames.empty() ? 0 : clip.frames.front().height,
                     clip.frames.empty() ? 0 : clip.frames.front().width};
    meta["fps"] = clip.fps;
    meta["labels"] = clip.frame_label;
    meta["participant"] = clip.trial.participant;
    meta["condition"] = clip.trial.condition == SessionCondition::Day ? "DAY" : "NIGHT";
    meta["trial"] = clip.trial.trial_index;
    meta["modality"] = std::string(to_string(clip.modality));
    meta["pipeline_version"] = kPipelineVersion;
    meta["data_sha256"] = sha256_file(data_path);
    std::ofstream out(dir_ / (key + ".json"));
    out << meta.dump(2) << '\n';
}

CanonicalClip CanonicalCache::get_or_compute(const VideoClip& clip, const std::vector<std::uint8_t>& frame_label,
                                             const CanonicalizeOptions& options) const {
    const auto k = key(clip, frame_label, options);
    if (auto cached = load(k)) return *cached;
    auto result = canonicalize(clip, frame_label, options);
    store(k, result);
    return result;
}

}  // namespace fallwatch
