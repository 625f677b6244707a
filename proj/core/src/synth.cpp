#include "fallwatch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

std::string_view to_string(SceneStyle style) {
    switch (style) {
        case SceneStyle::Plain: return "plain";
        case SceneStyle::DepthWithHoles: return "depth_with_holes";
        case SceneStyle::ThermalGradient: return "thermal_gradient";
    }
    return "plain";
}

SceneStyle parse_scene_style(std::string_view text) {
    if (text == "plain") return SceneStyle::Plain;
    if (text == "depth_with_holes") return SceneStyle::DepthWithHoles;
    if (text == "thermal_gradient") return SceneStyle::ThermalGradient;
    throw ConfigError("unknown scene style '" + std::string(text) + "'");
}

void SceneConfig::validate() const {
    if (n_frames == 0) throw ConfigError("scene needs at least one frame");
    if (!(blob.axis_x > 0.0) || !(blob.axis_y > 0.0)) throw ConfigError("blob axes must be positive");
    if (!(blob.intensity > 0.0) || blob.intensity > 1.0) throw ConfigError("blob intensity must be in (0, 1]");
    if (!(walk >= 0.0)) throw ConfigError("walk scale must be non-negative");
    if (!(noise_sigma >= 0.0)) throw ConfigError("noise sigma must be non-negative");
    if (!(floor_y > 0.0) || floor_y > kCanonicalSize) throw ConfigError("floor line must lie inside the frame");
    auto events = fall_events;
    std::sort(events.begin(), events.end(), [](auto& a, auto& b) { return a.start_frame < b.start_frame; });
    for (std::size_t i = 0; i < events.size(); ++i) {
        const auto& e = events[i];
        if (e.duration == 0) throw ConfigError("fall event at frame " + std::to_string(e.start_frame) + " has zero duration");
        if (e.start_frame + e.duration > n_frames)
            throw ConfigError("fall event at frame " + std::to_string(e.start_frame) + " runs past the clip end");
        if (i > 0 && events[i - 1].start_frame + events[i - 1].duration > e.start_frame)
            throw ConfigError("fall events at frames " + std::to_string(events[i - 1].start_frame) + " and " +
                              std::to_string(e.start_frame) + " overlap");
    }
}

nlohmann::ordered_json SceneConfig::to_json() const {
    nlohmann::ordered_json falls = nlohmann::ordered_json::array();
    for (const auto& e : fall_events) falls.push_back({{"start_frame", e.start_frame}, {"duration", e.duration}});
    return {{"seed", seed},
            {"n_frames", n_frames},
            {"blob",
             {{"center_x", blob.center_x},
              {"center_y", blob.center_y},
              {"axis_x", blob.axis_x},
              {"axis_y", blob.axis_y},
              {"intensity", blob.intensity}}},
            {"walk", walk},
            {"floor_y", floor_y},
            {"fall_events", falls},
            {"noise_sigma", noise_sigma},
            {"style", std::string(fallwatch::to_string(style))}};
}

SceneConfig SceneConfig::from_json(const nlohmann::json& j) {
    SceneConfig c;
    try {
        c.seed = j.at("seed").get<std::uint64_t>();
        c.n_frames = j.at("n_frames").get<std::size_t>();
        const auto& b = j.at("blob");
        c.blob = {b.at("center_x").get<double>(), b.at("center_y").get<double>(), b.at("axis_x").get<double>(),
                  b.at("axis_y").get<double>(), b.at("intensity").get<double>()};
        c.walk = j.at("walk").get<double>();
        c.floor_y = j.at("floor_y").get<double>();
        for (const auto& e : j.at("fall_events"))
            c.fall_events.push_back({e.at("start_frame").get<std::size_t>(), e.at("duration").get<std::size_t>()});
        c.noise_sigma = j.at("noise_sigma").get<double>();
        c.style = parse_scene_style(j.at("style").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed scene config: ") + e.what());
    }
    return c;
}

namespace {

constexpr int kSize = kCanonicalSize;

double background(SceneStyle style, int row) {
    const double t = static_cast<double>(row) / (kSize - 1);
    switch (style) {
        case SceneStyle::Plain: return 0.15;
        case SceneStyle::ThermalGradient: return 0.10 + 0.20 * t;
        case SceneStyle::DepthWithHoles: return 0.75 - 0.35 * t;  // floor gets nearer toward the bottom
    }
    return 0.15;
}

// 8-bit levels for one frame.
std::vector<std::uint8_t> render(const SceneConfig& cfg, const BlobState& b, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0.0, 1.0);
    const int lowest = cfg.style == SceneStyle::DepthWithHoles ? 1 : 0;  // zero is reserved for holes
    std::vector<std::uint8_t> levels(kSize * kSize);
    for (int r = 0; r < kSize; ++r) {
        for (int c = 0; c < kSize; ++c) {
            const double dx = (c - b.center_x) / b.axis_x;
            const double dy = (r - b.center_y) / b.axis_y;
            const double d = std::sqrt(dx * dx + dy * dy);
            // roughly one pixel of anti-aliased edge
            const double cover = std::clamp((1.0 - d) * std::min(b.axis_x, b.axis_y) + 0.5, 0.0, 1.0);
            const double bg = background(cfg.style, r);
            double v = bg + (cfg.blob.intensity - bg) * cover;
            if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * noise(rng);
            const long q = std::clamp(std::lround(v * 255.0), static_cast<long>(lowest), 255L);
            levels[static_cast<std::size_t>(r * kSize + c)] = static_cast<std::uint8_t>(q);
        }
    }
    if (cfg.style == SceneStyle::DepthWithHoles) {
        std::uniform_int_distribution<int> count(1, 4), pos(0, kSize - 1), extent(1, 3);
        for (int h = count(rng); h > 0; --h) {
            const int r0 = pos(rng), c0 = pos(rng), hh = extent(rng), hw = extent(rng);
            for (int r = r0; r < std::min(kSize, r0 + hh); ++r)
                for (int c = c0; c < std::min(kSize, c0 + hw); ++c) levels[static_cast<std::size_t>(r * kSize + c)] = 0;
        }
    }
    return levels;
}

}  // namespace

SyntheticClip generate(const SceneConfig& cfg, const TrialId& trial, ModalityName modality) {
    cfg.validate();
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> turn(0.0, 0.4);
    std::uniform_real_distribution<double> heading0(0.0, 2.0 * std::numbers::pi);

    SyntheticClip out;
    out.clip.fps = kCanonicalFps;
    out.clip.trial = trial;
    out.clip.modality = modality;
    out.clip.frame_label.assign(cfg.n_frames, 0);
    for (const auto& e : cfg.fall_events) {
        out.spans.push_back({e.start_frame, e.start_frame + e.duration - 1});
        std::fill_n(out.clip.frame_label.begin() + static_cast<std::ptrdiff_t>(e.start_frame), e.duration,
                    std::uint8_t{1});
    }
    std::sort(out.spans.begin(), out.spans.end(), [](auto& a, auto& b) { return a.start_frame < b.start_frame; });

    BlobState b{cfg.blob.center_x, cfg.blob.center_y, cfg.blob.axis_x, cfg.blob.axis_y};
    BlobState standing = b;
    double heading = heading0(rng);
    const FallEvent* active = nullptr;

    for (std::size_t f = 0; f < cfg.n_frames; ++f) {
        const FallEvent* event = nullptr;
        for (const auto& e : cfg.fall_events)
            if (f >= e.start_frame && f < e.start_frame + e.duration) event = &e;
        if (active && event != active) {  // back on its feet
            b.axis_x = standing.axis_x;
            b.axis_y = standing.axis_y;
            b.center_y = standing.center_y;
        }
        if (event && event != active) standing = b;
        active = event;

        heading += turn(rng);
        const double lo_x = b.axis_x + 2.0, hi_x = kSize - 1 - b.axis_x - 2.0;
        b.center_x += cfg.walk * std::cos(heading);
        if (b.center_x < lo_x || b.center_x > hi_x) {
            heading = std::numbers::pi - heading;
            b.center_x = std::clamp(b.center_x, lo_x, hi_x);
        }
        if (event) {
            const double i = static_cast<double>(f - event->start_frame);
            b.axis_y = standing.axis_y * (1.0 - 0.7 * (i + 1.0) / static_cast<double>(event->duration));
            b.axis_x = standing.axis_x * standing.axis_y / b.axis_y;  // spreads out as it goes down
            b.center_x = std::clamp(b.center_x, b.axis_x + 2.0, kSize - 3.0 - b.axis_x);
            b.center_y = std::min(b.center_y + 3.0 * cfg.walk, cfg.floor_y - b.axis_y);
        } else {
            const double lo_y = b.axis_y + 2.0, hi_y = std::max(lo_y, cfg.floor_y - b.axis_y);
            b.center_y = std::clamp(b.center_y + 0.25 * cfg.walk * std::sin(heading), lo_y, hi_y);
        }

        const auto levels = render(cfg, b, rng);
        Frame frame(kSize, kSize, 0.0f);
        std::transform(levels.begin(), levels.end(), frame.pixels.begin(),
                       [](std::uint8_t q) { return static_cast<float>(q) / 255.0f; });
        out.clip.frames.push_back(std::move(frame));
        out.blobs.push_back(b);
    }
    return out;
}

// ---------------------------------------------------------------------------

void SuiteConfig::validate() const {
    if (train_n < 1 || test_n < 1) throw ConfigError("suite needs at least one train and one test clip");
    if (falls_per_test < 1) throw ConfigError("each test clip needs at least one fall");
    if (train_frames < 8) throw ConfigError("train clips need at least 8 frames");
    if (test_frames / falls_per_test < 30)
        throw ConfigError("test clips need at least 30 frames per fall (" + std::to_string(test_frames) + " frames for " +
                          std::to_string(falls_per_test) + " falls)");
}

ModalityName suite_modality(SceneStyle style) {
    switch (style) {
        case SceneStyle::Plain: return ModalityName::Synthetic;
        case SceneStyle::DepthWithHoles: return ModalityName::ZedDepth;
        case SceneStyle::ThermalGradient: return ModalityName::Thermal;
    }
    return ModalityName::Synthetic;
}

namespace {

fs::path modality_dir(ModalityName m) {
    switch (m) {
        case ModalityName::ZedDepth: return fs::path("ZED") / "Depth";
        case ModalityName::Thermal: return "FLIR";
        default: return "SYNTHETIC";
    }
}

std::string participant_name(const char* prefix, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%03zu", prefix, index + 1);
    return buf;
}

TrialId trial_for(const char* prefix, std::size_t i) {
    // ten trials per participant: Day 1-5 then Night 1-5
    const std::size_t slot = i % 10;
    return {participant_name(prefix, i / 10), slot < 5 ? SessionCondition::Day : SessionCondition::Night,
            static_cast<int>(slot % 5) + 1};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text) || !out.flush()) throw ConfigError("cannot write " + path.string());
}

void write_clip(const SyntheticClip& s, const fs::path& dir) {
    fs::create_directories(dir);
    for (std::size_t f = 0; f < s.clip.frames.size(); ++f) {
        const auto& px = s.clip.frames[f].pixels;
        cv::Mat image(kSize, kSize, CV_8UC1);
        for (int i = 0; i < kSize * kSize; ++i)
            image.data[i] = static_cast<std::uint8_t>(std::lround(px[static_cast<std::size_t>(i)] * 255.0f));
        char name[32];
        std::snprintf(name, sizeof name, "%06zu.png", f);
        if (!cv::imwrite((dir / name).string(), image)) throw ConfigError("cannot write frame " + (dir / name).string());
    }
    write_text(dir / "meta.json", "{\"fps\": 8}\n");
}

// Clears what an earlier run with a manifest wrote; refuses foreign non-empty directories.
void prepare_output(const fs::path& out) {
    if (!fs::exists(out)) {
        fs::create_directories(out);
        return;
    }
    if (!fs::is_directory(out)) throw ConfigError(out.string() + " is not a directory");
    if (fs::is_empty(out)) return;
    const auto manifest = out / "manifest.json";
    if (!fs::exists(manifest))
        throw ConfigError("output directory " + out.string() + " is not empty and holds no synthetic suite");
    std::ifstream in(manifest);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        for (const auto& clip : j.at("clips")) {
            const fs::path participant = out / fs::path(clip.at("path").get<std::string>()).begin()->string();
            fs::remove_all(participant);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot read previous manifest " + manifest.string() + ": " + e.what());
    }
    fs::remove(manifest);
    fs::remove(out / "labels.csv");
}

}  // namespace

SuiteResult generate_suite(const SuiteConfig& config, const fs::path& out) {
    config.validate();
    prepare_output(out);
    const ModalityName modality = suite_modality(config.style);

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    auto draw_scene = [&](bool test, std::size_t n_frames) {
        SceneConfig c;
        c.seed = rng();
        c.n_frames = n_frames;
        c.style = config.style;
        c.blob.axis_x = uniform(4.0, 6.0);
        c.blob.axis_y = uniform(11.0, 15.0);
        c.blob.center_x = uniform(14.0, 50.0);
        c.blob.center_y = c.floor_y - c.blob.axis_y - uniform(0.0, 2.0);
        c.blob.intensity = uniform(0.7, 0.9);
        c.walk = test ? uniform(0.5, 0.9) : uniform(0.3, 0.7);
        if (test) {
            const std::size_t segment = n_frames / config.falls_per_test;
            for (std::size_t k = 0; k < config.falls_per_test; ++k) {
                const auto duration = static_cast<std::size_t>(std::lround(uniform(10.0, 14.0)));
                const std::size_t first = k * segment + 8;
                const std::size_t last = (k + 1) * segment - duration - 4;
                const auto start = first + static_cast<std::size_t>(std::floor(unit(rng) * static_cast<double>(last - first + 1)));
                c.fall_events.push_back({std::min(start, last), duration});
            }
        }
        return c;
    };

    LabelTable labels;
    nlohmann::ordered_json clips = nlohmann::ordered_json::array();
    std::size_t written = 0;
    for (int role = 0; role < 2; ++role) {
        const bool test = role == 1;
        const std::size_t count = test ? config.test_n : config.train_n;
        for (std::size_t i = 0; i < count; ++i) {
            const TrialId trial = trial_for(test ? "FD" : "AD", i);
            const SceneConfig scene = draw_scene(test, test ? config.test_frames : config.train_frames);
            const auto clip = generate(scene, trial, modality);
            const fs::path rel = fs::path(trial.participant) / modality_dir(modality) / trial.folder_name();
            write_clip(clip, out / rel);
            if (test) {
                auto& rows = labels.rows[label_key(trial, modality)];
                for (const auto& s : clip.spans) rows.push_back({s.start_frame, s.end_frame});
            }
            clips.push_back({{"participant", trial.participant},
                             {"trial", trial.short_name()},
                             {"role", test ? "test" : "train"},
                             {"path", rel.generic_string()},
                             {"scene", scene.to_json()}});
            ++written;
        }
    }

    SuiteResult result;
    result.labels = out / "labels.csv";
    write_labels(labels, result.labels);
    const nlohmann::ordered_json manifest = {{"generator", "fallwatch-synth/1"},
                                             {"seed", config.seed},
                                             {"train_n", config.train_n},
                                             {"test_n", config.test_n},
                                             {"falls_per_test", config.falls_per_test},
                                             {"train_frames", config.train_frames},
                                             {"test_frames", config.test_frames},
                                             {"style", std::string(to_string(config.style))},
                                             {"modality", std::string(to_string(modality))},
                                             {"fps", kCanonicalFps},
                                             {"clips", clips}};
    result.manifest = out / "manifest.json";
    write_text(result.manifest, manifest.dump(2) + "\n");
    result.clips = written;
    result.content_hash = sha256_tree(out);
    return result;
}

}  // namespace fallwatch
