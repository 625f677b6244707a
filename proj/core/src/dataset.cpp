#include "fallwatch/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>
#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/videoio.hpp>

#include "fallwatch/error.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

namespace {

std::string fold(std::string_view text, std::string_view drop) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c)) || drop.find(c) != std::string_view::npos) continue;
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string trim(std::string_view text) {
    auto begin = text.find_first_not_of(" \t\r\n\"");
    if (begin == std::string_view::npos) return {};
    auto end = text.find_last_not_of(" \t\r\n\"");
    return std::string(text.substr(begin, end - begin + 1));
}

bool is_image_extension(std::string ext) {
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".jpg" || ext == ".jpeg" || ext == ".png" || ext == ".bmp" || ext == ".pgm" ||
           ext == ".ppm" || ext == ".tif" || ext == ".tiff";
}

bool is_video_extension(std::string ext) {
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".mp4" || ext == ".avi" || ext == ".mkv" || ext == ".mov";
}

std::optional<std::size_t> parse_index(std::string_view text) {
    std::size_t value = 0;
    if (text.empty()) return std::nullopt;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::vector<fs::directory_entry> sorted_children(const fs::path& dir) {
    std::vector<fs::directory_entry> children;
    for (const auto& entry : fs::directory_iterator(dir)) children.push_back(entry);
    std::sort(children.begin(), children.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    return children;
}

std::string condition_token(SessionCondition c) { return c == SessionCondition::Day ? "Day" : "Night"; }

}  // namespace

Modality Modality::of(ModalityName name) {
    switch (name) {
        case ModalityName::IpIr: return {name, 20.0, false};
        case ModalityName::OrbbecIr: return {name, 30.0, false};
        case ModalityName::OrbbecDepth: return {name, 30.0, true};
        case ModalityName::ZedDepth: return {name, 30.0, true};
        case ModalityName::ZedRgb: return {name, 30.0, false};
        case ModalityName::Thermal: return {name, 8.7, false};
        case ModalityName::Synthetic: return {name, 8.0, false};
    }
    return {};
}

std::string_view to_string(ModalityName name) {
    switch (name) {
        case ModalityName::IpIr: return "IP_IR";
        case ModalityName::OrbbecIr: return "ORBBEC_IR";
        case ModalityName::OrbbecDepth: return "ORBBEC_DEPTH";
        case ModalityName::ZedDepth: return "ZED_DEPTH";
        case ModalityName::ZedRgb: return "ZED_RGB";
        case ModalityName::Thermal: return "THERMAL";
        case ModalityName::Synthetic: return "SYNTHETIC";
    }
    return "UNKNOWN";
}

std::optional<ModalityName> parse_modality(std::string_view text) {
    const std::string key = fold(text, "-_");
    static const std::map<std::string, ModalityName> kNames = {
        {"ip", ModalityName::IpIr},          {"ipir", ModalityName::IpIr},
        {"orbbecir", ModalityName::OrbbecIr}, {"orbbecdepth", ModalityName::OrbbecDepth},
        {"zeddepth", ModalityName::ZedDepth}, {"zedrgb", ModalityName::ZedRgb},
        {"thermal", ModalityName::Thermal},   {"flir", ModalityName::Thermal},
        {"synthetic", ModalityName::Synthetic},
    };
    auto it = kNames.find(key);
    if (it == kNames.end()) return std::nullopt;
    return it->second;
}

std::string TrialId::folder_name() const {
    return condition_token(condition) + "-Trial " + std::to_string(trial_index);
}

std::string TrialId::short_name() const { return condition_token(condition) + "-" + std::to_string(trial_index); }

std::optional<std::pair<SessionCondition, int>> parse_trial_name(std::string_view text) {
    static const std::regex kPattern(R"(^(day|night)-?(trial)?-?([0-9]+)$)");
    const std::string key = fold(text, "");
    std::smatch m;
    if (!std::regex_match(key, m, kPattern)) return std::nullopt;
    auto index = parse_index(m[3].str());
    if (!index || *index < 1 || *index > 5) return std::nullopt;
    return std::pair{m[1].str() == "day" ? SessionCondition::Day : SessionCondition::Night, static_cast<int>(*index)};
}

std::optional<LabelSpan> LabelRow::span() const {
    if (!usable()) return std::nullopt;
    return LabelSpan{*start_frame, *end_frame};
}

LabelKey label_key(const TrialId& trial, ModalityName modality) {
    return {trial.participant, modality, trial.condition, trial.trial_index};
}

std::vector<LabelSpan> LabelTable::spans(const LabelKey& key, std::size_t* unusable) const {
    std::vector<LabelSpan> out;
    std::size_t skipped = 0;
    if (auto it = rows.find(key); it != rows.end()) {
        for (const auto& row : it->second) {
            if (auto s = row.span()) out.push_back(*s);
            else ++skipped;
        }
    }
    if (unusable) *unusable = skipped;
    return out;
}

bool LabelTable::has_falls(const LabelKey& key) const {
    auto it = rows.find(key);
    return it != rows.end() && !it->second.empty();
}

std::size_t LabelTable::row_count() const {
    std::size_t n = 0;
    for (const auto& [key, list] : rows) n += list.size();
    return n;
}

// ---------------------------------------------------------------------------
// Labels

LabelLoadResult parse_labels(std::string_view text) {
    LabelLoadResult result;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    const std::vector<std::string> expected = {"participant", "modality", "trial", "start_frame", "end_frame"};
    std::vector<int> column_of(expected.size(), -1);
    bool have_header = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) continue;

        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (!line.empty() && line.back() == ',') cells.emplace_back();

        if (!have_header) {
            for (std::size_t c = 0; c < cells.size(); ++c) {
                auto name = fold(cells[c], "");
                for (std::size_t e = 0; e < expected.size(); ++e)
                    if (name == expected[e]) column_of[e] = static_cast<int>(c);
            }
            for (std::size_t e = 0; e < expected.size(); ++e)
                if (column_of[e] < 0) throw DataError("label file header lacks column '" + expected[e] + "'");
            have_header = true;
            continue;
        }

        auto reject = [&](std::string reason) { result.rejects.push_back({line_no, std::move(reason)}); };
        auto get = [&](std::size_t e) -> std::string {
            auto c = static_cast<std::size_t>(column_of[e]);
            return c < cells.size() ? cells[c] : std::string{};
        };
        std::size_t needed = 0;
        for (int c : column_of) needed = std::max(needed, static_cast<std::size_t>(c) + 1);
        if (cells.size() < needed - 2) {
            reject("expected " + std::to_string(needed) + " columns, found " + std::to_string(cells.size()));
            continue;
        }

        const std::string participant = get(0);
        if (participant.empty()) {
            reject("empty participant");
            continue;
        }
        auto modality = parse_modality(get(1));
        if (!modality) {
            reject("unknown modality '" + get(1) + "'");
            continue;
        }
        auto trial = parse_trial_name(get(2));
        if (!trial) {
            reject("unparseable trial '" + get(2) + "'");
            continue;
        }
        LabelRow row;
        bool bad_bound = false;
        for (std::size_t e : {3u, 4u}) {
            const std::string value = get(e);
            if (value.empty()) continue;
            auto parsed = parse_index(value);
            if (!parsed) {
                reject("non-integer " + expected[e] + " '" + value + "'");
                bad_bound = true;
                break;
            }
            (e == 3 ? row.start_frame : row.end_frame) = *parsed;
        }
        if (bad_bound) continue;
        if (row.usable() && *row.start_frame > *row.end_frame) {
            reject("start_frame " + std::to_string(*row.start_frame) + " > end_frame " +
                   std::to_string(*row.end_frame));
            continue;
        }
        LabelKey key{participant, *modality, trial->first, trial->second};
        result.table.rows[key].push_back(row);
    }
    if (!have_header) throw DataError("label file is empty (no header row)");
    return result;
}

LabelLoadResult load_labels(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open label file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_labels(buffer.str());
}

std::string serialize_labels(const LabelTable& table) {
    std::ostringstream out;
    out << "participant,modality,trial,start_frame,end_frame\n";
    for (const auto& [key, list] : table.rows) {
        TrialId trial{key.participant, key.condition, key.trial_index};
        for (const auto& row : list) {
            out << key.participant << ',' << to_string(key.modality) << ',' << trial.short_name() << ',';
            if (row.start_frame) out << *row.start_frame;
            out << ',';
            if (row.end_frame) out << *row.end_frame;
            out << '\n';
        }
    }
    return out.str();
}

void write_labels(const LabelTable& table, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write label file " + path.string());
    out << serialize_labels(table);
}

std::vector<std::uint8_t> frame_labels(std::size_t frame_count, const std::vector<LabelSpan>& spans) {
    std::vector<std::uint8_t> labels(frame_count, 0);
    for (const auto& span : spans) {
        if (span.start_frame > span.end_frame || span.end_frame >= frame_count) {
            throw DataError("label span [" + std::to_string(span.start_frame) + "," +
                            std::to_string(span.end_frame) + "] out of range for " + std::to_string(frame_count) +
                            " frames");
        }
        std::fill(labels.begin() + static_cast<std::ptrdiff_t>(span.start_frame),
                  labels.begin() + static_cast<std::ptrdiff_t>(span.end_frame) + 1, std::uint8_t{1});
    }
    return labels;
}

std::vector<std::uint8_t> frame_labels(const VideoClip& clip, const std::vector<LabelSpan>& spans) {
    return frame_labels(clip.frames.size(), spans);
}

// ---------------------------------------------------------------------------
// Scanning

namespace {

bool looks_like_participant(const std::string& name) {
    static const std::regex kPattern(R"(^[A-Za-z]+[0-9]+$)");
    return std::regex_match(name, kPattern);
}

void scan_trials(const fs::path& dir, const std::string& participant, ModalityName modality, const std::string& stream,
                 bool allow_units, Catalog& catalog) {
    for (const auto& child : sorted_children(dir)) {
        const auto name = child.path().filename().string();
        std::string trial_text = name;
        const bool is_video = child.is_regular_file() && is_video_extension(child.path().extension().string());
        if (is_video) trial_text = child.path().stem().string();
        else if (!child.is_directory()) continue;

        auto parsed = parse_trial_name(trial_text);
        if (!parsed) {
            if (allow_units && child.is_directory()) {
                scan_trials(child.path(), participant, modality, name, false, catalog);
                continue;
            }
            catalog.skips.push_back({child.path(), "unrecognised trial name '" + name + "'"});
            continue;
        }

        CatalogEntry entry;
        entry.trial = TrialId{participant, parsed->first, parsed->second};
        entry.modality = modality;
        entry.stream = stream;
        if (is_video) {
            entry.locator = {LocatorKind::VideoFile, child.path()};
        } else {
            bool has_images = false;
            std::vector<fs::path> videos;
            for (const auto& f : fs::directory_iterator(child.path())) {
                if (!f.is_regular_file()) continue;
                if (is_image_extension(f.path().extension().string())) has_images = true;
                else if (is_video_extension(f.path().extension().string())) videos.push_back(f.path());
            }
            if (!has_images && videos.size() == 1) entry.locator = {LocatorKind::VideoFile, videos.front()};
            else entry.locator = {LocatorKind::FrameDirectory, child.path()};
        }
        catalog.entries.push_back(std::move(entry));
    }
}

}  // namespace

Catalog scan_dataset(const fs::path& root) {
    if (!fs::exists(root)) throw ConfigError("dataset root does not exist: " + root.string());
    if (!fs::is_directory(root)) throw ConfigError("dataset root is not a directory: " + root.string());

    Catalog catalog;
    for (const auto& participant_dir : sorted_children(root)) {
        if (!participant_dir.is_directory()) continue;
        const auto participant = participant_dir.path().filename().string();
        if (!looks_like_participant(participant)) {
            catalog.skips.push_back({participant_dir.path(), "malformed participant folder name '" + participant + "'"});
            continue;
        }
        for (const auto& camera_dir : sorted_children(participant_dir.path())) {
            if (!camera_dir.is_directory()) continue;
            const auto camera = fold(camera_dir.path().filename().string(), "-_");
            if (camera == "ip") {
                scan_trials(camera_dir.path(), participant, ModalityName::IpIr, "", false, catalog);
            } else if (camera == "synthetic") {
                scan_trials(camera_dir.path(), participant, ModalityName::Synthetic, "", false, catalog);
            } else if (camera == "flir" || camera == "thermal") {
                scan_trials(camera_dir.path(), participant, ModalityName::Thermal, "", true, catalog);
            } else if (camera == "orbbec" || camera == "zed") {
                for (const auto& stream_dir : sorted_children(camera_dir.path())) {
                    if (!stream_dir.is_directory()) continue;
                    auto modality = parse_modality(camera + fold(stream_dir.path().filename().string(), "-_"));
                    if (!modality) {
                        catalog.skips.push_back({stream_dir.path(), "unknown " + camera + " stream folder"});
                        continue;
                    }
                    scan_trials(stream_dir.path(), participant, *modality, "", false, catalog);
                }
            } else if (camera != "empatica") {
                catalog.skips.push_back({camera_dir.path(), "not a camera folder"});
            }
        }
    }
    std::stable_sort(catalog.entries.begin(), catalog.entries.end(), [](const auto& a, const auto& b) {
        return std::tie(a.trial.participant, a.modality, a.trial.condition, a.trial.trial_index, a.stream) <
               std::tie(b.trial.participant, b.modality, b.trial.condition, b.trial.trial_index, b.stream);
    });
    return catalog;
}

std::string Catalog::to_jsonl() const {
    std::string out;
    for (const auto& e : entries) {
        nlohmann::ordered_json j;
        j["participant"] = e.trial.participant;
        j["modality"] = std::string(to_string(e.modality));
        j["condition"] = e.trial.condition == SessionCondition::Day ? "DAY" : "NIGHT";
        j["trial"] = e.trial.trial_index;
        j["stream"] = e.stream;
        j["kind"] = e.locator.kind == LocatorKind::FrameDirectory ? "frames" : "video";
        j["path"] = e.locator.path.generic_string();
        out += j.dump();
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// Clip loading

namespace {

float full_scale(int depth) {
    switch (depth) {
        case CV_8U: return 255.0f;
        case CV_16U: return 65535.0f;
        case CV_32F: return 1.0f;
        default: return 0.0f;
    }
}

Frame to_luminance(const cv::Mat& image) {
    cv::Mat values;
    image.convertTo(values, CV_MAKETYPE(CV_32F, image.channels()));
    Frame frame(values.rows, values.cols);
    const int channels = values.channels();
    for (int r = 0; r < values.rows; ++r) {
        const float* row = values.ptr<float>(r);
        for (int c = 0; c < values.cols; ++c) {
            const float* px = row + static_cast<std::ptrdiff_t>(c) * channels;
            // OpenCV stores colour as BGR(A).
            frame.at(r, c) = channels == 1 ? px[0] : kLumaBlue * px[0] + kLumaGreen * px[1] + kLumaRed * px[2];
        }
    }
    return frame;
}

std::optional<double> declared_fps(const fs::path& dir) {
    const auto meta = dir / "meta.json";
    if (!fs::exists(meta)) return std::nullopt;
    std::ifstream in(meta);
    try {
        auto j = nlohmann::json::parse(in);
        if (j.contains("fps")) return j.at("fps").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed " + meta.string() + ": " + e.what());
    }
    return std::nullopt;
}

void load_frame_directory(const fs::path& dir, VideoClip& clip) {
    std::vector<std::pair<std::size_t, fs::path>> files;
    for (const auto& f : fs::directory_iterator(dir)) {
        if (!f.is_regular_file() || !is_image_extension(f.path().extension().string())) continue;
        auto index = parse_index(f.path().stem().string());
        if (!index) throw DataError("non-numeric frame file name " + f.path().string());
        files.emplace_back(*index, f.path());
    }
    if (files.empty()) throw DataError("no frames in " + dir.string());
    std::sort(files.begin(), files.end());
    for (std::size_t i = 1; i < files.size(); ++i) {
        if (files[i].first == files[i - 1].first)
            throw DataError("duplicate frame index " + std::to_string(files[i].first) + " in " + dir.string());
        if (files[i].first != files[i - 1].first + 1)
            throw DataError("missing frame index " + std::to_string(files[i - 1].first + 1) + " in " + dir.string());
    }

    int depth = -1;
    for (const auto& [index, path] : files) {
        cv::Mat image = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
        if (image.empty()) throw DataError("unreadable frame index " + std::to_string(index) + ": " + path.string());
        if (depth < 0) {
            depth = image.depth();
            clip.max_value = full_scale(depth);
            if (clip.max_value <= 0.0f)
                throw DataError("unsupported pixel depth at frame index " + std::to_string(index));
        } else if (image.depth() != depth) {
            throw DataError("pixel depth changes at frame index " + std::to_string(index));
        }
        Frame frame = to_luminance(image);
        if (!clip.frames.empty() &&
            (frame.height != clip.frames.front().height || frame.width != clip.frames.front().width)) {
            throw DataError("frame index " + std::to_string(index) + " has a different size");
        }
        clip.frames.push_back(std::move(frame));
    }
    if (auto fps = declared_fps(dir)) clip.native_fps = *fps;
}

void load_video_file(const fs::path& path, VideoClip& clip) {
    cv::VideoCapture capture(path.string());
    if (!capture.isOpened()) throw DataError("cannot open video " + path.string());
    const double fps = capture.get(cv::CAP_PROP_FPS);
    if (fps > 0.0) clip.native_fps = fps;
    cv::Mat image;
    while (capture.read(image)) {
        if (image.empty()) break;
        clip.max_value = full_scale(image.depth());
        clip.frames.push_back(to_luminance(image));
    }
    if (clip.frames.empty()) throw DataError("video has zero decodable frames: " + path.string());
    if (auto meta = declared_fps(path.parent_path())) clip.native_fps = *meta;
}

}  // namespace

VideoClip load_clip(const ClipLocator& locator, const TrialId& trial, ModalityName modality) {
    VideoClip clip;
    clip.trial = trial;
    clip.modality = Modality::of(modality);
    clip.native_fps = clip.modality.native_fps;
    if (locator.kind == LocatorKind::FrameDirectory) load_frame_directory(locator.path, clip);
    else load_video_file(locator.path, clip);
    if (!(clip.native_fps > 0.0)) throw DataError("non-positive fps for " + locator.path.string());
    clip.modality.native_fps = clip.native_fps;
    return clip;
}

VideoClip load_clip(const CatalogEntry& entry) { return load_clip(entry.locator, entry.trial, entry.modality); }

}  // namespace fallwatch
