#include "fallwatch/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fallwatch/error.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

std::vector<std::uint8_t> WindowScoreSeries::truth(std::size_t k) const {
    std::vector<std::uint8_t> out(windows.size());
    std::transform(windows.begin(), windows.end(), out.begin(), [k](const WindowScore& w) { return w.truth(k); });
    return out;
}

std::vector<double> WindowScoreSeries::scores() const {
    std::vector<double> out(windows.size());
    std::transform(windows.begin(), windows.end(), out.begin(), [](const WindowScore& w) { return w.score; });
    return out;
}

namespace {

// Position of each window in ascending start order, after checking the starts are
// exactly the sliding-window grid for `spec`.
std::vector<std::size_t> order_by_start(const ErrorMatrix& errors, std::size_t frame_count, const WindowSpec& spec) {
    if (errors.length != spec.length) throw DataError("error matrix window length differs from the window spec");
    if (errors.values.size() != errors.starts.size() * errors.length) throw DataError("error matrix is ragged");
    const std::size_t n = window_count(frame_count, spec);
    if (errors.windows() != n) {
        throw DataError("expected " + std::to_string(n) + " windows of errors, got " + std::to_string(errors.windows()));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return errors.starts[a] < errors.starts[b]; });
    for (std::size_t w = 0; w < n; ++w)
        if (errors.starts[order[w]] != w * spec.stride)
            throw DataError("window starts do not match the sliding-window grid");
    return order;
}

}  // namespace

FrameScoreSeries cross_context(const ErrorMatrix& errors, std::span<const std::uint8_t> frame_label,
                               const WindowSpec& spec) {
    const auto order = order_by_start(errors, frame_label.size(), spec);
    if (order.empty()) return {};
    const std::size_t covered = (order.size() - 1) * spec.stride + spec.length;

    FrameScoreSeries series(covered);
    std::vector<double> values;
    for (std::size_t i = 0; i < covered; ++i) {
        values.clear();
        for (std::size_t w : coverage(i, frame_label.size(), spec))
            values.push_back(errors.at(order[w], i - w * spec.stride));
        if (values.empty()) throw DataError("frame " + std::to_string(i) + " is not covered by any window");

        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / static_cast<double>(values.size());
        double spread = 0.0;
        for (double v : values) spread += (v - mean) * (v - mean);

        auto& s = series[i];
        s.mu = mean;
        s.sigma = std::sqrt(spread / static_cast<double>(values.size()));
        s.n_windows = values.size();
        s.truth = frame_label[i] != 0 ? 1 : 0;
    }
    return series;
}

WindowScoreSeries within_context(const ErrorMatrix& errors, std::span<const std::uint8_t> frame_label,
                                 const WindowSpec& spec) {
    const auto order = order_by_start(errors, frame_label.size(), spec);
    const auto counts = window_fall_counts(frame_label, spec);
    WindowScoreSeries series;
    series.length = spec.length;
    series.windows.resize(order.size());
    for (std::size_t w = 0; w < order.size(); ++w) {
        double sum = 0.0;
        for (std::size_t t = 0; t < spec.length; ++t) sum += errors.at(order[w], t);
        series.windows[w] = {w * spec.stride, sum / static_cast<double>(spec.length), counts[w]};
    }
    return series;
}

std::optional<VideoScores> score_video(const Reconstructor& model, const CanonicalClip& clip, const WindowSpec& spec,
                                       ScoreSkip* skip, std::size_t chunk) {
    spec.validate();
    const std::size_t n = window_count(clip.size(), spec);
    if (n == 0) {
        if (skip) {
            *skip = {clip_id(clip), clip.modality,
                     "clip has " + std::to_string(clip.size()) + " frames, fewer than T=" + std::to_string(spec.length)};
        }
        return std::nullopt;
    }
    ErrorMatrix errors;
    errors.length = spec.length;
    chunk = std::max<std::size_t>(chunk, 1);
    for (std::size_t first = 0; first < n; first += chunk) {
        const auto batch = make_windows(clip, spec, first, std::min(chunk, n - first));
        const auto r = reconstruct(model, batch);
        errors.starts.insert(errors.starts.end(), r.start_indices.begin(), r.start_indices.end());
        errors.values.insert(errors.values.end(), r.frame_errors.begin(), r.frame_errors.end());
    }
    VideoScores scores;
    scores.video_id = clip_id(clip);
    scores.modality = clip.modality;
    scores.frames = cross_context(errors, clip.frame_label, spec);
    scores.windows = within_context(errors, clip.frame_label, spec);
    return scores;
}

// ---------------------------------------------------------------------------

namespace {

std::string exact(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw DataError("bad number '" + s + "' in score file");
    }
    if (used != s.size()) throw DataError("bad number '" + s + "' in score file");
    return v;
}

std::size_t to_size(const std::string& s) {
    const double v = to_double(s);
    if (v < 0 || v != std::floor(v)) throw DataError("bad count '" + s + "' in score file");
    return static_cast<std::size_t>(v);
}

std::size_t truth_columns(std::size_t window_length) { return std::max<std::size_t>(window_length, 2) - 1; }

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
}

}  // namespace

std::string frame_scores_csv(const FrameScoreSeries& series) {
    std::string out = "frame_index,mu,sigma,n_windows,truth\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& s = series[i];
        out += std::to_string(i) + ',' + exact(s.mu) + ',' + exact(s.sigma) + ',' + std::to_string(s.n_windows) + ',' +
               std::to_string(s.truth) + '\n';
    }
    return out;
}

std::string window_scores_csv(const WindowScoreSeries& series) {
    const std::size_t k_max = truth_columns(series.length);
    std::string out = "window_start,score";
    for (std::size_t k = 1; k <= k_max; ++k) out += ",truth_k" + std::to_string(k);
    out += ",fall_frames\n";
    for (const auto& w : series.windows) {
        out += std::to_string(w.start) + ',' + exact(w.score);
        for (std::size_t k = 1; k <= k_max; ++k) out += w.truth(k) ? ",1" : ",0";
        out += ',' + std::to_string(w.fall_frames) + '\n';
    }
    return out;
}

FrameScoreSeries parse_frame_scores_csv(std::string_view text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows.front().size() != 5 || rows.front()[0] != "frame_index")
        throw DataError("frame score file has an unexpected header");
    FrameScoreSeries series;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 5) throw DataError("frame score row " + std::to_string(r) + " has the wrong column count");
        if (to_size(row[0]) != r - 1) throw DataError("frame score rows are not contiguous");
        FrameScore s;
        s.mu = to_double(row[1]);
        s.sigma = to_double(row[2]);
        s.n_windows = to_size(row[3]);
        s.truth = static_cast<std::uint8_t>(to_size(row[4]) != 0);
        series.push_back(s);
    }
    return series;
}

WindowScoreSeries parse_window_scores_csv(std::string_view text, std::size_t window_length) {
    const auto rows = parse_csv(text);
    const std::size_t k_max = truth_columns(window_length);
    if (rows.empty() || rows.front().size() != k_max + 3 || rows.front()[0] != "window_start")
        throw DataError("window score file has an unexpected header for T=" + std::to_string(window_length));
    WindowScoreSeries series;
    series.length = window_length;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != k_max + 3) throw DataError("window score row " + std::to_string(r) + " has the wrong column count");
        WindowScore w;
        w.start = to_size(row[0]);
        w.score = to_double(row[1]);
        w.fall_frames = to_size(row.back());
        for (std::size_t k = 1; k <= k_max; ++k)
            if ((to_size(row[1 + k]) != 0) != w.truth(k))
                throw DataError("window score row " + std::to_string(r) + ": truth_k" + std::to_string(k) +
                                " disagrees with fall_frames");
        series.windows.push_back(w);
    }
    return series;
}

void write_score_set(const ScoreSet& set, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::ordered_json index = nlohmann::ordered_json::array();
    for (const auto& v : set.videos) {
        const std::string frames_file = v.video_id + "_frames.csv";
        const std::string windows_file = v.video_id + "_windows.csv";
        write_file(dir / frames_file, frame_scores_csv(v.frames));
        write_file(dir / windows_file, window_scores_csv(v.windows));
        index.push_back({{"video", v.video_id},
                         {"modality", std::string(to_string(v.modality))},
                         {"window_length", v.windows.length},
                         {"frames", frames_file},
                         {"windows", windows_file}});
    }
    nlohmann::ordered_json skips = nlohmann::ordered_json::array();
    for (const auto& s : set.skips)
        skips.push_back({{"video", s.video_id}, {"modality", std::string(to_string(s.modality))}, {"reason", s.reason}});
    write_file(dir / "index.json", index.dump(2) + "\n");
    write_file(dir / "skips.json", skips.dump(2) + "\n");
}

ScoreSet read_score_set(const fs::path& dir) {
    if (!fs::exists(dir / "index.json")) throw DataError("no score index in " + dir.string());
    ScoreSet set;
    try {
        const auto index = nlohmann::json::parse(read_file(dir / "index.json"));
        for (const auto& entry : index) {
            VideoScores v;
            v.video_id = entry.at("video").get<std::string>();
            auto modality = parse_modality(entry.at("modality").get<std::string>());
            if (!modality) throw DataError("unknown modality in score index");
            v.modality = *modality;
            v.frames = parse_frame_scores_csv(read_file(dir / entry.at("frames").get<std::string>()));
            v.windows = parse_window_scores_csv(read_file(dir / entry.at("windows").get<std::string>()),
                                                entry.at("window_length").get<std::size_t>());
            set.videos.push_back(std::move(v));
        }
        if (fs::exists(dir / "skips.json")) {
            for (const auto& entry : nlohmann::json::parse(read_file(dir / "skips.json"))) {
                ScoreSkip s;
                s.video_id = entry.at("video").get<std::string>();
                s.modality = parse_modality(entry.at("modality").get<std::string>()).value_or(ModalityName::Synthetic);
                s.reason = entry.at("reason").get<std::string>();
                set.skips.push_back(std::move(s));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed score index in " + dir.string() + ": " + e.what());
    }
    return set;
}

}  // namespace fallwatch
