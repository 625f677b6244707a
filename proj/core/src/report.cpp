#include "fallwatch/report.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "fallwatch/error.hpp"
#include "fallwatch/hashing.hpp"

namespace fs = std::filesystem;

namespace fallwatch {

namespace {

class Writer {
public:
    explicit Writer(fs::path root) : root_(std::move(root)) {}

    void write(const std::string& relative, const std::string& content) {
        const fs::path path = root_ / relative;
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        std::ofstream out(path, std::ios::binary);
        if (!out || !(out << content) || !out.flush()) throw ConfigError("cannot write " + path.string());
        result.files.push_back({relative, sha256_hex(content)});
    }

    void omit(const std::string& relative, const std::string& reason) { result.omitted.push_back({relative, reason}); }

    RenderResult result;

private:
    fs::path root_;
};

std::string mod_name(ModalityName m) { return std::string(to_string(m)); }

std::optional<double> mean_of(const std::optional<MeanStd>& m) {
    if (!m) return std::nullopt;
    return m->mean;
}

std::optional<double> std_of(const std::optional<MeanStd>& m) {
    if (!m) return std::nullopt;
    return m->std;
}

std::string per_video_table(const EvalReport& report, ScoreFamily f) {
    std::string out = "modality,auc_roc_mean,auc_roc_std,auc_pr_mean,auc_pr_std,videos_evaluated,videos_skipped\n";
    for (const auto& m : report.modalities) {
        const auto& s = m.per_video.summary(f);
        out += mod_name(m.modality) + ',' + format6(mean_of(s.roc)) + ',' + format6(std_of(s.roc)) + ',' +
               format6(mean_of(s.pr)) + ',' + format6(std_of(s.pr)) + ',' + std::to_string(m.counts.videos_evaluated) +
               ',' + std::to_string(m.counts.videos_skipped_single_class + m.counts.videos_skipped_short) + '\n';
    }
    return out;
}

std::string global_table(const EvalReport& report, ScoreFamily f) {
    std::string out = "modality,auc_roc,auc_pr\n";
    for (const auto& m : report.modalities) {
        const auto& g = m.global.family(f);
        out += mod_name(m.modality) + ',' + format6(g.roc) + ',' + format6(g.pr) + '\n';
    }
    return out;
}

std::string sweep_header(const EvalReport& report) {
    std::string out = "row";
    for (auto k : report.ks) out += ",k" + std::to_string(k);
    return out + '\n';
}

std::string sweep_table(const EvalReport& report, bool pr) {
    std::string out = sweep_header(report);
    for (const auto& m : report.modalities) {
        out += mod_name(m.modality);
        for (const auto& r : m.sweep) out += ',' + format6(mean_of(pr ? r.pr : r.roc));
        out += '\n';
    }
    if (pr) {
        for (const auto& m : report.modalities) {
            out += "Baseline (" + mod_name(m.modality) + ')';
            for (const auto& r : m.sweep) out += ',' + format6(r.baseline);
            out += '\n';
        }
    }
    return out;
}

std::string counts_table(const EvalReport& report) {
    std::string out =
        "modality,videos_evaluated,videos_skipped_single_class,videos_skipped_short,total_frames,fall_frames,"
        "pr_baseline\n";
    for (const auto& m : report.modalities) {
        const auto& c = m.counts;
        out += mod_name(m.modality) + ',' + std::to_string(c.videos_evaluated) + ',' +
               std::to_string(c.videos_skipped_single_class) + ',' + std::to_string(c.videos_skipped_short) + ',' +
               std::to_string(c.total_frames) + ',' + std::to_string(c.fall_frames) + ',' + format6(c.pr_baseline()) +
               '\n';
    }
    return out;
}

// --- SVG line plot of AUC against k --------------------------------------------

struct Series {
    std::string label;
    std::vector<std::optional<double>> values;  // aligned with ks
    bool dashed = false;
};

constexpr std::array<const char*, 7> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                  "#ff7f0e", "#8c564b", "#17becf"};

std::string fmt(const char* pattern, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, a);
    return buf;
}

std::string svg_plot(const std::string& title, const std::vector<std::size_t>& ks, const std::vector<Series>& series) {
    constexpr double W = 520, H = 340, left = 60, right = 150, top = 40, bottom = 50;
    const double pw = W - left - right, ph = H - top - bottom;
    const double k0 = static_cast<double>(ks.front());
    const double k1 = static_cast<double>(ks.back());
    auto x = [&](std::size_t k) {
        return ks.size() == 1 ? left + pw / 2 : left + pw * (static_cast<double>(k) - k0) / (k1 - k0);
    };
    auto y = [&](double v) { return top + ph * (1.0 - round6(v)); };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"520\" height=\"340\" font-family=\"sans-serif\" "
                    "font-size=\"11\">\n";
    s += "<rect width=\"520\" height=\"340\" fill=\"white\"/>\n";
    s += "<text x=\"" + fmt("%.2f", left + pw / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"13\">" + title +
         "</text>\n";
    for (int i = 0; i <= 5; ++i) {
        const double v = i / 5.0;
        s += "<line x1=\"" + fmt("%.2f", left) + "\" x2=\"" + fmt("%.2f", left + pw) + "\" y1=\"" + fmt("%.2f", y(v)) +
             "\" y2=\"" + fmt("%.2f", y(v)) + "\" stroke=\"#dddddd\"/>\n";
        s += "<text x=\"" + fmt("%.2f", left - 6) + "\" y=\"" + fmt("%.2f", y(v) + 4) + "\" text-anchor=\"end\">" +
             fmt("%.1f", v) + "</text>\n";
    }
    for (auto k : ks) {
        s += "<text x=\"" + fmt("%.2f", x(k)) + "\" y=\"" + fmt("%.2f", top + ph + 18) +
             "\" text-anchor=\"middle\">" + std::to_string(k) + "</text>\n";
    }
    s += "<text x=\"" + fmt("%.2f", left + pw / 2) + "\" y=\"" + fmt("%.2f", H - 10) +
         "\" text-anchor=\"middle\">fall threshold k (frames)</text>\n";
    s += "<rect x=\"" + fmt("%.2f", left) + "\" y=\"" + fmt("%.2f", top) + "\" width=\"" + fmt("%.2f", pw) +
         "\" height=\"" + fmt("%.2f", ph) + "\" fill=\"none\" stroke=\"black\"/>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& ser = series[i];
        const std::string colour = ser.dashed ? "#555555" : kPalette[i % kPalette.size()];
        const std::string dash = ser.dashed ? " stroke-dasharray=\"5,3\"" : "";
        std::string points;
        auto flush = [&] {
            if (!points.empty())
                s += "<polyline fill=\"none\" stroke=\"" + colour + "\" stroke-width=\"2\"" + dash + " points=\"" +
                     points + "\"/>\n";
            points.clear();
        };
        for (std::size_t j = 0; j < ks.size(); ++j) {
            if (!ser.values[j]) {
                flush();
                continue;
            }
            if (!points.empty()) points += ' ';
            points += fmt("%.2f", x(ks[j])) + ',' + fmt("%.2f", y(*ser.values[j]));
            s += "<circle cx=\"" + fmt("%.2f", x(ks[j])) + "\" cy=\"" + fmt("%.2f", y(*ser.values[j])) +
                 "\" r=\"2.5\" fill=\"" + colour + "\"/>\n";
        }
        flush();
        const double ly = top + 14.0 * static_cast<double>(i) + 6;
        s += "<line x1=\"" + fmt("%.2f", W - right + 12) + "\" x2=\"" + fmt("%.2f", W - right + 32) + "\" y1=\"" +
             fmt("%.2f", ly) + "\" y2=\"" + fmt("%.2f", ly) + "\" stroke=\"" + colour + "\" stroke-width=\"2\"" + dash +
             "/>\n";
        s += "<text x=\"" + fmt("%.2f", W - right + 36) + "\" y=\"" + fmt("%.2f", ly + 4) + "\">" + ser.label +
             "</text>\n";
    }
    return s + "</svg>\n";
}

bool sweep_has_values(const EvalReport& report, bool pr) {
    for (const auto& m : report.modalities)
        for (const auto& r : m.sweep)
            if (pr ? r.pr.has_value() : r.roc.has_value()) return true;
    return false;
}

void render_plot(Writer& w, const EvalReport& report, bool pr) {
    const std::string path = pr ? "plots/within_context_pr.svg" : "plots/within_context_roc.svg";
    if (report.ks.empty()) return w.omit(path, "within-context sweep is empty");
    if (!sweep_has_values(report, pr)) return w.omit(path, "no video has both classes at any k");

    std::vector<Series> series;
    for (const auto& m : report.modalities) {
        Series s{mod_name(m.modality), {}, false};
        for (const auto& r : m.sweep) s.values.push_back(mean_of(pr ? r.pr : r.roc));
        series.push_back(std::move(s));
    }
    if (pr) {
        for (const auto& m : report.modalities) {
            Series s{"baseline " + mod_name(m.modality), {}, true};
            for (const auto& r : m.sweep) s.values.push_back(r.baseline);
            series.push_back(std::move(s));
        }
    }
    w.write(path, svg_plot(pr ? "Mean within-context AUC PR" : "Mean within-context AUC ROC", report.ks, series));
}

}  // namespace

RenderResult render_report(const EvalReport& report, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create report directory " + dir.string());

    Writer w(dir);
    w.write("report.json", report.to_json().dump(2) + "\n");
    for (auto f : families(report.family)) {
        const std::string name(to_string(f));
        w.write("tables/cross_context_per_video_" + name + ".csv", per_video_table(report, f));
        w.write("tables/cross_context_global_" + name + ".csv", global_table(report, f));
    }
    if (report.ks.empty()) {
        w.omit("tables/within_context_roc.csv", "within-context sweep is empty");
        w.omit("tables/within_context_pr.csv", "within-context sweep is empty");
    } else {
        w.write("tables/within_context_roc.csv", sweep_table(report, false));
        w.write("tables/within_context_pr.csv", sweep_table(report, true));
    }
    w.write("tables/counts.csv", counts_table(report));
    render_plot(w, report, false);
    render_plot(w, report, true);

    nlohmann::ordered_json manifest = {{"files", nlohmann::ordered_json::array()},
                                       {"omitted", nlohmann::ordered_json::array()}};
    for (const auto& f : w.result.files) manifest["files"].push_back({{"path", f.path}, {"sha256", f.sha256}});
    for (const auto& o : w.result.omitted) manifest["omitted"].push_back({{"path", o.path}, {"reason", o.reason}});
    w.write("manifest.json", manifest.dump(2) + "\n");
    return w.result;
}

}  // namespace fallwatch
