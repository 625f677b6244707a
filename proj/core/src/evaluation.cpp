#include "fallwatch/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <numeric>

#include "fallwatch/error.hpp"

namespace fallwatch {

namespace {

void check_lengths(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    if (scores.size() != truths.size())
        throw DataError("score and truth lengths differ (" + std::to_string(scores.size()) + " vs " +
                        std::to_string(truths.size()) + ")");
    for (double s : scores)
        if (!std::isfinite(s)) throw DataError("non-finite score");
}

std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] > scores[b]; });
    return order;
}

std::size_t positives(std::span<const std::uint8_t> truths) {
    return static_cast<std::size_t>(std::count_if(truths.begin(), truths.end(), [](auto t) { return t != 0; }));
}

}  // namespace

Metric auc_roc(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    check_lengths(scores, truths);
    const std::size_t n = scores.size();
    const std::size_t p = positives(truths);
    if (p == 0 || p == n) return std::nullopt;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });

    // Ranks are 1-based; a tie group spanning positions [i, j) gets (i + j + 1) / 2.
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i + 1;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double midrank = static_cast<double>(i + j + 1) / 2.0;
        for (std::size_t m = i; m < j; ++m)
            if (truths[order[m]]) rank_sum += midrank;
        i = j;
    }
    const double pd = static_cast<double>(p);
    const double nd = static_cast<double>(n - p);
    return (rank_sum - pd * (pd + 1.0) / 2.0) / (pd * nd);
}

Metric auc_pr(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    check_lengths(scores, truths);
    const std::size_t p = positives(truths);
    if (p == 0) return std::nullopt;

    const auto order = descending_order(scores);
    std::size_t tp = 0, seen = 0;
    double precision_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        std::size_t group_pos = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            group_pos += truths[order[j]] ? 1 : 0;
            ++j;
        }
        tp += group_pos;
        seen += j - i;
        const double precision = static_cast<double>(tp) / static_cast<double>(seen);
        for (std::size_t m = 0; m < group_pos; ++m) precision_sum += precision;
        i = j;
    }
    return precision_sum / static_cast<double>(p);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    check_lengths(scores, truths);
    const std::size_t p = positives(truths);
    const std::size_t neg = truths.size() - p;
    std::vector<RocPoint> curve{{0.0, 0.0}};
    const auto order = descending_order(scores);
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (truths[order[j]] ? tp : fp) += 1;
            ++j;
        }
        curve.push_back({neg ? static_cast<double>(fp) / static_cast<double>(neg) : 0.0,
                         p ? static_cast<double>(tp) / static_cast<double>(p) : 0.0});
        i = j;
    }
    return curve;
}

double trapezoid_area(std::span<const RocPoint> curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i)
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    return area;
}

double prevalence(std::span<const std::uint8_t> truths) {
    if (truths.empty()) return 0.0;
    return static_cast<double>(positives(truths)) / static_cast<double>(truths.size());
}

std::optional<MeanStd> mean_std(std::span<const double> values) {
    if (values.empty()) return std::nullopt;
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double spread = 0.0;
    for (double v : values) spread += (v - mean) * (v - mean);
    return MeanStd{mean, std::sqrt(spread / n), values.size()};
}

std::string_view to_string(ScoreFamily family) { return family == ScoreFamily::Mu ? "mu" : "sigma"; }

std::string_view to_string(FamilySelection selection) {
    switch (selection) {
        case FamilySelection::Mu: return "mu";
        case FamilySelection::Sigma: return "sigma";
        case FamilySelection::Both: return "both";
    }
    return "both";
}

FamilySelection parse_family_selection(std::string_view text) {
    if (text == "mu") return FamilySelection::Mu;
    if (text == "sigma") return FamilySelection::Sigma;
    if (text == "both") return FamilySelection::Both;
    throw ConfigError("score family must be mu, sigma or both, got '" + std::string(text) + "'");
}

std::vector<ScoreFamily> families(FamilySelection selection) {
    switch (selection) {
        case FamilySelection::Mu: return {ScoreFamily::Mu};
        case FamilySelection::Sigma: return {ScoreFamily::Sigma};
        case FamilySelection::Both: break;
    }
    return {ScoreFamily::Mu, ScoreFamily::Sigma};
}

std::vector<double> family_scores(const FrameScoreSeries& series, ScoreFamily family) {
    std::vector<double> out(series.size());
    std::transform(series.begin(), series.end(), out.begin(),
                   [family](const FrameScore& s) { return family == ScoreFamily::Mu ? s.mu : s.sigma; });
    return out;
}

std::vector<std::uint8_t> frame_truths(const FrameScoreSeries& series) {
    std::vector<std::uint8_t> out(series.size());
    std::transform(series.begin(), series.end(), out.begin(), [](const FrameScore& s) { return s.truth; });
    return out;
}

namespace {

AucPair pair_for(std::span<const double> scores, std::span<const std::uint8_t> truths) {
    return {auc_roc(scores, truths), auc_pr(scores, truths)};
}

FamilySummary summarize(const std::vector<VideoResult>& videos, ScoreFamily family) {
    std::vector<double> roc, pr;
    for (const auto& v : videos) {
        const auto& pair = family == ScoreFamily::Mu ? v.mu : v.sigma;
        if (pair.roc) roc.push_back(*pair.roc);
        if (pair.pr) pr.push_back(*pair.pr);
    }
    return {mean_std(roc), mean_std(pr)};
}

}  // namespace

PerVideoEval per_video_eval(std::span<const VideoScores> videos) {
    PerVideoEval out;
    for (const auto& v : videos) {
        const auto truths = frame_truths(v.frames);
        const std::size_t p = positives(truths);
        if (p == 0 || p == truths.size()) {
            out.skipped.push_back(v.video_id);
            continue;
        }
        out.videos.push_back({v.video_id, pair_for(family_scores(v.frames, ScoreFamily::Mu), truths),
                              pair_for(family_scores(v.frames, ScoreFamily::Sigma), truths)});
    }
    if (out.videos.empty()) throw DataError("no evaluable video: every video lacks either fall or normal frames");
    out.mu = summarize(out.videos, ScoreFamily::Mu);
    out.sigma = summarize(out.videos, ScoreFamily::Sigma);
    return out;
}

GlobalEval global_eval(std::span<const VideoScores> videos) {
    std::vector<double> mu, sigma;
    std::vector<std::uint8_t> truths;
    for (const auto& v : videos) {
        const auto m = family_scores(v.frames, ScoreFamily::Mu);
        const auto s = family_scores(v.frames, ScoreFamily::Sigma);
        const auto t = frame_truths(v.frames);
        mu.insert(mu.end(), m.begin(), m.end());
        sigma.insert(sigma.end(), s.begin(), s.end());
        truths.insert(truths.end(), t.begin(), t.end());
    }
    return {pair_for(mu, truths), pair_for(sigma, truths)};
}

std::vector<SweepRow> k_sweep(std::span<const VideoScores> videos, std::span<const std::size_t> ks) {
    std::vector<SweepRow> rows;
    for (std::size_t k : ks) {
        SweepRow row;
        row.k = k;
        std::vector<double> roc, pr;
        for (const auto& v : videos) {
            if (k < 1 || k >= std::max<std::size_t>(v.windows.length, 2))
                throw ConfigError("fall threshold k=" + std::to_string(k) + " outside 1.." +
                                  std::to_string(v.windows.length - 1));
            const auto truths = v.windows.truth(k);
            const std::size_t p = positives(truths);
            row.fall_windows += p;
            row.total_windows += truths.size();
            if (p == 0 || p == truths.size()) {
                ++row.videos_skipped;
                continue;
            }
            const auto scores = v.windows.scores();
            roc.push_back(*auc_roc(scores, truths));
            pr.push_back(*auc_pr(scores, truths));
            ++row.videos_evaluated;
        }
        row.roc = mean_std(roc);
        row.pr = mean_std(pr);
        row.baseline = row.total_windows == 0
                           ? 0.0
                           : static_cast<double>(row.fall_windows) / static_cast<double>(row.total_windows);
        rows.push_back(row);
    }
    return rows;
}

EvalReport evaluate(const ScoreSet& scores, const EvalOptions& options, std::vector<std::string>* dropped) {
    std::map<ModalityName, std::vector<VideoScores>> groups;
    for (const auto& v : scores.videos) groups[v.modality].push_back(v);
    std::map<ModalityName, std::size_t> short_skips;
    for (const auto& s : scores.skips) ++short_skips[s.modality];

    EvalReport report;
    report.family = options.family;
    report.ks = options.ks;
    const auto selected = families(options.family);
    const bool keep_mu = std::find(selected.begin(), selected.end(), ScoreFamily::Mu) != selected.end();
    const bool keep_sigma = std::find(selected.begin(), selected.end(), ScoreFamily::Sigma) != selected.end();

    for (const auto& [modality, videos] : groups) {
        ModalityReport m;
        m.modality = modality;
        try {
            m.per_video = per_video_eval(videos);
        } catch (const DataError& e) {
            if (dropped) dropped->push_back(std::string(to_string(modality)) + ": " + e.what());
            continue;
        }
        m.global = global_eval(videos);
        m.sweep = k_sweep(videos, options.ks);
        m.counts.videos_evaluated = m.per_video.videos.size();
        m.counts.videos_skipped_single_class = m.per_video.skipped.size();
        m.counts.videos_skipped_short = short_skips[modality];
        for (const auto& v : videos) {
            m.counts.total_frames += v.frames.size();
            for (const auto& f : v.frames) m.counts.fall_frames += f.truth;
        }
        if (!keep_mu) {
            m.per_video.mu = {};
            m.global.mu = {};
            for (auto& v : m.per_video.videos) v.mu = {};
        }
        if (!keep_sigma) {
            m.per_video.sigma = {};
            m.global.sigma = {};
            for (auto& v : m.per_video.videos) v.sigma = {};
        }
        report.modalities.push_back(std::move(m));
    }
    if (report.modalities.empty()) throw DataError("no evaluable video in any modality");
    return report;
}

double round6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::strtod(buf, nullptr);
}

std::string format6(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", *v);
    return buf;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using ojson = nlohmann::ordered_json;

ojson metric_json(const Metric& m) { return m ? ojson(round6(*m)) : ojson(nullptr); }

Metric metric_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

ojson mean_std_json(const std::optional<MeanStd>& m) {
    if (!m) return nullptr;
    return {{"mean", round6(m->mean)}, {"std", round6(m->std)}, {"count", m->count}};
}

std::optional<MeanStd> mean_std_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return MeanStd{j.at("mean").get<double>(), j.at("std").get<double>(), j.at("count").get<std::size_t>()};
}

ojson pair_json(const AucPair& p) { return {{"auc_roc", metric_json(p.roc)}, {"auc_pr", metric_json(p.pr)}}; }

AucPair pair_from(const nlohmann::json& j) { return {metric_from(j.at("auc_roc")), metric_from(j.at("auc_pr"))}; }

ojson summary_json(const FamilySummary& s) {
    return {{"auc_roc", mean_std_json(s.roc)}, {"auc_pr", mean_std_json(s.pr)}};
}

FamilySummary summary_from(const nlohmann::json& j) {
    return {mean_std_from(j.at("auc_roc")), mean_std_from(j.at("auc_pr"))};
}

}  // namespace

nlohmann::ordered_json EvalReport::to_json() const {
    const auto selected = families(family);
    ojson mods = ojson::array();
    for (const auto& m : modalities) {
        ojson videos = ojson::array();
        for (const auto& v : m.per_video.videos) {
            ojson entry = {{"video", v.video_id}};
            for (auto f : selected) entry[std::string(to_string(f))] = pair_json(f == ScoreFamily::Mu ? v.mu : v.sigma);
            videos.push_back(std::move(entry));
        }
        ojson per_video = {{"videos", std::move(videos)}, {"skipped", m.per_video.skipped}};
        ojson global = ojson::object();
        for (auto f : selected) {
            per_video[std::string(to_string(f))] = summary_json(m.per_video.summary(f));
            global[std::string(to_string(f))] = pair_json(m.global.family(f));
        }
        ojson sweep = ojson::array();
        for (const auto& r : m.sweep) {
            sweep.push_back({{"k", r.k},
                             {"auc_roc", mean_std_json(r.roc)},
                             {"auc_pr", mean_std_json(r.pr)},
                             {"baseline", round6(r.baseline)},
                             {"fall_windows", r.fall_windows},
                             {"total_windows", r.total_windows},
                             {"videos_evaluated", r.videos_evaluated},
                             {"videos_skipped", r.videos_skipped}});
        }
        const auto& c = m.counts;
        mods.push_back({{"modality", std::string(fallwatch::to_string(m.modality))},
                        {"counts",
                         {{"videos_evaluated", c.videos_evaluated},
                          {"videos_skipped_single_class", c.videos_skipped_single_class},
                          {"videos_skipped_short", c.videos_skipped_short},
                          {"total_frames", c.total_frames},
                          {"fall_frames", c.fall_frames},
                          {"pr_baseline", round6(c.pr_baseline())}}},
                        {"cross_context_per_video", std::move(per_video)},
                        {"cross_context_global", std::move(global)},
                        {"within_context", std::move(sweep)}});
    }
    return {{"family", std::string(fallwatch::to_string(family))}, {"k", ks}, {"modalities", std::move(mods)}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
    EvalReport r;
    try {
        r.family = parse_family_selection(j.at("family").get<std::string>());
        r.ks = j.at("k").get<std::vector<std::size_t>>();
        for (const auto& jm : j.at("modalities")) {
            ModalityReport m;
            const auto name = parse_modality(jm.at("modality").get<std::string>());
            if (!name) throw DataError("unknown modality in report");
            m.modality = *name;
            const auto& c = jm.at("counts");
            m.counts.videos_evaluated = c.at("videos_evaluated").get<std::size_t>();
            m.counts.videos_skipped_single_class = c.at("videos_skipped_single_class").get<std::size_t>();
            m.counts.videos_skipped_short = c.at("videos_skipped_short").get<std::size_t>();
            m.counts.total_frames = c.at("total_frames").get<std::size_t>();
            m.counts.fall_frames = c.at("fall_frames").get<std::size_t>();

            const auto& pv = jm.at("cross_context_per_video");
            for (const auto& jv : pv.at("videos")) {
                VideoResult v;
                v.video_id = jv.at("video").get<std::string>();
                if (jv.contains("mu")) v.mu = pair_from(jv["mu"]);
                if (jv.contains("sigma")) v.sigma = pair_from(jv["sigma"]);
                m.per_video.videos.push_back(std::move(v));
            }
            m.per_video.skipped = pv.at("skipped").get<std::vector<std::string>>();
            if (pv.contains("mu")) m.per_video.mu = summary_from(pv["mu"]);
            if (pv.contains("sigma")) m.per_video.sigma = summary_from(pv["sigma"]);
            const auto& g = jm.at("cross_context_global");
            if (g.contains("mu")) m.global.mu = pair_from(g["mu"]);
            if (g.contains("sigma")) m.global.sigma = pair_from(g["sigma"]);

            for (const auto& js : jm.at("within_context")) {
                SweepRow row;
                row.k = js.at("k").get<std::size_t>();
                row.roc = mean_std_from(js.at("auc_roc"));
                row.pr = mean_std_from(js.at("auc_pr"));
                row.baseline = js.at("baseline").get<double>();
                row.fall_windows = js.at("fall_windows").get<std::size_t>();
                row.total_windows = js.at("total_windows").get<std::size_t>();
                row.videos_evaluated = js.at("videos_evaluated").get<std::size_t>();
                row.videos_skipped = js.at("videos_skipped").get<std::size_t>();
                m.sweep.push_back(row);
            }
            r.modalities.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed report: ") + e.what());
    }
    return r;
}

}  // namespace fallwatch
