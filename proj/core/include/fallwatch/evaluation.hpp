#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fallwatch/dataset.hpp"
#include "fallwatch/scoring.hpp"

namespace fallwatch {

/// nullopt means the metric is undefined for the input (e.g. only one class present).
using Metric = std::optional<double>;

/// P(score_pos > score_neg) + 0.5 P(equal), via midranks. nullopt unless both classes occur.
Metric auc_roc(std::span<const double> scores, std::span<const std::uint8_t> truths);

/// Average precision: sum over positives in descending score order of precision at that
/// positive's threshold times 1/P. Tied scores form one threshold. nullopt without positives.
Metric auc_pr(std::span<const double> scores, std::span<const std::uint8_t> truths);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// Empirical ROC from (0,0) to (1,1), one point per distinct score threshold.
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const std::uint8_t> truths);
double trapezoid_area(std::span<const RocPoint> curve);

double prevalence(std::span<const std::uint8_t> truths);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t count = 0;

    friend bool operator==(const MeanStd&, const MeanStd&) = default;
};

/// nullopt for an empty sample.
std::optional<MeanStd> mean_std(std::span<const double> values);

enum class ScoreFamily { Mu, Sigma };
enum class FamilySelection { Mu, Sigma, Both };

std::string_view to_string(ScoreFamily family);
std::string_view to_string(FamilySelection selection);
/// "mu", "sigma" or "both"; throws ConfigError otherwise.
FamilySelection parse_family_selection(std::string_view text);
std::vector<ScoreFamily> families(FamilySelection selection);

std::vector<double> family_scores(const FrameScoreSeries& series, ScoreFamily family);
std::vector<std::uint8_t> frame_truths(const FrameScoreSeries& series);

struct AucPair {
    Metric roc;
    Metric pr;

    friend bool operator==(const AucPair&, const AucPair&) = default;
};

struct VideoResult {
    std::string video_id;
    AucPair mu;
    AucPair sigma;

    friend bool operator==(const VideoResult&, const VideoResult&) = default;
};

struct FamilySummary {
    std::optional<MeanStd> roc;
    std::optional<MeanStd> pr;

    friend bool operator==(const FamilySummary&, const FamilySummary&) = default;
};

struct PerVideoEval {
    std::vector<VideoResult> videos;    // evaluable videos, input order
    std::vector<std::string> skipped;   // single-class videos
    FamilySummary mu;
    FamilySummary sigma;

    const FamilySummary& summary(ScoreFamily f) const { return f == ScoreFamily::Mu ? mu : sigma; }
    friend bool operator==(const PerVideoEval&, const PerVideoEval&) = default;
};

/// A video is evaluable when its frame truths contain both classes. Throws DataError
/// when no video is evaluable.
PerVideoEval per_video_eval(std::span<const VideoScores> videos);

struct GlobalEval {
    AucPair mu;
    AucPair sigma;

    const AucPair& family(ScoreFamily f) const { return f == ScoreFamily::Mu ? mu : sigma; }
    friend bool operator==(const GlobalEval&, const GlobalEval&) = default;
};

/// One ROC and PR over the concatenated (score, truth) stream of every video.
GlobalEval global_eval(std::span<const VideoScores> videos);

struct SweepRow {
    std::size_t k = 0;
    std::optional<MeanStd> roc;
    std::optional<MeanStd> pr;
    double baseline = 0.0;  // fall windows / total windows
    std::size_t fall_windows = 0;
    std::size_t total_windows = 0;
    std::size_t videos_evaluated = 0;
    std::size_t videos_skipped = 0;

    friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// Within-context sweep: per k, mean per-video AUC of window scores against
/// fall_frames >= k. Videos lacking either class at k are skipped for that k.
std::vector<SweepRow> k_sweep(std::span<const VideoScores> videos, std::span<const std::size_t> ks);

struct EvalCounts {
    std::size_t videos_evaluated = 0;
    std::size_t videos_skipped_single_class = 0;
    std::size_t videos_skipped_short = 0;
    std::size_t total_frames = 0;
    std::size_t fall_frames = 0;

    double pr_baseline() const noexcept {
        return total_frames == 0 ? 0.0 : static_cast<double>(fall_frames) / static_cast<double>(total_frames);
    }
    friend bool operator==(const EvalCounts&, const EvalCounts&) = default;
};

struct ModalityReport {
    ModalityName modality = ModalityName::Synthetic;
    PerVideoEval per_video;
    GlobalEval global;
    std::vector<SweepRow> sweep;
    EvalCounts counts;

    friend bool operator==(const ModalityReport&, const ModalityReport&) = default;
};

struct EvalOptions {
    FamilySelection family = FamilySelection::Both;
    std::vector<std::size_t> ks = {1, 2, 3, 4, 5, 6, 7};
};

struct EvalReport {
    FamilySelection family = FamilySelection::Both;
    std::vector<std::size_t> ks;
    std::vector<ModalityReport> modalities;  // enum order

    /// Floats rounded to 6 significant digits; undefined metrics are null.
    nlohmann::ordered_json to_json() const;
    static EvalReport from_json(const nlohmann::json& j);

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Groups the scored videos by modality and evaluates each group. Modalities without
/// an evaluable video are dropped with their count recorded in `dropped`. Throws
/// DataError if no modality is evaluable.
EvalReport evaluate(const ScoreSet& scores, const EvalOptions& options = {},
                    std::vector<std::string>* dropped = nullptr);

/// Rounds to 6 significant digits (the report's serialized precision).
double round6(double v);
/// "%.6g", or "NA" for an undefined value.
std::string format6(const std::optional<double>& v);

}  // namespace fallwatch
