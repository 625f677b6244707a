#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fallwatch/evaluation.hpp"

namespace fallwatch {

struct RenderedFile {
    std::string path;  // relative to the output directory
    std::string sha256;
};

struct OmittedFile {
    std::string path;
    std::string reason;
};

struct RenderResult {
    std::vector<RenderedFile> files;
    std::vector<OmittedFile> omitted;
};

/// Writes into `dir`:
///   report.json
///   tables/cross_context_per_video_{mu,sigma}.csv   one row per modality
///   tables/cross_context_global_{mu,sigma}.csv
///   tables/within_context_roc.csv                    columns k1..kK
///   tables/within_context_pr.csv                     plus one baseline row per modality
///   tables/counts.csv
///   plots/within_context_{roc,pr}.svg
///   manifest.json                                    file hashes and omitted outputs
/// Only the selected score families get cross-context tables. Rendering the report
/// reloaded from report.json reproduces every file byte for byte.
RenderResult render_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace fallwatch
