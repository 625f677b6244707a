#pragma once

// Deliberately naive reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "fallwatch/scoring.hpp"

namespace fallwatch::testing {

struct BruteFrame {
    double mu = 0.0;
    double sigma = 0.0;
    std::size_t n = 0;
};

// Every window is checked for every frame; no coverage arithmetic.
inline std::vector<BruteFrame> brute_cross_context(const ErrorMatrix& e) {
    std::size_t frames = 0;
    for (auto s : e.starts) frames = std::max(frames, s + e.length);
    std::vector<BruteFrame> out(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        std::vector<long double> values;
        for (std::size_t w = 0; w < e.windows(); ++w)
            if (e.starts[w] <= i && i < e.starts[w] + e.length) values.push_back(e.at(w, i - e.starts[w]));
        long double sum = 0;
        for (auto v : values) sum += v;
        const long double mean = sum / values.size();
        long double ss = 0;
        for (auto v : values) ss += (v - mean) * (v - mean);
        out[i] = {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / values.size())), values.size()};
    }
    return out;
}

// Window scores in ascending start order.
inline std::vector<std::pair<std::size_t, double>> brute_within_context(const ErrorMatrix& e) {
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t w = 0; w < e.windows(); ++w) {
        long double sum = 0;
        for (std::size_t t = 0; t < e.length; ++t) sum += e.at(w, t);
        out.emplace_back(e.starts[w], static_cast<double>(sum / e.length));
    }
    std::sort(out.begin(), out.end());
    return out;
}

// Fraction of (positive, negative) pairs ranked correctly, ties counting one half.
inline double brute_auc_roc(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    double concordant = 0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!y[i]) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j]) continue;
            ++pairs;
            if (s[i] > s[j]) concordant += 1.0;
            else if (s[i] == s[j]) concordant += 0.5;
        }
    }
    return concordant / static_cast<double>(pairs);
}

// Mean over positives (highest score first) of the precision at that positive's score.
inline double brute_average_precision(const std::vector<double>& s, const std::vector<std::uint8_t>& y) {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (y[i]) pos.push_back(i);
    std::stable_sort(pos.begin(), pos.end(), [&](auto a, auto b) { return s[a] > s[b]; });
    double total = 0.0;
    for (auto i : pos) {
        std::size_t tp = 0, seen = 0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (s[j] >= s[i]) {
                ++seen;
                tp += y[j];
            }
        }
        total += static_cast<double>(tp) / static_cast<double>(seen);
    }
    return total / static_cast<double>(pos.size());
}

struct AucInstance {
    std::vector<double> scores;
    std::vector<std::uint8_t> truths;
};

// Random labelled scores with both classes; every other instance draws from a small
// integer range so ties are common.
inline AucInstance random_auc_instance(std::mt19937_64& rng, std::size_t max_n) {
    std::uniform_int_distribution<std::size_t> size(2, max_n);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> level(0, 5);
    const bool tied = rng() % 2 == 0;
    AucInstance inst;
    const std::size_t n = size(rng);
    const double prevalence = 0.05 + 0.9 * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
        inst.truths.push_back(unit(rng) < prevalence ? 1 : 0);
        inst.scores.push_back(tied ? level(rng) : unit(rng));
    }
    inst.truths[0] = 1;
    inst.truths[1] = 0;
    std::shuffle(inst.truths.begin(), inst.truths.end(), rng);
    return inst;
}

// Window errors for a clip of n frames with windows in shuffled order.
inline ErrorMatrix random_error_matrix(std::mt19937_64& rng, std::size_t n, const WindowSpec& spec) {
    ErrorMatrix e;
    e.length = spec.length;
    const std::size_t count = window_count(n, spec);
    std::vector<std::size_t> order(count);
    for (std::size_t w = 0; w < count; ++w) order[w] = w;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_real_distribution<double> err(0.0, 0.1);
    for (auto w : order) {
        e.starts.push_back(w * spec.stride);
        for (std::size_t t = 0; t < spec.length; ++t) e.values.push_back(err(rng));
    }
    return e;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("fallwatch-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& child) const { return path_ / child; }

private:
    std::filesystem::path path_;
};

}  // namespace fallwatch::testing
