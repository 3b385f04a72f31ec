#pragma once

// Ranking and classification metrics: rank-statistic AUC and per-event
// hit ratio lists.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace pnd {

// Rank-statistic AUC with ties counted 1/2. The numerator is accumulated in
// integer half-units so the result is exact for any input size that fits
// in 64 bits.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw FormatError("auc: scores/labels size mismatch");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::uint64_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw SingleClassData("auc needs both classes");

    // twice the rank sum of positives, using mid-ranks for ties
    std::uint64_t twice_rank_sum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        std::uint64_t twice_mid = static_cast<std::uint64_t>(i + 1) + static_cast<std::uint64_t>(j + 1);
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) twice_rank_sum += twice_mid;
        i = j + 1;
    }
    const std::uint64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    return auc(std::span<const double>(scores), std::span<const int>(labels));
}

struct ClassificationReport {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double auc = 0.0;
    double threshold = 0.0;
};

// Precision/recall/F1 at `threshold` (score >= threshold is positive) plus
// AUC over the raw scores. An empty predicted-positive set gives precision 0.
inline ClassificationReport classification_report(const std::vector<double>& scores, const std::vector<int>& labels,
                                                  double threshold) {
    if (scores.size() != labels.size()) throw FormatError("classification_report: size mismatch");
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool pred = scores[i] >= threshold;
        if (pred && labels[i]) ++tp;
        else if (pred) ++fp;
        else if (labels[i]) ++fn;
    }
    ClassificationReport r;
    r.threshold = threshold;
    r.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    r.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    r.f1 = r.precision + r.recall > 0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.auc = auc(scores, labels);
    return r;
}

// ---------------------------------------------------------------------------
// ranked lists

struct RankedEntry {
    std::string coin;
    double score = 0.0;
    int label = 0;
};

struct RankedList {
    std::string event_ref;
    std::vector<RankedEntry> entries;  // score descending, ties by coin ascending
    std::size_t positive_rank = 0;     // 1-based
};

inline bool ranked_before(const RankedEntry& a, const RankedEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.coin < b.coin;
}

// Sorts entries and locates the single positive. Throws FormatError unless
// exactly one entry has label 1 and every score is finite.
inline RankedList make_ranked_list(std::string event_ref, std::vector<RankedEntry> entries) {
    RankedList list;
    list.event_ref = std::move(event_ref);
    std::size_t positives = 0;
    for (const auto& e : entries) {
        if (!std::isfinite(e.score)) throw FormatError("non-finite score in ranked list " + list.event_ref);
        positives += e.label ? 1 : 0;
    }
    if (positives != 1)
        throw FormatError("ranked list " + list.event_ref + " has " + std::to_string(positives) + " positives");
    std::sort(entries.begin(), entries.end(), ranked_before);
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (entries[i].label) list.positive_rank = i + 1;
    list.entries = std::move(entries);
    return list;
}

inline double hit_ratio(const std::vector<RankedList>& lists, std::size_t k) {
    if (k < 1) throw ConfigError("hit_ratio: k must be >= 1");
    if (lists.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& l : lists) hits += l.positive_rank <= k ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(lists.size());
}

inline constexpr std::size_t kHitRatioKs[] = {1, 3, 5, 10, 20, 30};

}  // namespace pnd
