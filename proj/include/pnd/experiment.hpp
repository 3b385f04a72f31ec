#pragma once

// Ranking evaluation over per-event lists and the experiment grid (model
// mode x embedding mode x sequence length).

#include <cstdint>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "embed.hpp"
#include "features.hpp"
#include "metrics.hpp"
#include "snn.hpp"

namespace pnd {

// One ranked list per sample list that holds a positive; pending lists are
// skipped.
inline std::vector<RankedList> ranked_lists(const Dataset& ds, const std::vector<double>& scores) {
    if (scores.size() != ds.samples.size()) throw FormatError("ranked_lists: one score per sample expected");
    std::vector<std::vector<RankedEntry>> per_list(ds.lists.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        per_list[s.list].push_back({ds.coin_of(s), scores[i], s.label});
    }
    std::vector<RankedList> out;
    for (std::size_t l = 0; l < per_list.size(); ++l) {
        bool has_pos = false;
        for (const auto& e : per_list[l]) has_pos = has_pos || e.label;
        if (has_pos) out.push_back(make_ranked_list(ds.lists[l].ref, std::move(per_list[l])));
    }
    return out;
}

struct EvalResult {
    double auc = 0.0;
    std::map<int, double> hit_ratio;
    std::size_t lists = 0;
    std::size_t samples = 0;
};

inline EvalResult evaluate_scores(const Dataset& ds, const std::vector<double>& scores) {
    EvalResult r;
    std::vector<int> labels;
    labels.reserve(ds.samples.size());
    for (const auto& s : ds.samples) labels.push_back(s.label);
    r.auc = auc(scores, labels);
    auto lists = ranked_lists(ds, scores);
    r.lists = lists.size();
    r.samples = ds.samples.size();
    for (int k : kHitRatioKs) r.hit_ratio[k] = hit_ratio(lists, k);
    return r;
}

struct ExperimentCell {
    ModelMode mode = ModelMode::SNN;
    EmbeddingMode embedding = EmbeddingMode::E2E;
    std::size_t seq_len = 20;
    std::uint64_t seed = 1;

    std::string label() const {
        auto s = to_string(mode);
        if (embedding == EmbeddingMode::Pretrained) s += "+pretrained";
        return s;
    }
};

struct CellResult {
    ExperimentCell cell;
    EvalResult test;
    double best_val_auc = 0.0;
    int best_epoch = -1;
    int epochs_run = 0;
};

// Trains and evaluates every cell on the same split; cells share `base`
// except for mode, embedding mode, N and seed.
inline std::vector<CellResult> run_experiment(const NormalizedSplit& data, const std::vector<ExperimentCell>& cells,
                                              const SnnConfig& base, const EmbeddingTable* table = nullptr,
                                              std::vector<TrainResult>* trained = nullptr) {
    std::vector<CellResult> out;
    for (const auto& cell : cells) {
        SnnConfig cfg = base;
        cfg.mode = cell.mode;
        cfg.embedding = cell.embedding;
        cfg.seq_len = cell.seq_len;
        cfg.seed = cell.seed;
        auto tr = train_snn(data, cfg, table);
        CellResult r;
        r.cell = cell;
        r.test = evaluate_scores(data.split.test, predict(tr.model, data.split.test));
        r.best_val_auc = tr.best_val_auc;
        r.best_epoch = tr.best_epoch;
        r.epochs_run = static_cast<int>(tr.log.size());
        out.push_back(r);
        if (trained) trained->push_back(std::move(tr));
    }
    return out;
}

// Grid helpers.
inline std::vector<ExperimentCell> mode_grid(std::size_t seq_len, std::uint64_t seed) {
    return {{ModelMode::DNN, EmbeddingMode::E2E, 0, seed},
            {ModelMode::SNN_V, EmbeddingMode::E2E, seq_len, seed},
            {ModelMode::SNN, EmbeddingMode::E2E, seq_len, seed}};
}

inline std::vector<ExperimentCell> sequence_sweep(const std::vector<std::size_t>& ns, std::uint64_t seed) {
    std::vector<ExperimentCell> cells;
    for (auto n : ns) {
        if (n == 0) {
            cells.push_back({ModelMode::DNN, EmbeddingMode::E2E, 0, seed});
            continue;
        }
        cells.push_back({ModelMode::SNN_V, EmbeddingMode::E2E, n, seed});
        cells.push_back({ModelMode::SNN, EmbeddingMode::E2E, n, seed});
    }
    return cells;
}

inline void write_results_csv(std::ostream& out, const std::vector<CellResult>& rows) {
    out << "model,mode,embedding,seq_len,seed,auc";
    for (int k : kHitRatioKs) out << ",hr@" << k;
    out << ",val_auc,best_epoch,lists\n";
    for (const auto& r : rows) {
        out << r.cell.label() << ',' << to_string(r.cell.mode) << ',' << to_string(r.cell.embedding) << ','
            << r.cell.seq_len << ',' << r.cell.seed << ',' << format_double(r.test.auc);
        for (int k : kHitRatioKs) out << ',' << format_double(r.test.hit_ratio.at(k));
        out << ',' << format_double(r.best_val_auc) << ',' << r.best_epoch << ',' << r.test.lists << '\n';
    }
}

inline std::vector<CellResult> read_results_csv(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    std::vector<CellResult> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto c = split(lines[i], ',');
        if (c.size() != 6 + std::size(kHitRatioKs) + 3) throw MalformedRow(i + 1, "unexpected column count");
        CellResult r;
        r.cell.mode = parse_mode(c[1]);
        r.cell.embedding = parse_embedding_mode(c[2]);
        bool ok = parse_number(c[3], r.cell.seq_len) && parse_number(c[4], r.cell.seed) && parse_number(c[5], r.test.auc);
        for (std::size_t k = 0; k < std::size(kHitRatioKs); ++k) {
            double v = 0;
            ok = ok && parse_number(c[6 + k], v);
            r.test.hit_ratio[kHitRatioKs[k]] = v;
        }
        const auto base = 6 + std::size(kHitRatioKs);
        ok = ok && parse_number(c[base], r.best_val_auc) && parse_number(c[base + 1], r.best_epoch) &&
             parse_number(c[base + 2], r.test.lists);
        if (!ok) throw MalformedRow(i + 1, "bad number");
        rows.push_back(r);
    }
    return rows;
}

// Fixed-width table in the layout of a comparison table: one row per model,
// AUC then HR@k columns. Rows with the same label (several seeds) are
// averaged.
inline std::string render_results_table(const std::vector<CellResult>& rows) {
    std::vector<std::string> order;
    std::map<std::string, std::vector<const CellResult*>> groups;
    for (const auto& r : rows) {
        auto key = r.cell.label() + (r.cell.seq_len && r.cell.mode != ModelMode::DNN ? " N=" + std::to_string(r.cell.seq_len) : "");
        if (!groups.contains(key)) order.push_back(key);
        groups[key].push_back(&r);
    }
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-22s %7s", "Model", "AUC");
    os << buf;
    for (int k : kHitRatioKs) {
        std::snprintf(buf, sizeof(buf), " %7s", ("HR@" + std::to_string(k)).c_str());
        os << buf;
    }
    os << "  runs\n";
    for (const auto& key : order) {
        const auto& g = groups[key];
        double a = 0.0;
        std::map<int, double> hr;
        for (const auto* r : g) {
            a += r->test.auc;
            for (int k : kHitRatioKs) hr[k] += r->test.hit_ratio.at(k);
        }
        const double n = static_cast<double>(g.size());
        std::snprintf(buf, sizeof(buf), "%-22s %7.4f", key.c_str(), a / n);
        os << buf;
        for (int k : kHitRatioKs) {
            std::snprintf(buf, sizeof(buf), " %7.4f", hr[k] / n);
            os << buf;
        }
        os << "  " << g.size() << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// cold-start diagnostics

// Coin-id groups for the l1-norm report, derived from the training split:
// train-positive (pumped in training), train-negative (only ever negative),
// untrained (never in any training sample or sequence), and
// test-positive-unseen (test targets never pumped in training).
inline std::map<std::string, std::vector<std::size_t>> coin_groups(const DatasetSplit& split) {
    const auto n = split.train.coins.size();
    std::vector<char> pos(n, 0), seen(n, 0);
    for (const auto& s : split.train.samples) {
        seen[static_cast<std::size_t>(s.coin_id)] = 1;
        if (s.label) pos[static_cast<std::size_t>(s.coin_id)] = 1;
    }
    for (const auto& l : split.train.lists)
        for (std::size_t i = 0; i < l.seq_mask.size(); ++i)
            if (l.seq_mask[i]) seen[static_cast<std::size_t>(l.seq_coin_ids[i])] = 1;
    std::map<std::string, std::vector<std::size_t>> g;
    g["train-positive"];
    g["train-negative"];
    g["untrained"];
    g["test-positive-unseen"];
    std::vector<char> test_unseen(n, 0);
    for (const auto& s : split.test.samples)
        if (s.label && !pos[static_cast<std::size_t>(s.coin_id)]) test_unseen[static_cast<std::size_t>(s.coin_id)] = 1;
    for (std::size_t i = 2; i < n; ++i) {
        if (pos[i]) g["train-positive"].push_back(i);
        else if (seen[i]) g["train-negative"].push_back(i);
        else g["untrained"].push_back(i);
        if (test_unseen[i]) g["test-positive-unseen"].push_back(i);
    }
    return g;
}

inline std::vector<NormSummary> model_l1_report(const SnnModel& m, const DatasetSplit& split) {
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m.p.coin_emb;
    return l1_norm_report(std::span<const double>(rows.data(), static_cast<std::size_t>(rows.size())),
                          static_cast<std::size_t>(rows.cols()), coin_groups(split));
}

}  // namespace pnd
