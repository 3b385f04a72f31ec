#pragma once

// Pump-message detector: L2-regularized logistic regression over TF-IDF
// vectors, trained by full-batch gradient descent.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "corpus.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "util.hpp"

namespace pnd {

struct LabeledDoc {
    SparseVector vector;
    int label = 0;  // 1 = pump message
};

struct LogRegConfig {
    double lr = 0.5;
    int epochs = 500;
    double l2 = 1e-4;
    std::uint64_t seed = 7;
};

struct LogRegModel {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<std::pair<int, double>> trace;  // (epoch, loss before the epoch's step)
    LogRegConfig config;
};

inline double sigmoid(double z) {
    if (z >= 0) {
        double e = std::exp(-z);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// Mean binary cross-entropy + l2 * |w|^2 / 2, evaluated from logits.
inline double logreg_loss(const std::vector<double>& w, double b, const std::vector<LabeledDoc>& data, double l2) {
    double loss = 0.0;
    for (const auto& d : data) {
        double z = d.vector.dot(w) + b;
        loss += d.label ? softplus(-z) : softplus(z);
    }
    loss /= static_cast<double>(data.size());
    double sq = 0.0;
    for (double x : w) sq += x * x;
    return loss + 0.5 * l2 * sq;
}

inline void logreg_gradient(const std::vector<double>& w, double b, const std::vector<LabeledDoc>& data, double l2,
                            std::vector<double>& grad_w, double& grad_b) {
    grad_w.assign(w.size(), 0.0);
    grad_b = 0.0;
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (const auto& d : data) {
        double r = (sigmoid(d.vector.dot(w) + b) - d.label) * inv_n;
        for (const auto& e : d.vector.entries) grad_w[e.index] += r * e.weight;
        grad_b += r;
    }
    for (std::size_t i = 0; i < w.size(); ++i) grad_w[i] += l2 * w[i];
}

inline LogRegModel train_logreg(const std::vector<LabeledDoc>& data, std::size_t dim, const LogRegConfig& config = {}) {
    if (data.empty()) throw EmptyCorpus("train_logreg: no training data");
    bool has_pos = false, has_neg = false;
    for (const auto& d : data) {
        (d.label ? has_pos : has_neg) = true;
        for (const auto& e : d.vector.entries)
            if (e.index >= dim) throw IdOutOfRange("feature index beyond vocabulary size");
    }
    if (!has_pos || !has_neg) throw SingleClassData("train_logreg needs both labels");

    LogRegModel m;
    m.config = config;
    m.weights.assign(dim, 0.0);
    std::vector<double> gw;
    double gb = 0.0;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        m.trace.emplace_back(epoch, logreg_loss(m.weights, m.bias, data, config.l2));
        logreg_gradient(m.weights, m.bias, data, config.l2, gw, gb);
        for (std::size_t i = 0; i < dim; ++i) m.weights[i] -= config.lr * gw[i];
        m.bias -= config.lr * gb;
    }
    m.trace.emplace_back(config.epochs, logreg_loss(m.weights, m.bias, data, config.l2));
    return m;
}

inline double predict_proba(const LogRegModel& model, const SparseVector& x) {
    double z = model.bias;
    for (const auto& e : x.entries)
        if (e.index < model.weights.size()) z += e.weight * model.weights[e.index];
    return sigmoid(z);
}

inline int classify(const LogRegModel& model, const SparseVector& x, double threshold = 0.2) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("classify: threshold must lie in (0, 1)");
    return predict_proba(model, x) >= threshold ? 1 : 0;
}

// Stratified split: each label class is shuffled and cut at `train_fraction`.
inline std::pair<std::vector<LabeledDoc>, std::vector<LabeledDoc>> stratified_split(
    const std::vector<LabeledDoc>& data, double train_fraction, std::uint64_t seed) {
    std::vector<std::size_t> by_label[2];
    for (std::size_t i = 0; i < data.size(); ++i) by_label[data[i].label ? 1 : 0].push_back(i);
    auto rng = fork_rng(seed, 0x5311);
    std::vector<LabeledDoc> train, test;
    for (auto& idx : by_label) {
        shuffle(idx, rng);
        auto cut = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t k = 0; k < idx.size(); ++k) (k < cut ? train : test).push_back(data[idx[k]]);
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// persistence: JSON holding the vocabulary so scoring is self-contained

struct DetectorBundle {
    TfidfVocabulary vocab;
    LogRegModel model;
    double threshold = 0.2;
};

inline constexpr int kDetectorFormatVersion = 1;

inline nlohmann::json to_json(const DetectorBundle& b) {
    nlohmann::json trace = nlohmann::json::array();
    for (auto [e, l] : b.model.trace) trace.push_back({e, l});
    return {{"format", "pnd.detector"},
            {"version", kDetectorFormatVersion},
            {"vocab_fingerprint", b.vocab.fingerprint()},
            {"vocabulary", {{"terms", b.vocab.terms}, {"doc_freq", b.vocab.doc_freq}, {"n_docs", b.vocab.n_docs}}},
            {"weights", b.model.weights},
            {"bias", b.model.bias},
            {"threshold", b.threshold},
            {"config",
             {{"lr", b.model.config.lr},
              {"epochs", b.model.config.epochs},
              {"l2", b.model.config.l2},
              {"seed", b.model.config.seed}}},
            {"trace", trace}};
}

inline DetectorBundle detector_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "pnd.detector") throw FormatError("not a detector file");
    if (j.value("version", 0) != kDetectorFormatVersion) throw FormatError("unsupported detector version");
    DetectorBundle b;
    const auto& v = j.at("vocabulary");
    b.vocab = vocabulary_from_terms(v.at("terms").get<std::vector<std::string>>(),
                                    v.at("doc_freq").get<std::vector<std::int64_t>>(), v.at("n_docs").get<std::int64_t>());
    if (b.vocab.fingerprint() != j.at("vocab_fingerprint").get<std::uint64_t>())
        throw FormatError("detector vocabulary fingerprint mismatch");
    b.model.weights = j.at("weights").get<std::vector<double>>();
    if (b.model.weights.size() != b.vocab.size()) throw FormatError("detector weight length != vocabulary size");
    b.model.bias = j.at("bias").get<double>();
    b.threshold = j.value("threshold", 0.2);
    const auto& c = j.at("config");
    b.model.config = {c.at("lr").get<double>(), c.at("epochs").get<int>(), c.at("l2").get<double>(),
                      c.at("seed").get<std::uint64_t>()};
    for (const auto& t : j.at("trace")) b.model.trace.emplace_back(t[0].get<int>(), t[1].get<double>());
    return b;
}

inline void save_detector(const std::filesystem::path& path, const DetectorBundle& b) {
    auto out = open_output(path);
    out << to_json(b).dump(1) << '\n';
}

inline DetectorBundle load_detector(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    return detector_from_json(j);
}

}  // namespace pnd
