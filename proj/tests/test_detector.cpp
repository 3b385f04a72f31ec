#include <gtest/gtest.h>

#include <cmath>

#include "pnd/detector.hpp"
#include "pnd/pipeline.hpp"

using namespace pnd;

namespace {

LabeledDoc doc(std::vector<SparseEntry> e, int label) { return {SparseVector{std::move(e)}, label}; }

std::vector<LabeledDoc> random_docs(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<LabeledDoc> out;
    for (std::size_t i = 0; i < n; ++i) {
        SparseVector v;
        for (std::uint32_t k = 0; k < dim; ++k)
            if (uniform01(rng) < 0.4) v.entries.push_back({k, uniform(rng, -1.0, 1.0)});
        out.push_back({v, uniform01(rng) < 0.4 ? 1 : 0});
    }
    return out;
}

}  // namespace

TEST(LogReg, SeparableToyReachesFullAccuracy) {
    std::vector<LabeledDoc> data = {doc({{0, 1.0}}, 1), doc({{0, 0.8}}, 1), doc({{1, 1.0}}, 0), doc({{1, 0.7}}, 0)};
    auto m = train_logreg(data, 2);
    for (const auto& d : data) EXPECT_EQ(classify(m, d.vector, 0.5), d.label);
}

TEST(LogReg, ZeroVectorsLearnClassPrior) {
    std::vector<LabeledDoc> data;
    for (int i = 0; i < 30; ++i) data.push_back(doc({}, i < 9 ? 1 : 0));
    LogRegConfig cfg;
    cfg.epochs = 3000;
    auto m = train_logreg(data, 4, cfg);
    EXPECT_NEAR(predict_proba(m, {}), 0.3, 1e-6);
}

TEST(LogReg, GradientMatchesFiniteDifferences) {
    auto data = random_docs(40, 6, 21);
    Rng rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> w(6);
        for (auto& x : w) x = normal(rng, 0.0, 1.0);
        double b = normal(rng, 0.0, 1.0);
        std::vector<double> gw;
        double gb = 0;
        logreg_gradient(w, b, data, 0.01, gw, gb);
        const double h = 1e-6;
        auto rel = [](double a, double n) { return std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n)); };
        for (std::size_t i = 0; i < w.size(); ++i) {
            auto wp = w, wm = w;
            wp[i] += h;
            wm[i] -= h;
            double num = (logreg_loss(wp, b, data, 0.01) - logreg_loss(wm, b, data, 0.01)) / (2 * h);
            EXPECT_LT(rel(gw[i], num), 1e-5);
        }
        double num_b = (logreg_loss(w, b + h, data, 0.01) - logreg_loss(w, b - h, data, 0.01)) / (2 * h);
        EXPECT_LT(rel(gb, num_b), 1e-5);
    }
}

TEST(LogReg, SingleClassThrows) {
    EXPECT_THROW(train_logreg({doc({{0, 1.0}}, 1), doc({{0, 0.5}}, 1)}, 1), SingleClassData);
    EXPECT_THROW(train_logreg({}, 1), EmptyCorpus);
}

TEST(LogReg, LossMonotoneAndConverged) {
    auto data = random_docs(200, 10, 8);
    LogRegConfig cfg;
    cfg.lr = 0.1;
    auto m = train_logreg(data, 10, cfg);
    for (std::size_t i = 1; i < m.trace.size(); ++i) EXPECT_LE(m.trace[i].second, m.trace[i - 1].second + 1e-12);
    for (std::size_t i = m.trace.size() - 10; i < m.trace.size(); ++i)
        EXPECT_LE(m.trace[i].second, m.trace[i - 1].second + 1e-6);
    EXPECT_EQ(m.weights.size(), 10u);
}

TEST(LogReg, DeterministicGivenSeed) {
    auto data = random_docs(100, 8, 2);
    auto a = train_logreg(data, 8), b = train_logreg(data, 8);
    EXPECT_EQ(a.weights, b.weights);
    EXPECT_EQ(a.bias, b.bias);
}

TEST(Predict, SigmoidIdentities) {
    LogRegModel m;
    m.weights = {0.0, 0.0};
    EXPECT_DOUBLE_EQ(predict_proba(m, SparseVector{{{0, 3.0}}}), 0.5);
    m.bias = std::log(3.0);
    EXPECT_NEAR(predict_proba(m, {}), 0.75, 1e-15);
}

TEST(Predict, MatchesIndependentDotProduct) {
    auto data = random_docs(50, 7, 13);
    auto m = train_logreg(data, 7);
    for (const auto& d : data) {
        double z = m.bias;
        for (const auto& e : d.vector.entries) z += m.weights[e.index] * e.weight;
        EXPECT_EQ(predict_proba(m, d.vector), sigmoid(z));
    }
}

TEST(Classify, ThresholdRule) {
    LogRegModel m;
    m.weights = {0.0};
    m.bias = std::log(0.25 / 0.75);
    EXPECT_EQ(classify(m, {}, 0.2), 1);
    m.bias = std::log(0.19 / 0.81);
    EXPECT_EQ(classify(m, {}, 0.2), 0);
    EXPECT_THROW(classify(m, {}, 0.0), ConfigError);
}

TEST(Classify, RecallMonotoneInThreshold) {
    Rng rng(6);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 500; ++i) {
        y.push_back(uniform01(rng) < 0.3);
        s.push_back(uniform01(rng) * (y.back() ? 1.0 : 0.7));
    }
    double prev = -1.0;
    for (double t = 0.95; t > 0.01; t -= 0.05) {
        auto r = classification_report(s, y, t);
        EXPECT_GE(r.recall, prev);
        prev = r.recall;
    }
}

TEST(Report, PerfectSeparationAndF1Identity) {
    auto r = classification_report({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0}, 0.5);
    EXPECT_EQ(r.precision, 1.0);
    EXPECT_EQ(r.recall, 1.0);
    EXPECT_EQ(r.f1, 1.0);
    EXPECT_EQ(r.auc, 1.0);
    // one TP, one FP, one FN: precision = recall = 0.5
    auto h = classification_report({0.9, 0.8, 0.1, 0.2}, {1, 0, 1, 0}, 0.5);
    EXPECT_EQ(h.precision, 0.5);
    EXPECT_EQ(h.recall, 0.5);
    EXPECT_EQ(h.f1, 0.5);
}

TEST(Report, ShuffledLabelsGiveChanceAuc) {
    Rng rng(12);
    std::vector<double> s;
    std::vector<int> y;
    for (int i = 0; i < 20000; ++i) {
        s.push_back(uniform01(rng));
        y.push_back(uniform01(rng) < 0.5);
    }
    EXPECT_NEAR(classification_report(s, y, 0.5).auc, 0.5, 0.05);
}

TEST(Split, StratifiedAndDisjoint) {
    auto data = random_docs(1000, 3, 3);
    std::size_t pos = 0;
    for (const auto& d : data) pos += d.label;
    auto [tr, te] = stratified_split(data, 0.7, 7);
    EXPECT_EQ(tr.size() + te.size(), data.size());
    std::size_t tr_pos = 0;
    for (const auto& d : tr) tr_pos += d.label;
    EXPECT_EQ(tr_pos, static_cast<std::size_t>(std::llround(0.7 * static_cast<double>(pos))));
}

TEST(Bundle, JsonRoundTripAndFingerprintCheck) {
    std::vector<LabeledText> docs = generate_labeled_corpus({"FIC", "NAS", "XYZ"}, {"Binance"}, 300, 4);
    auto trained = train_detector(docs, default_stop_words());
    auto path = std::filesystem::temp_directory_path() / "pnd_detector_roundtrip.json";
    save_detector(path, trained.bundle);
    auto back = load_detector(path);
    EXPECT_EQ(back.model.weights, trained.bundle.model.weights);
    EXPECT_EQ(back.model.bias, trained.bundle.model.bias);
    EXPECT_EQ(back.vocab.terms, trained.bundle.vocab.terms);
    auto j = to_json(trained.bundle);
    j["vocab_fingerprint"] = j["vocab_fingerprint"].get<std::uint64_t>() + 1;
    EXPECT_THROW(detector_from_json(j), FormatError);
    std::filesystem::remove(path);
}
