// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance                 run every criterion
//   acceptance --criterion 3   run one

#include <CLI11.hpp>
#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>

#include "pnd/pnd.hpp"

namespace fs = std::filesystem;
using namespace pnd;

namespace {

constexpr int kSeeds = 10;

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

void progress(const std::string& s) {
    std::fprintf(stderr, "  %s\n", s.c_str());
}

NormalizedSplit truth_split(const WorldConfig& wc, std::size_t seq_len) {
    PipelineOptions po;
    po.use_truth_events = true;
    po.seq_len = seq_len;
    return normalize(run_world_pipeline(generate_world(wc), po).split);
}

// Model settings shared by the world-level comparisons.
SnnConfig benchmark_snn(std::size_t seq_len, std::uint64_t seed) {
    SnnConfig c;
    c.seq_len = seq_len;
    c.coin_dim = 8;
    c.batch = 64;
    c.negative_keep = 0.3;
    c.seed = seed;
    return c;
}

constexpr std::size_t kBenchmarkSeq = 10;

// ---------------------------------------------------------------------------

Outcome gradient_check() {
    Stopwatch sw;
    const auto data = truth_split(default_world_config(1), 20);
    SnnConfig cfg;
    auto m = init_model(cfg, data.split.train, data.normalizer);
    Rng rng(17);
    // alpha away from zero so the attention path carries gradient
    for (Eigen::Index i = 0; i < m.p.alpha.size(); ++i) m.p.alpha.data()[i] = normal(rng, 0.0, 0.5);

    const auto& train = data.split.train;
    std::vector<std::size_t> batch;
    while (batch.size() < 28) batch.push_back(uniform_index(rng, train.samples.size()));
    for (std::size_t i = 0; i < train.samples.size() && batch.size() < 32; ++i)
        if (train.samples[i].label) batch.push_back(i);
    Tensors g;
    loss_and_gradient(m, train, batch, g);

    // one point in each embedding table and alpha, the rest across the MLP
    struct Slot {
        const char* name;
        Eigen::Index size;
        double* param;
        const double* grad;
    };
    std::vector<Slot> slots = {{"alpha", m.p.alpha.size(), m.p.alpha.data(), g.alpha.data()},
                               {"coin_emb", m.p.coin_emb.size(), m.p.coin_emb.data(), g.coin_emb.data()},
                               {"channel_emb", m.p.channel_emb.size(), m.p.channel_emb.data(), g.channel_emb.data()}};
    std::vector<Slot> mlp;
    for (std::size_t l = 0; l < m.p.weights.size(); ++l) {
        mlp.push_back({"weights", m.p.weights[l].size(), m.p.weights[l].data(), g.weights[l].data()});
        mlp.push_back({"biases", m.p.biases[l].size(), m.p.biases[l].data(), g.biases[l].data()});
    }
    for (std::size_t i = 0; slots.size() < 10; ++i) slots.push_back(mlp[i % mlp.size()]);

    double worst = 0.0;
    std::string worst_at;
    for (const auto& s : slots) {
        // a coordinate the batch actually touches
        std::vector<Eigen::Index> live;
        for (Eigen::Index k = 0; k < s.size; ++k)
            if (std::abs(s.grad[k]) > 1e-7) live.push_back(k);
        if (live.empty()) return {false, fmt("no live coordinate in %s", s.name)};
        const auto k = live[uniform_index(rng, live.size())];
        const double keep = s.param[k], h = 1e-5;
        s.param[k] = keep + h;
        const double lp = batch_loss(m, train, batch);
        s.param[k] = keep - h;
        const double lm = batch_loss(m, train, batch);
        s.param[k] = keep;
        const double num = (lp - lm) / (2 * h);
        const double rel = std::abs(s.grad[k] - num) / std::max(std::abs(s.grad[k]), std::abs(num));
        if (rel > worst) {
            worst = rel;
            worst_at = s.name;
        }
    }
    const double t = sw.seconds();
    return {worst < 1e-4 && t < 60.0, fmt("max relative error %.2e (%s) over 10 points, %.1f s", worst, worst_at.c_str(), t)};
}

Outcome degeneracy() {
    const auto data = truth_split(default_world_config(2), 10);
    SnnConfig base;
    base.seq_len = 10;
    base.epochs = 4;
    auto dnn_cfg = base, snn0_cfg = base, v_cfg = base, frozen_cfg = base;
    dnn_cfg.mode = ModelMode::DNN;
    snn0_cfg.seq_len = 0;
    v_cfg.mode = ModelMode::SNN_V;
    frozen_cfg.freeze_alpha = true;
    const auto& test = data.split.test;
    const bool a = predict(train_snn(data, dnn_cfg).model, test) == predict(train_snn(data, snn0_cfg).model, test);
    const bool b = predict(train_snn(data, v_cfg).model, test) == predict(train_snn(data, frozen_cfg).model, test);
    return {a && b, fmt("SNN(N=0) == DNN: %s, SNN(alpha frozen) == SNN_V: %s, %zu test scores each", a ? "yes" : "no",
                        b ? "yes" : "no", test.samples.size())};
}

Outcome model_ordering() {
    Stopwatch sw;
    int ordered = 0;
    double hr_dnn = 0, hr_snn = 0;
    std::vector<double> mean_auc(3, 0.0);
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto data = truth_split(benchmark_world_config(seed), kBenchmarkSeq);
        auto r = run_experiment(data, mode_grid(kBenchmarkSeq, seed), benchmark_snn(kBenchmarkSeq, seed));
        const bool ok = r[0].test.auc < r[1].test.auc && r[1].test.auc < r[2].test.auc;
        ordered += ok ? 1 : 0;
        for (int i = 0; i < 3; ++i) mean_auc[i] += r[i].test.auc / kSeeds;
        hr_dnn += r[0].test.hit_ratio.at(3) / kSeeds;
        hr_snn += r[2].test.hit_ratio.at(3) / kSeeds;
        progress(fmt("seed %d  AUC DNN %.4f SNN_V %.4f SNN %.4f  HR@3 DNN %.3f SNN %.3f%s", seed, r[0].test.auc,
                     r[1].test.auc, r[2].test.auc, r[0].test.hit_ratio.at(3), r[2].test.hit_ratio.at(3),
                     ok ? "" : "  (out of order)"));
    }
    const double t = sw.seconds();
    const bool pass = ordered >= 8 && hr_snn >= 1.10 * hr_dnn && t < 15 * 60;
    return {pass, fmt("DNN < SNN_V < SNN in %d/10 seeds (mean AUC %.4f / %.4f / %.4f), HR@3 SNN/DNN %.3f, %.0f s",
                      ordered, mean_auc[0], mean_auc[1], mean_auc[2], hr_snn / hr_dnn, t)};
}

Outcome pretrained_cold_start() {
    int wins = 0;
    std::vector<double> untrained;
    std::size_t dim = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto w = generate_world(cold_start_world_config(seed));
        PipelineOptions po;
        po.use_truth_events = true;
        po.seq_len = kBenchmarkSeq;
        const auto out = run_world_pipeline(w, po);
        const auto data = normalize(out.split);
        auto cfg = benchmark_snn(kBenchmarkSeq, seed);
        dim = cfg.coin_dim;

        const auto stop = default_stop_words();
        std::vector<TokenizedDoc> corpus;
        for (const auto& s : w.corpus) corpus.push_back(tokenize(s, stop));
        EmbedConfig ec;
        ec.d = static_cast<int>(cfg.coin_dim);
        ec.seed = static_cast<std::uint64_t>(seed);
        const auto table = train_skipgram(corpus, ec, w.symbols());

        const auto e2e = train_snn(data, cfg);
        auto pcfg = cfg;
        pcfg.embedding = EmbeddingMode::Pretrained;
        const auto pre = train_snn(data, pcfg, &table);
        const double a_e2e = evaluate_scores(data.split.test, predict(e2e.model, data.split.test)).auc;
        const double a_pre = evaluate_scores(data.split.test, predict(pre.model, data.split.test)).auc;
        wins += a_pre > a_e2e ? 1 : 0;

        const auto groups = coin_groups(out.split);
        for (auto id : groups.at("untrained")) {
            double l1 = 0;
            for (Eigen::Index k = 0; k < e2e.model.p.coin_emb.cols(); ++k)
                l1 += std::abs(e2e.model.p.coin_emb(static_cast<Eigen::Index>(id), k));
            untrained.push_back(l1);
        }
        progress(fmt("seed %d  test AUC E2E %.4f pretrained %.4f  untrained ids %zu", seed, a_e2e, a_pre,
                     groups.at("untrained").size()));
    }
    const double expected = normal_init_l1_expectation(dim, kEmbeddingInitStd);
    double mean = 0;
    for (double x : untrained) mean += x;
    mean = untrained.empty() ? 0.0 : mean / static_cast<double>(untrained.size());
    const double rel = std::abs(mean - expected) / expected;
    return {wins >= 8 && !untrained.empty() && rel <= 0.05,
            fmt("pretrained beats E2E in %d/10 seeds; untrained-id mean l1 %.5f vs %.5f expected (%.1f%% off, %zu ids)",
                wins, mean, expected, 100 * rel, untrained.size())};
}

Outcome sequence_length() {
    const std::vector<std::size_t> ns = {0, 5, 10, 20, 30, 40};
    int ok = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto data = truth_split(history_noise_world_config(seed), ns.back());
        auto r = run_experiment(data, sequence_sweep(ns, seed), benchmark_snn(ns.back(), seed));
        // N = 0 is the shared DNN cell
        std::vector<double> v = {r[0].test.auc}, s = {r[0].test.auc};
        for (std::size_t i = 1; i + 1 < r.size(); i += 2) {
            v.push_back(r[i].test.auc);
            s.push_back(r[i + 1].test.auc);
        }
        auto interior = [](const std::vector<double>& x) {
            auto at = std::max_element(x.begin(), x.end()) - x.begin();
            return at > 0 && at + 1 < static_cast<std::ptrdiff_t>(x.size());
        };
        const double drop_v = *std::max_element(v.begin(), v.end()) - v.back();
        const double drop_s = *std::max_element(s.begin(), s.end()) - s.back();
        const bool good = interior(v) && interior(s) && drop_s < drop_v;
        ok += good ? 1 : 0;
        std::string line = fmt("seed %d  SNN_V", seed);
        for (double x : v) line += fmt(" %.4f", x);
        line += "  SNN";
        for (double x : s) line += fmt(" %.4f", x);
        progress(line + fmt("  drop %.4f / %.4f%s", drop_v, drop_s, good ? "" : "  (miss)"));
    }
    return {ok >= 7, fmt("interior peak for both and smaller SNN drop at N=40 in %d/10 seeds", ok)};
}

Outcome attention_recency() {
    int ok = 0;
    double early_sum = 0, late_sum = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto data = truth_split(benchmark_world_config(seed), kBenchmarkSeq);
        const auto r = train_snn(data, benchmark_snn(kBenchmarkSeq, seed));
        const auto& a = r.model.p.alpha;
        const double early = a.topRows(5).mean(), late = a.bottomRows(5).mean();
        ok += early > late ? 1 : 0;
        early_sum += early;
        late_sum += late;
        progress(fmt("seed %d  mean alpha positions 1-5 %+.4f, 6-10 %+.4f", seed, early, late));
    }
    return {ok >= 8, fmt("recent positions weigh more in %d/10 seeds (mean alpha %+.4f vs %+.4f)", ok,
                         early_sum / kSeeds, late_sum / kSeeds)};
}

Outcome ranking_metrics() {
    Rng rng(23);
    int exact = 0, monotone = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 2 + uniform_index(rng, 60);
        std::vector<double> s(n);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = static_cast<double>(uniform_index(rng, 8));  // coarse grid forces ties
            y[i] = uniform01(rng) < 0.3 ? 1 : 0;
        }
        y[0] = 1;
        y[1] = 0;
        double wins = 0, pairs = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (y[i] && !y[j]) {
                    pairs += 1;
                    wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
                }
        exact += auc(s, y) == wins / pairs ? 1 : 0;

        std::vector<RankedList> lists;
        for (int l = 0; l < 5; ++l) {
            std::vector<RankedEntry> e;
            const std::size_t m = 2 + uniform_index(rng, 40), pos = uniform_index(rng, m);
            for (std::size_t i = 0; i < m; ++i)
                e.push_back({"c" + std::to_string(i), static_cast<double>(uniform_index(rng, 5)), i == pos ? 1 : 0});
            lists.push_back(make_ranked_list("e" + std::to_string(l), e));
        }
        bool mono = true;
        for (std::size_t k = 1; k < 50; ++k) mono = mono && hit_ratio(lists, k) <= hit_ratio(lists, k + 1);
        monotone += mono ? 1 : 0;
    }
    return {exact == 100 && monotone == 100,
            fmt("rank AUC equals brute force in %d/100, HR@k monotone in %d/100", exact, monotone)};
}

Outcome detector_auc() {
    Stopwatch sw;
    const auto w = generate_world(default_world_config(1));
    const auto res = train_detector(generate_labeled_corpus(w.symbols(), w.config.exchanges, 5000, 1), default_stop_words());
    const double t = sw.seconds();
    return {res.test_auc >= 0.95 && t < 120.0 && res.train_docs + res.test_docs == 5000,
            fmt("test AUC %.4f on %zu/%zu docs, %.1f s", res.test_auc, res.train_docs, res.test_docs, t)};
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(PND_CLI_PATH) + " " + args + " >> " + log.string() + " 2>&1";
    const int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        out[fs::relative(e.path(), dir).string()] = s.str();
    }
    return out;
}

// Full CLI run from world generation to predictions.
bool cli_pipeline(const fs::path& dir) {
    const auto log = dir.parent_path() / (dir.filename().string() + ".log");
    const std::string w = (dir / "world").string(), o = (dir / "work").string();
    const std::string fl = "-s seed=7 -s snn.epochs=3 -s snn.seq_len=10 -s features.seq_len=10";
    for (const auto& args : {
             fl + " synth -o " + w,
             fl + " detect train --labeled " + w + "/labeled.jsonl -o " + o + "/detector.json",
             fl + " detect score -m " + o + "/detector.json --messages " + w + "/messages.jsonl --listings " + w +
                 "/listings.csv -o " + o + "/scored.jsonl",
             fl + " sessionize -i " + o + "/scored.jsonl -o " + o + "/sessions.jsonl",
             fl + " extract-events -i " + o + "/sessions.jsonl --listings " + w + "/listings.csv -o " + o + "/events",
             fl + " featurize --merged " + o + "/events/merged.jsonl --candles " + w + "/candles --stats " + w +
                 "/coin_stats.csv --listings " + w + "/listings.csv --world " + w + "/world.json --pending " + w +
                 "/pending.jsonl -o " + o + "/data",
             fl + " embed train --corpus " + w + "/corpus.txt --listings " + w + "/listings.csv -o " + o +
                 "/embeddings.bin",
             fl + " train -d " + o + "/data -o " + o + "/model.ckpt",
             fl + " evaluate -m " + o + "/model.ckpt -d " + o + "/data -o " + o + "/results.csv",
             fl + " predict -m " + o + "/model.ckpt -d " + o + "/data/pending.bin -o " + o + "/predictions",
         })
        if (run_cli(args, log) != 0) return false;
    return true;
}

Outcome reproducibility() {
    const auto root = fs::temp_directory_path() / "pnd_acceptance_rerun";
    fs::remove_all(root);
    fs::create_directories(root);
    const bool ran = cli_pipeline(root / "a") && cli_pipeline(root / "b");
    std::size_t files = 0, differ = 0;
    if (ran) {
        const auto a = read_tree(root / "a"), b = read_tree(root / "b");
        files = a.size();
        for (const auto& [name, bytes] : a) differ += (!b.contains(name) || b.at(name) != bytes) ? 1 : 0;
        differ += b.size() != a.size() ? 1 : 0;
    }

    std::size_t leaks = 0, lists = 0;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto out = run_world_pipeline(generate_world(default_world_config(seed)));
        leaks += find_leakage(out.dataset);
        for (const auto* part : {&out.split.train, &out.split.validation, &out.split.test}) {
            leaks += find_leakage(*part);
            lists += part->lists.size();
        }
    }
    if (ran && differ == 0) fs::remove_all(root);
    return {ran && files > 0 && differ == 0 && leaks == 0,
            fmt("rerun: %s, %zu files, %zu differ; leakage %zu over %zu lists in 10 worlds", ran ? "ok" : "stage failed",
                files, differ, leaks, lists)};
}

Outcome extraction_and_drift() {
    std::size_t planted = 0, matched = 0, extracted = 0;
    double pumped = 0, random = 0;
    std::size_t np = 0, nr = 0;
    bool perfect = true;
    for (int seed = 1; seed <= kSeeds; ++seed) {
        const auto w = generate_world(default_world_config(seed));
        const auto out = run_world_pipeline(w);
        const auto audit = ground_truth_audit(w, out.extraction.events, out.extraction.review);
        perfect = perfect && audit.precision == 1.0 && audit.recall == 1.0;
        planted += audit.planted;
        matched += audit.matched;
        extracted += audit.extracted;

        Rng rng(static_cast<std::uint64_t>(seed));
        for (const auto& e : out.merged) {
            const auto listed = w.listings.snapshot(e.exchange, e.pairing_coin, e.pump_time);
            try {
                const double r = window_return(w.candles, e.target_coin, e.pairing_coin, e.pump_time, 60);
                pumped += r;
                ++np;
            } catch (const MissingData&) {
            }
            const auto& other = listed[uniform_index(rng, listed.size())];
            if (other == e.target_coin || other == e.pairing_coin) continue;
            try {
                random += window_return(w.candles, other, e.pairing_coin, e.pump_time, 60);
                ++nr;
            } catch (const MissingData&) {
            }
        }
    }
    const double mp = np ? pumped / static_cast<double>(np) : 0.0, mr = nr ? random / static_cast<double>(nr) : 0.0;
    return {perfect && np > 0 && nr > 0 && mp > mr,
            fmt("precision %.4f recall %.4f (%zu planted, %zu extracted); mean ret_60h pumped %.4f vs random %.4f",
                extracted ? static_cast<double>(matched) / static_cast<double>(extracted) : 0.0,
                planted ? static_cast<double>(matched) / static_cast<double>(planted) : 0.0, planted, extracted, mp, mr)};
}

const std::vector<std::pair<const char*, std::function<Outcome()>>> kCriteria = {
    {"gradient check", gradient_check},
    {"degenerate configurations", degeneracy},
    {"model ordering", model_ordering},
    {"pretrained embeddings under cold start", pretrained_cold_start},
    {"sequence length sweep", sequence_length},
    {"attention recency", attention_recency},
    {"ranking metrics", ranking_metrics},
    {"detector AUC", detector_auc},
    {"reproducibility and leakage", reproducibility},
    {"extraction and pre-pump drift", extraction_and_drift},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "Run a single criterion (1-10)")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    for (int i = 1; i <= static_cast<int>(kCriteria.size()); ++i) {
        if (only && i != only) continue;
        const auto& [name, fn] = kCriteria[static_cast<std::size_t>(i - 1)];
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("criterion %d %s: %s  %s\n", i, name, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed ? 1 : 0;
}
