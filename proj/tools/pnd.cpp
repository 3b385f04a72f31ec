// pnd: command-line driver for the pump-and-dump target prediction pipeline.
// Every stage reads and writes the files named by its flags (or by the
// [paths] section of the config file) and nothing else.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "pnd/pnd.hpp"

namespace fs = std::filesystem;
using namespace pnd;

namespace {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kConfigError = 3,
    kMissingInput = 4,
    kStageError = 5,
};

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
    Config cfg;
};

// Resolution order: explicit flag, then [paths] entry (env overridable),
// then the default under the work directory.
struct Paths {
    const Config* cfg = nullptr;

    fs::path work() const { return cfg->value<std::string>("paths.work", "run"); }
    fs::path world() const { return cfg->value<std::string>("paths.world", (work() / "world").string()); }

    fs::path get(const std::string& flag, const std::string& key, const fs::path& fallback) const {
        if (!flag.empty()) return flag;
        return cfg->value<std::string>("paths." + key, fallback.string());
    }
};

void require(const fs::path& p) {
    if (!fs::exists(p)) throw MissingInput(p.string());
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

// ---------------------------------------------------------------------------
// scored message files

struct ScoredMessage {
    Message msg;
    double score = 0.0;
    bool flagged = false;
};

void write_scored(const fs::path& path, const std::vector<ScoredMessage>& rows) {
    auto out = open_output(path);
    for (const auto& r : rows) {
        auto j = to_json(r.msg);
        j["score"] = r.score;
        j["flagged"] = r.flagged;
        out << j.dump() << '\n';
    }
}

std::vector<ScoredMessage> read_scored(const fs::path& path) {
    std::vector<ScoredMessage> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back({message_from_json(j), j.at("score").get<double>(), j.at("flagged").get<bool>()});
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
    });
    return out;
}

std::string safe_name(std::string s) {
    for (auto& c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return s;
}

Dataset load_split_part(const fs::path& dir, const std::string& part) {
    auto p = dir / (part + ".bin");
    require(p);
    return load_dataset(p);
}

// ---------------------------------------------------------------------------
// stages

int run_synth(const Globals& g, const std::string& out_flag, std::size_t labeled_docs) {
    Paths paths{&g.cfg};
    auto out = paths.get(out_flag, "world", paths.world());
    auto wc = world_config_from(g.cfg);
    auto w = generate_world(wc);
    write_world(w, out, g.cfg.value<std::size_t>("synth.labeled_docs", labeled_docs));
    std::printf("world: %zu channels, %zu coins, %zu events (%zu merged), %zu messages -> %s\n", w.channels.size(),
                w.coins.size(), w.planted.size(), w.merged.size(), w.messages.size(), out.string().c_str());
    return kOk;
}

int run_detect_train(const Globals& g, const std::string& labeled_flag, const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto labeled = paths.get(labeled_flag, "labeled", paths.world() / "labeled.jsonl");
    auto out = paths.get(out_flag, "detector", paths.work() / "detector.json");
    require(labeled);
    auto docs = read_labeled_jsonl(labeled);
    auto res = train_detector(docs, default_stop_words(), logreg_config_from(g.cfg),
                              g.cfg.value("detector.train_fraction", 0.7), g.cfg.value("detector.threshold", 0.2));
    save_detector(out, res.bundle);
    std::printf("detector: %zu train / %zu test docs, vocabulary %zu, test AUC %.4f -> %s\n", res.train_docs,
                res.test_docs, res.bundle.vocab.size(), res.test_auc, out.string().c_str());
    return kOk;
}

int run_detect_score(const Globals& g, const std::string& model_flag, const std::string& messages_flag,
                     const std::string& listings_flag, const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto model = paths.get(model_flag, "detector", paths.work() / "detector.json");
    auto messages = paths.get(messages_flag, "messages", paths.world() / "messages.jsonl");
    auto listings_path = paths.get(listings_flag, "listings", paths.world() / "listings.csv");
    auto out = paths.get(out_flag, "scored", paths.work() / "scored.jsonl");
    for (const auto& p : {model, messages, listings_path}) require(p);

    auto bundle = load_detector(model);
    auto msgs = read_messages_jsonl(messages);
    auto listings = load_listings(listings_path);
    auto coins = listings.all_coins();
    auto stop = default_stop_words();
    FlagContext fc{&bundle, keyword_lexicon({coins.begin(), coins.end()}, listing_exchanges(listings)),
                   event_lexicon(listings), stop};
    auto flags = flag_messages(msgs, fc);
    std::vector<ScoredMessage> rows;
    std::size_t n_flagged = 0;
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        rows.push_back({msgs[i], detector_score(bundle, msgs[i].text, stop), flags[i]});
        n_flagged += flags[i] ? 1 : 0;
    }
    write_scored(out, rows);
    std::printf("scored %zu messages, %zu flagged -> %s\n", rows.size(), n_flagged, out.string().c_str());
    return kOk;
}

int run_sessionize(const Globals& g, const std::string& in_flag, const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto in = paths.get(in_flag, "scored", paths.work() / "scored.jsonl");
    auto out = paths.get(out_flag, "sessions", paths.work() / "sessions.jsonl");
    require(in);
    std::vector<Message> kept;
    for (auto& r : read_scored(in))
        if (r.flagged) kept.push_back(std::move(r.msg));
    auto sessions = sessionize(kept);
    write_jsonl(out, sessions);
    std::printf("%zu sessions from %zu flagged messages -> %s\n", sessions.size(), kept.size(), out.string().c_str());
    return kOk;
}

int run_extract(const Globals& g, const std::string& in_flag, const std::string& listings_flag,
                const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto in = paths.get(in_flag, "sessions", paths.work() / "sessions.jsonl");
    auto listings_path = paths.get(listings_flag, "listings", paths.world() / "listings.csv");
    auto out = paths.get(out_flag, "events", paths.work() / "events");
    for (const auto& p : {in, listings_path}) require(p);
    auto res = extract_events(read_sessions_jsonl(in), event_lexicon(load_listings(listings_path)));
    auto merged = merge_events(res.events);
    fs::create_directories(out);
    write_jsonl(out / "events.jsonl", res.events);
    write_jsonl(out / "merged.jsonl", merged);
    write_jsonl(out / "review.jsonl", res.review);
    std::printf("%zu sessions: %zu events, %zu merged, %zu sent to review -> %s\n", res.sessions, res.events.size(),
                merged.size(), res.review.size(), out.string().c_str());
    return kOk;
}

struct FeaturizeFlags {
    std::string merged, candles, stats, listings, world_json, pending, out;
    std::int64_t t1 = 0, t2 = 0;
};

int run_featurize(const Globals& g, const FeaturizeFlags& f) {
    Paths paths{&g.cfg};
    auto merged_path = paths.get(f.merged, "merged", paths.work() / "events" / "merged.jsonl");
    auto candles_path = paths.get(f.candles, "candles", paths.world() / "candles");
    auto stats_path = paths.get(f.stats, "coin_stats", paths.world() / "coin_stats.csv");
    auto listings_path = paths.get(f.listings, "listings", paths.world() / "listings.csv");
    auto pending_path = paths.get(f.pending, "pending", paths.world() / "pending.jsonl");
    auto out = paths.get(f.out, "data", paths.work() / "data");
    for (const auto& p : {merged_path, candles_path, stats_path, listings_path}) require(p);

    std::int64_t t1 = f.t1 ? f.t1 : g.cfg.value<std::int64_t>("split.t1", 0);
    std::int64_t t2 = f.t2 ? f.t2 : g.cfg.value<std::int64_t>("split.t2", 0);
    if (!t1 || !t2) {
        auto wj = paths.get(f.world_json, "world_json", paths.world() / "world.json");
        if (!fs::exists(wj)) throw ConfigError("split times not given and " + wj.string() + " not found");
        std::ifstream in(wj);
        auto j = nlohmann::json::parse(in);
        if (!t1) t1 = j.at("t1").get<std::int64_t>();
        if (!t2) t2 = j.at("t2").get<std::int64_t>();
    }

    auto candles = load_candles(candles_path);
    auto stats = load_coin_stats(stats_path);
    auto listings = load_listings(listings_path);
    MarketContext ctx{&candles, &stats, &listings, default_exclusions()};
    auto merged = read_merged_events_jsonl(merged_path);
    const auto seq_len = g.cfg.value<std::size_t>("features.seq_len", 20);
    auto ds = build_dataset(merged, ctx, {seq_len, true});
    auto split = temporal_split(ds, t1, t2);
    fs::create_directories(out);
    save_dataset(out / "train.bin", split.train);
    save_dataset(out / "validation.bin", split.validation);
    save_dataset(out / "test.bin", split.test);
    std::size_t pending_lists = 0;
    if (fs::exists(pending_path)) {
        auto pending = build_pending_dataset(merged, read_pending_jsonl(pending_path), ctx, seq_len);
        pending_lists = pending.lists.size();
        save_dataset(out / "pending.bin", pending);
    }
    std::printf("lists train/validation/test %zu/%zu/%zu, samples %zu/%zu/%zu, pending lists %zu -> %s\n",
                split.train.lists.size(), split.validation.lists.size(), split.test.lists.size(),
                split.train.samples.size(), split.validation.samples.size(), split.test.samples.size(), pending_lists,
                out.string().c_str());
    return kOk;
}

int run_embed_train(const Globals& g, const std::string& corpus_flag, const std::string& listings_flag,
                    const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto corpus_path = paths.get(corpus_flag, "corpus", paths.world() / "corpus.txt");
    auto listings_path = paths.get(listings_flag, "listings", paths.world() / "listings.csv");
    auto out = paths.get(out_flag, "embeddings", paths.work() / "embeddings.bin");
    require(corpus_path);
    auto stop = default_stop_words();
    std::vector<TokenizedDoc> corpus;
    for (const auto& line : read_lines(corpus_path))
        if (!trim(line).empty()) corpus.push_back(tokenize(line, stop));
    std::vector<std::string> inject;
    if (fs::exists(listings_path))
        for (const auto& c : load_listings(listings_path).all_coins()) inject.push_back(c);
    auto algo = parse_algorithm(g.cfg.value<std::string>("embed.algorithm", "skipgram"));
    auto table = train_embeddings(corpus, algo, embed_config_from(g.cfg), inject);
    save_embeddings(out, table);
    std::printf("%s embeddings: %zu tokens x %zu -> %s\n", to_string(algo).c_str(), table.size(), table.dim(),
                out.string().c_str());
    return kOk;
}

int run_train(const Globals& g, const std::string& data_flag, const std::string& emb_flag, const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto data = paths.get(data_flag, "data", paths.work() / "data");
    auto out = paths.get(out_flag, "model", paths.work() / "model.ckpt");
    auto cfg = snn_config_from(g.cfg);

    DatasetSplit split;
    split.train = load_split_part(data, "train");
    split.validation = load_split_part(data, "validation");
    split.test = load_split_part(data, "test");
    std::optional<EmbeddingTable> table;
    if (cfg.embedding == EmbeddingMode::Pretrained) {
        auto emb = paths.get(emb_flag, "embeddings", paths.work() / "embeddings.bin");
        require(emb);
        table = load_embeddings(emb);
    }
    auto ns = normalize(split);
    auto res = train_snn(ns, cfg, table ? &*table : nullptr, [](const EpochLog& r) {
        std::fprintf(stderr, "epoch %d  loss %.5f  val AUC %.4f\n", r.epoch, r.train_loss, r.val_auc);
    });
    save_checkpoint(out, res.model);
    auto stem = out;
    stem.replace_extension();
    write_training_log(stem.string() + ".log.jsonl", res.log);
    {
        auto a = open_output(stem.string() + ".attention.csv");
        write_attention_csv(a, res.model.p.alpha, attention_field_names(res.model));
    }
    std::printf("%s: best validation AUC %.4f at epoch %d -> %s\n", to_string(cfg.mode).c_str(), res.best_val_auc,
                res.best_epoch, out.string().c_str());
    return kOk;
}

int run_evaluate(const Globals& g, const std::vector<std::string>& models_flag, const std::string& data_flag,
                 const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto data = paths.get(data_flag, "data", paths.work() / "data");
    auto out = paths.get(out_flag, "results", paths.work() / "results.csv");
    std::vector<fs::path> models(models_flag.begin(), models_flag.end());
    if (models.empty()) models.push_back(paths.get("", "model", paths.work() / "model.ckpt"));
    for (const auto& m : models) require(m);

    DatasetSplit split;
    split.train = load_split_part(data, "train");
    auto test = load_split_part(data, "test");
    std::vector<CellResult> rows;
    for (const auto& path : models) {
        auto m = load_checkpoint(path);
        RemapReport rep;
        auto ds = remap_to_model(m, apply_normalizer(m.normalizer, test), &rep);
        CellResult r;
        r.cell = {m.config.mode, m.config.embedding, m.config.effective_seq_len(), m.config.seed};
        r.test = evaluate_scores(ds, predict(m, ds));
        rows.push_back(r);
        if (rep.unknown_coins || rep.unknown_channels)
            log_line(path.string() + ": " + std::to_string(rep.unknown_coins) + " coin ids and " +
                     std::to_string(rep.unknown_channels) + " channels mapped to the unknown rows");
        auto stem = path;
        stem.replace_extension();
        write_norm_report(stem.string() + ".l1.csv", model_l1_report(m, split));
    }
    {
        auto o = open_output(out);
        write_results_csv(o, rows);
    }
    std::cout << render_results_table(rows);
    return kOk;
}

int run_predict(const Globals& g, const std::string& model_flag, const std::string& data_flag,
                const std::string& out_flag) {
    Paths paths{&g.cfg};
    auto model_path = paths.get(model_flag, "model", paths.work() / "model.ckpt");
    auto data = paths.get(data_flag, "pending_data", paths.work() / "data" / "pending.bin");
    auto out = paths.get(out_flag, "predictions", paths.work() / "predictions");
    for (const auto& p : {model_path, data}) require(p);
    auto m = load_checkpoint(model_path);
    RemapReport rep;
    auto ds = remap_to_model(m, apply_normalizer(m.normalizer, load_dataset(data)), &rep);
    auto scores = predict(m, ds);

    std::vector<std::vector<RankedEntry>> per_list(ds.lists.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i)
        per_list[ds.samples[i].list].push_back({ds.coin_of(ds.samples[i]), scores[i], ds.samples[i].label});
    fs::create_directories(out);
    for (std::size_t l = 0; l < ds.lists.size(); ++l) {
        auto& entries = per_list[l];
        std::sort(entries.begin(), entries.end(), ranked_before);
        auto o = open_output(out / (safe_name(ds.lists[l].ref) + ".csv"));
        o << "rank,coin,probability\n";
        for (std::size_t r = 0; r < entries.size(); ++r)
            o << r + 1 << ',' << entries[r].coin << ',' << format_double(entries[r].score) << '\n';
    }
    if (rep.unknown_coins) log_line(std::to_string(rep.unknown_coins) + " coin ids mapped to the unknown row");
    std::printf("%zu pending events ranked -> %s\n", ds.lists.size(), out.string().c_str());
    return kOk;
}

int run_report(const Globals& g, const std::vector<std::string>& results_flag, const std::string& attention_flag,
               const std::string& out_flag) {
    Paths paths{&g.cfg};
    std::vector<fs::path> results(results_flag.begin(), results_flag.end());
    if (results.empty()) results.push_back(paths.get("", "results", paths.work() / "results.csv"));
    auto out = paths.get(out_flag, "report", paths.work() / "report.txt");
    for (const auto& p : results) require(p);
    std::vector<CellResult> rows;
    for (const auto& p : results) {
        auto r = read_results_csv(p);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    std::string text = render_results_table(rows);
    if (!attention_flag.empty()) {
        require(attention_flag);
        text += "\nPositional attention (" + attention_flag + ")\n" + render_attention(read_attention_csv(attention_flag));
    }
    auto o = open_output(out);
    o << text;
    std::cout << text;
    return kOk;
}

int run_replay(const std::string& candles, std::int64_t from, std::int64_t to) {
    require(candles);
    auto store = load_candles(candles);
    std::cout << "open_time,coin,pairing,open,high,low,close,volume\n";
    replay_candles(store, from, to, [](const CandleSeries& s, const Candle& c) {
        std::cout << c.open_time << ',' << s.coin << ',' << s.pairing;
        for (double v : {c.open, c.high, c.low, c.close, c.volume}) std::cout << ',' << format_double(v);
        std::cout << '\n';
    });
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pump-and-dump target coin prediction pipeline"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config_file, "Config file ([section] / key = value)");
    app.add_option("-s,--set", g.overrides, "Override a config key, e.g. snn.lr=0.001 (repeatable)");

    std::string out, in, model, listings, data, emb, attention, corpus, labeled, messages;
    std::vector<std::string> models, results;
    std::size_t labeled_docs = 5000;
    FeaturizeFlags ff;
    std::int64_t from = 0, to = std::numeric_limits<std::int64_t>::max();

    auto* synth = app.add_subcommand("synth", "Generate a synthetic world");
    synth->add_option("-o,--out", out, "Output directory");
    synth->add_option("--labeled-docs", labeled_docs, "Labeled detector documents to write");

    auto* detect = app.add_subcommand("detect", "Pump-message detector");
    detect->require_subcommand(1);
    auto* dtrain = detect->add_subcommand("train", "Train the TF-IDF logistic-regression detector");
    dtrain->add_option("--labeled", labeled, "Labeled JSON-Lines documents");
    dtrain->add_option("-o,--out", out, "Detector model (JSON)");
    auto* dscore = detect->add_subcommand("score", "Score and flag messages");
    dscore->add_option("-m,--model", model, "Detector model");
    dscore->add_option("--messages", messages, "Messages JSON-Lines");
    dscore->add_option("--listings", listings, "Listing table CSV");
    dscore->add_option("-o,--out", out, "Scored messages JSON-Lines");

    auto* sess = app.add_subcommand("sessionize", "Group flagged messages into sessions");
    sess->add_option("-i,--in", in, "Scored messages");
    sess->add_option("-o,--out", out, "Sessions JSON-Lines");

    auto* extract = app.add_subcommand("extract-events", "Extract and merge pump events from sessions");
    extract->add_option("-i,--in", in, "Sessions JSON-Lines");
    extract->add_option("--listings", listings, "Listing table CSV");
    extract->add_option("-o,--out", out, "Output directory");

    auto* feat = app.add_subcommand("featurize", "Build train/validation/test and pending datasets");
    feat->add_option("--merged", ff.merged, "Merged events JSON-Lines");
    feat->add_option("--candles", ff.candles, "Candle CSV file or directory");
    feat->add_option("--stats", ff.stats, "Coin stats CSV");
    feat->add_option("--listings", ff.listings, "Listing table CSV");
    feat->add_option("--world", ff.world_json, "world.json holding the split times");
    feat->add_option("--pending", ff.pending, "Pending events JSON-Lines");
    feat->add_option("--t1", ff.t1, "Validation start (epoch seconds)");
    feat->add_option("--t2", ff.t2, "Test start (epoch seconds)");
    feat->add_option("-o,--out", ff.out, "Output directory");

    auto* embed = app.add_subcommand("embed", "Coin embeddings");
    embed->require_subcommand(1);
    auto* etrain = embed->add_subcommand("train", "Train word2vec embeddings on the corpus");
    etrain->add_option("--corpus", corpus, "Text corpus, one document per line");
    etrain->add_option("--listings", listings, "Listing table; its coins are always in the vocabulary");
    etrain->add_option("-o,--out", out, "Embedding table");

    auto* train = app.add_subcommand("train", "Train a DNN / SNN_V / SNN model");
    train->add_option("-d,--data", data, "Dataset directory");
    train->add_option("--embeddings", emb, "Pretrained embedding table");
    train->add_option("-o,--out", out, "Checkpoint");

    auto* eval = app.add_subcommand("evaluate", "Test AUC and HR@k for one or more checkpoints");
    eval->add_option("-m,--model", models, "Checkpoint (repeatable)");
    eval->add_option("-d,--data", data, "Dataset directory");
    eval->add_option("-o,--out", out, "Results CSV");

    auto* pred = app.add_subcommand("predict", "Rank listed coins for each pending event");
    pred->add_option("-m,--model", model, "Checkpoint");
    pred->add_option("-d,--data", data, "Pending dataset");
    pred->add_option("-o,--out", out, "Output directory, one CSV per event");

    auto* report = app.add_subcommand("report", "Render results tables and an attention heat map");
    report->add_option("-r,--results", results, "Results CSV (repeatable)");
    report->add_option("-a,--attention", attention, "Attention CSV");
    report->add_option("-o,--out", out, "Report text file");

    auto* replay = app.add_subcommand("replay", "Stream candles in timestamp order");
    replay->add_option("--candles", in, "Candle CSV file or directory")->required();
    replay->add_option("--from", from, "First open time");
    replay->add_option("--to", to, "End open time (exclusive)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        if (!g.config_file.empty()) g.cfg = Config::load(g.config_file);
        g.cfg.apply_env();
        g.cfg.apply_overrides(g.overrides);

        if (*synth) return run_synth(g, out, labeled_docs);
        if (*dtrain) return run_detect_train(g, labeled, out);
        if (*dscore) return run_detect_score(g, model, messages, listings, out);
        if (*sess) return run_sessionize(g, in, out);
        if (*extract) return run_extract(g, in, listings, out);
        if (*feat) return run_featurize(g, ff);
        if (*etrain) return run_embed_train(g, corpus, listings, out);
        if (*train) return run_train(g, data, emb, out);
        if (*eval) return run_evaluate(g, models, data, out);
        if (*pred) return run_predict(g, model, data, out);
        if (*report) return run_report(g, results, attention, out);
        if (*replay) return run_replay(in, from, to);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const InfeasibleConfig& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const MissingInput& e) {
        std::cerr << "missing input: " << e.what() << '\n';
        return kMissingInput;
    } catch (const Error& e) {
        std::cerr << "stage error: " << e.what() << '\n';
        return kStageError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kInternal;
    }
    return kUsage;
}
