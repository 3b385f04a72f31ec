#pragma once

// Glue from raw messages to a split dataset: detector training, message
// flagging, session extraction, merging and feature assembly.

#include <cstdlib>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "detector.hpp"
#include "events.hpp"
#include "features.hpp"
#include "market.hpp"
#include "metrics.hpp"
#include "synth.hpp"

#ifndef PND_DATA_DIR
#define PND_DATA_DIR "data"
#endif

namespace pnd {

// Bundled word lists; PND_DATA_DIR in the environment overrides the
// compiled-in location.
inline std::filesystem::path data_dir() {
    if (const char* env = std::getenv("PND_DATA_DIR"); env && *env) return env;
    return PND_DATA_DIR;
}

inline StopWords default_stop_words() { return load_stop_words(data_dir() / "stopwords.txt"); }

inline std::set<std::string> default_exclusions() {
    std::set<std::string> out;
    for (auto& w : read_word_list(data_dir() / "exclusions.txt")) out.insert(to_upper(w));
    return out;
}

// Pump keywords plus the listed symbols and exchange names.
inline Lexicon keyword_lexicon(const std::vector<std::string>& symbols, const std::vector<std::string>& exchanges) {
    auto lex = load_lexicon(data_dir() / "keywords.txt");
    lex.add_all(symbols);
    lex.add_all(exchanges);
    return lex;
}

// Symbols, pairing coins and exchanges known from a listing table.
inline EventLexicon event_lexicon(const ListingTable& listings) {
    EventLexicon lex;
    for (const auto& r : listings.rows()) {
        lex.listed_symbols.insert(to_upper(r.coin));
        lex.pairing_coins.insert(to_upper(r.pairing));
        lex.add_exchange(r.exchange);
    }
    return lex;
}

inline std::vector<std::string> listing_exchanges(const ListingTable& listings) {
    std::set<std::string> ex;
    for (const auto& r : listings.rows()) ex.insert(r.exchange);
    return {ex.begin(), ex.end()};
}

// ---------------------------------------------------------------------------
// detector

struct DetectorTraining {
    DetectorBundle bundle;
    double test_auc = 0.0;
    std::size_t train_docs = 0, test_docs = 0;
};

// TF-IDF vocabulary is fitted on the training part only.
inline DetectorTraining train_detector(const std::vector<LabeledText>& docs, const StopWords& stop,
                                       const LogRegConfig& cfg = {}, double train_fraction = 0.7,
                                       double threshold = 0.2) {
    if (docs.empty()) throw EmptyCorpus("no labeled documents");
    std::vector<TokenizedDoc> toks;
    toks.reserve(docs.size());
    for (const auto& d : docs) toks.push_back(tokenize(d.text, stop));

    // split indices with the same stratified routine used for vectors
    std::vector<LabeledDoc> index_docs;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        LabeledDoc ld;
        ld.label = docs[i].label;
        ld.vector.entries.push_back({static_cast<std::uint32_t>(i), 0.0});
        index_docs.push_back(std::move(ld));
    }
    auto [tr_idx, te_idx] = stratified_split(index_docs, train_fraction, cfg.seed);

    std::vector<TokenizedDoc> train_toks;
    for (const auto& d : tr_idx) train_toks.push_back(toks[d.vector.entries[0].index]);
    DetectorTraining out;
    out.bundle.vocab = fit_vocabulary(train_toks);
    out.bundle.threshold = threshold;
    auto vectorize = [&](const std::vector<LabeledDoc>& idx) {
        std::vector<LabeledDoc> v;
        for (const auto& d : idx) v.push_back({tfidf_transform(toks[d.vector.entries[0].index], out.bundle.vocab), d.label});
        return v;
    };
    auto train = vectorize(tr_idx);
    auto test = vectorize(te_idx);
    out.bundle.model = train_logreg(train, out.bundle.vocab.size(), cfg);
    out.train_docs = train.size();
    out.test_docs = test.size();
    if (!test.empty()) {
        std::vector<double> s;
        std::vector<int> y;
        for (const auto& d : test) {
            s.push_back(predict_proba(out.bundle.model, d.vector));
            y.push_back(d.label);
        }
        bool pos = std::count(y.begin(), y.end(), 1) > 0, neg = std::count(y.begin(), y.end(), 0) > 0;
        out.test_auc = pos && neg ? auc(s, y) : 0.0;
    }
    return out;
}

inline double detector_score(const DetectorBundle& b, const std::string& text, const StopWords& stop) {
    return predict_proba(b.model, tfidf_transform(tokenize(text, stop), b.vocab));
}

// ---------------------------------------------------------------------------
// flagging and extraction

// A lone token naming a listed non-pairing symbol: the shape of a coin
// release, which the text classifier has no vocabulary to score.
inline bool release_shaped(const Message& m, const EventLexicon& lex) {
    auto toks = detail::alnum_runs(detail::strip_urls(m.text));
    if (toks.size() != 1) return false;
    auto up = to_upper(toks.front());
    return lex.listed_symbols.contains(up) && !lex.pairing_coins.contains(up);
}

struct FlagContext {
    const DetectorBundle* detector = nullptr;
    Lexicon keywords;
    EventLexicon events;
    StopWords stop;
};

// keyword filter, then (classifier >= threshold or release-shaped)
inline std::vector<bool> flag_messages(const std::vector<Message>& msgs, const FlagContext& ctx) {
    if (!ctx.detector) throw ConfigError("flag_messages: detector missing");
    std::vector<bool> flags(msgs.size(), false);
    for (std::size_t i = 0; i < msgs.size(); ++i) {
        const auto& m = msgs[i];
        if (!keyword_filter(m, ctx.keywords)) continue;
        flags[i] = release_shaped(m, ctx.events) ||
                   detector_score(*ctx.detector, m.text, ctx.stop) >= ctx.detector->threshold;
    }
    return flags;
}

inline ExtractionResult extract_from_messages(const std::vector<Message>& msgs, const std::vector<bool>& flags,
                                              const EventLexicon& lex) {
    if (flags.size() != msgs.size()) throw FormatError("flags not aligned with messages");
    std::vector<Message> kept;
    for (std::size_t i = 0; i < msgs.size(); ++i)
        if (flags[i]) kept.push_back(msgs[i]);
    return extract_events(sessionize(kept), lex);
}

// ---------------------------------------------------------------------------
// whole pipeline over a synthetic world

struct PipelineOptions {
    std::size_t labeled_docs = 5000;
    std::size_t seq_len = 20;
    LogRegConfig detector;
    bool use_truth_events = false;  // skip text processing, use planted events
};

struct PipelineOutput {
    DetectorTraining detector;
    ExtractionResult extraction;
    std::vector<MergedEvent> merged;
    Dataset dataset;
    DatasetSplit split;
    std::size_t flagged = 0;
};

// Unlabeled lists for upcoming pumps; sequences come from the labeled history.
inline Dataset build_pending_dataset(const std::vector<MergedEvent>& history, const std::vector<PendingEvent>& pending,
                                     const MarketContext& ctx, std::size_t seq_len) {
    DatasetBuilder b(ctx, {seq_len, true});
    b.set_history(channel_histories(history));
    for (const auto& p : pending)
        b.add_pending(p.channel_id, p.pump_time, p.exchange, p.pairing_coin, p.channel_id + "@" + std::to_string(p.pump_time));
    return b.take();
}

inline PipelineOutput run_world_pipeline(const World& w, const PipelineOptions& opts = {}) {
    PipelineOutput out;
    if (opts.use_truth_events) {
        out.merged = w.merged;
    } else {
        auto stop = default_stop_words();
        out.detector = train_detector(generate_labeled_corpus(w.symbols(), w.config.exchanges, opts.labeled_docs, w.config.seed),
                                      stop, opts.detector);
        FlagContext fc{&out.detector.bundle, keyword_lexicon(w.symbols(), w.config.exchanges), event_lexicon(w.listings), stop};
        auto flags = flag_messages(w.messages, fc);
        out.flagged = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), true));
        out.extraction = extract_from_messages(w.messages, flags, fc.events);
        out.merged = merge_events(out.extraction.events);
    }
    MarketContext ctx{&w.candles, &w.stats, &w.listings, default_exclusions()};
    out.dataset = build_dataset(out.merged, ctx, {opts.seq_len, true});
    out.split = temporal_split(out.dataset, w.t1, w.t2);
    return out;
}

}  // namespace pnd
