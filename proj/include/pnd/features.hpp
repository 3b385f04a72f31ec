#pragma once

// Training-sample assembly: candidate labeling, channel / target-coin /
// pump-history features, temporal splitting and train-only normalization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "events.hpp"
#include "market.hpp"
#include "util.hpp"

namespace pnd {

inline constexpr std::int32_t kPadCoin = 0;
inline constexpr std::int32_t kUnknownCoin = 1;
inline constexpr std::int32_t kUnknownChannel = 0;

struct FeatureSchema {
    std::vector<std::string> channel_fields;
    std::vector<std::string> target_fields;
    std::vector<std::string> seq_fields;

    friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

inline FeatureSchema default_schema() {
    FeatureSchema s;
    s.channel_fields = {"n_prior_pumps", "mean_prior_log_mcap", "days_since_last_pump"};
    s.target_fields = {"log_mcap", "log_alexa_rank", "log_reddit", "log_twitter", "stats_missing"};
    for (int x : kWindowHours) {
        auto suffix = "_" + std::to_string(x) + "h";
        for (const char* f : {"ret", "log_vol_mean", "log_vol_max", "volatility", "missing"})
            s.target_fields.push_back(f + suffix);
    }
    s.seq_fields = {"log_mcap", "log_alexa_rank", "log_reddit", "log_twitter"};
    return s;
}

// One ranking list: a merged event seen from one member channel.
struct SampleList {
    std::string ref;
    std::int64_t pump_time = 0;
    std::string channel;
    std::string exchange;
    std::string pairing;
    std::string target_coin;  // empty for pending (unlabeled) lists
    std::int32_t channel_id = kUnknownChannel;
    std::vector<double> channel_values;
    // Sequence, most recent first, padded to the dataset's seq_len.
    std::vector<std::int32_t> seq_coin_ids;
    std::vector<double> seq_values;  // seq_len x seq_fields, row major
    std::vector<std::uint8_t> seq_mask;
    std::vector<std::int64_t> seq_times;
};

struct Sample {
    std::uint32_t list = 0;
    std::int32_t coin_id = kUnknownCoin;
    int label = 0;
    std::vector<double> target_values;
};

struct Dataset {
    FeatureSchema schema;
    std::size_t seq_len = 0;
    std::vector<std::string> channels;  // id -> channel (0 = unknown)
    std::vector<std::string> coins;     // id -> symbol (0 = pad, 1 = unknown)
    std::vector<SampleList> lists;
    std::vector<Sample> samples;

    std::size_t positives() const {
        std::size_t n = 0;
        for (const auto& s : samples) n += s.label ? 1 : 0;
        return n;
    }
    const std::string& coin_of(const Sample& s) const { return coins.at(static_cast<std::size_t>(s.coin_id)); }
};

// ---------------------------------------------------------------------------
// sequences

struct HistoryItem {
    std::int64_t pump_time = 0;
    std::string coin;
};

struct SequenceView {
    std::vector<HistoryItem> items;  // length N; padded items are default-constructed
    std::vector<std::uint8_t> mask;
};

// The N most recent history items strictly before `pump_time`, most recent
// first. `history` must be sorted by pump_time ascending.
inline SequenceView build_sequence(const std::vector<HistoryItem>& history, std::int64_t pump_time, std::size_t n) {
    SequenceView v;
    v.items.resize(n);
    v.mask.assign(n, 0);
    auto end = std::lower_bound(history.begin(), history.end(), pump_time,
                                [](const HistoryItem& h, std::int64_t t) { return h.pump_time < t; });
    std::size_t pos = 0;
    for (auto it = end; it != history.begin() && pos < n; ++pos) {
        --it;
        v.items[pos] = *it;
        v.mask[pos] = 1;
    }
    return v;
}

// ---------------------------------------------------------------------------
// candidates

struct Candidate {
    std::string coin;
    int label = 0;
};

// One positive for the target, one negative for every other eligible coin:
// listed at pump time, not excluded and not the pairing coin.
inline std::vector<Candidate> label_candidates(const MergedEvent& event, const std::vector<std::string>& listed_coins,
                                               const std::set<std::string>& exclusions) {
    if (std::find(listed_coins.begin(), listed_coins.end(), event.target_coin) == listed_coins.end())
        throw TargetNotListed(event.target_coin + " not listed on " + event.exchange + "/" + event.pairing_coin +
                              " at " + std::to_string(event.pump_time));
    std::vector<Candidate> out;
    for (const auto& c : listed_coins) {
        if (c == event.pairing_coin || exclusions.contains(c)) continue;
        out.push_back({c, c == event.target_coin ? 1 : 0});
    }
    if (std::none_of(out.begin(), out.end(), [](const Candidate& c) { return c.label == 1; }))
        throw TargetNotListed(event.target_coin + " is excluded from the eligible set");
    return out;
}

// ---------------------------------------------------------------------------
// dataset assembly

struct MarketContext {
    const CandleStore* candles = nullptr;
    const CoinStatsTable* stats = nullptr;
    const ListingTable* listings = nullptr;
    std::set<std::string> exclusions;
};

struct DatasetBuildOptions {
    std::size_t seq_len = 20;
    bool skip_unlisted_targets = false;  // otherwise TargetNotListed propagates
};

namespace detail {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

inline void append_stats(const CoinStats* s, std::vector<double>& out, bool with_flag) {
    if (s) {
        out.push_back(std::log(std::max(s->market_cap, 1.0)));
        out.push_back(std::log(static_cast<double>(s->alexa_rank)));
        out.push_back(std::log1p(static_cast<double>(s->reddit_subscribers)));
        out.push_back(std::log1p(static_cast<double>(s->twitter_followers)));
    } else {
        out.insert(out.end(), {kNaN, kNaN, kNaN, kNaN});
    }
    if (with_flag) out.push_back(s ? 0.0 : 1.0);
}

inline std::vector<double> target_values(const MarketContext& ctx, const std::string& coin, const std::string& pairing,
                                         std::int64_t pump_time) {
    std::vector<double> v;
    v.reserve(5 + 5 * kWindowHours.size());
    append_stats(ctx.stats ? ctx.stats->for_pump(coin, pump_time) : nullptr, v, true);
    WindowFeatures wf;
    if (ctx.candles) {
        wf = compute_window_features(*ctx.candles, coin, pairing, pump_time);
    } else {
        for (auto& w : wf.windows) w.missing = true;
    }
    for (const auto& w : wf.windows) {
        v.push_back(w.ret);
        v.push_back(std::log1p(w.mean_volume));
        v.push_back(std::log1p(w.max_volume));
        v.push_back(w.volatility);
        v.push_back(w.missing ? 1.0 : 0.0);
    }
    return v;
}

}  // namespace detail

// Per-channel pump history from merged events (each member channel sees the
// event at the merged time).
inline std::map<std::string, std::vector<HistoryItem>> channel_histories(const std::vector<MergedEvent>& events) {
    std::map<std::string, std::vector<HistoryItem>> h;
    for (const auto& e : events)
        for (const auto& c : e.channels) h[c].push_back({e.pump_time, e.target_coin});
    for (auto& [c, v] : h)
        std::stable_sort(v.begin(), v.end(),
                         [](const HistoryItem& a, const HistoryItem& b) { return a.pump_time < b.pump_time; });
    return h;
}

class DatasetBuilder {
public:
    DatasetBuilder(const MarketContext& ctx, DatasetBuildOptions opts) : ctx_(ctx), opts_(opts) {
        ds_.schema = default_schema();
        ds_.seq_len = opts.seq_len;
        ds_.coins = {"<pad>", "<unk>"};
        if (ctx.listings)
            for (const auto& c : ctx.listings->all_coins()) intern_coin(c);
        ds_.channels = {"<unk>"};
    }

    void set_history(std::map<std::string, std::vector<HistoryItem>> history) {
        history_ = std::move(history);
        for (const auto& [ch, items] : history_) {
            intern_channel(ch);
            for (const auto& it : items) intern_coin(it.coin);
        }
    }

    // Adds the lists of a labeled merged event (one per member channel).
    void add_event(const MergedEvent& e, std::size_t event_index) {
        auto listed = ctx_.listings ? ctx_.listings->snapshot(e.exchange, e.pairing_coin, e.pump_time)
                                    : std::vector<std::string>{};
        std::vector<Candidate> cands;
        try {
            cands = label_candidates(e, listed, ctx_.exclusions);
        } catch (const TargetNotListed&) {
            if (opts_.skip_unlisted_targets) {
                ++skipped_;
                return;
            }
            throw;
        }
        for (const auto& ch : e.channels) add_list(e, ch, std::to_string(event_index) + ":" + ch, cands);
    }

    // Adds an unlabeled list for a pending pump (target unknown).
    void add_pending(const std::string& channel, std::int64_t pump_time, const std::string& exchange,
                     const std::string& pairing, const std::string& ref) {
        MergedEvent e{pump_time, {channel}, exchange, pairing, ""};
        std::vector<Candidate> cands;
        auto listed = ctx_.listings ? ctx_.listings->snapshot(exchange, pairing, pump_time) : std::vector<std::string>{};
        for (const auto& c : listed)
            if (c != pairing && !ctx_.exclusions.contains(c)) cands.push_back({c, 0});
        add_list(e, channel, ref, cands);
    }

    std::size_t skipped() const { return skipped_; }
    Dataset take() { return std::move(ds_); }
    const Dataset& peek() const { return ds_; }

private:
    std::int32_t intern_coin(const std::string& c) {
        auto [it, fresh] = coin_ids_.try_emplace(c, static_cast<std::int32_t>(ds_.coins.size()));
        if (fresh) ds_.coins.push_back(c);
        return it->second;
    }
    std::int32_t intern_channel(const std::string& c) {
        auto [it, fresh] = channel_ids_.try_emplace(c, static_cast<std::int32_t>(ds_.channels.size()));
        if (fresh) ds_.channels.push_back(c);
        return it->second;
    }

    const std::vector<double>& seq_item_values(const HistoryItem& h) {
        auto key = std::make_pair(h.coin, h.pump_time);
        auto it = seq_cache_.find(key);
        if (it != seq_cache_.end()) return it->second;
        std::vector<double> v;
        detail::append_stats(ctx_.stats ? ctx_.stats->for_pump(h.coin, h.pump_time) : nullptr, v, false);
        return seq_cache_.emplace(key, std::move(v)).first->second;
    }

    void add_list(const MergedEvent& e, const std::string& channel, const std::string& ref,
                  const std::vector<Candidate>& cands) {
        SampleList l;
        l.ref = ref;
        l.pump_time = e.pump_time;
        l.channel = channel;
        l.exchange = e.exchange;
        l.pairing = e.pairing_coin;
        l.target_coin = e.target_coin;
        l.channel_id = intern_channel(channel);

        static const std::vector<HistoryItem> kEmpty;
        auto hit = history_.find(channel);
        const auto& hist = hit == history_.end() ? kEmpty : hit->second;

        // channel statistics over all strictly earlier pumps
        auto end = std::lower_bound(hist.begin(), hist.end(), e.pump_time,
                                    [](const HistoryItem& h, std::int64_t t) { return h.pump_time < t; });
        const auto n_prior = static_cast<std::size_t>(end - hist.begin());
        double mcap_sum = 0.0;
        std::size_t mcap_n = 0;
        for (auto it = hist.begin(); it != end; ++it) {
            double v = seq_item_values(*it)[0];
            if (std::isfinite(v)) {
                mcap_sum += v;
                ++mcap_n;
            }
        }
        l.channel_values = {static_cast<double>(n_prior), mcap_n ? mcap_sum / static_cast<double>(mcap_n) : detail::kNaN,
                            n_prior ? static_cast<double>(e.pump_time - std::prev(end)->pump_time) / kDay
                                    : detail::kNaN};

        auto seq = build_sequence(hist, e.pump_time, ds_.seq_len);
        const auto k = ds_.schema.seq_fields.size();
        l.seq_coin_ids.assign(ds_.seq_len, kPadCoin);
        l.seq_values.assign(ds_.seq_len * k, 0.0);
        l.seq_times.assign(ds_.seq_len, 0);
        l.seq_mask = seq.mask;
        for (std::size_t i = 0; i < ds_.seq_len; ++i) {
            if (!seq.mask[i]) continue;
            l.seq_coin_ids[i] = intern_coin(seq.items[i].coin);
            l.seq_times[i] = seq.items[i].pump_time;
            const auto& v = seq_item_values(seq.items[i]);
            std::copy(v.begin(), v.end(), l.seq_values.begin() + static_cast<std::ptrdiff_t>(i * k));
        }

        const auto list_index = static_cast<std::uint32_t>(ds_.lists.size());
        ds_.lists.push_back(std::move(l));
        for (const auto& c : cands) {
            Sample s;
            s.list = list_index;
            s.coin_id = intern_coin(c.coin);
            s.label = c.label;
            s.target_values = detail::target_values(ctx_, c.coin, e.pairing_coin, e.pump_time);
            ds_.samples.push_back(std::move(s));
        }
    }

    const MarketContext& ctx_;
    DatasetBuildOptions opts_;
    Dataset ds_;
    std::map<std::string, std::vector<HistoryItem>> history_;
    std::unordered_map<std::string, std::int32_t> coin_ids_;
    std::unordered_map<std::string, std::int32_t> channel_ids_;
    std::map<std::pair<std::string, std::int64_t>, std::vector<double>> seq_cache_;
    std::size_t skipped_ = 0;
};

// Labeled dataset over merged events; history comes from the same events.
inline Dataset build_dataset(const std::vector<MergedEvent>& events, const MarketContext& ctx,
                             const DatasetBuildOptions& opts = {}) {
    DatasetBuilder b(ctx, opts);
    b.set_history(channel_histories(events));
    for (std::size_t i = 0; i < events.size(); ++i) b.add_event(events[i], i);
    return b.take();
}

// ---------------------------------------------------------------------------
// invariants and splitting

// Number of real sequence positions whose event is at or after the list's own
// pump time.
inline std::size_t find_leakage(const Dataset& ds) {
    std::size_t bad = 0;
    for (const auto& l : ds.lists)
        for (std::size_t i = 0; i < l.seq_mask.size(); ++i)
            if (l.seq_mask[i] && l.seq_times[i] >= l.pump_time) ++bad;
    return bad;
}

struct DatasetSplit {
    Dataset train, validation, test;
    std::int64_t t1 = 0, t2 = 0;
};

namespace detail {

inline Dataset subset(const Dataset& ds, const std::vector<bool>& keep_list) {
    Dataset out;
    out.schema = ds.schema;
    out.seq_len = ds.seq_len;
    out.channels = ds.channels;
    out.coins = ds.coins;
    std::vector<std::uint32_t> remap(ds.lists.size(), std::numeric_limits<std::uint32_t>::max());
    for (std::size_t i = 0; i < ds.lists.size(); ++i) {
        if (!keep_list[i]) continue;
        remap[i] = static_cast<std::uint32_t>(out.lists.size());
        out.lists.push_back(ds.lists[i]);
    }
    for (const auto& s : ds.samples) {
        if (!keep_list[s.list]) continue;
        out.samples.push_back(s);
        out.samples.back().list = remap[s.list];
    }
    return out;
}

}  // namespace detail

// train: t < t1, validation: t1 <= t < t2, test: t >= t2 (by list pump time).
inline DatasetSplit temporal_split(const Dataset& ds, std::int64_t t1, std::int64_t t2) {
    if (!(t1 < t2)) throw ConfigError("temporal_split requires t1 < t2");
    if (auto bad = find_leakage(ds)) throw LeakageError(std::to_string(bad) + " sequence positions leak future events");
    std::vector<bool> tr(ds.lists.size()), va(ds.lists.size()), te(ds.lists.size());
    for (std::size_t i = 0; i < ds.lists.size(); ++i) {
        auto t = ds.lists[i].pump_time;
        tr[i] = t < t1;
        va[i] = t >= t1 && t < t2;
        te[i] = t >= t2;
    }
    DatasetSplit s;
    s.t1 = t1;
    s.t2 = t2;
    s.train = detail::subset(ds, tr);
    s.validation = detail::subset(ds, va);
    s.test = detail::subset(ds, te);
    if (!s.train.positives()) throw EmptySplit("training split has no positive sample");
    if (!s.validation.positives()) throw EmptySplit("validation split has no positive sample");
    if (!s.test.positives()) throw EmptySplit("test split has no positive sample");
    return s;
}

// ---------------------------------------------------------------------------
// normalization

struct FieldNorm {
    std::vector<std::size_t> kept;  // source field indices that survive
    std::vector<double> mean;       // per kept field
    std::vector<double> stddev;
    std::vector<std::string> dropped;
};

struct Normalizer {
    FeatureSchema source;  // schema before normalization
    FieldNorm channel, target, seq;
};

inline constexpr double kMinFieldStd = 1e-9;

namespace detail {

// Statistics over finite values only; NaN means "missing".
inline FieldNorm fit_fields(const std::vector<std::string>& names, std::size_t width,
                            const std::function<void(const std::function<void(const double*)>&)>& for_each_row) {
    std::vector<double> sum(width, 0.0), sq(width, 0.0);
    std::vector<std::size_t> cnt(width, 0);
    for_each_row([&](const double* row) {
        for (std::size_t j = 0; j < width; ++j)
            if (std::isfinite(row[j])) {
                sum[j] += row[j];
                ++cnt[j];
            }
    });
    std::vector<double> mean(width, 0.0);
    for (std::size_t j = 0; j < width; ++j) mean[j] = cnt[j] ? sum[j] / static_cast<double>(cnt[j]) : 0.0;
    for_each_row([&](const double* row) {
        for (std::size_t j = 0; j < width; ++j)
            if (std::isfinite(row[j])) sq[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    });
    FieldNorm f;
    for (std::size_t j = 0; j < width; ++j) {
        double sd = cnt[j] ? std::sqrt(sq[j] / static_cast<double>(cnt[j])) : 0.0;
        if (sd < kMinFieldStd) {
            f.dropped.push_back(names[j]);
            continue;
        }
        f.kept.push_back(j);
        f.mean.push_back(mean[j]);
        f.stddev.push_back(sd);
    }
    return f;
}

inline std::vector<double> apply_fields(const FieldNorm& f, const double* row) {
    std::vector<double> out(f.kept.size());
    for (std::size_t k = 0; k < f.kept.size(); ++k) {
        double v = row[f.kept[k]];
        out[k] = std::isfinite(v) ? (v - f.mean[k]) / f.stddev[k] : 0.0;
    }
    return out;
}

inline std::vector<std::string> kept_names(const FieldNorm& f, const std::vector<std::string>& names) {
    std::vector<std::string> out;
    for (auto j : f.kept) out.push_back(names[j]);
    return out;
}

}  // namespace detail

// Fit on a (training) dataset. Sequence statistics use real positions only.
inline Normalizer fit_normalizer(const Dataset& train) {
    if (train.samples.empty()) throw EmptySplit("cannot normalize with an empty training split");
    Normalizer n;
    n.source = train.schema;
    const auto xc = train.schema.channel_fields.size();
    const auto xt = train.schema.target_fields.size();
    const auto xs = train.schema.seq_fields.size();
    n.channel = detail::fit_fields(train.schema.channel_fields, xc, [&](const auto& fn) {
        for (const auto& l : train.lists) fn(l.channel_values.data());
    });
    n.target = detail::fit_fields(train.schema.target_fields, xt, [&](const auto& fn) {
        for (const auto& s : train.samples) fn(s.target_values.data());
    });
    n.seq = detail::fit_fields(train.schema.seq_fields, xs, [&](const auto& fn) {
        for (const auto& l : train.lists)
            for (std::size_t i = 0; i < l.seq_mask.size(); ++i)
                if (l.seq_mask[i]) fn(l.seq_values.data() + i * xs);
    });
    return n;
}

// Padded sequence positions stay all-zero.
inline Dataset apply_normalizer(const Normalizer& n, Dataset ds) {
    if (!(ds.schema == n.source)) throw FormatError("dataset schema does not match the normalizer");
    const auto xs = ds.schema.seq_fields.size();
    for (auto& l : ds.lists) {
        l.channel_values = detail::apply_fields(n.channel, l.channel_values.data());
        std::vector<double> seq(l.seq_mask.size() * n.seq.kept.size(), 0.0);
        for (std::size_t i = 0; i < l.seq_mask.size(); ++i) {
            if (!l.seq_mask[i]) continue;
            auto row = detail::apply_fields(n.seq, l.seq_values.data() + i * xs);
            std::copy(row.begin(), row.end(), seq.begin() + static_cast<std::ptrdiff_t>(i * n.seq.kept.size()));
        }
        l.seq_values = std::move(seq);
    }
    for (auto& s : ds.samples) s.target_values = detail::apply_fields(n.target, s.target_values.data());
    ds.schema.channel_fields = detail::kept_names(n.channel, n.source.channel_fields);
    ds.schema.target_fields = detail::kept_names(n.target, n.source.target_fields);
    ds.schema.seq_fields = detail::kept_names(n.seq, n.source.seq_fields);
    return ds;
}

// Inverse transform of one normalized row back to source units (dropped
// fields come back as NaN).
inline std::vector<double> denormalize_row(const FieldNorm& f, std::size_t source_width, const std::vector<double>& row) {
    std::vector<double> out(source_width, detail::kNaN);
    for (std::size_t k = 0; k < f.kept.size(); ++k) out[f.kept[k]] = row[k] * f.stddev[k] + f.mean[k];
    return out;
}

struct NormalizedSplit {
    DatasetSplit split;
    Normalizer normalizer;
};

inline NormalizedSplit normalize(const DatasetSplit& split) {
    NormalizedSplit out;
    out.normalizer = fit_normalizer(split.train);
    out.split.t1 = split.t1;
    out.split.t2 = split.t2;
    out.split.train = apply_normalizer(out.normalizer, split.train);
    out.split.validation = apply_normalizer(out.normalizer, split.validation);
    out.split.test = apply_normalizer(out.normalizer, split.test);
    return out;
}

// ---------------------------------------------------------------------------
// persistence (versioned little-endian binary)

inline constexpr std::string_view kDatasetMagic = "PNDSAMP1";
inline constexpr std::uint32_t kDatasetVersion = 1;

inline void write_schema(BinaryWriter& w, const FeatureSchema& s) {
    w.strings(s.channel_fields);
    w.strings(s.target_fields);
    w.strings(s.seq_fields);
}

inline FeatureSchema read_schema(BinaryReader& r) {
    FeatureSchema s;
    s.channel_fields = r.strings();
    s.target_fields = r.strings();
    s.seq_fields = r.strings();
    return s;
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
    BinaryWriter w(out);
    write_magic(w, out, kDatasetMagic, kDatasetVersion);
    write_schema(w, ds.schema);
    w.pod<std::uint64_t>(ds.seq_len);
    w.strings(ds.channels);
    w.strings(ds.coins);
    w.pod<std::uint64_t>(ds.lists.size());
    for (const auto& l : ds.lists) {
        w.str(l.ref);
        w.pod(l.pump_time);
        w.str(l.channel);
        w.str(l.exchange);
        w.str(l.pairing);
        w.str(l.target_coin);
        w.pod(l.channel_id);
        w.vec(l.channel_values);
        w.vec(l.seq_coin_ids);
        w.vec(l.seq_values);
        w.vec(l.seq_mask);
        w.vec(l.seq_times);
    }
    w.pod<std::uint64_t>(ds.samples.size());
    for (const auto& s : ds.samples) {
        w.pod(s.list);
        w.pod(s.coin_id);
        w.pod<std::int32_t>(s.label);
        w.vec(s.target_values);
    }
}

inline Dataset read_dataset(std::istream& in) {
    BinaryReader r(in);
    r.expect_magic(kDatasetMagic, kDatasetVersion);
    Dataset ds;
    ds.schema = read_schema(r);
    ds.seq_len = r.pod<std::uint64_t>();
    ds.channels = r.strings();
    ds.coins = r.strings();
    auto n_lists = r.pod<std::uint64_t>();
    ds.lists.resize(n_lists);
    for (auto& l : ds.lists) {
        l.ref = r.str();
        l.pump_time = r.pod<std::int64_t>();
        l.channel = r.str();
        l.exchange = r.str();
        l.pairing = r.str();
        l.target_coin = r.str();
        l.channel_id = r.pod<std::int32_t>();
        l.channel_values = r.vec<double>();
        l.seq_coin_ids = r.vec<std::int32_t>();
        l.seq_values = r.vec<double>();
        l.seq_mask = r.vec<std::uint8_t>();
        l.seq_times = r.vec<std::int64_t>();
    }
    auto n_samples = r.pod<std::uint64_t>();
    ds.samples.resize(n_samples);
    for (auto& s : ds.samples) {
        s.list = r.pod<std::uint32_t>();
        s.coin_id = r.pod<std::int32_t>();
        s.label = r.pod<std::int32_t>();
        s.target_values = r.vec<double>();
        if (s.list >= ds.lists.size()) throw FormatError("sample references a missing list");
    }
    return ds;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& ds) {
    auto out = open_output(path, true);
    write_dataset(out, ds);
}

inline Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + path.string());
    return read_dataset(in);
}

}  // namespace pnd
