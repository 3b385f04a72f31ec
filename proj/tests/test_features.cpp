#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "pnd/features.hpp"
#include "pnd/pipeline.hpp"
#include "pnd/synth.hpp"

using namespace pnd;

namespace {

const std::int64_t kT0 = 1'600'000'000 / kHour * kHour;

std::vector<HistoryItem> history(int n) {
    std::vector<HistoryItem> h;
    for (int i = 0; i < n; ++i) h.push_back({kT0 + i * kDay, "C" + std::to_string(i)});
    return h;
}

ListingTable listing_of(int n_coins, const std::string& pairing = "BTC") {
    ListingTable t;
    for (int i = 0; i < n_coins; ++i) t.add({"Binance", "C" + std::to_string(i), pairing, 0, 0});
    t.add({"Binance", pairing, pairing, 0, 0});
    return t;
}

World small_world(std::uint64_t seed) {
    auto c = default_world_config(seed);
    c.n_channels = 12;
    c.n_coins = 80;
    c.coins_per_channel_pool = 15;
    c.events_per_channel = 12;
    return generate_world(c);
}

Dataset world_dataset(const World& w, std::size_t seq_len = 5) {
    MarketContext ctx{&w.candles, &w.stats, &w.listings, default_exclusions()};
    return build_dataset(w.merged, ctx, {seq_len, false});
}

}  // namespace

TEST(Sequence, PaddingTruncationAndEmpty) {
    auto h = history(3);
    auto v = build_sequence(h, kT0 + 10 * kDay, 5);
    EXPECT_EQ(v.mask, (std::vector<std::uint8_t>{1, 1, 1, 0, 0}));
    EXPECT_EQ(v.items[0].coin, "C2");  // most recent first
    EXPECT_EQ(v.items[2].coin, "C0");

    auto h25 = history(25);
    auto t = build_sequence(h25, kT0 + 100 * kDay, 20);
    EXPECT_EQ(std::count(t.mask.begin(), t.mask.end(), 1), 20);
    EXPECT_EQ(t.items[0].coin, "C24");
    EXPECT_EQ(t.items[19].coin, "C5");

    auto e = build_sequence({}, kT0, 4);
    EXPECT_EQ(e.mask, (std::vector<std::uint8_t>(4, 0)));
}

TEST(Sequence, StrictlyEarlierProperty) {
    Rng rng(3);
    auto h = history(40);
    for (int trial = 0; trial < 500; ++trial) {
        auto t = kT0 + static_cast<std::int64_t>(uniform_index(rng, 45 * kDay));
        if (trial % 5 == 0) t = h[uniform_index(rng, h.size())].pump_time;  // exactly on a history event
        const auto n = 1 + uniform_index(rng, 25);
        auto v = build_sequence(h, t, n);
        ASSERT_EQ(v.items.size(), n);
        std::size_t expected = 0;
        for (const auto& it : h) expected += it.pump_time < t ? 1 : 0;
        EXPECT_EQ(static_cast<std::size_t>(std::count(v.mask.begin(), v.mask.end(), 1)), std::min(n, expected));
        for (std::size_t i = 0; i < n; ++i) {
            if (!v.mask[i]) {
                for (std::size_t j = i; j < n; ++j) EXPECT_FALSE(v.mask[j]);
                break;
            }
            EXPECT_LT(v.items[i].pump_time, t);
            if (i) {
                EXPECT_GT(v.items[i - 1].pump_time, v.items[i].pump_time);
            }
        }
    }
}

TEST(Candidates, OnePositivePerEligibleSet) {
    auto listing = listing_of(300);
    MergedEvent e{kT0, {"ch"}, "Binance", "BTC", "C17"};
    auto listed = listing.snapshot("Binance", "BTC", kT0);
    auto c = label_candidates(e, listed, {});
    EXPECT_EQ(c.size(), 300u);  // the pairing coin itself is never a candidate
    EXPECT_EQ(std::count_if(c.begin(), c.end(), [](const Candidate& x) { return x.label == 1; }), 1);
    for (const auto& x : c) {
        if (!x.label) {
            EXPECT_NE(x.coin, "C17");
        }
    }
    auto ex = label_candidates(e, listed, {"C3", "C4"});
    EXPECT_EQ(ex.size(), 298u);
    EXPECT_THROW(label_candidates({kT0, {"ch"}, "Binance", "BTC", "ZZZ"}, listed, {}), TargetNotListed);
    EXPECT_THROW(label_candidates(e, listed, {"C17"}), TargetNotListed);
}

TEST(Dataset, OnePositivePerListAndNoLeakage) {
    auto w = small_world(5);
    auto ds = world_dataset(w);
    std::vector<int> pos(ds.lists.size(), 0);
    for (const auto& s : ds.samples) pos[s.list] += s.label;
    for (int p : pos) EXPECT_EQ(p, 1);
    EXPECT_EQ(find_leakage(ds), 0u);
    std::size_t expected_lists = 0;
    for (const auto& m : w.merged) expected_lists += m.channels.size();
    EXPECT_EQ(ds.lists.size(), expected_lists);
    for (const auto& l : ds.lists) {
        EXPECT_EQ(l.seq_mask.size(), ds.seq_len);
        EXPECT_EQ(l.seq_values.size(), ds.seq_len * ds.schema.seq_fields.size());
        for (std::size_t i = 0; i < l.seq_mask.size(); ++i)
            if (!l.seq_mask[i]) {
                EXPECT_EQ(l.seq_coin_ids[i], kPadCoin);
            }
    }
}

TEST(Dataset, LeakageProbeRejected) {
    auto w = small_world(6);
    auto ds = world_dataset(w);
    auto& l = ds.lists[ds.lists.size() / 2];
    l.seq_mask[0] = 1;
    l.seq_times[0] = l.pump_time + kHour;
    EXPECT_EQ(find_leakage(ds), 1u);
    EXPECT_THROW(temporal_split(ds, w.t1, w.t2), LeakageError);
}

TEST(Split, BoundariesAndRecount) {
    auto w = small_world(7);
    auto ds = world_dataset(w);
    auto s = temporal_split(ds, w.t1, w.t2);
    std::size_t tr = 0, va = 0, te = 0, tr_s = 0, va_s = 0, te_s = 0;
    for (const auto& l : ds.lists) (l.pump_time < w.t1 ? tr : l.pump_time < w.t2 ? va : te)++;
    for (const auto& x : ds.samples) {
        auto t = ds.lists[x.list].pump_time;
        (t < w.t1 ? tr_s : t < w.t2 ? va_s : te_s)++;
    }
    EXPECT_EQ(s.train.lists.size(), tr);
    EXPECT_EQ(s.validation.lists.size(), va);
    EXPECT_EQ(s.test.lists.size(), te);
    EXPECT_EQ(s.train.samples.size(), tr_s);
    EXPECT_EQ(s.validation.samples.size(), va_s);
    EXPECT_EQ(s.test.samples.size(), te_s);
    std::int64_t max_train = 0, min_test = std::numeric_limits<std::int64_t>::max();
    for (const auto& l : s.train.lists) max_train = std::max(max_train, l.pump_time);
    for (const auto& l : s.test.lists) min_test = std::min(min_test, l.pump_time);
    EXPECT_LT(max_train, min_test);
    for (const auto& x : s.test.samples) EXPECT_LT(x.list, s.test.lists.size());

    EXPECT_THROW(temporal_split(ds, w.t2, w.t1), ConfigError);
    auto last = ds.lists.back().pump_time + kDay;
    EXPECT_THROW(temporal_split(ds, last, last + kDay), EmptySplit);
}

TEST(Normalize, TrainStatisticsOnly) {
    auto w = small_world(8);
    auto split = temporal_split(world_dataset(w), w.t1, w.t2);
    auto ns = normalize(split);
    const auto& tr = ns.split.train;
    const auto xt = tr.schema.target_fields.size();
    ASSERT_GT(xt, 0u);
    // means over training rows are zero for fields with no missing values
    const auto& nf = ns.normalizer.target;
    for (std::size_t k = 0; k < xt; ++k) {
        bool any_missing = false;
        for (const auto& s : split.train.samples) any_missing = any_missing || !std::isfinite(s.target_values[nf.kept[k]]);
        if (any_missing) continue;
        double m = 0, v = 0;
        for (const auto& s : tr.samples) m += s.target_values[k];
        m /= static_cast<double>(tr.samples.size());
        for (const auto& s : tr.samples) v += std::pow(s.target_values[k] - m, 2);
        v /= static_cast<double>(tr.samples.size());
        EXPECT_NEAR(m, 0.0, 1e-9) << tr.schema.target_fields[k];
        EXPECT_NEAR(v, 1.0, 1e-9) << tr.schema.target_fields[k];
    }
    // the test split is transformed with the same constants
    std::size_t shifted = 0;
    for (std::size_t k = 0; k < xt; ++k) {
        double m = 0;
        for (const auto& s : ns.split.test.samples) m += s.target_values[k];
        m /= static_cast<double>(ns.split.test.samples.size());
        shifted += std::abs(m) > 1e-6 ? 1 : 0;
    }
    EXPECT_GT(shifted, 0u);
    const auto& raw = split.test.samples[3].target_values;
    auto back = denormalize_row(nf, raw.size(), ns.split.test.samples[3].target_values);
    for (std::size_t k = 0; k < nf.kept.size(); ++k) {
        const double r = raw[nf.kept[k]];
        if (std::isfinite(r)) {
            EXPECT_NEAR(back[nf.kept[k]], r, 1e-9 * (1 + std::abs(r)));
        }
    }
    // padded sequence rows stay zero
    const auto ks = tr.schema.seq_fields.size();
    for (const auto& l : ns.split.validation.lists)
        for (std::size_t i = 0; i < l.seq_mask.size(); ++i) {
            if (l.seq_mask[i]) continue;
            for (std::size_t j = 0; j < ks; ++j) EXPECT_EQ(l.seq_values[i * ks + j], 0.0);
        }
}

TEST(Normalize, ConstantFieldDropped) {
    auto w = small_world(9);
    auto split = temporal_split(world_dataset(w), w.t1, w.t2);
    const auto before = normalize(split).normalizer.target.dropped;
    EXPECT_EQ(std::count(before.begin(), before.end(), "log_mcap"), 0);
    for (auto& s : split.train.samples) s.target_values[0] = 4.0;  // log_mcap made constant
    auto ns = normalize(split);
    const auto& after = ns.normalizer.target.dropped;
    EXPECT_EQ(after.size(), before.size() + 1);
    EXPECT_EQ(after.front(), "log_mcap");
    EXPECT_EQ(ns.split.test.schema.target_fields.size(), split.test.schema.target_fields.size() - after.size());
    EXPECT_EQ(ns.split.test.samples[0].target_values.size(), ns.split.test.schema.target_fields.size());
}

TEST(Dataset, BinaryRoundTrip) {
    auto w = small_world(10);
    auto ds = world_dataset(w, 4);
    std::stringstream buf;
    write_dataset(buf, ds);
    auto back = read_dataset(buf);
    EXPECT_EQ(back.schema, ds.schema);
    EXPECT_EQ(back.coins, ds.coins);
    ASSERT_EQ(back.samples.size(), ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); i += 97) {
        EXPECT_EQ(back.samples[i].coin_id, ds.samples[i].coin_id);
        EXPECT_EQ(back.samples[i].label, ds.samples[i].label);
        const auto& a = ds.samples[i].target_values;
        const auto& b = back.samples[i].target_values;
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k)
            EXPECT_TRUE(a[k] == b[k] || (std::isnan(a[k]) && std::isnan(b[k])));
    }
    EXPECT_EQ(back.lists.back().seq_times, ds.lists.back().seq_times);
    std::stringstream bad("NOTMAGIC........");
    EXPECT_THROW(read_dataset(bad), FormatError);
}
