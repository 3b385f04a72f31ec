#include <gtest/gtest.h>

#include "pnd/synth.hpp"

using namespace pnd;

namespace {

WorldConfig small_config(std::uint64_t seed) {
    auto c = default_world_config(seed);
    c.n_channels = 10;
    c.n_coins = 80;
    c.coins_per_channel_pool = 15;
    c.events_per_channel = 10;
    return c;
}

}  // namespace

TEST(Synth, DeterministicPerSeed) {
    auto a = generate_world(small_config(3)), b = generate_world(small_config(3)), c = generate_world(small_config(4));
    ASSERT_EQ(a.messages.size(), b.messages.size());
    for (std::size_t i = 0; i < a.messages.size(); ++i) EXPECT_EQ(to_json(a.messages[i]), to_json(b.messages[i]));
    EXPECT_EQ(a.corpus, b.corpus);
    EXPECT_EQ(a.planted_events().size(), b.planted_events().size());
    EXPECT_EQ(a.t1, b.t1);
    EXPECT_NE(a.symbols(), c.symbols());
}

TEST(Synth, PlantedEventsRespectWorldRules) {
    auto w = generate_world(small_config(5));
    EXPECT_LT(w.t1, w.t2);
    EXPECT_LT(w.t2, w.end);
    std::map<std::string, std::vector<std::int64_t>> per_channel;
    for (const auto& p : w.planted) {
        const auto& e = p.event;
        per_channel[e.channel_id].push_back(e.pump_time);
        auto listed = w.listings.snapshot(e.exchange, e.pairing_coin, e.pump_time);
        EXPECT_TRUE(std::find(listed.begin(), listed.end(), e.target_coin) != listed.end()) << e.target_coin;
        EXPECT_NE(e.target_coin, e.pairing_coin);
        EXPECT_EQ(w.coins[p.coin].symbol, e.target_coin);
    }
    for (auto& [ch, times] : per_channel) {
        std::sort(times.begin(), times.end());
        for (std::size_t i = 1; i < times.size(); ++i) EXPECT_GE(times[i] - times[i - 1], 3 * kDay) << ch;
    }
    // each merged event is a group of planted events with one shared quadruple
    std::size_t channels = 0;
    for (const auto& m : w.merged) channels += m.channels.size();
    EXPECT_EQ(channels, w.planted.size());
}

TEST(Synth, ChannelsStayNearTheirPools) {
    auto s = pool_overlap(generate_world(small_config(6)));
    EXPECT_GT(s.within, 2 * s.across);
}

TEST(Synth, ColdStartTargetsUnseenBeforeValidation) {
    auto c = small_config(7);
    c.cold_start_fraction = 1.0;
    auto w = generate_world(c);
    std::set<std::string> early;
    for (const auto& p : w.planted)
        if (p.event.pump_time < w.t1) early.insert(p.event.target_coin);
    std::size_t cold = 0;
    for (const auto& p : w.planted) {
        if (!p.cold_start) continue;
        ++cold;
        EXPECT_GE(p.event.pump_time, w.t2);
        EXPECT_FALSE(early.contains(p.event.target_coin));
    }
    EXPECT_GT(cold, 0u);
}

TEST(Synth, ConfigValidation) {
    auto c = small_config(1);
    c.min_gap_days = 2.0;
    EXPECT_THROW(generate_world(c), ConfigError);
    c = small_config(1);
    c.train_fraction = 0.9;
    c.validation_fraction = 0.2;
    EXPECT_THROW(generate_world(c), ConfigError);
    c = small_config(1);
    c.repeat_prob = 1.5;
    EXPECT_THROW(generate_world(c), ConfigError);
    c = small_config(1);
    c.n_channels = 0;
    EXPECT_THROW(generate_world(c), ConfigError);
}

TEST(Synth, ConfigJsonRoundTrip) {
    auto c = small_config(9);
    c.taste_width = 0.3;
    c.exchanges = {"Binance"};
    auto back = world_config_from_json(to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
    EXPECT_EQ(back.taste_width, 0.3);
}

TEST(Synth, LabeledCorpusBalancedAndDeterministic) {
    auto w = generate_world(small_config(2));
    auto a = generate_labeled_corpus(w.symbols(), w.config.exchanges, 1000, 11);
    auto b = generate_labeled_corpus(w.symbols(), w.config.exchanges, 1000, 11);
    ASSERT_EQ(a.size(), 1000u);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].text, b[i].text);
        pos += a[i].label;
    }
    EXPECT_GT(pos, 300u);
    EXPECT_LT(pos, 700u);
}

TEST(Synth, WrittenWorldHasEveryFixture) {
    auto w = generate_world(small_config(8));
    auto dir = std::filesystem::temp_directory_path() / "pnd_synth_world";
    std::filesystem::remove_all(dir);
    write_world(w, dir, 200);
    for (const char* f : {"messages.jsonl", "corpus.txt", "labeled.jsonl", "listings.csv", "coin_stats.csv",
                          "truth/events.jsonl", "truth/merged.jsonl", "truth/ambiguous.jsonl", "pending.jsonl",
                          "world.json"})
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    EXPECT_TRUE(std::filesystem::is_directory(dir / "candles"));
    EXPECT_EQ(read_labeled_jsonl(dir / "labeled.jsonl").size(), 200u);
    EXPECT_EQ(read_pending_jsonl(dir / "pending.jsonl").size(), w.channels.size());
    std::filesystem::remove_all(dir);
}
