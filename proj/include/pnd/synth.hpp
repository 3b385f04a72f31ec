#pragma once

// Deterministic synthetic world: coins with latent size/social/sector traits,
// pump channels whose target choice follows a drifting taste, hourly candles
// with pre-pump drift, listings, coin statistics, channel message streams
// following the pump lifecycle, and a general text corpus for embeddings.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "events.hpp"
#include "json.hpp"
#include "market.hpp"
#include "util.hpp"

namespace pnd {

struct WorldConfig {
    std::uint64_t seed = 1;
    std::size_t n_channels = 50;
    std::size_t n_coins = 300;
    std::size_t coins_per_channel_pool = 60;
    std::size_t events_per_channel = 16;
    std::size_t n_sectors = 8;
    std::size_t home_sectors = 2;

    // market
    double pre_pump_drift = 0.10;  // mean log-return injected over [t-57h, t-1h]
    double price_noise = 0.012;    // hourly log-return std
    double rally_rate = 0.03;      // organic rallies per coin per day
    double mean_reversion = 0.01;  // per-hour pull of log price toward its level
    double listing_fraction = 0.6;
    double eth_listing_fraction = 0.5;
    double late_listing_fraction = 0.15;
    double delisting_fraction = 0.03;

    // channel behaviour
    double regime_length = 6.0;   // mean events per taste regime
    double regime_spread = 0.8;   // std of a regime's taste point around the channel home
    double recency_decay = 0.25;  // per-event random-walk step of the taste point
    double taste_pull = 0.35;     // taste moves toward each chosen coin
    double taste_width = 0.7;
    double sector_boost = 6.0;
    double off_pool_prob = 0.08;
    double repeat_prob = 0.06;
    double federation_prob = 0.08;
    double eth_channel_prob = 0.15;
    double cold_start_fraction = 0.3;

    // schedule
    std::int64_t start = 1546300800;  // 2019-01-01
    double min_gap_days = 4.0;
    double max_gap_days = 7.0;
    double train_fraction = 0.6;
    double validation_fraction = 0.2;

    // text
    double message_noise = 0.0;
    std::size_t ambiguous_sessions = 0;
    double chatter_per_day = 1.0;
    std::size_t corpus_sentences_per_coin = 24;
    std::vector<std::string> exchanges{"Binance", "Yobit"};

    void validate() const {
        auto frac = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (n_channels < 1 || n_coins < 1 || events_per_channel < 1 || n_sectors < 1 || coins_per_channel_pool < 1)
            throw ConfigError("world counts must be >= 1");
        if (pre_pump_drift < 0 || price_noise < 0 || rally_rate < 0 || message_noise < 0 || mean_reversion < 0 || mean_reversion >= 1)
            throw ConfigError("drift and noise levels must be >= 0");
        for (double f : {listing_fraction, eth_listing_fraction, late_listing_fraction, delisting_fraction,
                         off_pool_prob, repeat_prob, federation_prob, eth_channel_prob, cold_start_fraction,
                         train_fraction, validation_fraction, message_noise})
            if (!frac(f)) throw ConfigError("world fractions must lie in [0, 1]");
        if (train_fraction + validation_fraction >= 1.0) throw ConfigError("train + validation fractions must be < 1");
        if (exchanges.empty()) throw ConfigError("at least one exchange required");
        if (!(min_gap_days >= 3.0 && max_gap_days >= min_gap_days))
            throw ConfigError("event gaps must be >= 3 days so pump sessions stay separate");
        if (regime_length < 1.0) throw ConfigError("regime_length must be >= 1");
        if (home_sectors < 1 || home_sectors > n_sectors) throw ConfigError("home_sectors out of range");
    }
};

inline WorldConfig default_world_config(std::uint64_t seed = 1) {
    WorldConfig c;
    c.seed = seed;
    return c;
}

// Channels that roam the whole market with a narrow, slowly drifting taste,
// so the pump history says more than the channel id does.
inline WorldConfig benchmark_world_config(std::uint64_t seed = 1) {
    WorldConfig c;
    c.seed = seed;
    c.coins_per_channel_pool = 150;
    c.listing_fraction = 0.8;
    c.eth_listing_fraction = 0.7;
    c.late_listing_fraction = 0.0;
    c.pre_pump_drift = 0.05;
    c.regime_length = 10.0;
    c.regime_spread = 1.5;
    c.recency_decay = 0.05;
    c.taste_pull = 0.2;
    c.taste_width = 0.3;
    c.sector_boost = 1.0;
    c.off_pool_prob = 0.03;
    c.repeat_prob = 0.1;
    c.cold_start_fraction = 0.0;
    return c;
}

// Benchmark behaviour with fresh test-period targets and late listings.
inline WorldConfig cold_start_world_config(std::uint64_t seed = 1) {
    auto c = benchmark_world_config(seed);
    c.cold_start_fraction = 0.3;
    c.late_listing_fraction = 0.15;
    return c;
}

// Fewer channels with long pump histories; taste regimes turn over many
// times inside the longest sequences, so old positions are mostly noise.
inline WorldConfig history_noise_world_config(std::uint64_t seed = 1) {
    auto c = benchmark_world_config(seed);
    c.n_channels = 20;
    c.events_per_channel = 60;
    c.chatter_per_day = 0.2;
    c.corpus_sentences_per_coin = 12;
    return c;
}

struct CoinTraits {
    std::string symbol;
    double size = 0.0;    // latent market size
    double social = 0.0;  // latent social reach
    std::size_t sector = 0;
    bool late = false;
    std::int64_t listed_from = 0;
};

struct ChannelTraits {
    std::string id;
    std::string exchange;
    std::string pairing;
    std::vector<std::size_t> home_sectors;
    std::vector<std::size_t> pool;  // coin indices
    double home_size = 0.0, home_social = 0.0;  // centre of the channel's taste
};

struct PlantedEvent {
    PumpEvent event;
    std::size_t coin = 0;
    bool federated = false;
    bool cold_start = false;
    bool garbled = false;  // release message corrupted by message noise
};

struct LabeledText {
    std::string text;
    int label = 0;
};

struct World {
    WorldConfig config;
    std::vector<CoinTraits> coins;
    std::vector<ChannelTraits> channels;
    std::vector<PlantedEvent> planted;
    std::vector<MergedEvent> merged;
    std::vector<AmbiguousSession> ambiguous;
    std::vector<Message> messages;
    std::vector<std::string> corpus;  // general crypto text, one sentence per entry
    CandleStore candles;
    CoinStatsTable stats;
    ListingTable listings;
    std::int64_t t1 = 0, t2 = 0;
    std::int64_t end = 0;

    std::vector<std::string> symbols() const {
        std::vector<std::string> s;
        for (const auto& c : coins) s.push_back(c.symbol);
        return s;
    }
    std::vector<std::string> pairing_coins() const { return {"BTC", "ETH"}; }
    EventLexicon lexicon() const {
        EventLexicon lex;
        for (const auto& c : coins) lex.listed_symbols.insert(c.symbol);
        for (const auto& p : pairing_coins()) lex.pairing_coins.insert(p);
        for (const auto& e : config.exchanges) lex.add_exchange(e);
        return lex;
    }
    // One upcoming pump per channel, a day before the end of the market data.
    std::vector<PendingEvent> pending_events() const {
        std::vector<PendingEvent> out;
        const auto t = (end - kDay) / kHour * kHour;
        for (const auto& ch : channels) out.push_back({ch.id, t, ch.exchange, ch.pairing});
        return out;
    }
    std::vector<PumpEvent> planted_events() const {
        std::vector<PumpEvent> out;
        for (const auto& p : planted) out.push_back(p.event);
        return out;
    }
};

// ---------------------------------------------------------------------------
// text templates

namespace synth_text {

inline const std::array<std::array<const char*, 4>, 8> kSectorWords = {{
    {"defi", "lending", "yield", "swap"},
    {"gaming", "metaverse", "play", "nft"},
    {"privacy", "anonymous", "shielded", "zk"},
    {"storage", "cloud", "files", "hosting"},
    {"payments", "remittance", "merchant", "transfer"},
    {"oracle", "feeds", "data", "bridge"},
    {"social", "community", "media", "creators"},
    {"energy", "green", "mining", "power"},
}};
inline const std::array<std::array<const char*, 3>, 3> kSizeWords = {{
    {"microcap", "gem", "lowcap"},
    {"midcap", "growing", "emerging"},
    {"bluechip", "established", "largecap"},
}};
inline const std::array<std::array<const char*, 3>, 3> kSocialWords = {{
    {"quiet", "obscure", "unnoticed"},
    {"steady", "active", "engaged"},
    {"viral", "trending", "hyped"},
}};

inline const std::vector<const char*> kAnnounce = {
    "Big pump announcement! Next pump is scheduled on {EX} on {DATE} at {HOUR}:00 GMT. Pairing: {PAIR}. Be ready!",
    "Attention everyone, our next signal will be on {EX}. Date {DATE}, time {HOUR}:00 GMT, pair {PAIR}. Make sure "
    "your {PAIR} is on {EX}.",
    "Next pump: {DATE} {HOUR}:00 GMT | Exchange: {EX} | Pair: {PAIR} | Target gains 300%+",
};
inline const std::vector<const char*> kCountdown = {
    "{N} {UNIT} left until the pump on {EX}! Transfer your {PAIR} now.",
    "Only {N} {UNIT} left! Exchange {EX}, pair {PAIR}. Buy fast and hold.",
    "{N} {UNIT} to go. Pump on {EX} with {PAIR} pairing. Get ready!",
};
inline const std::vector<const char*> kNext = {
    "The next message will be the coin name!",
    "Next message is the coin, buy fast!",
    "Coin name in the next message, be ready!",
};
inline const std::vector<const char*> kReview = {
    "Pump review: {SYM} reached {PCT}% on {EX}. Congrats to everyone who held!",
    "Great pump! {SYM} peaked at +{PCT}%. Next pump announcement soon.",
    "{SYM} pumped {PCT}% on {EX}. Thanks for joining, stay tuned for the next target.",
};
inline const std::vector<const char*> kGarbled = {"Buy {SYM} now", "Coin: {SYM}", "{SYM} {SYM} {SYM}"};
inline const std::vector<const char*> kChatter = {
    "Market looks {MOOD} today, {MAJOR} moving {DIR}.",
    "New article about {SECW} projects, worth a read.",
    "{SYM} team released a new roadmap for their {SECW} platform.",
    "Reminder: never share your private keys with anyone.",
    "What do you think about {SYM} and its {SECW} use case?",
    "Weekly market update: volatility is {MOOD}, stay safe.",
    "Check our partner channel for trading education t.me/{LINK}",
    "I hold some {SYM} for the long term, the {SECW} narrative is strong.",
    "Where can I buy {SYM}? Looks like a solid {SECW} project.",
    "{SYM} listing rumours again, do your own research.",
    "Pump and dump schemes are risky, many people lose money.",
    "Join our VIP group for early access t.me/joinchat/{LINK}",
};
inline const std::vector<const char*> kCorpus = {
    "{SYM} is a {SIZEW} {SECW} project with a {SOCW} community",
    "{SYM} {SECW} {SECW2} token",
    "{SYM} and {SYM2} are both {SECW} coins",
    "{SYM} {SIZEW} cap {SOCW} {SECW}",
    "analysts compare {SYM} with {SYM2} in {SECW2}",
    "{SOCW} {SIZEW} {SYM} {SECW2}",
};
inline const std::vector<const char*> kMoods = {"calm", "wild", "bullish", "bearish", "sideways"};
inline const std::vector<const char*> kDirs = {"up", "down", "sideways"};
inline const std::vector<const char*> kMajors = {"bitcoin", "ethereum"};

// Short words a generated symbol must never spell, so symbols survive
// tokenization and never collide with template vocabulary.
inline const std::set<std::string>& reserved_words() {
    static const std::set<std::string> words = [] {
        std::set<std::string> w = {
            "all", "and", "any", "are", "but", "can", "did", "does", "for", "from", "had", "has", "have", "her", "here",
            "hers", "him", "his", "how", "into", "its", "just", "more", "most", "nor", "not", "now", "off", "once",
            "only", "our", "ours", "out", "over", "own", "same", "she", "some", "such", "than", "that", "the", "them",
            "then", "they", "this", "too", "very", "was", "were", "what", "when", "who", "whom", "why", "will", "with",
            "you", "your", "btc", "eth", "usdt", "busd", "usdc", "tusd", "pax", "dai", "gmt", "vip", "com", "www",
            "http", "https", "joinchat", "hour", "hours", "left", "coin", "coins", "pump", "buy", "sell", "hold", "next",
            "name", "pair", "time", "date", "fast", "get", "go", "ready", "make", "sure", "big", "only", "soon", "join",
            "new", "read", "team", "use", "case", "safe", "long", "term", "solid", "lose", "many", "money", "risky",
            "dump", "early", "group", "check", "moon", "zk", "nft", "cap", "data", "play", "gem", "swap", "mins",
            "min", "minute", "minutes", "one", "two", "six", "ten", "five", "top", "yes"};
        for (const auto& s : kSectorWords)
            for (auto* x : s) w.insert(x);
        for (const auto& s : kSizeWords)
            for (auto* x : s) w.insert(x);
        for (const auto& s : kSocialWords)
            for (auto* x : s) w.insert(x);
        return w;
    }();
    return words;
}

inline std::string fill(std::string tpl, const std::map<std::string, std::string>& vars) {
    for (const auto& [k, v] : vars) {
        const std::string key = "{" + k + "}";
        for (auto pos = tpl.find(key); pos != std::string::npos; pos = tpl.find(key, pos + v.size()))
            tpl.replace(pos, key.size(), v);
    }
    return tpl;
}

template <class V>
const auto& pick(const V& v, Rng& rng) {
    return v[uniform_index(rng, v.size())];
}

}  // namespace synth_text

// ---------------------------------------------------------------------------
// generation

namespace synth_detail {

inline std::vector<std::string> make_symbols(std::size_t n, Rng& rng) {
    std::set<std::string> used;
    std::vector<std::string> out;
    const auto& reserved = synth_text::reserved_words();
    while (out.size() < n) {
        std::size_t len = uniform01(rng) < 0.7 ? 3 : 4;
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s.push_back(static_cast<char>('A' + uniform_index(rng, 26)));
        if (reserved.contains(to_lower(s)) || !used.insert(s).second) continue;
        out.push_back(s);
    }
    return out;
}

inline std::size_t tercile(double x) { return x < -0.43 ? 0 : (x < 0.43 ? 1 : 2); }

// Draw an index with probability proportional to weights (all >= 0).
inline std::size_t weighted_pick(const std::vector<double>& w, Rng& rng) {
    double total = 0.0;
    for (double x : w) total += x;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (u < w[i]) return i;
        u -= w[i];
    }
    for (std::size_t i = w.size(); i-- > 0;)
        if (w[i] > 0) return i;
    return 0;
}

struct Shock {
    std::int64_t from = 0, to = 0;  // hours [from, to) receive drift
    double log_return = 0.0;
    double volume_boost = 0.0;
    std::int64_t spike_at = -1;  // pump hour (price spike then dump)
    double spike = 0.0;
};

}  // namespace synth_detail

inline World generate_world(const WorldConfig& cfg) {
    cfg.validate();
    using namespace synth_detail;
    namespace tx = synth_text;
    World w;
    w.config = cfg;
    const std::size_t n_sectors = std::min<std::size_t>(cfg.n_sectors, tx::kSectorWords.size());

    // coins
    auto rng_coins = fork_rng(cfg.seed, 101);
    auto symbols = make_symbols(cfg.n_coins, rng_coins);
    for (std::size_t i = 0; i < cfg.n_coins; ++i) {
        CoinTraits c;
        c.symbol = symbols[i];
        c.size = normal(rng_coins);
        c.social = 0.5 * c.size + std::sqrt(0.75) * normal(rng_coins);
        c.sector = uniform_index(rng_coins, n_sectors);
        c.late = uniform01(rng_coins) < cfg.late_listing_fraction;
        w.coins.push_back(c);
    }

    // channels, home exchange and pools
    auto rng_ch = fork_rng(cfg.seed, 102);
    for (std::size_t k = 0; k < cfg.n_channels; ++k) {
        ChannelTraits ch;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "ch%03zu", k);
        ch.id = buf;
        ch.exchange = cfg.exchanges[uniform_index(rng_ch, cfg.exchanges.size())];
        ch.pairing = uniform01(rng_ch) < cfg.eth_channel_prob ? "ETH" : "BTC";
        std::vector<std::size_t> sectors(n_sectors);
        for (std::size_t s = 0; s < n_sectors; ++s) sectors[s] = s;
        shuffle(sectors, rng_ch);
        ch.home_sectors.assign(sectors.begin(), sectors.begin() + static_cast<std::ptrdiff_t>(cfg.home_sectors));
        ch.home_size = normal(rng_ch, -0.6, 0.5);
        ch.home_social = normal(rng_ch, 0.0, 0.6);
        w.channels.push_back(ch);
    }

    // listings: per exchange, BTC pairing for a fraction of coins, ETH for a
    // fraction of those; late coins enter the market after training time
    // (t1 is fixed below, so their listing dates are set afterwards).
    auto rng_list = fork_rng(cfg.seed, 103);
    struct ListingPlan {
        std::size_t exchange, coin;
        bool eth;
        bool delist;
        double delist_u;
    };
    std::vector<ListingPlan> plans;
    for (std::size_t e = 0; e < cfg.exchanges.size(); ++e)
        for (std::size_t c = 0; c < cfg.n_coins; ++c) {
            double u = uniform01(rng_list);
            double u_eth = uniform01(rng_list);
            double u_del = uniform01(rng_list);
            double u_when = uniform01(rng_list);
            if (u >= cfg.listing_fraction) continue;
            plans.push_back({e, c, u_eth < cfg.eth_listing_fraction, u_del < cfg.delisting_fraction, u_when});
        }
    auto listed_on = [&](std::size_t coin, const std::string& exchange, const std::string& pairing) {
        for (const auto& p : plans)
            if (p.coin == coin && cfg.exchanges[p.exchange] == exchange && (pairing == "BTC" || p.eth)) return true;
        return false;
    };

    // pools: coins on the channel's home market, favouring home sectors and
    // small caps
    for (auto& ch : w.channels) {
        std::vector<std::size_t> avail;
        for (std::size_t c = 0; c < cfg.n_coins; ++c)
            if (listed_on(c, ch.exchange, ch.pairing)) avail.push_back(c);
        if (avail.size() < cfg.coins_per_channel_pool)
            throw InfeasibleConfig("channel " + ch.id + " market lists only " + std::to_string(avail.size()) +
                                   " coins, pool needs " + std::to_string(cfg.coins_per_channel_pool));
        std::vector<double> wts;
        for (auto c : avail) {
            bool home = std::find(ch.home_sectors.begin(), ch.home_sectors.end(), w.coins[c].sector) !=
                        ch.home_sectors.end();
            wts.push_back((home ? 5.0 : 1.0) * std::exp(-0.6 * w.coins[c].size));
        }
        for (std::size_t k = 0; k < cfg.coins_per_channel_pool; ++k) {
            auto i = weighted_pick(wts, rng_ch);
            ch.pool.push_back(avail[i]);
            wts[i] = 0.0;
        }
        std::sort(ch.pool.begin(), ch.pool.end());
    }

    // schedule: pump times on the hour, gaps of min..max days
    auto rng_sched = fork_rng(cfg.seed, 104);
    struct Slot {
        std::size_t channel;
        std::int64_t time;
    };
    std::vector<Slot> slots;
    for (std::size_t k = 0; k < cfg.n_channels; ++k) {
        std::int64_t t = cfg.start + 5 * kDay + static_cast<std::int64_t>(uniform(rng_sched, 0.0, 10.0) * kDay);
        for (std::size_t e = 0; e < cfg.events_per_channel; ++e) {
            t = (t / kHour) * kHour;
            slots.push_back({k, t});
            t += static_cast<std::int64_t>(uniform(rng_sched, cfg.min_gap_days, cfg.max_gap_days) * kDay);
        }
    }
    std::stable_sort(slots.begin(), slots.end(), [](const Slot& a, const Slot& b) {
        return a.time != b.time ? a.time < b.time : a.channel < b.channel;
    });
    {
        auto at = [&](double q) {
            auto i = std::min(slots.size() - 1, static_cast<std::size_t>(q * static_cast<double>(slots.size())));
            return (slots[i].time / kHour) * kHour - kHour / 2;
        };
        w.t1 = at(cfg.train_fraction);
        w.t2 = at(cfg.train_fraction + cfg.validation_fraction);
        if (w.t2 <= w.t1) w.t2 = w.t1 + kHour;
    }
    w.end = slots.back().time + 3 * kDay;

    // listing rows, now that the training cut is known
    {
        auto rng_dates = fork_rng(cfg.seed, 105);
        for (auto& c : w.coins) {
            double u = uniform01(rng_dates);
            c.listed_from = c.late ? w.t1 + static_cast<std::int64_t>(u * static_cast<double>(w.t2 - w.t1))
                                   : cfg.start - 30 * kDay;
            c.listed_from = (c.listed_from / kHour) * kHour;
        }
        for (const auto& p : plans) {
            const auto& c = w.coins[p.coin];
            std::int64_t delisted = 0;
            if (p.delist)
                delisted = ((c.listed_from + static_cast<std::int64_t>(p.delist_u * static_cast<double>(w.end - c.listed_from))) / kHour) * kHour + kHour;
            w.listings.add({cfg.exchanges[p.exchange], c.symbol, "BTC", c.listed_from, delisted});
            if (p.eth) w.listings.add({cfg.exchanges[p.exchange], c.symbol, "ETH", c.listed_from, delisted});
        }
    }

    // target selection in global time order
    auto rng_pick = fork_rng(cfg.seed, 106);
    struct Taste {
        double mu_size = 0.0, mu_social = 0.0;
        std::size_t focus = 0;
        std::vector<std::size_t> recent;
    };
    std::vector<Taste> taste(cfg.n_channels);
    auto new_regime = [&](Taste& t, const ChannelTraits& ch) {
        t.focus = uniform01(rng_pick) < 0.75 ? ch.home_sectors[uniform_index(rng_pick, ch.home_sectors.size())]
                                            : uniform_index(rng_pick, n_sectors);
        t.mu_size = ch.home_size + normal(rng_pick, 0.0, cfg.regime_spread);
        t.mu_social = ch.home_social + normal(rng_pick, 0.0, cfg.regime_spread);
    };
    for (std::size_t k = 0; k < cfg.n_channels; ++k) new_regime(taste[k], w.channels[k]);

    std::set<std::size_t> pumped_before_t1;
    std::vector<PlantedEvent> planted;
    // (exchange, coin) -> pump times, to keep unrelated pumps of one coin apart
    std::map<std::pair<std::string, std::size_t>, std::vector<std::int64_t>> busy;
    auto is_busy = [&](const std::string& ex, std::size_t coin, std::int64_t t) {
        auto it = busy.find({ex, coin});
        if (it == busy.end()) return false;
        for (auto x : it->second)
            if (std::llabs(x - t) <= 3 * kHour) return true;
        return false;
    };
    const std::set<std::string> exclusions = {"USDT", "BUSD", "USDC", "TUSD", "PAX", "DAI"};

    for (const auto& slot : slots) {
        auto& ch = w.channels[slot.channel];
        auto& ts = taste[slot.channel];
        const double u_fed = uniform01(rng_pick);
        const double u_cold = uniform01(rng_pick);
        const double u_mode = uniform01(rng_pick);
        const double u_regime = uniform01(rng_pick);

        // federation: join a partner's pump from the previous two days
        if (u_fed < cfg.federation_prob) {
            std::vector<std::size_t> partners;
            for (std::size_t i = 0; i < planted.size(); ++i) {
                const auto& p = planted[i];
                if (!p.federated && p.event.channel_id != ch.id && p.event.pump_time < slot.time &&
                    p.event.pump_time >= slot.time - 48 * kHour && p.event.exchange == ch.exchange &&
                    p.event.pairing_coin == ch.pairing)
                    partners.push_back(i);
            }
            bool clash = false;
            if (!partners.empty()) {
                const auto& src = planted[partners[uniform_index(rng_pick, partners.size())]];
                for (const auto& p : planted)
                    if (p.event.channel_id == ch.id && p.event.pump_time > src.event.pump_time - 3 * kDay) clash = true;
                if (!clash) {
                    PlantedEvent pe = src;
                    pe.federated = true;
                    pe.event.channel_id = ch.id;
                    pe.event.pump_time = src.event.pump_time + (2 + static_cast<std::int64_t>(uniform_index(rng_pick, 9))) * kMinute;
                    ts.recent.push_back(pe.coin);
                    planted.push_back(pe);
                    continue;
                }
            }
        }

        std::vector<std::size_t> eligible;
        auto listed_now = w.listings.snapshot(ch.exchange, ch.pairing, slot.time);
        std::unordered_map<std::string, std::size_t> by_symbol;
        for (std::size_t c = 0; c < w.coins.size(); ++c) by_symbol.emplace(w.coins[c].symbol, c);
        for (const auto& s : listed_now) {
            if (exclusions.contains(s) || s == ch.pairing) continue;
            auto c = by_symbol.at(s);
            if (!is_busy(ch.exchange, c, slot.time)) eligible.push_back(c);
        }
        if (eligible.empty()) throw InfeasibleConfig("no eligible coin for " + ch.id + " at " + std::to_string(slot.time));

        if (u_regime < 1.0 / cfg.regime_length) new_regime(ts, ch);

        auto taste_weight = [&](std::size_t c) {
            const auto& ct = w.coins[c];
            double ds = ct.size - ts.mu_size, dq = ct.social - ts.mu_social;
            double wt = std::exp(-(ds * ds + dq * dq) / (2.0 * cfg.taste_width * cfg.taste_width));
            return wt * (ct.sector == ts.focus ? cfg.sector_boost : 1.0);
        };
        auto pick_weighted = [&](const std::vector<std::size_t>& cands) {
            std::vector<double> wts;
            for (auto c : cands) wts.push_back(taste_weight(c) + 1e-12);
            return cands[weighted_pick(wts, rng_pick)];
        };
        std::set<std::size_t> pool(ch.pool.begin(), ch.pool.end());
        std::vector<std::size_t> in_pool;
        for (auto c : eligible)
            if (pool.contains(c)) in_pool.push_back(c);

        std::size_t target = eligible.front();
        bool cold = false;
        if (slot.time >= w.t2 && u_cold < cfg.cold_start_fraction) {
            std::vector<std::size_t> fresh, fresh_pool;
            for (auto c : eligible)
                if (!pumped_before_t1.contains(c)) {
                    fresh.push_back(c);
                    if (pool.contains(c)) fresh_pool.push_back(c);
                }
            if (!fresh.empty()) {
                target = pick_weighted(fresh_pool.empty() ? fresh : fresh_pool);
                cold = true;
            }
        }
        if (!cold) {
            std::vector<std::size_t> repeat;
            for (std::size_t i = ts.recent.size(); i-- > 0 && ts.recent.size() - i <= 3;)
                if (std::find(eligible.begin(), eligible.end(), ts.recent[i]) != eligible.end()) repeat.push_back(ts.recent[i]);
            if (u_mode < cfg.repeat_prob && !repeat.empty()) target = repeat[uniform_index(rng_pick, repeat.size())];
            else if (u_mode < cfg.repeat_prob + cfg.off_pool_prob) target = eligible[uniform_index(rng_pick, eligible.size())];
            else target = pick_weighted(in_pool.empty() ? eligible : in_pool);
        }

        // taste drifts and is pulled toward the chosen coin
        ts.mu_size += normal(rng_pick, 0.0, cfg.recency_decay) + cfg.taste_pull * (w.coins[target].size - ts.mu_size);
        ts.mu_social +=
            normal(rng_pick, 0.0, cfg.recency_decay) + cfg.taste_pull * (w.coins[target].social - ts.mu_social);
        ts.recent.push_back(target);

        PlantedEvent pe;
        pe.event = {ch.id, slot.time, ch.exchange, ch.pairing, w.coins[target].symbol};
        pe.coin = target;
        pe.cold_start = cold;
        planted.push_back(pe);
        busy[{ch.exchange, target}].push_back(slot.time);
        if (slot.time < w.t1) pumped_before_t1.insert(target);
    }
    // message noise with its own stream so garbling is nested across levels
    {
        auto rng_noise = fork_rng(cfg.seed, 107);
        for (auto& p : planted) p.garbled = uniform01(rng_noise) < cfg.message_noise;
    }
    std::stable_sort(planted.begin(), planted.end(), [](const PlantedEvent& a, const PlantedEvent& b) {
        return a.event.pump_time != b.event.pump_time ? a.event.pump_time < b.event.pump_time
                                                      : a.event.channel_id < b.event.channel_id;
    });
    w.planted = planted;
    w.merged = merge_events(w.planted_events());

    // ------------------------------------------------------------------
    // candles: hourly geometric random walk + shocks
    auto rng_mkt = fork_rng(cfg.seed, 108);
    const std::int64_t h0 = (cfg.start - 4 * kDay) / kHour;
    const std::int64_t h1 = w.end / kHour;
    std::vector<std::vector<Shock>> shocks(cfg.n_coins);
    for (const auto& m : w.merged) {
        std::size_t coin = 0;
        for (std::size_t c = 0; c < w.coins.size(); ++c)
            if (w.coins[c].symbol == m.target_coin) coin = c;
        Shock s;
        const std::int64_t th = m.pump_time / kHour;
        s.from = th - 57;
        s.to = th - 1;
        s.log_return = cfg.pre_pump_drift * uniform(rng_mkt, 0.4, 1.6);
        s.volume_boost = cfg.pre_pump_drift * uniform(rng_mkt, 10.0, 30.0);
        s.spike_at = th;
        s.spike = uniform(rng_mkt, 0.15, 0.6);
        shocks[coin].push_back(s);
    }
    for (std::size_t c = 0; c < cfg.n_coins; ++c) {
        double days = static_cast<double>(h1 - h0) / 24.0;
        double expected = cfg.rally_rate * days;
        // Poisson count by inversion
        double u = uniform01(rng_mkt), p = std::exp(-expected), cum = p;
        std::size_t n_r = 0;
        while (u > cum && n_r < 1000) {
            ++n_r;
            p *= expected / static_cast<double>(n_r);
            cum += p;
        }
        for (std::size_t r = 0; r < n_r; ++r) {
            Shock s;
            s.from = h0 + static_cast<std::int64_t>(uniform01(rng_mkt) * static_cast<double>(h1 - h0));
            s.to = s.from + 20 + static_cast<std::int64_t>(uniform_index(rng_mkt, 50));
            s.log_return = (cfg.pre_pump_drift > 0 ? cfg.pre_pump_drift : 0.1) * uniform(rng_mkt, 0.4, 1.6) *
                           (uniform01(rng_mkt) < 0.7 ? 1.0 : -1.0);
            s.volume_boost = uniform(rng_mkt, 0.5, 2.5);
            shocks[c].push_back(s);
        }
    }
    for (std::size_t c = 0; c < cfg.n_coins; ++c) {
        const auto& ct = w.coins[c];
        const std::int64_t first = std::max(h0, ct.listed_from / kHour);
        // log price mean-reverts to a level set by size, so market cap keeps
        // tracking the latent trait over long horizons
        const double level = -4.0 + 1.5 * ct.size + 0.3 * normal(rng_mkt);
        double price = std::exp(level);
        const double base_vol = std::exp(3.0 + 1.2 * ct.size + 0.4 * ct.social);
        const double sigma = cfg.price_noise * std::exp(-0.15 * ct.size);
        CandleSeries btc{ct.symbol, "BTC", {}, 0, 0};
        CandleSeries eth{ct.symbol, "ETH", {}, 0, 0};
        const double eth_ratio = 25.0;
        double eth_price = price * eth_ratio;
        double dump_left = 0.0;
        for (std::int64_t h = first; h < h1; ++h) {
            double r = normal(rng_mkt, 0.0, sigma) - cfg.mean_reversion * (std::log(price) - level);
            double boost = 1.0;
            for (const auto& s : shocks[c]) {
                if (h >= s.from && h < s.to) {
                    r += s.log_return / static_cast<double>(s.to - s.from);
                    boost += s.volume_boost * static_cast<double>(h - s.from + 1) / static_cast<double>(s.to - s.from);
                }
                if (h == s.spike_at) {
                    r += s.spike;
                    boost += 15.0;
                    dump_left += s.spike * 1.2 + s.log_return;
                }
            }
            if (dump_left > 0.0 && !std::any_of(shocks[c].begin(), shocks[c].end(), [&](const Shock& s) { return h == s.spike_at; })) {
                double d = std::min(dump_left, dump_left * 0.35 + 0.01);
                r -= d;
                dump_left -= d;
                boost += 3.0;
            }
            double open = price;
            double close = price * std::exp(r);
            double wig = std::abs(normal(rng_mkt, 0.0, sigma * 0.5));
            double high = std::max(open, close) * std::exp(wig);
            double low = std::min(open, close) * std::exp(-std::abs(normal(rng_mkt, 0.0, sigma * 0.5)));
            double vol = base_vol * boost * std::exp(normal(rng_mkt, 0.0, 0.35));
            btc.candles.push_back({h * kHour, open, high, low, close, vol});
            double eo = eth_price;
            double ec = close * eth_ratio * std::exp(normal(rng_mkt, 0.0, 0.002));
            eth.candles.push_back({h * kHour, eo, std::max({eo, ec, high * eth_ratio}), std::min({eo, ec, low * eth_ratio}), ec,
                                   vol / eth_ratio});
            eth_price = ec;
            price = close;
        }
        w.candles.add(std::move(btc));
        w.candles.add(std::move(eth));
    }

    // weekly coin statistics; market cap follows the BTC close
    auto rng_stats = fork_rng(cfg.seed, 109);
    for (std::size_t c = 0; c < cfg.n_coins; ++c) {
        const auto& ct = w.coins[c];
        const auto* series = w.candles.find(ct.symbol, "BTC");
        const double supply = std::exp(18.0 + 1.0 * ct.size - (-4.0 + 1.5 * ct.size));
        const double alexa0 = 13.0 - 1.3 * ct.social + 0.2 * normal(rng_stats);
        const double reddit0 = 8.0 + 1.3 * ct.social + 0.2 * normal(rng_stats);
        const double twitter0 = 9.0 + 1.2 * ct.social + 0.2 * normal(rng_stats);
        for (std::int64_t day = (cfg.start - 14 * kDay) / kDay * kDay; day < w.end; day += 7 * kDay) {
            if (day < ct.listed_from) continue;
            auto idx = w.candles.nearest(*series, day, 12 * kHour);
            if (!idx) continue;
            double drift = 0.05 * normal(rng_stats);
            CoinStats s;
            s.coin = ct.symbol;
            s.as_of = day;
            s.market_cap = std::round(series->candles[*idx].close * supply);
            s.alexa_rank = std::max<std::int64_t>(1, std::llround(std::exp(alexa0 + drift)));
            s.reddit_subscribers = std::llround(std::exp(reddit0 - drift));
            s.twitter_followers = std::llround(std::exp(twitter0 - drift));
            w.stats.add(s);
        }
    }

    // ------------------------------------------------------------------
    // messages
    auto rng_msg = fork_rng(cfg.seed, 110);
    std::map<std::string, std::vector<Message>> by_channel;
    auto post = [&](const std::string& ch, std::int64_t t, std::string text) {
        by_channel[ch].push_back({ch, 0, t, std::move(text)});
    };
    auto hour_str = [](std::int64_t t) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%02lld", static_cast<long long>((t % kDay) / kHour));
        return std::string(buf);
    };
    for (const auto& p : w.planted) {
        const auto& e = p.event;
        const auto T = e.pump_time;
        std::map<std::string, std::string> v = {{"EX", e.exchange},
                                                {"PAIR", e.pairing_coin},
                                                {"DATE", format_date(T)},
                                                {"HOUR", hour_str(T)},
                                                {"SYM", e.target_coin}};
        post(e.channel_id, T - static_cast<std::int64_t>(30 + uniform_index(rng_msg, 17)) * kHour,
             tx::fill(tx::pick(tx::kAnnounce, rng_msg), v));
        const std::vector<std::pair<std::int64_t, std::string>> countdown = {
            {24 * kHour, "24 hours"}, {12 * kHour, "12 hours"}, {6 * kHour, "6 hours"},
            {kHour, "1 hour"},        {30 * kMinute, "30 minutes"}, {5 * kMinute, "5 minutes"}};
        for (const auto& [dt, label] : countdown) {
            auto sp = label.find(' ');
            auto vv = v;
            vv["N"] = label.substr(0, sp);
            vv["UNIT"] = label.substr(sp + 1);
            post(e.channel_id, T - dt, tx::fill(tx::pick(tx::kCountdown, rng_msg), vv));
        }
        post(e.channel_id, T - kMinute, tx::pick(tx::kNext, rng_msg));
        post(e.channel_id, T, p.garbled ? tx::fill(tx::pick(tx::kGarbled, rng_msg), v) : e.target_coin);
        auto vr = v;
        vr["PCT"] = std::to_string(40 + uniform_index(rng_msg, 260));
        post(e.channel_id, T + static_cast<std::int64_t>(5 + uniform_index(rng_msg, 25)) * kMinute,
             tx::fill(tx::pick(tx::kReview, rng_msg), vr));
    }

    // ambiguous sessions after each chosen channel's last pump
    {
        std::map<std::string, std::int64_t> last;
        for (const auto& p : w.planted) last[p.event.channel_id] = std::max(last[p.event.channel_id], p.event.pump_time);
        for (std::size_t a = 0; a < cfg.ambiguous_sessions; ++a) {
            const auto& ch = w.channels[a % w.channels.size()];
            std::int64_t T = last[ch.id] + 3 * kDay;
            T = (T / kHour) * kHour;
            last[ch.id] = T;
            if (w.coins.size() < 2) break;
            std::size_t c1 = uniform_index(rng_msg, w.coins.size());
            std::size_t c2 = (c1 + 1 + uniform_index(rng_msg, w.coins.size() - 1)) % w.coins.size();
            std::map<std::string, std::string> v = {{"EX", ch.exchange}, {"PAIR", ch.pairing}, {"DATE", format_date(T)},
                                                    {"HOUR", hour_str(T)}, {"N", "1"}, {"UNIT", "hour"}};
            post(ch.id, T - 20 * kHour, tx::fill(tx::pick(tx::kAnnounce, rng_msg), v));
            post(ch.id, T - kHour, tx::fill(tx::pick(tx::kCountdown, rng_msg), v));
            post(ch.id, T - kMinute, tx::pick(tx::kNext, rng_msg));
            post(ch.id, T, w.coins[c1].symbol);
            post(ch.id, T + 2 * kMinute, w.coins[c2].symbol);
            w.ambiguous.push_back({ch.id, T - 20 * kHour, T + 2 * kMinute, "two symbols released"});
            w.end = std::max(w.end, T + kDay);
        }
    }

    // chatter, uniformly over each channel's active span
    for (const auto& ch : w.channels) {
        std::int64_t lo = cfg.start, hi = w.end;
        auto n = static_cast<std::size_t>(cfg.chatter_per_day * static_cast<double>(hi - lo) / kDay);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& coin = w.coins[ch.pool[uniform_index(rng_msg, ch.pool.size())]];
            auto t = lo + static_cast<std::int64_t>(uniform01(rng_msg) * static_cast<double>(hi - lo));
            std::string link;
            for (int k = 0; k < 8; ++k) link.push_back(static_cast<char>('a' + uniform_index(rng_msg, 26)));
            std::map<std::string, std::string> v = {
                {"SYM", coin.symbol},
                {"SECW", tx::kSectorWords[coin.sector][uniform_index(rng_msg, 4)]},
                {"MOOD", tx::pick(tx::kMoods, rng_msg)},
                {"DIR", tx::pick(tx::kDirs, rng_msg)},
                {"MAJOR", tx::pick(tx::kMajors, rng_msg)},
                {"LINK", link}};
            post(ch.id, t, tx::fill(tx::pick(tx::kChatter, rng_msg), v));
        }
    }
    for (auto& [ch, msgs] : by_channel) {
        std::stable_sort(msgs.begin(), msgs.end(),
                         [](const Message& a, const Message& b) { return a.timestamp < b.timestamp; });
        for (std::size_t i = 0; i < msgs.size(); ++i) msgs[i].message_id = static_cast<std::int64_t>(i + 1);
        w.messages.insert(w.messages.end(), msgs.begin(), msgs.end());
    }

    // general corpus: every coin described by its sector, size and reach
    auto rng_corpus = fork_rng(cfg.seed, 111);
    std::vector<std::vector<std::size_t>> by_sector(n_sectors);
    for (std::size_t c = 0; c < w.coins.size(); ++c) by_sector[w.coins[c].sector].push_back(c);
    for (std::size_t c = 0; c < w.coins.size(); ++c) {
        const auto& ct = w.coins[c];
        const auto& mates = by_sector[ct.sector];
        for (std::size_t s = 0; s < cfg.corpus_sentences_per_coin; ++s) {
            std::map<std::string, std::string> v = {
                {"SYM", ct.symbol},
                {"SYM2", w.coins[mates[uniform_index(rng_corpus, mates.size())]].symbol},
                {"SECW", tx::kSectorWords[ct.sector][uniform_index(rng_corpus, 4)]},
                {"SECW2", tx::kSectorWords[ct.sector][uniform_index(rng_corpus, 4)]},
                {"SIZEW", tx::kSizeWords[tercile(ct.size)][uniform_index(rng_corpus, 3)]},
                {"SOCW", tx::kSocialWords[tercile(ct.social)][uniform_index(rng_corpus, 3)]}};
            w.corpus.push_back(tx::fill(tx::pick(tx::kCorpus, rng_corpus), v));
        }
    }
    return w;
}

// ---------------------------------------------------------------------------
// labeled detector corpus: pump lifecycle messages (1) vs chatter (0)

inline std::vector<LabeledText> generate_labeled_corpus(const std::vector<std::string>& symbols,
                                                        const std::vector<std::string>& exchanges, std::size_t n,
                                                        std::uint64_t seed, double pump_fraction = 0.4) {
    namespace tx = synth_text;
    if (symbols.empty() || exchanges.empty()) throw ConfigError("labeled corpus needs symbols and exchanges");
    auto rng = fork_rng(seed, 201);
    std::vector<LabeledText> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& sym = symbols[uniform_index(rng, symbols.size())];
        std::int64_t t = 1546300800 + static_cast<std::int64_t>(uniform_index(rng, 700)) * kDay +
                         static_cast<std::int64_t>(uniform_index(rng, 24)) * kHour;
        std::string link;
        for (int k = 0; k < 8; ++k) link.push_back(static_cast<char>('a' + uniform_index(rng, 26)));
        std::map<std::string, std::string> v = {{"EX", exchanges[uniform_index(rng, exchanges.size())]},
                                                {"PAIR", uniform01(rng) < 0.8 ? "BTC" : "ETH"},
                                                {"DATE", format_date(t)},
                                                {"HOUR", std::to_string(t % kDay / kHour)},
                                                {"SYM", sym},
                                                {"N", std::to_string(1 + uniform_index(rng, 24))},
                                                {"UNIT", uniform01(rng) < 0.5 ? "hours" : "minutes"},
                                                {"PCT", std::to_string(40 + uniform_index(rng, 260))},
                                                {"SECW", tx::kSectorWords[uniform_index(rng, 8)][uniform_index(rng, 4)]},
                                                {"MOOD", tx::pick(tx::kMoods, rng)},
                                                {"DIR", tx::pick(tx::kDirs, rng)},
                                                {"MAJOR", tx::pick(tx::kMajors, rng)},
                                                {"LINK", link}};
        if (uniform01(rng) < pump_fraction) {
            double u = uniform01(rng);
            const char* tpl = u < 0.25   ? tx::pick(tx::kAnnounce, rng)
                              : u < 0.7  ? tx::pick(tx::kCountdown, rng)
                              : u < 0.8  ? tx::pick(tx::kNext, rng)
                              : u < 0.9  ? "{SYM}"
                                         : tx::pick(tx::kReview, rng);
            out.push_back({tx::fill(tpl, v), 1});
        } else {
            out.push_back({tx::fill(tx::pick(tx::kChatter, rng), v), 0});
        }
    }
    return out;
}

inline nlohmann::json to_json(const LabeledText& t) { return {{"text", t.text}, {"label", t.label}}; }

inline std::vector<LabeledText> read_labeled_jsonl(const std::filesystem::path& path) {
    std::vector<LabeledText> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back({j.at("text").get<std::string>(), j.at("label").get<int>()});
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
        if (out.back().label != 0 && out.back().label != 1) throw MalformedRow(line, "label must be 0 or 1");
    });
    return out;
}

// ---------------------------------------------------------------------------
// audit and invariants

struct AuditReport {
    std::size_t planted = 0;
    std::size_t extracted = 0;
    std::size_t matched = 0;
    double precision = 0.0;
    double recall = 0.0;
    std::size_t ambiguous_planted = 0;
    std::size_t ambiguous_in_review = 0;
    std::size_t ambiguous_in_events = 0;
};

// Extracted events match planted ones on the full quintuple.
inline AuditReport ground_truth_audit(const World& w, const std::vector<PumpEvent>& extracted,
                                      const std::vector<AmbiguousSession>& review) {
    AuditReport r;
    r.planted = w.planted.size();
    r.extracted = extracted.size();
    std::multiset<std::tuple<std::string, std::int64_t, std::string, std::string, std::string>> truth;
    for (const auto& p : w.planted)
        truth.insert({p.event.channel_id, p.event.pump_time, p.event.exchange, p.event.pairing_coin, p.event.target_coin});
    for (const auto& e : extracted) {
        auto it = truth.find({e.channel_id, e.pump_time, e.exchange, e.pairing_coin, e.target_coin});
        if (it != truth.end()) {
            ++r.matched;
            truth.erase(it);
        }
    }
    r.precision = r.extracted ? static_cast<double>(r.matched) / static_cast<double>(r.extracted) : 1.0;
    r.recall = r.planted ? static_cast<double>(r.matched) / static_cast<double>(r.planted) : 1.0;
    r.ambiguous_planted = w.ambiguous.size();
    for (const auto& a : w.ambiguous) {
        bool in_review = std::any_of(review.begin(), review.end(), [&](const AmbiguousSession& s) {
            return s.channel_id == a.channel_id && s.start <= a.end && a.start <= s.end;
        });
        bool in_events = std::any_of(extracted.begin(), extracted.end(), [&](const PumpEvent& e) {
            return e.channel_id == a.channel_id && e.pump_time >= a.start && e.pump_time <= a.end;
        });
        r.ambiguous_in_review += in_review ? 1 : 0;
        r.ambiguous_in_events += in_events ? 1 : 0;
    }
    return r;
}

inline nlohmann::json to_json(const AuditReport& r) {
    return {{"planted", r.planted},
            {"extracted", r.extracted},
            {"matched", r.matched},
            {"precision", r.precision},
            {"recall", r.recall},
            {"ambiguous_planted", r.ambiguous_planted},
            {"ambiguous_in_review", r.ambiguous_in_review},
            {"ambiguous_in_events", r.ambiguous_in_events}};
}

struct OverlapStats {
    double within = 0.0;  // Jaccard of a channel's early vs late pumped coins
    double across = 0.0;  // Jaccard between different channels' pumped coins
};

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& x : a) inter += b.contains(x) ? 1 : 0;
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

// Homogeneity check over channel pools: within = mean Jaccard between the
// pool-restricted targets of a channel's two halves; across = mean Jaccard
// between pools of distinct channels vs a channel's own pool (1.0).
inline OverlapStats pool_overlap(const World& w) {
    OverlapStats s;
    std::vector<std::set<std::string>> pools;
    for (const auto& ch : w.channels) {
        std::set<std::string> p;
        for (auto c : ch.pool) p.insert(w.coins[c].symbol);
        pools.push_back(std::move(p));
    }
    std::map<std::string, std::vector<std::string>> targets;
    for (const auto& p : w.planted) targets[p.event.channel_id].push_back(p.event.target_coin);
    double within = 0.0, across = 0.0;
    std::size_t nw = 0, na = 0;
    for (std::size_t i = 0; i < w.channels.size(); ++i) {
        const auto& t = targets[w.channels[i].id];
        if (t.size() < 2) continue;
        std::set<std::string> a(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2));
        std::set<std::string> b(t.begin() + static_cast<std::ptrdiff_t>(t.size() / 2), t.end());
        within += jaccard(a, pools[i]) + jaccard(b, pools[i]);
        nw += 2;
        for (std::size_t j = 0; j < w.channels.size(); ++j) {
            if (j == i) continue;
            across += jaccard(a, pools[j]) + jaccard(b, pools[j]);
            na += 2;
        }
    }
    s.within = nw ? within / static_cast<double>(nw) : 0.0;
    s.across = na ? across / static_cast<double>(na) : 0.0;
    return s;
}

// ---------------------------------------------------------------------------
// persistence

inline nlohmann::json to_json(const WorldConfig& c) {
    return {{"seed", c.seed},
            {"n_channels", c.n_channels},
            {"n_coins", c.n_coins},
            {"coins_per_channel_pool", c.coins_per_channel_pool},
            {"events_per_channel", c.events_per_channel},
            {"n_sectors", c.n_sectors},
            {"home_sectors", c.home_sectors},
            {"pre_pump_drift", c.pre_pump_drift},
            {"price_noise", c.price_noise},
            {"rally_rate", c.rally_rate},
            {"mean_reversion", c.mean_reversion},
            {"listing_fraction", c.listing_fraction},
            {"eth_listing_fraction", c.eth_listing_fraction},
            {"late_listing_fraction", c.late_listing_fraction},
            {"delisting_fraction", c.delisting_fraction},
            {"regime_length", c.regime_length},
            {"regime_spread", c.regime_spread},
            {"recency_decay", c.recency_decay},
            {"taste_pull", c.taste_pull},
            {"taste_width", c.taste_width},
            {"sector_boost", c.sector_boost},
            {"off_pool_prob", c.off_pool_prob},
            {"repeat_prob", c.repeat_prob},
            {"federation_prob", c.federation_prob},
            {"eth_channel_prob", c.eth_channel_prob},
            {"cold_start_fraction", c.cold_start_fraction},
            {"start", c.start},
            {"min_gap_days", c.min_gap_days},
            {"max_gap_days", c.max_gap_days},
            {"train_fraction", c.train_fraction},
            {"validation_fraction", c.validation_fraction},
            {"message_noise", c.message_noise},
            {"ambiguous_sessions", c.ambiguous_sessions},
            {"chatter_per_day", c.chatter_per_day},
            {"corpus_sentences_per_coin", c.corpus_sentences_per_coin},
            {"exchanges", c.exchanges}};
}

inline WorldConfig world_config_from_json(const nlohmann::json& j) {
    WorldConfig c;
    auto get = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    get("seed", c.seed);
    get("n_channels", c.n_channels);
    get("n_coins", c.n_coins);
    get("coins_per_channel_pool", c.coins_per_channel_pool);
    get("events_per_channel", c.events_per_channel);
    get("n_sectors", c.n_sectors);
    get("home_sectors", c.home_sectors);
    get("pre_pump_drift", c.pre_pump_drift);
    get("price_noise", c.price_noise);
    get("rally_rate", c.rally_rate);
    get("mean_reversion", c.mean_reversion);
    get("listing_fraction", c.listing_fraction);
    get("eth_listing_fraction", c.eth_listing_fraction);
    get("late_listing_fraction", c.late_listing_fraction);
    get("delisting_fraction", c.delisting_fraction);
    get("regime_length", c.regime_length);
    get("regime_spread", c.regime_spread);
    get("recency_decay", c.recency_decay);
    get("taste_pull", c.taste_pull);
    get("taste_width", c.taste_width);
    get("sector_boost", c.sector_boost);
    get("off_pool_prob", c.off_pool_prob);
    get("repeat_prob", c.repeat_prob);
    get("federation_prob", c.federation_prob);
    get("eth_channel_prob", c.eth_channel_prob);
    get("cold_start_fraction", c.cold_start_fraction);
    get("start", c.start);
    get("min_gap_days", c.min_gap_days);
    get("max_gap_days", c.max_gap_days);
    get("train_fraction", c.train_fraction);
    get("validation_fraction", c.validation_fraction);
    get("message_noise", c.message_noise);
    get("ambiguous_sessions", c.ambiguous_sessions);
    get("chatter_per_day", c.chatter_per_day);
    get("corpus_sentences_per_coin", c.corpus_sentences_per_coin);
    get("exchanges", c.exchanges);
    return c;
}

// Writes every fixture the pipeline consumes, plus ground truth:
//   messages.jsonl corpus.txt labeled.jsonl candles/ listings.csv
//   coin_stats.csv truth/events.jsonl truth/merged.jsonl
//   truth/ambiguous.jsonl world.json
inline void write_world(const World& w, const std::filesystem::path& dir, std::size_t labeled_docs = 5000) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "truth");
    write_messages_jsonl(dir / "messages.jsonl", w.messages);
    {
        auto out = open_output(dir / "corpus.txt");
        for (const auto& s : w.corpus) out << s << '\n';
    }
    write_jsonl(dir / "labeled.jsonl",
                generate_labeled_corpus(w.symbols(), w.config.exchanges, labeled_docs, w.config.seed));
    dump_candles(w.candles, dir / "candles");
    write_listings(dir / "listings.csv", w.listings);
    write_coin_stats(dir / "coin_stats.csv", w.stats);
    write_jsonl(dir / "truth" / "events.jsonl", w.planted_events());
    write_jsonl(dir / "truth" / "merged.jsonl", w.merged);
    write_jsonl(dir / "truth" / "ambiguous.jsonl", w.ambiguous);
    write_jsonl(dir / "pending.jsonl", w.pending_events());
    auto out = open_output(dir / "world.json");
    out << nlohmann::json{{"config", to_json(w.config)},
                          {"t1", w.t1},
                          {"t2", w.t2},
                          {"pairing_coins", w.pairing_coins()},
                          {"exchanges", w.config.exchanges}}
               .dump(1)
        << '\n';
}

}  // namespace pnd
