#pragma once

// OHLCV candle store, coin statistics, exchange listings and windowed
// market-movement features.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "util.hpp"

namespace pnd {

struct Candle {
    std::int64_t open_time = 0;
    double open = 0, high = 0, low = 0, close = 0, volume = 0;

    friend bool operator==(const Candle&, const Candle&) = default;
};

struct CandleSeries {
    std::string coin;
    std::string pairing;
    std::vector<Candle> candles;  // strictly increasing open_time
    std::int64_t step = 0;        // smallest spacing observed
    std::size_t gaps = 0;         // spacings larger than `step`
};

inline bool candle_valid(const Candle& c) {
    auto finite = std::isfinite(c.open) && std::isfinite(c.high) && std::isfinite(c.low) && std::isfinite(c.close) &&
                  std::isfinite(c.volume);
    return finite && c.low <= std::min(c.open, c.close) && std::max(c.open, c.close) <= c.high && c.volume >= 0 &&
           c.low > 0;
}

// Recomputes step/gap bookkeeping and checks time monotonicity.
inline void finalize_series(CandleSeries& s) {
    s.step = 0;
    s.gaps = 0;
    for (std::size_t i = 1; i < s.candles.size(); ++i) {
        auto d = s.candles[i].open_time - s.candles[i - 1].open_time;
        if (d <= 0)
            throw NonMonotonicTime(s.coin + "/" + s.pairing + " at open_time " +
                                   std::to_string(s.candles[i].open_time));
        if (s.step == 0 || d < s.step) s.step = d;
    }
    for (std::size_t i = 1; i < s.candles.size(); ++i)
        if (s.candles[i].open_time - s.candles[i - 1].open_time > s.step) ++s.gaps;
}

inline constexpr std::string_view kCandleHeader = "open_time,open,high,low,close,volume";

inline CandleSeries parse_candle_csv(const std::vector<std::string>& lines, std::string coin, std::string pairing) {
    if (lines.empty() || trim(lines.front()) != kCandleHeader)
        throw MalformedRow(1, "expected header '" + std::string(kCandleHeader) + "'");
    CandleSeries s;
    s.coin = std::move(coin);
    s.pairing = std::move(pairing);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto f = split(lines[i], ',');
        Candle c;
        if (f.size() != 6 || !parse_number(f[0], c.open_time) || !parse_number(f[1], c.open) ||
            !parse_number(f[2], c.high) || !parse_number(f[3], c.low) || !parse_number(f[4], c.close) ||
            !parse_number(f[5], c.volume))
            throw MalformedRow(i + 1, "unparseable candle row");
        if (!candle_valid(c)) throw MalformedRow(i + 1, "candle violates low <= open/close <= high, volume >= 0");
        if (!s.candles.empty() && c.open_time <= s.candles.back().open_time)
            throw NonMonotonicTime("line " + std::to_string(i + 1) + " of " + s.coin + "_" + s.pairing);
        s.candles.push_back(c);
    }
    finalize_series(s);
    return s;
}

inline std::string candle_csv(const CandleSeries& s) {
    std::string out(kCandleHeader);
    out.push_back('\n');
    for (const auto& c : s.candles) {
        out += std::to_string(c.open_time);
        for (double v : {c.open, c.high, c.low, c.close, c.volume}) {
            out.push_back(',');
            out += format_double(v);
        }
        out.push_back('\n');
    }
    return out;
}

// Candles keyed by (coin, pairing); immutable once loaded.
class CandleStore {
public:
    void add(CandleSeries s) {
        finalize_series(s);
        auto key = std::make_pair(s.coin, s.pairing);
        series_[key] = std::move(s);
    }

    const CandleSeries* find(const std::string& coin, const std::string& pairing) const {
        auto it = series_.find({coin, pairing});
        return it == series_.end() ? nullptr : &it->second;
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [k, s] : series_) n += s.candles.size();
        return n;
    }
    std::size_t series_count() const { return series_.size(); }
    std::size_t gaps() const {
        std::size_t n = 0;
        for (const auto& [k, s] : series_) n += s.gaps;
        return n;
    }
    const std::map<std::pair<std::string, std::string>, CandleSeries>& all() const { return series_; }

    // Index of the candle nearest to `t` within `tolerance` seconds; earlier
    // candle wins a tie.
    std::optional<std::size_t> nearest(const CandleSeries& s, std::int64_t t, std::int64_t tolerance) const {
        const auto& c = s.candles;
        auto it = std::lower_bound(c.begin(), c.end(), t,
                                   [](const Candle& k, std::int64_t v) { return k.open_time < v; });
        std::optional<std::size_t> best;
        std::int64_t best_d = tolerance + 1;
        if (it != c.end()) {
            auto d = it->open_time - t;
            if (d <= tolerance) {
                best = static_cast<std::size_t>(it - c.begin());
                best_d = d;
            }
        }
        if (it != c.begin()) {
            auto prev = std::prev(it);
            auto d = t - prev->open_time;
            if (d <= tolerance && d <= best_d) best = static_cast<std::size_t>(prev - c.begin());
        }
        return best;
    }

private:
    std::map<std::pair<std::string, std::string>, CandleSeries> series_;
};

// Loads a single "<COIN>_<PAIRING>.csv" file or every such file in a directory.
inline CandleStore load_candles(const std::filesystem::path& path) {
    namespace fs = std::filesystem;
    CandleStore store;
    auto load_one = [&](const fs::path& file) {
        auto stem = file.stem().string();
        auto pos = stem.rfind('_');
        if (pos == std::string::npos || pos == 0 || pos + 1 == stem.size())
            throw FormatError("candle file name must be <COIN>_<PAIRING>.csv: " + file.string());
        try {
            store.add(parse_candle_csv(read_lines(file), stem.substr(0, pos), stem.substr(pos + 1)));
        } catch (const MalformedRow& e) {
            throw MalformedRow(e.line(), file.string() + ": " + e.detail());
        }
    };
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.path().extension() == ".csv") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) load_one(f);
    } else if (fs::exists(path)) {
        load_one(path);
    } else {
        throw MissingInput("no candle data at " + path.string());
    }
    return store;
}

inline void dump_candles(const CandleStore& store, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [key, s] : store.all()) {
        auto out = open_output(dir / (s.coin + "_" + s.pairing + ".csv"));
        out << candle_csv(s);
    }
}

// Every candle of every series in (open_time, coin, pairing) order.
inline void replay_candles(const CandleStore& store, std::int64_t from, std::int64_t to,
                           const std::function<void(const CandleSeries&, const Candle&)>& fn) {
    struct Cursor {
        const CandleSeries* s;
        std::size_t i;
    };
    std::vector<Cursor> cursors;
    for (const auto& [key, s] : store.all()) {
        auto it = std::lower_bound(s.candles.begin(), s.candles.end(), from,
                                   [](const Candle& c, std::int64_t v) { return c.open_time < v; });
        cursors.push_back({&s, static_cast<std::size_t>(it - s.candles.begin())});
    }
    while (true) {
        Cursor* best = nullptr;
        for (auto& c : cursors) {
            if (c.i >= c.s->candles.size() || c.s->candles[c.i].open_time >= to) continue;
            if (!best || c.s->candles[c.i].open_time < best->s->candles[best->i].open_time) best = &c;
        }
        if (!best) return;
        fn(*best->s, best->s->candles[best->i]);
        ++best->i;
    }
}

// ---------------------------------------------------------------------------
// windowed features

inline constexpr std::array<int, 8> kWindowHours = {1, 3, 6, 12, 24, 48, 60, 72};
inline constexpr std::int64_t kEndpointTolerance = 5 * kMinute;

// (close(t-1h) - close(t-(x+1)h)) / close(t-(x+1)h); throws MissingData when
// an endpoint has no candle within the tolerance.
inline double window_return(const CandleStore& store, const std::string& coin, const std::string& pairing,
                            std::int64_t pump_time, int x_hours, std::int64_t tolerance = kEndpointTolerance) {
    const auto* s = store.find(coin, pairing);
    if (!s) throw MissingData("no candles for " + coin + "/" + pairing);
    auto end = store.nearest(*s, pump_time - kHour, tolerance);
    auto start = store.nearest(*s, pump_time - (x_hours + 1) * kHour, tolerance);
    if (!end || !start) throw MissingData("window endpoint missing for " + coin + "/" + pairing);
    double c0 = s->candles[*start].close;
    double c1 = s->candles[*end].close;
    return (c1 - c0) / c0;
}

struct WindowStat {
    double ret = 0.0;
    double mean_volume = 0.0;
    double max_volume = 0.0;
    double volatility = 0.0;  // root mean square of per-candle log-returns
    bool missing = false;
};

struct WindowFeatures {
    std::array<WindowStat, kWindowHours.size()> windows{};
    int imputed = 0;
};

inline WindowFeatures compute_window_features(const CandleStore& store, const std::string& coin,
                                              const std::string& pairing, std::int64_t pump_time,
                                              std::int64_t tolerance = kEndpointTolerance) {
    WindowFeatures out;
    const auto* s = store.find(coin, pairing);
    for (std::size_t w = 0; w < kWindowHours.size(); ++w) {
        auto& st = out.windows[w];
        std::optional<std::size_t> end, start;
        if (s) {
            end = store.nearest(*s, pump_time - kHour, tolerance);
            start = store.nearest(*s, pump_time - (kWindowHours[w] + 1) * kHour, tolerance);
        }
        if (!end || !start || *start > *end) {
            st = WindowStat{};
            st.missing = true;
            ++out.imputed;
            continue;
        }
        const auto& c = s->candles;
        double vol_sum = 0.0, vol_max = 0.0, sq = 0.0;
        for (std::size_t i = *start; i <= *end; ++i) {
            vol_sum += c[i].volume;
            vol_max = std::max(vol_max, c[i].volume);
            if (i > *start) {
                double r = std::log(c[i].close / c[i - 1].close);
                sq += r * r;
            }
        }
        const auto n = static_cast<double>(*end - *start + 1);
        st.ret = (c[*end].close - c[*start].close) / c[*start].close;
        st.mean_volume = vol_sum / n;
        st.max_volume = vol_max;
        st.volatility = *end > *start ? std::sqrt(sq / static_cast<double>(*end - *start)) : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// coin statistics

struct CoinStats {
    std::string coin;
    std::int64_t as_of = 0;  // day start, epoch seconds
    double market_cap = 0;
    std::int64_t alexa_rank = 1;
    std::int64_t reddit_subscribers = 0;
    std::int64_t twitter_followers = 0;
};

inline constexpr std::string_view kCoinStatsHeader =
    "coin,date,market_cap,alexa_rank,reddit_subscribers,twitter_followers";
inline constexpr std::int64_t kStatsLag = 72 * kHour;

class CoinStatsTable {
public:
    void add(CoinStats s) {
        if (s.market_cap < 0 || s.alexa_rank < 1 || s.reddit_subscribers < 0 || s.twitter_followers < 0)
            throw FormatError("coin stats out of range for " + s.coin);
        auto& v = by_coin_[s.coin];
        auto it = std::upper_bound(v.begin(), v.end(), s.as_of,
                                   [](std::int64_t t, const CoinStats& r) { return t < r.as_of; });
        v.insert(it, std::move(s));
    }

    // Latest record at or before `t`.
    const CoinStats* at_or_before(const std::string& coin, std::int64_t t) const {
        auto it = by_coin_.find(coin);
        if (it == by_coin_.end()) return nullptr;
        const auto& v = it->second;
        auto pos = std::upper_bound(v.begin(), v.end(), t,
                                    [](std::int64_t x, const CoinStats& r) { return x < r.as_of; });
        if (pos == v.begin()) return nullptr;
        return &*std::prev(pos);
    }

    // Stable statistics used for a pump at `pump_time`: three days earlier.
    const CoinStats* for_pump(const std::string& coin, std::int64_t pump_time) const {
        return at_or_before(coin, pump_time - kStatsLag);
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [k, v] : by_coin_) n += v.size();
        return n;
    }
    const std::map<std::string, std::vector<CoinStats>>& all() const { return by_coin_; }

private:
    std::map<std::string, std::vector<CoinStats>> by_coin_;
};

inline CoinStatsTable load_coin_stats(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || trim(lines.front()) != kCoinStatsHeader)
        throw MalformedRow(1, path.string() + ": expected header '" + std::string(kCoinStatsHeader) + "'");
    CoinStatsTable t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto f = split(lines[i], ',');
        CoinStats s;
        std::optional<std::int64_t> date;
        if (f.size() != 6 || !(date = parse_date(trim(f[1]))) || !parse_number(f[2], s.market_cap) ||
            !parse_number(f[3], s.alexa_rank) || !parse_number(f[4], s.reddit_subscribers) ||
            !parse_number(f[5], s.twitter_followers))
            throw MalformedRow(i + 1, path.string() + ": unparseable coin stats row");
        s.coin = std::string(trim(f[0]));
        s.as_of = *date;
        try {
            t.add(std::move(s));
        } catch (const FormatError& e) {
            throw MalformedRow(i + 1, e.what());
        }
    }
    return t;
}

inline void write_coin_stats(const std::filesystem::path& path, const CoinStatsTable& table) {
    auto out = open_output(path);
    out << kCoinStatsHeader << '\n';
    for (const auto& [coin, rows] : table.all())
        for (const auto& s : rows)
            out << s.coin << ',' << format_date(s.as_of) << ',' << format_double(s.market_cap) << ',' << s.alexa_rank
                << ',' << s.reddit_subscribers << ',' << s.twitter_followers << '\n';
}

// ---------------------------------------------------------------------------
// exchange listings

struct Listing {
    std::string exchange;
    std::string coin;
    std::string pairing;
    std::int64_t listed_from = 0;
    std::int64_t delisted_at = 0;  // 0 = still listed
};

inline constexpr std::string_view kListingHeader = "exchange,coin,pairing,listed_from,delisted_at";

class ListingTable {
public:
    void add(Listing l) { rows_.push_back(std::move(l)); }

    // Coins listed on `exchange` against `pairing` at time `t`, sorted.
    std::vector<std::string> snapshot(const std::string& exchange, const std::string& pairing, std::int64_t t) const {
        std::set<std::string> coins;
        for (const auto& r : rows_)
            if (r.exchange == exchange && r.pairing == pairing && r.listed_from <= t &&
                (r.delisted_at == 0 || t < r.delisted_at))
                coins.insert(r.coin);
        return {coins.begin(), coins.end()};
    }

    const std::vector<Listing>& rows() const { return rows_; }

    std::set<std::string> all_coins() const {
        std::set<std::string> out;
        for (const auto& r : rows_) out.insert(r.coin);
        return out;
    }

private:
    std::vector<Listing> rows_;
};

inline ListingTable load_listings(const std::filesystem::path& path) {
    auto lines = read_lines(path);
    if (lines.empty() || trim(lines.front()) != kListingHeader)
        throw MalformedRow(1, path.string() + ": expected header '" + std::string(kListingHeader) + "'");
    ListingTable t;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (trim(lines[i]).empty()) continue;
        auto f = split(lines[i], ',');
        Listing l;
        if (f.size() != 5 || !parse_number(f[3], l.listed_from) ||
            (!trim(f[4]).empty() && !parse_number(f[4], l.delisted_at)))
            throw MalformedRow(i + 1, path.string() + ": unparseable listing row");
        l.exchange = std::string(trim(f[0]));
        l.coin = std::string(trim(f[1]));
        l.pairing = std::string(trim(f[2]));
        t.add(std::move(l));
    }
    return t;
}

inline void write_listings(const std::filesystem::path& path, const ListingTable& table) {
    auto out = open_output(path);
    out << kListingHeader << '\n';
    for (const auto& r : table.rows())
        out << r.exchange << ',' << r.coin << ',' << r.pairing << ',' << r.listed_from << ','
            << (r.delisted_at ? std::to_string(r.delisted_at) : std::string()) << '\n';
}

}  // namespace pnd
