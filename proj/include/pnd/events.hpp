#pragma once

// Session aggregation, pump-event (quintuple) extraction and multi-channel
// event merging.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "corpus.hpp"
#include "json.hpp"
#include "util.hpp"

namespace pnd {

constexpr std::int64_t kSessionGap = 24 * kHour;

struct Session {
    std::string channel_id;
    std::vector<Message> messages;  // time ordered
    std::int64_t start = 0;
    std::int64_t end = 0;
};

struct PumpEvent {
    std::string channel_id;
    std::int64_t pump_time = 0;
    std::string exchange;
    std::string pairing_coin;
    std::string target_coin;

    friend bool operator==(const PumpEvent&, const PumpEvent&) = default;
};

struct MergedEvent {
    std::int64_t pump_time = 0;  // earliest member announce time
    std::vector<std::string> channels;  // sorted, unique
    std::string exchange;
    std::string pairing_coin;
    std::string target_coin;
};

// A pump announced but not yet released: the target is what gets predicted.
struct PendingEvent {
    std::string channel_id;
    std::int64_t pump_time = 0;
    std::string exchange;
    std::string pairing_coin;
};

// Messages per channel, sorted by (timestamp, message_id), split wherever the
// gap to the previous message reaches 24 hours. Sessions come out ordered by
// channel id, then start time.
inline std::vector<Session> sessionize(const std::vector<Message>& msgs) {
    std::map<std::string, std::vector<Message>> by_channel;
    for (const auto& m : msgs) by_channel[m.channel_id].push_back(m);
    std::vector<Session> out;
    for (auto& [channel, list] : by_channel) {
        std::sort(list.begin(), list.end(), [](const Message& a, const Message& b) {
            return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.message_id < b.message_id;
        });
        Session cur;
        for (auto& m : list) {
            if (!cur.messages.empty() && m.timestamp - cur.end >= kSessionGap) {
                out.push_back(std::move(cur));
                cur = Session{};
            }
            if (cur.messages.empty()) {
                cur.channel_id = channel;
                cur.start = m.timestamp;
            }
            cur.end = m.timestamp;
            cur.messages.push_back(std::move(m));
        }
        if (!cur.messages.empty()) out.push_back(std::move(cur));
    }
    return out;
}

// Symbols and names that event extraction recognises.
struct EventLexicon {
    std::unordered_set<std::string> listed_symbols;  // uppercase
    std::map<std::string, std::string> exchanges;    // lowercase token -> canonical name
    std::unordered_set<std::string> pairing_coins;   // uppercase

    void add_exchange(const std::string& name) { exchanges[to_lower(name)] = name; }
};

namespace detail {

inline std::string most_frequent(const std::vector<std::string>& hits) {
    std::map<std::string, std::size_t> counts;
    std::map<std::string, std::size_t> first_seen;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        ++counts[hits[i]];
        first_seen.try_emplace(hits[i], i);
    }
    std::string best;
    std::size_t best_n = 0, best_first = 0;
    for (auto& [k, n] : counts) {
        if (n > best_n || (n == best_n && first_seen[k] < best_first)) {
            best = k;
            best_n = n;
            best_first = first_seen[k];
        }
    }
    return best;
}

}  // namespace detail

// The coin-release message is a flagged message, not the first of its
// session, whose cleaned text is one token naming a listed symbol other than
// a pairing coin. Exchange and pairing coin are the most frequent lexicon
// hits among the messages before the release. Throws AmbiguousEvent when two
// distinct symbols qualify.
inline std::optional<PumpEvent> extract_event(const Session& session, const std::vector<bool>& pump_flags,
                                              const EventLexicon& lex) {
    if (pump_flags.size() != session.messages.size())
        throw FormatError("extract_event: flags not aligned with session messages");
    std::optional<std::size_t> release;
    std::string symbol;
    for (std::size_t i = 1; i < session.messages.size(); ++i) {
        if (!pump_flags[i]) continue;
        auto toks = detail::alnum_runs(detail::strip_urls(session.messages[i].text));
        if (toks.size() != 1) continue;
        auto sym = to_upper(toks.front());
        if (!lex.listed_symbols.contains(sym) || lex.pairing_coins.contains(sym)) continue;
        if (!release) {
            release = i;
            symbol = sym;
        } else if (sym != symbol) {
            throw AmbiguousEvent("session " + session.channel_id + "@" + std::to_string(session.start) +
                                 " releases both " + symbol + " and " + sym);
        }
    }
    if (!release) return std::nullopt;

    std::vector<std::string> exchange_hits, pairing_hits;
    for (std::size_t i = 0; i < *release; ++i) {
        for (const auto& tok : detail::alnum_runs(detail::strip_urls(session.messages[i].text))) {
            if (auto it = lex.exchanges.find(tok); it != lex.exchanges.end()) exchange_hits.push_back(it->second);
            auto up = to_upper(tok);
            if (lex.pairing_coins.contains(up) && up != symbol) pairing_hits.push_back(up);
        }
    }
    PumpEvent ev;
    ev.channel_id = session.channel_id;
    ev.pump_time = session.messages[*release].timestamp;
    ev.exchange = exchange_hits.empty() ? "unknown" : detail::most_frequent(exchange_hits);
    ev.pairing_coin = pairing_hits.empty() ? "unknown" : detail::most_frequent(pairing_hits);
    ev.target_coin = symbol;
    return ev;
}

struct AmbiguousSession {
    std::string channel_id;
    std::int64_t start = 0;
    std::int64_t end = 0;
    std::string reason;
};

struct ExtractionResult {
    std::vector<PumpEvent> events;
    std::vector<AmbiguousSession> review;
    std::size_t sessions = 0;
};

// Runs extract_event over sessions built from flagged messages only.
inline ExtractionResult extract_events(const std::vector<Session>& sessions, const EventLexicon& lex) {
    ExtractionResult res;
    res.sessions = sessions.size();
    for (const auto& s : sessions) {
        std::vector<bool> flags(s.messages.size(), true);
        try {
            if (auto ev = extract_event(s, flags, lex)) res.events.push_back(*ev);
        } catch (const AmbiguousEvent& e) {
            res.review.push_back({s.channel_id, s.start, s.end, e.what()});
        }
    }
    return res;
}

// Events sharing (exchange, pairing, target) whose times fall within `window`
// of a group's earliest member are merged; the merged time is that earliest
// time.
inline std::vector<MergedEvent> merge_events(std::vector<PumpEvent> events, std::int64_t window = kHour) {
    std::sort(events.begin(), events.end(), [](const PumpEvent& a, const PumpEvent& b) {
        if (a.pump_time != b.pump_time) return a.pump_time < b.pump_time;
        return a.channel_id < b.channel_id;
    });
    struct Key {
        std::string exchange, pairing, target;
        auto operator<=>(const Key&) const = default;
    };
    std::map<Key, std::size_t> open;  // key -> index of latest group in `out`
    std::vector<MergedEvent> out;
    for (const auto& e : events) {
        Key k{e.exchange, e.pairing_coin, e.target_coin};
        auto it = open.find(k);
        if (it != open.end() && e.pump_time - out[it->second].pump_time <= window) {
            auto& ch = out[it->second].channels;
            if (std::find(ch.begin(), ch.end(), e.channel_id) == ch.end()) {
                ch.push_back(e.channel_id);
                std::sort(ch.begin(), ch.end());
            }
            continue;
        }
        out.push_back({e.pump_time, {e.channel_id}, e.exchange, e.pairing_coin, e.target_coin});
        open[k] = out.size() - 1;
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const MergedEvent& a, const MergedEvent& b) { return a.pump_time < b.pump_time; });
    return out;
}

// ---------------------------------------------------------------------------
// JSON-Lines

inline nlohmann::json to_json(const PumpEvent& e) {
    return {{"channel_id", e.channel_id},
            {"timestamp", e.pump_time},
            {"exchange", e.exchange},
            {"pairing_coin", e.pairing_coin},
            {"target_coin", e.target_coin}};
}

inline PumpEvent pump_event_from_json(const nlohmann::json& j) {
    return {j.at("channel_id").get<std::string>(), j.at("timestamp").get<std::int64_t>(),
            j.at("exchange").get<std::string>(), j.at("pairing_coin").get<std::string>(),
            j.at("target_coin").get<std::string>()};
}

inline nlohmann::json to_json(const MergedEvent& e) {
    return {{"timestamp", e.pump_time},
            {"channels", e.channels},
            {"exchange", e.exchange},
            {"pairing_coin", e.pairing_coin},
            {"target_coin", e.target_coin}};
}

inline MergedEvent merged_event_from_json(const nlohmann::json& j) {
    return {j.at("timestamp").get<std::int64_t>(), j.at("channels").get<std::vector<std::string>>(),
            j.at("exchange").get<std::string>(), j.at("pairing_coin").get<std::string>(),
            j.at("target_coin").get<std::string>()};
}

inline nlohmann::json to_json(const AmbiguousSession& s) {
    return {{"channel_id", s.channel_id}, {"start", s.start}, {"end", s.end}, {"reason", s.reason}};
}

inline nlohmann::json to_json(const Session& s) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : s.messages) msgs.push_back(to_json(m));
    return {{"channel_id", s.channel_id}, {"start", s.start}, {"end", s.end}, {"messages", std::move(msgs)}};
}

inline Session session_from_json(const nlohmann::json& j) {
    Session s;
    s.channel_id = j.at("channel_id").get<std::string>();
    s.start = j.at("start").get<std::int64_t>();
    s.end = j.at("end").get<std::int64_t>();
    for (const auto& m : j.at("messages")) s.messages.push_back(message_from_json(m));
    return s;
}

inline nlohmann::json to_json(const PendingEvent& e) {
    return {{"channel_id", e.channel_id}, {"timestamp", e.pump_time}, {"exchange", e.exchange}, {"pairing_coin", e.pairing_coin}};
}

inline PendingEvent pending_event_from_json(const nlohmann::json& j) {
    return {j.at("channel_id").get<std::string>(), j.at("timestamp").get<std::int64_t>(),
            j.at("exchange").get<std::string>(), j.at("pairing_coin").get<std::string>()};
}

template <class T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& items) {
    auto out = open_output(path);
    for (const auto& it : items) out << to_json(it).dump() << '\n';
}

inline std::vector<PumpEvent> read_events_jsonl(const std::filesystem::path& path) {
    std::vector<PumpEvent> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(pump_event_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
    });
    return out;
}

inline std::vector<MergedEvent> read_merged_events_jsonl(const std::filesystem::path& path) {
    std::vector<MergedEvent> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(merged_event_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
    });
    return out;
}

inline std::vector<Session> read_sessions_jsonl(const std::filesystem::path& path) {
    std::vector<Session> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(session_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
    });
    return out;
}

inline std::vector<PendingEvent> read_pending_jsonl(const std::filesystem::path& path) {
    std::vector<PendingEvent> out;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
        try {
            out.push_back(pending_event_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line, e.what());
        }
    });
    return out;
}

}  // namespace pnd
