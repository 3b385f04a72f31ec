#pragma once

// Message ingestion, tokenization, keyword filtering, TF-IDF and offline
// invite-link exploration.

#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "json.hpp"
#include "util.hpp"

namespace pnd {

struct Message {
    std::string channel_id;
    std::int64_t message_id = 0;
    std::int64_t timestamp = 0;  // UTC seconds
    std::string text;

    friend bool operator==(const Message&, const Message&) = default;
};

using TokenizedDoc = std::vector<std::string>;

// Throws FormatError on a non-positive timestamp or a duplicate
// (channel_id, message_id).
inline void validate_messages(const std::vector<Message>& msgs) {
    std::set<std::pair<std::string, std::int64_t>> seen;
    for (const auto& m : msgs) {
        if (m.timestamp <= 0)
            throw FormatError("message " + m.channel_id + "/" + std::to_string(m.message_id) +
                              " has non-positive timestamp");
        if (!seen.emplace(m.channel_id, m.message_id).second)
            throw FormatError("duplicate message id " + m.channel_id + "/" + std::to_string(m.message_id));
    }
}

inline nlohmann::json to_json(const Message& m) {
    return {{"channel_id", m.channel_id}, {"message_id", m.message_id}, {"timestamp", m.timestamp}, {"text", m.text}};
}

inline Message message_from_json(const nlohmann::json& j) {
    Message m;
    m.channel_id = j.at("channel_id").get<std::string>();
    m.message_id = j.at("message_id").get<std::int64_t>();
    m.timestamp = j.at("timestamp").get<std::int64_t>();
    m.text = j.at("text").get<std::string>();
    return m;
}

// Generic JSON-Lines reader: calls `fn(json, line_no)` for each non-blank line.
template <class Fn>
void for_each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw MissingInput("cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line_no, path.string() + ": " + e.what());
        }
        fn(j, line_no);
    }
}

inline std::vector<Message> read_messages_jsonl(const std::filesystem::path& path) {
    std::vector<Message> msgs;
    for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line_no) {
        try {
            msgs.push_back(message_from_json(j));
        } catch (const nlohmann::json::exception& e) {
            throw MalformedRow(line_no, path.string() + ": " + e.what());
        }
    });
    validate_messages(msgs);
    return msgs;
}

inline void write_messages_jsonl(const std::filesystem::path& path, const std::vector<Message>& msgs) {
    auto out = open_output(path);
    for (const auto& m : msgs) out << to_json(m).dump() << '\n';
}

// ---------------------------------------------------------------------------
// tokenization

namespace detail {

inline bool is_ascii_alnum(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(s[i])) != prefix[i]) return false;
    return true;
}

// Blanks out URL-like spans: scheme URLs, t.me / telegram.me links and www. hosts.
inline std::string strip_urls(std::string_view text) {
    static constexpr std::string_view kPrefixes[] = {"https://", "http://", "t.me/", "telegram.me/", "www."};
    std::string out(text);
    std::size_t i = 0;
    while (i < out.size()) {
        bool at_word_start = i == 0 || !is_ascii_alnum(out[i - 1]);
        bool hit = false;
        if (at_word_start) {
            for (auto p : kPrefixes) {
                if (starts_with_ci(std::string_view(out).substr(i), p)) {
                    hit = true;
                    break;
                }
            }
        }
        if (!hit) {
            ++i;
            continue;
        }
        while (i < out.size() && !std::isspace(static_cast<unsigned char>(out[i]))) out[i++] = ' ';
    }
    return out;
}

// Lowercased ASCII alphanumeric runs; everything else (punctuation, emoji,
// other multi-byte code points) separates tokens.
inline std::vector<std::string> alnum_runs(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (is_ascii_alnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace detail

using StopWords = std::unordered_set<std::string>;

inline StopWords load_stop_words(const std::filesystem::path& path) {
    StopWords sw;
    for (auto& w : read_word_list(path)) sw.insert(to_lower(w));
    return sw;
}

inline TokenizedDoc tokenize(std::string_view text, const StopWords& stop_words) {
    TokenizedDoc out;
    for (auto& tok : detail::alnum_runs(detail::strip_urls(text)))
        if (!stop_words.contains(tok)) out.push_back(std::move(tok));
    return out;
}

inline std::string join_tokens(const TokenizedDoc& doc) {
    std::string out;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        if (i) out.push_back(' ');
        out += doc[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// keyword filter

struct Lexicon {
    std::unordered_set<std::string> entries;  // lowercase

    void add(std::string_view word) { entries.insert(to_lower(trim(word))); }
    template <class Range>
    void add_all(const Range& words) {
        for (const auto& w : words) add(w);
    }
    bool contains(const std::string& lower) const { return entries.contains(lower); }
};

inline Lexicon load_lexicon(const std::filesystem::path& path) {
    Lexicon lex;
    lex.add_all(read_word_list(path));
    return lex;
}

// true = reserved for classification, false = filtered out.
inline bool keyword_filter(const Message& msg, const Lexicon& lexicon) {
    for (const auto& tok : detail::alnum_runs(detail::strip_urls(msg.text)))
        if (lexicon.contains(tok)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// TF-IDF

struct TfidfVocabulary {
    std::unordered_map<std::string, std::uint32_t> term_to_index;
    std::vector<std::string> terms;          // index -> term, lexicographic
    std::vector<std::int64_t> doc_freq;      // index -> df
    std::int64_t n_docs = 0;

    std::size_t size() const { return terms.size(); }

    std::optional<std::uint32_t> index_of(const std::string& term) const {
        auto it = term_to_index.find(term);
        if (it == term_to_index.end()) return std::nullopt;
        return it->second;
    }

    double idf(std::uint32_t index) const {
        return std::log((1.0 + static_cast<double>(n_docs)) / (1.0 + static_cast<double>(doc_freq[index]))) + 1.0;
    }

    // FNV-1a over terms and document frequencies; identifies the feature space
    // a detector was trained on.
    std::uint64_t fingerprint() const {
        std::uint64_t h = 1469598103934665603ULL;
        auto mix = [&](std::string_view s) {
            for (unsigned char c : s) {
                h ^= c;
                h *= 1099511628211ULL;
            }
            h ^= 0xff;
            h *= 1099511628211ULL;
        };
        for (std::size_t i = 0; i < terms.size(); ++i) {
            mix(terms[i]);
            mix(std::to_string(doc_freq[i]));
        }
        mix(std::to_string(n_docs));
        return h;
    }
};

inline TfidfVocabulary vocabulary_from_terms(std::vector<std::string> terms, std::vector<std::int64_t> doc_freq,
                                             std::int64_t n_docs) {
    TfidfVocabulary v;
    v.terms = std::move(terms);
    v.doc_freq = std::move(doc_freq);
    v.n_docs = n_docs;
    for (std::uint32_t i = 0; i < v.terms.size(); ++i) v.term_to_index.emplace(v.terms[i], i);
    return v;
}

inline TfidfVocabulary fit_vocabulary(const std::vector<TokenizedDoc>& docs, std::int64_t min_df = 2) {
    if (docs.empty()) throw EmptyCorpus("cannot fit a vocabulary on zero documents");
    if (min_df < 1) throw ConfigError("min_df must be >= 1");
    std::map<std::string, std::int64_t> df;  // ordered => lexicographic indices
    for (const auto& doc : docs) {
        std::set<std::string_view> uniq(doc.begin(), doc.end());
        for (auto t : uniq) ++df[std::string(t)];
    }
    std::vector<std::string> terms;
    std::vector<std::int64_t> counts;
    for (auto& [term, n] : df) {
        if (n < min_df) continue;
        terms.push_back(term);
        counts.push_back(n);
    }
    return vocabulary_from_terms(std::move(terms), std::move(counts), static_cast<std::int64_t>(docs.size()));
}

struct SparseEntry {
    std::uint32_t index = 0;
    double weight = 0.0;
    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// Entries sorted by strictly increasing index, no zero weights.
struct SparseVector {
    std::vector<SparseEntry> entries;

    bool empty() const { return entries.empty(); }
    std::size_t size() const { return entries.size(); }

    double norm() const {
        double s = 0.0;
        for (const auto& e : entries) s += e.weight * e.weight;
        return std::sqrt(s);
    }

    template <class Dense>
    double dot(const Dense& dense) const {
        double s = 0.0;
        for (const auto& e : entries) s += e.weight * dense[e.index];
        return s;
    }
};

// tf = count / doc length (all tokens, including OOV); idf smoothed; L2 normalized.
inline SparseVector tfidf_transform(const TokenizedDoc& doc, const TfidfVocabulary& vocab) {
    SparseVector out;
    if (doc.empty()) return out;
    std::map<std::uint32_t, std::int64_t> counts;
    for (const auto& tok : doc)
        if (auto idx = vocab.index_of(tok)) ++counts[*idx];
    const double len = static_cast<double>(doc.size());
    for (auto [idx, c] : counts) out.entries.push_back({idx, (static_cast<double>(c) / len) * vocab.idf(idx)});
    double n = out.norm();
    if (n > 0.0)
        for (auto& e : out.entries) e.weight /= n;
    return out;
}

// ---------------------------------------------------------------------------
// invite links

// Public handles are lowercased; private join hashes keep their case and are
// returned as "+HASH".
inline std::set<std::string> extract_invite_links(const std::vector<Message>& msgs) {
    static const std::regex kLink(R"((?:https?://)?(?:www\.)?(?:t|telegram)\.me/(joinchat/|\+)?([A-Za-z0-9_\-]+))",
                                  std::regex::icase);
    std::set<std::string> handles;
    for (const auto& m : msgs) {
        for (std::sregex_iterator it(m.text.begin(), m.text.end(), kLink), end; it != end; ++it) {
            const auto& match = *it;
            if (match[1].matched)
                handles.insert("+" + match[2].str());
            else
                handles.insert(to_lower(match[2].str()));
        }
    }
    return handles;
}

// Breadth-first snowball over offline dumps: `dump_of(handle)` returns the
// messages of a channel, or nullptr when no dump exists (deleted/expired).
// Returns reachable channels in discovery order, seeds first.
inline std::vector<std::string> snowball_explore(
    const std::vector<std::string>& seeds,
    const std::function<const std::vector<Message>*(const std::string&)>& dump_of, std::size_t max_channels = 100000) {
    std::vector<std::string> order;
    std::set<std::string> seen;
    std::deque<std::string> frontier;
    for (const auto& s : seeds) {
        auto h = s.starts_with('+') ? s : to_lower(s);
        if (seen.insert(h).second) frontier.push_back(h);
    }
    while (!frontier.empty() && order.size() < max_channels) {
        auto h = frontier.front();
        frontier.pop_front();
        const auto* msgs = dump_of(h);
        if (!msgs) continue;
        order.push_back(h);
        for (const auto& link : extract_invite_links(*msgs))
            if (seen.insert(link).second) frontier.push_back(link);
    }
    return order;
}

}  // namespace pnd
