#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <unordered_map>

#include "pnd/corpus.hpp"
#include "pnd/pipeline.hpp"

using namespace pnd;

namespace {

const StopWords& stop() {
    static StopWords sw = default_stop_words();
    return sw;
}

Message msg(std::string text, std::int64_t id = 1) { return {"ch", id, 1000 + id, std::move(text)}; }

}  // namespace

TEST(Tokenize, StripsSymbolsAndUrls) {
    EXPECT_EQ(tokenize("Buy $FIC now!! https://t.me/x", stop()), (TokenizedDoc{"buy", "fic", "now"}));
}

TEST(Tokenize, EmptyText) { EXPECT_TRUE(tokenize("", stop()).empty()); }

TEST(Tokenize, RemovesStopWords) {
    EXPECT_EQ(tokenize("The next message will be the coin name!", stop()),
              (TokenizedDoc{"next", "message", "coin", "name"}));
}

TEST(Tokenize, DropsEmojiAndKeepsNumbers) {
    EXPECT_EQ(tokenize("pump \xF0\x9F\x9A\x80\xF0\x9F\x9A\x80 at 5pm 2x", stop()), (TokenizedDoc{"pump", "5pm", "2x"}));
}

TEST(Tokenize, IdempotentOnJoinedOutput) {
    Rng rng(5);
    const std::string alphabet = "abcXYZ019 .,!$#/:-\t";
    for (int t = 0; t < 300; ++t) {
        std::string s;
        auto len = uniform_index(rng, 60);
        for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[uniform_index(rng, alphabet.size())]);
        if (t % 7 == 0) s += " https://t.me/abc www.site.org";
        auto once = tokenize(s, stop());
        EXPECT_EQ(tokenize(join_tokens(once), stop()), once) << s;
        for (const auto& tok : once) {
            EXPECT_FALSE(tok.empty());
            EXPECT_FALSE(stop().contains(tok));
            for (char c : tok) EXPECT_TRUE(detail::is_ascii_alnum(c));
        }
    }
}

TEST(KeywordFilter, SpecExamples) {
    Lexicon lex = keyword_lexicon({"FIC"}, {"Binance", "Yobit"});
    EXPECT_TRUE(keyword_filter(msg("big PUMP tonight on binance"), lex));
    EXPECT_FALSE(keyword_filter(msg("good morning everyone"), lex));
    EXPECT_TRUE(keyword_filter(msg("hold your coins, target 2x"), lex));
    EXPECT_TRUE(keyword_filter(msg("fic"), lex));
}

TEST(KeywordFilter, MonotoneInLexicon) {
    Rng rng(9);
    const std::vector<std::string> words = {"pump", "moon", "hello", "coin", "fic", "gm", "sell", "abc", "dump"};
    for (int t = 0; t < 200; ++t) {
        Lexicon small, big;
        for (const auto& w : words) {
            if (uniform01(rng) < 0.3) small.add(w);
            if (small.contains(w) || uniform01(rng) < 0.3) big.add(w);
        }
        std::string text;
        for (int k = 0; k < 4; ++k) text += words[uniform_index(rng, words.size())] + " ";
        if (keyword_filter(msg(text), small)) {
            EXPECT_TRUE(keyword_filter(msg(text), big));
        }
    }
}

TEST(Vocabulary, CountsAndOrder) {
    std::vector<TokenizedDoc> docs = {{"pump", "coin"}, {"sell", "coin"}};
    auto v = fit_vocabulary(docs, 1);
    ASSERT_EQ(v.size(), 3u);
    EXPECT_EQ(v.terms, (std::vector<std::string>{"coin", "pump", "sell"}));
    EXPECT_EQ(v.doc_freq, (std::vector<std::int64_t>{2, 1, 1}));
    EXPECT_EQ(v.n_docs, 2);
    auto v2 = fit_vocabulary(docs, 2);
    EXPECT_EQ(v2.terms, (std::vector<std::string>{"coin"}));
}

TEST(Vocabulary, EmptyCorpusThrows) { EXPECT_THROW(fit_vocabulary({}, 1), EmptyCorpus); }

TEST(Vocabulary, MatchesBruteForceRecount) {
    Rng rng(17);
    std::vector<TokenizedDoc> docs;
    for (int d = 0; d < 1000; ++d) {
        TokenizedDoc doc;
        auto n = 1 + uniform_index(rng, 12);
        for (std::size_t i = 0; i < n; ++i) doc.push_back("w" + std::to_string(uniform_index(rng, 300)));
        docs.push_back(doc);
    }
    auto v = fit_vocabulary(docs, 2);
    std::unordered_map<std::string, std::int64_t> df;
    for (const auto& doc : docs) {
        std::unordered_map<std::string, bool> seen;
        for (const auto& t : doc)
            if (!seen[t]) {
                seen[t] = true;
                ++df[t];
            }
    }
    std::size_t kept = 0;
    for (const auto& [t, n] : df) {
        auto idx = v.index_of(t);
        if (n >= 2) {
            ++kept;
            ASSERT_TRUE(idx.has_value()) << t;
            EXPECT_EQ(v.doc_freq[*idx], n);
        } else {
            EXPECT_FALSE(idx.has_value());
        }
    }
    EXPECT_EQ(kept, v.size());
    for (std::size_t i = 1; i < v.terms.size(); ++i) EXPECT_LT(v.terms[i - 1], v.terms[i]);

    // summed raw term counts recovered from the tf-idf vectors
    std::map<std::uint32_t, double> tf_sum, oracle;
    for (const auto& doc : docs) {
        auto x = tfidf_transform(doc, v);
        if (x.empty()) continue;
        // undo normalization: weight = count/len * idf / norm
        std::map<std::uint32_t, int> counts;
        for (const auto& t : doc)
            if (auto i = v.index_of(t)) ++counts[*i];
        double raw_norm = 0.0;
        for (auto [i, c] : counts) raw_norm += std::pow(c / static_cast<double>(doc.size()) * v.idf(i), 2);
        raw_norm = std::sqrt(raw_norm);
        for (const auto& e : x.entries) tf_sum[e.index] += e.weight * raw_norm / v.idf(e.index) * static_cast<double>(doc.size());
        for (auto [i, c] : counts) oracle[i] += c;
    }
    ASSERT_EQ(tf_sum.size(), oracle.size());
    for (auto [i, c] : oracle) EXPECT_NEAR(tf_sum[i], c, 1e-9 * c);
}

TEST(Tfidf, HandComputedWeights) {
    auto v = fit_vocabulary({{"pump", "coin"}, {"sell", "coin"}}, 1);
    auto x = tfidf_transform({"pump", "coin"}, v);
    double wp = 0.5 * (std::log(3.0 / 2.0) + 1.0);
    double wc = 0.5 * (std::log(3.0 / 3.0) + 1.0);
    double n = std::hypot(wp, wc);
    ASSERT_EQ(x.size(), 2u);
    EXPECT_EQ(x.entries[0].index, 0u);  // coin
    EXPECT_NEAR(x.entries[0].weight, wc / n, 1e-15);
    EXPECT_EQ(x.entries[1].index, 1u);  // pump
    EXPECT_NEAR(x.entries[1].weight, wp / n, 1e-15);
}

TEST(Tfidf, OutOfVocabularyIsEmpty) {
    auto v = fit_vocabulary({{"pump", "coin"}}, 1);
    EXPECT_TRUE(tfidf_transform({"zzz", "yyy"}, v).empty());
}

TEST(Tfidf, UnitNormSortedSubset) {
    Rng rng(3);
    std::vector<TokenizedDoc> docs;
    for (int d = 0; d < 200; ++d) {
        TokenizedDoc doc;
        for (std::size_t i = 0, n = uniform_index(rng, 8); i < n; ++i) doc.push_back("t" + std::to_string(uniform_index(rng, 50)));
        docs.push_back(doc);
    }
    auto v = fit_vocabulary(docs, 2);
    for (const auto& doc : docs) {
        auto x = tfidf_transform(doc, v);
        if (x.empty()) continue;
        EXPECT_NEAR(x.norm(), 1.0, 1e-12);
        for (std::size_t i = 0; i < x.size(); ++i) {
            EXPECT_LT(x.entries[i].index, v.size());
            EXPECT_NE(x.entries[i].weight, 0.0);
            if (i) {
                EXPECT_LT(x.entries[i - 1].index, x.entries[i].index);
            }
        }
    }
}

TEST(InviteLinks, Extraction) {
    EXPECT_EQ(extract_invite_links({msg("join https://t.me/pumpers")}), (std::set<std::string>{"pumpers"}));
    EXPECT_TRUE(extract_invite_links({}).empty());
    std::vector<Message> dump;
    const char* links[] = {"t.me/alpha", "https://t.me/Beta", "https://t.me/joinchat/AbC123"};
    for (int i = 0; i < 10; ++i) dump.push_back(msg(std::string("see ") + links[i % 3] + " now", i));
    EXPECT_EQ(extract_invite_links(dump), (std::set<std::string>{"alpha", "beta", "+AbC123"}));
}

TEST(InviteLinks, SnowballVisitsReachableDumps) {
    std::map<std::string, std::vector<Message>> dumps = {
        {"a", {msg("t.me/b and t.me/c")}}, {"b", {msg("t.me/d")}}, {"c", {msg("t.me/a")}}};
    auto order = snowball_explore({"a"}, [&](const std::string& h) -> const std::vector<Message>* {
        auto it = dumps.find(h);
        return it == dumps.end() ? nullptr : &it->second;
    });
    EXPECT_EQ(order, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Messages, ValidationAndRoundTrip) {
    std::vector<Message> ok = {{"a", 1, 10, "x"}, {"a", 2, 11, "y"}, {"b", 1, 12, "z \"q\""}};
    EXPECT_NO_THROW(validate_messages(ok));
    EXPECT_THROW(validate_messages({{"a", 1, 0, "x"}}), FormatError);
    EXPECT_THROW(validate_messages({{"a", 1, 5, "x"}, {"a", 1, 6, "y"}}), FormatError);
    auto path = std::filesystem::temp_directory_path() / "pnd_msgs_roundtrip.jsonl";
    write_messages_jsonl(path, ok);
    EXPECT_EQ(read_messages_jsonl(path), ok);
    std::filesystem::remove(path);
}
