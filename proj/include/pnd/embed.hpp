#pragma once

// Word2vec-style SkipGram and CBoW with negative sampling, coin-symbol
// lookup, and embedding diagnostics (l1-norm groups, pair similarity).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "corpus.hpp"
#include "detector.hpp"
#include "events.hpp"
#include "util.hpp"

namespace pnd {

enum class W2VAlgorithm { SkipGram, CBOW };

inline std::string to_string(W2VAlgorithm a) { return a == W2VAlgorithm::SkipGram ? "skipgram" : "cbow"; }

inline W2VAlgorithm parse_algorithm(std::string_view s) {
    auto l = to_lower(s);
    if (l == "skipgram" || l == "sg") return W2VAlgorithm::SkipGram;
    if (l == "cbow") return W2VAlgorithm::CBOW;
    throw ConfigError("unknown embedding algorithm '" + std::string(s) + "'");
}

struct EmbedConfig {
    int d = 32;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double lr = 0.025;
    std::uint64_t seed = 11;
    int min_count = 1;
};

struct EmbeddingTable {
    W2VAlgorithm algorithm = W2VAlgorithm::SkipGram;
    EmbedConfig config;
    std::vector<std::string> tokens;  // sorted
    std::vector<std::int64_t> counts;
    std::vector<double> vectors;  // tokens.size() x d, row major

    std::size_t dim() const { return static_cast<std::size_t>(config.d); }
    std::size_t size() const { return tokens.size(); }
    std::optional<std::size_t> find(std::string_view token) const {
        auto it = std::lower_bound(tokens.begin(), tokens.end(), token);
        if (it == tokens.end() || *it != token) return std::nullopt;
        return static_cast<std::size_t>(it - tokens.begin());
    }
    std::span<const double> row(std::size_t i) const { return {vectors.data() + i * dim(), dim()}; }
};

// Vector for a coin symbol; lookup goes through the tokenizer's lowercasing.
inline std::vector<double> coin_embedding(const EmbeddingTable& t, std::string_view symbol) {
    auto i = t.find(to_lower(symbol));
    if (!i) throw UnknownSymbol("no embedding for symbol " + std::string(symbol));
    auto r = t.row(*i);
    return {r.begin(), r.end()};
}

// Draws token ids with probability proportional to count^power.
class UnigramSampler {
public:
    UnigramSampler(const std::vector<std::int64_t>& counts, double power = 0.75) {
        cumulative_.reserve(counts.size());
        double acc = 0.0;
        for (auto c : counts) {
            acc += c > 0 ? std::pow(static_cast<double>(c), power) : 0.0;
            cumulative_.push_back(acc);
        }
        if (acc <= 0.0) throw EmptyCorpus("negative sampler has no mass");
    }
    std::size_t draw(Rng& rng) const {
        double u = uniform01(rng) * cumulative_.back();
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return static_cast<std::size_t>(it - cumulative_.begin());
    }
    double probability(std::size_t i) const {
        double prev = i ? cumulative_[i - 1] : 0.0;
        return (cumulative_[i] - prev) / cumulative_.back();
    }

private:
    std::vector<double> cumulative_;
};

// ---------------------------------------------------------------------------
// objective for one (input vector, positive output, negative outputs) group

namespace detail {

inline double dot(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t k = 0; k < d; ++k) s += a[k] * b[k];
    return s;
}

inline double log_sigmoid(double z) { return -softplus(-z); }

}  // namespace detail

// log sig(u_pos . v) + sum_k log sig(-u_k . v)
inline double pair_objective(std::span<const double> v, std::span<const double> u_pos,
                             const std::vector<std::span<const double>>& u_neg) {
    const auto d = v.size();
    double obj = detail::log_sigmoid(detail::dot(u_pos.data(), v.data(), d));
    for (const auto& u : u_neg) obj += detail::log_sigmoid(-detail::dot(u.data(), v.data(), d));
    return obj;
}

struct PairGradient {
    std::vector<double> v;
    std::vector<double> u_pos;
    std::vector<std::vector<double>> u_neg;
};

// Gradient of pair_objective (ascent direction).
inline PairGradient pair_gradient(std::span<const double> v, std::span<const double> u_pos,
                                  const std::vector<std::span<const double>>& u_neg) {
    const auto d = v.size();
    PairGradient g;
    g.v.assign(d, 0.0);
    double gp = 1.0 - sigmoid(detail::dot(u_pos.data(), v.data(), d));
    g.u_pos.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
        g.v[k] += gp * u_pos[k];
        g.u_pos[k] = gp * v[k];
    }
    for (const auto& u : u_neg) {
        double gn = -sigmoid(detail::dot(u.data(), v.data(), d));
        std::vector<double> gu(d);
        for (std::size_t k = 0; k < d; ++k) {
            g.v[k] += gn * u[k];
            gu[k] = gn * v[k];
        }
        g.u_neg.push_back(std::move(gu));
    }
    return g;
}

// ---------------------------------------------------------------------------
// training

struct EmbedVocabulary {
    std::vector<std::string> tokens;  // sorted
    std::vector<std::int64_t> counts;
    std::unordered_map<std::string, std::size_t> index;
};

// Tokens with count >= min_count, plus every injected symbol (lowercased)
// regardless of count.
inline EmbedVocabulary build_embed_vocabulary(const std::vector<TokenizedDoc>& corpus, int min_count,
                                              const std::vector<std::string>& inject = {}) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& doc : corpus)
        for (const auto& t : doc) ++counts[t];
    std::set<std::string> forced;
    for (const auto& s : inject) forced.insert(to_lower(s));
    EmbedVocabulary v;
    for (const auto& [tok, c] : counts) {
        if (c < min_count && !forced.contains(tok)) continue;
        v.tokens.push_back(tok);
        v.counts.push_back(c);
    }
    for (const auto& f : forced)
        if (!counts.contains(f)) {
            auto it = std::lower_bound(v.tokens.begin(), v.tokens.end(), f);
            auto pos = it - v.tokens.begin();
            v.tokens.insert(it, f);
            v.counts.insert(v.counts.begin() + pos, 0);
        }
    for (std::size_t i = 0; i < v.tokens.size(); ++i) v.index.emplace(v.tokens[i], i);
    return v;
}

inline EmbeddingTable train_embeddings(const std::vector<TokenizedDoc>& corpus, W2VAlgorithm algo,
                                       const EmbedConfig& cfg, const std::vector<std::string>& inject = {}) {
    std::size_t total = 0;
    for (const auto& doc : corpus) total += doc.size();
    if (total == 0) throw EmptyCorpus("embedding corpus has no tokens");
    if (cfg.d < 1 || cfg.window < 1 || cfg.negatives < 0 || cfg.epochs < 0 || !(cfg.lr > 0))
        throw ConfigError("invalid embedding config");

    auto vocab = build_embed_vocabulary(corpus, cfg.min_count, inject);
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto n = vocab.tokens.size();

    EmbeddingTable t;
    t.algorithm = algo;
    t.config = cfg;
    t.tokens = vocab.tokens;
    t.counts = vocab.counts;
    t.vectors.resize(n * d);
    auto rng = fork_rng(cfg.seed, 0xE3B);
    for (auto& x : t.vectors) x = uniform(rng, -0.5 / cfg.d, 0.5 / cfg.d);
    std::vector<double> out(n * d, 0.0);

    // corpus as ids; tokens below min_count dropped
    std::vector<std::vector<std::size_t>> docs;
    docs.reserve(corpus.size());
    std::size_t kept = 0;
    for (const auto& doc : corpus) {
        std::vector<std::size_t> ids;
        for (const auto& tok : doc)
            if (auto it = vocab.index.find(tok); it != vocab.index.end()) ids.push_back(it->second);
        kept += ids.size();
        if (!ids.empty()) docs.push_back(std::move(ids));
    }
    if (kept == 0) throw EmptyCorpus("no token survives min_count");
    UnigramSampler sampler(t.counts);

    std::vector<double> grad_in(d), h(d);
    const double total_steps = static_cast<double>(cfg.epochs) * static_cast<double>(kept);
    std::size_t step = 0;
    double* in = t.vectors.data();

    // one positive plus negatives against input vector `v`; accumulates the
    // input gradient into grad_in and updates output vectors in place.
    auto train_target = [&](const double* v, std::size_t target, double lr) {
        for (int k = -1; k < cfg.negatives; ++k) {
            std::size_t o = target;
            double label = 1.0;
            if (k >= 0) {
                o = sampler.draw(rng);
                if (o == target) continue;
                label = 0.0;
            }
            double* u = out.data() + o * d;
            double g = lr * (label - sigmoid(detail::dot(u, v, d)));
            for (std::size_t c = 0; c < d; ++c) grad_in[c] += g * u[c];
            for (std::size_t c = 0; c < d; ++c) u[c] += g * v[c];
        }
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& doc : docs) {
            for (std::size_t pos = 0; pos < doc.size(); ++pos, ++step) {
                double lr = cfg.lr * std::max(1e-4, 1.0 - static_cast<double>(step) / total_steps);
                std::size_t lo = pos >= static_cast<std::size_t>(cfg.window) ? pos - cfg.window : 0;
                std::size_t hi = std::min(doc.size() - 1, pos + static_cast<std::size_t>(cfg.window));
                if (algo == W2VAlgorithm::SkipGram) {
                    double* v = in + doc[pos] * d;
                    for (std::size_t c = lo; c <= hi; ++c) {
                        if (c == pos) continue;
                        std::fill(grad_in.begin(), grad_in.end(), 0.0);
                        train_target(v, doc[c], lr);
                        for (std::size_t k = 0; k < d; ++k) v[k] += grad_in[k];
                    }
                } else {
                    std::size_t n_ctx = hi - lo;
                    if (n_ctx == 0) continue;
                    std::fill(h.begin(), h.end(), 0.0);
                    for (std::size_t c = lo; c <= hi; ++c)
                        if (c != pos)
                            for (std::size_t k = 0; k < d; ++k) h[k] += in[doc[c] * d + k];
                    for (auto& x : h) x /= static_cast<double>(n_ctx);
                    std::fill(grad_in.begin(), grad_in.end(), 0.0);
                    train_target(h.data(), doc[pos], lr);
                    for (std::size_t c = lo; c <= hi; ++c)
                        if (c != pos)
                            for (std::size_t k = 0; k < d; ++k)
                                in[doc[c] * d + k] += grad_in[k] / static_cast<double>(n_ctx);
                }
            }
        }
    }
    for (double x : t.vectors)
        if (!std::isfinite(x)) throw Divergence("embedding training produced a non-finite vector");
    return t;
}

inline EmbeddingTable train_skipgram(const std::vector<TokenizedDoc>& corpus, const EmbedConfig& cfg,
                                     const std::vector<std::string>& inject = {}) {
    return train_embeddings(corpus, W2VAlgorithm::SkipGram, cfg, inject);
}

inline EmbeddingTable train_cbow(const std::vector<TokenizedDoc>& corpus, const EmbedConfig& cfg,
                                 const std::vector<std::string>& inject = {}) {
    return train_embeddings(corpus, W2VAlgorithm::CBOW, cfg, inject);
}

// ---------------------------------------------------------------------------
// persistence

inline constexpr std::string_view kEmbedMagic = "PNDEMBT1";
inline constexpr std::uint32_t kEmbedVersion = 1;

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& t) {
    auto out = open_output(path, true);
    BinaryWriter w(out);
    write_magic(w, out, kEmbedMagic, kEmbedVersion);
    w.str(to_string(t.algorithm));
    w.pod<std::int32_t>(t.config.d);
    w.pod<std::int32_t>(t.config.window);
    w.pod<std::int32_t>(t.config.negatives);
    w.pod<std::int32_t>(t.config.epochs);
    w.pod(t.config.lr);
    w.pod(t.config.seed);
    w.pod<std::int32_t>(t.config.min_count);
    w.strings(t.tokens);
    w.vec(t.counts);
    w.vec(t.vectors);
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + path.string());
    BinaryReader r(in);
    r.expect_magic(kEmbedMagic, kEmbedVersion);
    EmbeddingTable t;
    t.algorithm = parse_algorithm(r.str());
    t.config.d = r.pod<std::int32_t>();
    t.config.window = r.pod<std::int32_t>();
    t.config.negatives = r.pod<std::int32_t>();
    t.config.epochs = r.pod<std::int32_t>();
    t.config.lr = r.pod<double>();
    t.config.seed = r.pod<std::uint64_t>();
    t.config.min_count = r.pod<std::int32_t>();
    t.tokens = r.strings();
    t.counts = r.vec<std::int64_t>();
    t.vectors = r.vec<double>();
    if (t.counts.size() != t.tokens.size() || t.vectors.size() != t.tokens.size() * t.dim())
        throw FormatError("embedding table dimensions disagree");
    return t;
}

// "<n> <d>" header, then one "token v1 ... vd" line per token.
inline void dump_embeddings_text(const std::filesystem::path& path, const EmbeddingTable& t) {
    auto out = open_output(path);
    out << t.size() << ' ' << t.dim() << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
        out << t.tokens[i];
        for (double x : t.row(i)) out << ' ' << format_double(x);
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// diagnostics

struct NormSummary {
    std::string group;
    std::size_t count = 0;
    double mean = 0.0;
    double stddev = 0.0;
    double median = 0.0;
    std::vector<double> deciles;  // 10th..90th percentiles
};

// Expected l1 norm of a d-dimensional N(0, sigma^2) vector.
inline double normal_init_l1_expectation(std::size_t d, double sigma) {
    return static_cast<double>(d) * sigma * std::sqrt(2.0 / M_PI);
}

inline double quantile_sorted(const std::vector<double>& v, double q) {
    if (v.empty()) return 0.0;
    double pos = q * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(pos));
    auto hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline NormSummary summarize_values(std::string group, std::vector<double> v) {
    NormSummary s;
    s.group = std::move(group);
    s.count = v.size();
    if (v.empty()) return s;
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(sq / static_cast<double>(v.size()));
    s.median = quantile_sorted(v, 0.5);
    for (int k = 1; k <= 9; ++k) s.deciles.push_back(quantile_sorted(v, k / 10.0));
    return s;
}

// l1 norms of rows of a (rows x d) matrix, grouped by row index.
inline std::vector<NormSummary> l1_norm_report(std::span<const double> table, std::size_t d,
                                               const std::map<std::string, std::vector<std::size_t>>& groups) {
    std::vector<NormSummary> out;
    for (const auto& [name, rows] : groups) {
        std::vector<double> norms;
        for (auto r : rows) {
            if ((r + 1) * d > table.size()) throw IdOutOfRange("l1_norm_report: row beyond table");
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += std::abs(table[r * d + k]);
            norms.push_back(s);
        }
        out.push_back(summarize_values(name, std::move(norms)));
    }
    return out;
}

inline void write_norm_report(const std::filesystem::path& path, const std::vector<NormSummary>& rows) {
    auto out = open_output(path);
    out << "group,count,mean,std,median";
    for (int k = 1; k <= 9; ++k) out << ",p" << k * 10;
    out << '\n';
    for (const auto& r : rows) {
        out << r.group << ',' << r.count << ',' << format_double(r.mean) << ',' << format_double(r.stddev) << ','
            << format_double(r.median);
        for (std::size_t k = 0; k < 9; ++k) out << ',' << (k < r.deciles.size() ? format_double(r.deciles[k]) : "");
        out << '\n';
    }
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        ab += a[k] * b[k];
        aa += a[k] * a[k];
        bb += b[k] * b[k];
    }
    if (aa == 0.0 || bb == 0.0) return 0.0;
    return ab / std::sqrt(aa * bb);
}

struct SimilarityStudy {
    std::vector<double> within_channel;
    std::vector<double> pumped;
    std::vector<double> all;
    double mean_within = 0.0, mean_pumped = 0.0, mean_all = 0.0;
};

// Cosine similarities of coin pairs: (a) both pumped by the same channel,
// (b) both pumped by anyone, (c) any two coins in `universe`. Symbols absent
// from the table are skipped.
inline SimilarityStudy semantic_similarity_study(const EmbeddingTable& t, const std::vector<MergedEvent>& events,
                                                 const std::vector<std::string>& universe) {
    auto rows_of = [&](const std::set<std::string>& coins) {
        std::vector<std::size_t> rows;
        for (const auto& c : coins)
            if (auto i = t.find(to_lower(c))) rows.push_back(*i);
        return rows;
    };
    auto pairwise = [&](const std::vector<std::size_t>& rows, std::vector<double>& out) {
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = i + 1; j < rows.size(); ++j) out.push_back(cosine(t.row(rows[i]), t.row(rows[j])));
    };
    std::map<std::string, std::set<std::string>> by_channel;
    std::set<std::string> pumped;
    for (const auto& e : events) {
        pumped.insert(e.target_coin);
        for (const auto& c : e.channels) by_channel[c].insert(e.target_coin);
    }
    SimilarityStudy s;
    for (const auto& [ch, coins] : by_channel) pairwise(rows_of(coins), s.within_channel);
    pairwise(rows_of(pumped), s.pumped);
    pairwise(rows_of({universe.begin(), universe.end()}), s.all);
    auto mean = [](const std::vector<double>& v) {
        double sum = 0.0;
        for (double x : v) sum += x;
        return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
    };
    s.mean_within = mean(s.within_channel);
    s.mean_pumped = mean(s.pumped);
    s.mean_all = mean(s.all);
    return s;
}

}  // namespace pnd
