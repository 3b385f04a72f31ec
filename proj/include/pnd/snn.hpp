#pragma once

// Sequence-based neural network: id embeddings, positional attention over a
// channel's pump history, MLP head. DNN (no sequence) and SNN_V (uniform
// pooling) are configurations of the same code path.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "detector.hpp"
#include "embed.hpp"
#include "features.hpp"
#include "json.hpp"
#include "metrics.hpp"
#include "util.hpp"

namespace pnd {

enum class ModelMode { DNN, SNN_V, SNN };
enum class EmbeddingMode { E2E, Pretrained };

inline std::string to_string(ModelMode m) {
    switch (m) {
        case ModelMode::DNN: return "DNN";
        case ModelMode::SNN_V: return "SNN_V";
        case ModelMode::SNN: return "SNN";
    }
    return "?";
}

inline std::string to_string(EmbeddingMode m) { return m == EmbeddingMode::E2E ? "E2E" : "pretrained"; }

inline ModelMode parse_mode(std::string_view s) {
    auto u = to_upper(s);
    if (u == "DNN") return ModelMode::DNN;
    if (u == "SNN_V" || u == "SNNV") return ModelMode::SNN_V;
    if (u == "SNN") return ModelMode::SNN;
    throw ConfigError("unknown model mode '" + std::string(s) + "'");
}

inline EmbeddingMode parse_embedding_mode(std::string_view s) {
    auto l = to_lower(s);
    if (l == "e2e") return EmbeddingMode::E2E;
    if (l == "pretrained") return EmbeddingMode::Pretrained;
    throw ConfigError("unknown embedding mode '" + std::string(s) + "'");
}

struct SnnConfig {
    ModelMode mode = ModelMode::SNN;
    EmbeddingMode embedding = EmbeddingMode::E2E;
    std::size_t seq_len = 20;
    std::size_t channel_dim = 8;
    std::size_t coin_dim = 32;
    std::vector<std::size_t> hidden{128, 64, 32};
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch = 256;
    int epochs = 30;
    int patience = 5;
    std::uint64_t seed = 1;
    double negative_keep = 1.0;  // < 1 resamples negatives each epoch
    bool freeze_alpha = false;

    std::size_t effective_seq_len() const { return mode == ModelMode::DNN ? 0 : seq_len; }
    bool alpha_trainable() const { return mode == ModelMode::SNN && !freeze_alpha; }
};

inline constexpr double kLossEps = 1e-7;
inline constexpr double kEmbeddingInitStd = 0.01;

// All learnable tensors. Embedding tables are (rows x dim).
struct Tensors {
    Eigen::MatrixXd channel_emb;
    Eigen::MatrixXd coin_emb;
    Eigen::MatrixXd alpha;  // N x K
    std::vector<Eigen::MatrixXd> weights;  // out x in
    std::vector<Eigen::VectorXd> biases;

    Tensors zeros_like() const {
        Tensors z;
        z.channel_emb = Eigen::MatrixXd::Zero(channel_emb.rows(), channel_emb.cols());
        z.coin_emb = Eigen::MatrixXd::Zero(coin_emb.rows(), coin_emb.cols());
        z.alpha = Eigen::MatrixXd::Zero(alpha.rows(), alpha.cols());
        for (const auto& w : weights) z.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        for (const auto& b : biases) z.biases.push_back(Eigen::VectorXd::Zero(b.size()));
        return z;
    }
};

// fn(name, tensor_a, tensor_b, ...) over matching tensors of several sets.
template <class Fn, class... T>
void for_each_tensor(Fn&& fn, T&... sets) {
    fn("channel_emb", sets.channel_emb...);
    fn("coin_emb", sets.coin_emb...);
    fn("alpha", sets.alpha...);
    auto& first = std::get<0>(std::forward_as_tuple(sets...));
    for (std::size_t l = 0; l < first.weights.size(); ++l) {
        fn("W" + std::to_string(l), sets.weights[l]...);
        fn("b" + std::to_string(l), sets.biases[l]...);
    }
}

struct SnnModel {
    SnnConfig config;
    FeatureSchema schema;  // normalized schema consumed by the model
    Normalizer normalizer;
    std::vector<std::string> channels;
    std::vector<std::string> coins;
    Tensors p;

    std::size_t seq_len() const { return static_cast<std::size_t>(p.alpha.rows()); }
    std::size_t n_fields() const { return 1 + schema.seq_fields.size(); }
    std::size_t seq_width() const { return config.coin_dim + schema.seq_fields.size(); }
    // offsets of the K fields inside one sequence item / inside h_s
    std::vector<std::size_t> field_offsets() const {
        std::vector<std::size_t> off{0, config.coin_dim};
        for (std::size_t j = 0; j < schema.seq_fields.size(); ++j) off.push_back(off.back() + 1);
        return off;
    }
    std::size_t channel_width() const { return config.channel_dim + schema.channel_fields.size(); }
    std::size_t target_width() const { return config.coin_dim + schema.target_fields.size(); }
    std::size_t input_dim() const { return channel_width() + target_width() + (seq_len() ? seq_width() : 0); }
};

// ---------------------------------------------------------------------------
// initialization

inline void glorot_uniform(Eigen::MatrixXd& w, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index c = 0; c < w.cols(); ++c)
        for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = uniform(rng, -limit, limit);
}

inline void normal_fill(Eigen::MatrixXd& m, Rng& rng, double sd) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng, 0.0, sd);
}

// Builds an untrained model for a normalized dataset. In pretrained mode the
// coin table is copied from `table` by lowercase symbol; pad/unknown rows
// stay zero.
inline SnnModel init_model(const SnnConfig& cfg, const Dataset& train, const Normalizer& normalizer,
                           const EmbeddingTable* table = nullptr) {
    if (cfg.hidden.empty()) throw ConfigError("SNN needs at least one hidden layer");
    if (cfg.mode != ModelMode::DNN && cfg.seq_len > train.seq_len)
        throw ConfigError("sequence length " + std::to_string(cfg.seq_len) + " exceeds the dataset's " +
                          std::to_string(train.seq_len));
    SnnModel m;
    m.config = cfg;
    m.schema = train.schema;
    m.normalizer = normalizer;
    m.channels = train.channels;
    m.coins = train.coins;

    const auto n = cfg.effective_seq_len();
    m.p.channel_emb.resize(static_cast<Eigen::Index>(m.channels.size()), static_cast<Eigen::Index>(cfg.channel_dim));
    m.p.coin_emb.resize(static_cast<Eigen::Index>(m.coins.size()), static_cast<Eigen::Index>(cfg.coin_dim));
    m.p.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m.n_fields()));

    auto rng_c = fork_rng(cfg.seed, 1);
    normal_fill(m.p.channel_emb, rng_c, kEmbeddingInitStd);
    if (cfg.embedding == EmbeddingMode::Pretrained) {
        if (!table) throw ConfigError("pretrained embedding mode needs an embedding table");
        if (table->dim() != cfg.coin_dim)
            throw ConfigError("embedding table dim " + std::to_string(table->dim()) + " != coin_dim " +
                              std::to_string(cfg.coin_dim));
        m.p.coin_emb.setZero();
        for (std::size_t i = 2; i < m.coins.size(); ++i) {
            auto v = coin_embedding(*table, m.coins[i]);
            for (std::size_t k = 0; k < cfg.coin_dim; ++k) m.p.coin_emb(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = v[k];
        }
    } else {
        auto rng_e = fork_rng(cfg.seed, 2);
        normal_fill(m.p.coin_emb, rng_e, kEmbeddingInitStd);
    }

    auto rng_w = fork_rng(cfg.seed, 3);
    std::size_t in = m.input_dim();
    for (std::size_t h : cfg.hidden) {
        Eigen::MatrixXd w(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(in));
        glorot_uniform(w, rng_w);
        m.p.weights.push_back(std::move(w));
        m.p.biases.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(h)));
        in = h;
    }
    Eigen::MatrixXd out(1, static_cast<Eigen::Index>(in));
    glorot_uniform(out, rng_w);
    m.p.weights.push_back(std::move(out));
    m.p.biases.push_back(Eigen::VectorXd::Zero(1));
    return m;
}

// ---------------------------------------------------------------------------
// forward pieces

struct SampleInputs {
    Eigen::VectorXd h_c;
    Eigen::VectorXd h_t;
    Eigen::MatrixXd H;  // N x seq_width, padded rows all zero
    std::vector<std::uint8_t> mask;
    std::int32_t channel_row = 0;
    std::int32_t coin_row = 0;
    std::vector<std::int32_t> seq_rows;
};

inline void check_row(std::int32_t id, Eigen::Index rows, const char* what) {
    if (id < 0 || id >= rows) throw IdOutOfRange(std::string(what) + " id " + std::to_string(id) + " out of range");
}

inline SampleInputs embed_inputs(const SnnModel& m, const Dataset& ds, std::size_t sample) {
    const auto& s = ds.samples.at(sample);
    const auto& l = ds.lists.at(s.list);
    const auto cd = static_cast<Eigen::Index>(m.config.channel_dim);
    const auto kd = static_cast<Eigen::Index>(m.config.coin_dim);
    if (l.channel_values.size() != m.schema.channel_fields.size() ||
        s.target_values.size() != m.schema.target_fields.size())
        throw FormatError("sample widths do not match the model schema");
    SampleInputs x;
    check_row(l.channel_id, m.p.channel_emb.rows(), "channel");
    check_row(s.coin_id, m.p.coin_emb.rows(), "coin");
    x.channel_row = l.channel_id;
    x.coin_row = s.coin_id;

    x.h_c.resize(static_cast<Eigen::Index>(m.channel_width()));
    x.h_c.head(cd) = m.p.channel_emb.row(l.channel_id).transpose();
    for (std::size_t j = 0; j < l.channel_values.size(); ++j) x.h_c(cd + static_cast<Eigen::Index>(j)) = l.channel_values[j];

    x.h_t.resize(static_cast<Eigen::Index>(m.target_width()));
    x.h_t.head(kd) = m.p.coin_emb.row(s.coin_id).transpose();
    for (std::size_t j = 0; j < s.target_values.size(); ++j) x.h_t(kd + static_cast<Eigen::Index>(j)) = s.target_values[j];

    const auto n = m.seq_len();
    const auto ks = m.schema.seq_fields.size();
    x.H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m.seq_width()));
    x.mask.assign(n, 0);
    x.seq_rows.assign(n, kPadCoin);
    if (n > l.seq_mask.size()) throw FormatError("sample sequence shorter than the model's N");
    for (std::size_t i = 0; i < n; ++i) {
        if (!l.seq_mask[i]) continue;
        auto id = l.seq_coin_ids[i];
        check_row(id, m.p.coin_emb.rows(), "sequence coin");
        x.mask[i] = 1;
        x.seq_rows[i] = id;
        auto row = static_cast<Eigen::Index>(i);
        x.H.row(row).head(kd) = m.p.coin_emb.row(id);
        for (std::size_t j = 0; j < ks; ++j) x.H(row, kd + static_cast<Eigen::Index>(j)) = l.seq_values[i * ks + j];
    }
    return x;
}

struct Pooled {
    Eigen::VectorXd h_s;
    Eigen::MatrixXd P;  // N x K normalized attention weights (0 at masked positions)
};

// h_s^j = sum_i m_i e^{a_ij} h_i^j / sum_i m_i e^{a_ij}; all-masked gives 0.
inline Pooled positional_attention(const Eigen::MatrixXd& H, std::span<const std::uint8_t> mask,
                                   const Eigen::MatrixXd& alpha, std::span<const std::size_t> offsets) {
    const auto n = H.rows();
    const auto k = static_cast<Eigen::Index>(offsets.size()) - 1;
    Pooled out;
    out.h_s = Eigen::VectorXd::Zero(H.cols());
    out.P = Eigen::MatrixXd::Zero(n, k);
    for (Eigen::Index j = 0; j < k; ++j) {
        double amax = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) amax = std::max(amax, alpha(i, j));
        if (!std::isfinite(amax)) continue;
        double denom = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) {
                out.P(i, j) = std::exp(alpha(i, j) - amax);
                denom += out.P(i, j);
            }
        const auto off = static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(j)]);
        const auto w = static_cast<Eigen::Index>(offsets[static_cast<std::size_t>(j) + 1]) - off;
        Eigen::VectorXd num = Eigen::VectorXd::Zero(w);
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)]) num += out.P(i, j) * H.row(i).segment(off, w).transpose();
        out.h_s.segment(off, w) = num / denom;
        out.P.col(j) /= denom;
    }
    return out;
}

inline Eigen::VectorXd assemble_input(const SnnModel& m, const SampleInputs& x, const Pooled* pooled) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(m.input_dim()));
    v.head(x.h_c.size()) = x.h_c;
    v.segment(x.h_c.size(), x.h_t.size()) = x.h_t;
    if (m.seq_len()) v.tail(pooled->h_s.size()) = pooled->h_s;
    return v;
}

struct MlpTrace {
    std::vector<Eigen::MatrixXd> A;  // A[0] = input, A[l] = post-ReLU activations
    Eigen::RowVectorXd logit;
    Eigen::RowVectorXd y_hat;
};

inline MlpTrace mlp_forward(const Tensors& p, Eigen::MatrixXd X) {
    MlpTrace t;
    t.A.push_back(std::move(X));
    const auto L = p.weights.size();
    for (std::size_t l = 0; l + 1 < L; ++l) {
        Eigen::MatrixXd z = p.weights[l] * t.A.back();
        z.colwise() += p.biases[l];
        t.A.push_back(z.cwiseMax(0.0));
    }
    Eigen::MatrixXd z = p.weights[L - 1] * t.A.back();
    t.logit = z.row(0).array() + p.biases[L - 1](0);
    t.y_hat.resize(t.logit.size());
    for (Eigen::Index i = 0; i < t.logit.size(); ++i) t.y_hat(i) = sigmoid(t.logit(i));
    return t;
}

inline double bce(double y_hat, int y) {
    double p = std::clamp(y_hat, kLossEps, 1.0 - kLossEps);
    return y ? -std::log(p) : -std::log(1.0 - p);
}

struct ForwardTrace {
    SampleInputs inputs;
    Pooled pooled;
    MlpTrace mlp;
    double y_hat = 0.0;
};

inline ForwardTrace forward_one(const SnnModel& m, const Dataset& ds, std::size_t sample) {
    ForwardTrace t;
    t.inputs = embed_inputs(m, ds, sample);
    auto off = m.field_offsets();
    if (m.seq_len()) t.pooled = positional_attention(t.inputs.H, t.inputs.mask, m.p.alpha, off);
    t.mlp = mlp_forward(m.p, assemble_input(m, t.inputs, &t.pooled));
    t.y_hat = t.mlp.y_hat(0);
    return t;
}

// ---------------------------------------------------------------------------
// batch forward / backward

struct BatchTrace {
    std::vector<SampleInputs> inputs;
    std::vector<Pooled> pooled;
    MlpTrace mlp;
};

inline BatchTrace forward_batch(const SnnModel& m, const Dataset& ds, std::span<const std::size_t> idx) {
    BatchTrace t;
    const auto off = m.field_offsets();
    Eigen::MatrixXd X(static_cast<Eigen::Index>(m.input_dim()), static_cast<Eigen::Index>(idx.size()));
    t.inputs.reserve(idx.size());
    t.pooled.resize(idx.size());
    for (std::size_t b = 0; b < idx.size(); ++b) {
        t.inputs.push_back(embed_inputs(m, ds, idx[b]));
        if (m.seq_len()) t.pooled[b] = positional_attention(t.inputs[b].H, t.inputs[b].mask, m.p.alpha, off);
        X.col(static_cast<Eigen::Index>(b)) = assemble_input(m, t.inputs[b], &t.pooled[b]);
    }
    t.mlp = mlp_forward(m.p, std::move(X));
    return t;
}

inline double batch_loss(const SnnModel& m, const Dataset& ds, std::span<const std::size_t> idx) {
    auto t = forward_batch(m, ds, idx);
    double loss = 0.0;
    for (std::size_t b = 0; b < idx.size(); ++b) loss += bce(t.mlp.y_hat(static_cast<Eigen::Index>(b)), ds.samples[idx[b]].label);
    return loss / static_cast<double>(idx.size());
}

// Mean-loss gradients for every tensor. Frozen tensors (pretrained coin
// table, alpha in SNN_V or when frozen) get exactly zero gradient.
inline double loss_and_gradient(const SnnModel& m, const Dataset& ds, std::span<const std::size_t> idx, Tensors& g) {
    g = m.p.zeros_like();
    if (idx.empty()) return 0.0;
    auto t = forward_batch(m, ds, idx);
    const auto B = static_cast<Eigen::Index>(idx.size());
    const double inv_b = 1.0 / static_cast<double>(B);

    double loss = 0.0;
    Eigen::MatrixXd dz(1, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        int y = ds.samples[idx[static_cast<std::size_t>(b)]].label;
        loss += bce(t.mlp.y_hat(b), y);
        dz(0, b) = (t.mlp.y_hat(b) - y) * inv_b;
    }
    loss *= inv_b;

    const auto L = m.p.weights.size();
    for (std::size_t l = L; l-- > 0;) {
        g.weights[l] = dz * t.mlp.A[l].transpose();
        g.biases[l] = dz.rowwise().sum();
        Eigen::MatrixXd da = m.p.weights[l].transpose() * dz;
        if (l == 0) {
            dz = std::move(da);
            break;
        }
        dz = da.cwiseProduct((t.mlp.A[l].array() > 0.0).cast<double>().matrix());
    }
    const Eigen::MatrixXd& dX = dz;

    const bool coin_frozen = m.config.embedding == EmbeddingMode::Pretrained;
    const bool alpha_on = m.config.alpha_trainable();
    const auto cd = static_cast<Eigen::Index>(m.config.channel_dim);
    const auto kd = static_cast<Eigen::Index>(m.config.coin_dim);
    const auto cw = static_cast<Eigen::Index>(m.channel_width());
    const auto tw = static_cast<Eigen::Index>(m.target_width());
    const auto off = m.field_offsets();
    const auto K = static_cast<Eigen::Index>(m.n_fields());
    for (Eigen::Index b = 0; b < B; ++b) {
        const auto& x = t.inputs[static_cast<std::size_t>(b)];
        auto col = dX.col(b);
        g.channel_emb.row(x.channel_row) += col.head(cd).transpose();
        if (!coin_frozen) g.coin_emb.row(x.coin_row) += col.segment(cw, kd).transpose();
        if (!m.seq_len()) continue;
        const auto& pooled = t.pooled[static_cast<std::size_t>(b)];
        Eigen::VectorXd gs = col.tail(static_cast<Eigen::Index>(m.seq_width()));
        (void)tw;
        for (Eigen::Index i = 0; i < x.H.rows(); ++i) {
            if (!x.mask[static_cast<std::size_t>(i)]) continue;
            for (Eigen::Index j = 0; j < K; ++j) {
                const auto o = static_cast<Eigen::Index>(off[static_cast<std::size_t>(j)]);
                const auto w = static_cast<Eigen::Index>(off[static_cast<std::size_t>(j) + 1]) - o;
                const double p = pooled.P(i, j);
                if (alpha_on)
                    g.alpha(i, j) +=
                        p * gs.segment(o, w).dot(x.H.row(i).segment(o, w).transpose() - pooled.h_s.segment(o, w));
                if (j == 0 && !coin_frozen) g.coin_emb.row(x.seq_rows[static_cast<std::size_t>(i)]) += p * gs.head(kd).transpose();
            }
        }
    }
    return loss;
}

// ---------------------------------------------------------------------------
// prediction

inline constexpr std::size_t kPredictBatch = 1024;

inline std::vector<double> predict(const SnnModel& m, const Dataset& ds) {
    std::vector<double> out(ds.samples.size());
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < ds.samples.size(); start += kPredictBatch) {
        idx.clear();
        for (std::size_t i = start; i < std::min(ds.samples.size(), start + kPredictBatch); ++i) idx.push_back(i);
        auto t = forward_batch(m, ds, idx);
        for (std::size_t b = 0; b < idx.size(); ++b) out[idx[b]] = t.mlp.y_hat(static_cast<Eigen::Index>(b));
    }
    return out;
}

struct RemapReport {
    std::size_t unknown_coins = 0;     // samples/sequence slots mapped to the unknown row
    std::size_t unknown_channels = 0;  // lists mapped to the unknown channel row
};

// Re-keys a dataset's channel/coin ids to the model's vocabulary. Ids the
// model never saw go to the reserved unknown rows and are counted.
inline Dataset remap_to_model(const SnnModel& m, Dataset ds, RemapReport* report = nullptr) {
    std::unordered_map<std::string, std::int32_t> coin_ids, channel_ids;
    for (std::size_t i = 0; i < m.coins.size(); ++i) coin_ids.emplace(m.coins[i], static_cast<std::int32_t>(i));
    for (std::size_t i = 0; i < m.channels.size(); ++i) channel_ids.emplace(m.channels[i], static_cast<std::int32_t>(i));
    RemapReport r;
    auto coin = [&](std::int32_t id) {
        if (id == kPadCoin) return kPadCoin;
        auto it = coin_ids.find(ds.coins.at(static_cast<std::size_t>(id)));
        if (it == coin_ids.end()) {
            ++r.unknown_coins;
            return kUnknownCoin;
        }
        return it->second;
    };
    for (auto& l : ds.lists) {
        auto it = channel_ids.find(ds.channels.at(static_cast<std::size_t>(l.channel_id)));
        if (it == channel_ids.end()) {
            ++r.unknown_channels;
            l.channel_id = kUnknownChannel;
        } else {
            l.channel_id = it->second;
        }
        for (std::size_t i = 0; i < l.seq_coin_ids.size(); ++i)
            if (l.seq_mask[i]) l.seq_coin_ids[i] = coin(l.seq_coin_ids[i]);
    }
    for (auto& s : ds.samples) s.coin_id = coin(s.coin_id);
    ds.coins = m.coins;
    ds.channels = m.channels;
    if (report) *report = r;
    return ds;
}

// ---------------------------------------------------------------------------
// training

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_auc = 0.0;
    std::size_t samples = 0;
};

struct TrainResult {
    SnnModel model;  // best checkpoint by validation AUC
    std::vector<EpochLog> log;
    int best_epoch = -1;
    double best_val_auc = 0.0;
};

struct AdamState {
    Tensors m, v;
    std::int64_t t = 0;
};

inline void adam_step(Tensors& p, const Tensors& g, AdamState& s, const SnnConfig& cfg, bool coin_frozen,
                      bool alpha_frozen) {
    ++s.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(s.t));
    for_each_tensor(
        [&](const std::string& name, auto& param, const auto& grad, auto& m, auto& v) {
            if ((coin_frozen && name == "coin_emb") || (alpha_frozen && name == "alpha")) return;
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
            param.array() -= cfg.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.adam_eps);
        },
        p, const_cast<Tensors&>(g), s.m, s.v);
}

inline double dataset_auc(const SnnModel& m, const Dataset& ds) {
    auto scores = predict(m, ds);
    std::vector<int> labels;
    labels.reserve(ds.samples.size());
    for (const auto& s : ds.samples) labels.push_back(s.label);
    return auc(scores, labels);
}

// Mini-batch Adam with early stopping on validation AUC; returns the best
// checkpoint. `on_epoch` (optional) sees each log row as it is produced.
inline TrainResult train_snn(const NormalizedSplit& data, const SnnConfig& cfg, const EmbeddingTable* table = nullptr,
                             const std::function<void(const EpochLog&)>& on_epoch = {}) {
    const auto& train = data.split.train;
    const auto& val = data.split.validation;
    if (train.samples.empty() || val.samples.empty()) throw EmptySplit("training needs train and validation samples");
    if (cfg.batch == 0) throw ConfigError("batch size must be positive");
    if (!(cfg.negative_keep > 0.0 && cfg.negative_keep <= 1.0)) throw ConfigError("negative_keep must lie in (0, 1]");

    TrainResult res;
    SnnModel model = init_model(cfg, train, data.normalizer, table);
    AdamState adam{model.p.zeros_like(), model.p.zeros_like(), 0};
    const bool coin_frozen = cfg.embedding == EmbeddingMode::Pretrained;
    const bool alpha_frozen = !cfg.alpha_trainable();

    auto rng = fork_rng(cfg.seed, 4);
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < train.samples.size(); ++i) (train.samples[i].label ? pos : neg).push_back(i);

    res.model = model;
    res.best_val_auc = -1.0;
    int since_best = 0;
    Tensors grad;
    std::vector<std::size_t> order;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order = pos;
        for (auto i : neg)
            if (cfg.negative_keep >= 1.0 || uniform01(rng) < cfg.negative_keep) order.push_back(i);
        shuffle(order, rng);

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
            std::span<const std::size_t> batch(order.data() + start, std::min(cfg.batch, order.size() - start));
            double loss = loss_and_gradient(model, train, batch, grad);
            if (!std::isfinite(loss))
                throw Divergence("non-finite loss at epoch " + std::to_string(epoch) + ", batch starting " +
                                 std::to_string(start));
            loss_sum += loss * static_cast<double>(batch.size());
            adam_step(model.p, grad, adam, cfg, coin_frozen, alpha_frozen);
        }
        EpochLog row{epoch, loss_sum / static_cast<double>(order.size()), dataset_auc(model, val), order.size()};
        res.log.push_back(row);
        if (on_epoch) on_epoch(row);
        if (row.val_auc > res.best_val_auc) {
            res.best_val_auc = row.val_auc;
            res.best_epoch = epoch;
            res.model = model;
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    return res;
}

inline void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
    auto out = open_output(path);
    for (const auto& r : log)
        out << nlohmann::json{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_auc", r.val_auc},
                              {"samples", r.samples}}
                   .dump()
            << '\n';
}

// ---------------------------------------------------------------------------
// attention heat map

inline std::vector<std::string> attention_field_names(const SnnModel& m) {
    std::vector<std::string> f{"coin_id"};
    f.insert(f.end(), m.schema.seq_fields.begin(), m.schema.seq_fields.end());
    return f;
}

// Raw alpha, one row per position (1 = most recent).
inline void write_attention_csv(std::ostream& out, const Eigen::MatrixXd& alpha, const std::vector<std::string>& fields) {
    out << "position";
    for (const auto& f : fields) out << ',' << f;
    out << '\n';
    for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
        out << i + 1;
        for (Eigen::Index j = 0; j < alpha.cols(); ++j) out << ',' << format_double(alpha(i, j));
        out << '\n';
    }
}

inline Eigen::MatrixXd read_attention_csv(const std::filesystem::path& path, std::vector<std::string>* fields = nullptr) {
    auto lines = read_lines(path);
    if (lines.empty()) throw FormatError("empty attention CSV");
    auto header = split(lines[0], ',');
    if (header.empty() || header[0] != "position") throw FormatError("attention CSV must start with 'position'");
    const auto k = header.size() - 1;
    if (fields) {
        fields->clear();
        for (std::size_t j = 1; j < header.size(); ++j) fields->emplace_back(header[j]);
    }
    std::vector<std::vector<double>> rows;
    for (std::size_t ln = 1; ln < lines.size(); ++ln) {
        if (trim(lines[ln]).empty()) continue;
        auto cells = split(lines[ln], ',');
        if (cells.size() != k + 1) throw MalformedRow(ln + 1, "expected " + std::to_string(k + 1) + " cells");
        std::vector<double> r(k);
        for (std::size_t j = 0; j < k; ++j)
            if (!parse_number(cells[j + 1], r[j])) throw MalformedRow(ln + 1, "bad number");
        rows.push_back(std::move(r));
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < k; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return a;
}

// Text rendering: per-position mean alpha with a bar, plus the mean
// normalized weight a full-length sequence would receive.
inline std::string render_attention(const Eigen::MatrixXd& alpha) {
    std::ostringstream os;
    if (alpha.rows() == 0) return "no sequence positions\n";
    Eigen::VectorXd row_mean = alpha.rowwise().mean();
    Eigen::MatrixXd w = alpha.array().exp().matrix();
    for (Eigen::Index j = 0; j < w.cols(); ++j) w.col(j) /= w.col(j).sum();
    Eigen::VectorXd w_mean = w.rowwise().mean();
    const double lo = row_mean.minCoeff(), hi = row_mean.maxCoeff();
    char buf[128];
    os << "pos  mean_alpha  mean_weight\n";
    for (Eigen::Index i = 0; i < alpha.rows(); ++i) {
        int bar = hi > lo ? static_cast<int>(std::lround(30.0 * (row_mean(i) - lo) / (hi - lo))) : 15;
        std::snprintf(buf, sizeof(buf), "%3lld  %+10.5f  %11.5f  ", static_cast<long long>(i + 1), row_mean(i), w_mean(i));
        os << buf << std::string(static_cast<std::size_t>(bar), '#') << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// checkpoint (versioned binary, self-contained for prediction)

inline constexpr std::string_view kCheckpointMagic = "PNDSNNC1";
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

inline void write_matrix(BinaryWriter& w, const Eigen::MatrixXd& m) {
    w.pod<std::int64_t>(m.rows());
    w.pod<std::int64_t>(m.cols());
    w.vec(std::span<const double>(m.data(), static_cast<std::size_t>(m.size())));
}

inline Eigen::MatrixXd read_matrix(BinaryReader& r) {
    auto rows = r.pod<std::int64_t>();
    auto cols = r.pod<std::int64_t>();
    auto data = r.vec<double>();
    if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
        throw FormatError("matrix shape mismatch in checkpoint");
    return Eigen::Map<Eigen::MatrixXd>(data.data(), rows, cols);
}

inline void write_field_norm(BinaryWriter& w, const FieldNorm& f) {
    std::vector<std::uint64_t> kept(f.kept.begin(), f.kept.end());
    w.vec(kept);
    w.vec(f.mean);
    w.vec(f.stddev);
    w.strings(f.dropped);
}

inline FieldNorm read_field_norm(BinaryReader& r) {
    FieldNorm f;
    auto kept = r.vec<std::uint64_t>();
    f.kept.assign(kept.begin(), kept.end());
    f.mean = r.vec<double>();
    f.stddev = r.vec<double>();
    f.dropped = r.strings();
    if (f.mean.size() != f.kept.size() || f.stddev.size() != f.kept.size())
        throw FormatError("normalizer field count mismatch");
    return f;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const SnnModel& m) {
    auto out = open_output(path, true);
    BinaryWriter w(out);
    write_magic(w, out, kCheckpointMagic, kCheckpointVersion);
    const auto& c = m.config;
    w.str(to_string(c.mode));
    w.str(to_string(c.embedding));
    w.pod<std::uint64_t>(c.seq_len);
    w.pod<std::uint64_t>(c.channel_dim);
    w.pod<std::uint64_t>(c.coin_dim);
    std::vector<std::uint64_t> hidden(c.hidden.begin(), c.hidden.end());
    w.vec(hidden);
    for (double x : {c.lr, c.beta1, c.beta2, c.adam_eps}) w.pod(x);
    w.pod<std::uint64_t>(c.batch);
    w.pod<std::int32_t>(c.epochs);
    w.pod<std::int32_t>(c.patience);
    w.pod(c.seed);
    w.pod(c.negative_keep);
    w.pod<std::uint8_t>(c.freeze_alpha ? 1 : 0);
    write_schema(w, m.schema);
    write_schema(w, m.normalizer.source);
    detail::write_field_norm(w, m.normalizer.channel);
    detail::write_field_norm(w, m.normalizer.target);
    detail::write_field_norm(w, m.normalizer.seq);
    w.strings(m.channels);
    w.strings(m.coins);
    detail::write_matrix(w, m.p.channel_emb);
    detail::write_matrix(w, m.p.coin_emb);
    detail::write_matrix(w, m.p.alpha);
    w.pod<std::uint64_t>(m.p.weights.size());
    for (std::size_t l = 0; l < m.p.weights.size(); ++l) {
        detail::write_matrix(w, m.p.weights[l]);
        detail::write_matrix(w, m.p.biases[l]);
    }
}

inline SnnModel load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInput("cannot open " + path.string());
    BinaryReader r(in);
    r.expect_magic(kCheckpointMagic, kCheckpointVersion);
    SnnModel m;
    auto& c = m.config;
    c.mode = parse_mode(r.str());
    c.embedding = parse_embedding_mode(r.str());
    c.seq_len = r.pod<std::uint64_t>();
    c.channel_dim = r.pod<std::uint64_t>();
    c.coin_dim = r.pod<std::uint64_t>();
    auto hidden = r.vec<std::uint64_t>();
    c.hidden.assign(hidden.begin(), hidden.end());
    c.lr = r.pod<double>();
    c.beta1 = r.pod<double>();
    c.beta2 = r.pod<double>();
    c.adam_eps = r.pod<double>();
    c.batch = r.pod<std::uint64_t>();
    c.epochs = r.pod<std::int32_t>();
    c.patience = r.pod<std::int32_t>();
    c.seed = r.pod<std::uint64_t>();
    c.negative_keep = r.pod<double>();
    c.freeze_alpha = r.pod<std::uint8_t>() != 0;
    m.schema = read_schema(r);
    m.normalizer.source = read_schema(r);
    m.normalizer.channel = detail::read_field_norm(r);
    m.normalizer.target = detail::read_field_norm(r);
    m.normalizer.seq = detail::read_field_norm(r);
    m.channels = r.strings();
    m.coins = r.strings();
    m.p.channel_emb = detail::read_matrix(r);
    m.p.coin_emb = detail::read_matrix(r);
    m.p.alpha = detail::read_matrix(r);
    auto layers = r.pod<std::uint64_t>();
    for (std::uint64_t l = 0; l < layers; ++l) {
        m.p.weights.push_back(detail::read_matrix(r));
        Eigen::MatrixXd b = detail::read_matrix(r);
        m.p.biases.push_back(b.col(0));
    }
    if (m.p.weights.empty() || m.p.weights.front().cols() != static_cast<Eigen::Index>(m.input_dim()))
        throw FormatError("checkpoint input width disagrees with its schema");
    return m;
}

}  // namespace pnd
