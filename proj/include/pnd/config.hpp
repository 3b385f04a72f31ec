#pragma once

// Pipeline configuration: an INI-style text file ([section] headers,
// key = value lines, # comments) flattened to dotted keys. Path keys can be
// overridden from the environment and any key from the command line.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "detector.hpp"
#include "embed.hpp"
#include "snn.hpp"
#include "synth.hpp"
#include "util.hpp"

namespace pnd {

class Config {
public:
    static Config parse(std::string_view text, const std::string& origin = "<config>") {
        Config c;
        std::string section;
        std::size_t line_no = 0;
        std::istringstream in{std::string(text)};
        for (std::string raw; std::getline(in, raw);) {
            ++line_no;
            auto line = trim(raw);
            if (auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(line_no) + ": unterminated section");
                section = std::string(trim(line.substr(1, line.size() - 2)));
                if (section.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty section name");
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
            auto key = std::string(trim(line.substr(0, eq)));
            if (key.empty()) throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
            c.set(section.empty() ? key : section + "." + key, std::string(trim(line.substr(eq + 1))));
        }
        return c;
    }

    static Config load(const std::filesystem::path& path) {
        if (!std::filesystem::exists(path)) throw MissingInput("config file " + path.string());
        std::ifstream in(path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), path.string());
    }

    void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
    bool has(const std::string& key) const { return values_.contains(key); }
    const std::map<std::string, std::string>& values() const { return values_; }

    // paths.<name> is replaced by PND_PATH_<NAME> when that variable is set.
    void apply_env() {
        for (auto& [k, v] : values_) {
            if (!k.starts_with("paths.")) continue;
            auto var = "PND_PATH_" + to_upper(k.substr(6));
            if (const char* e = std::getenv(var.c_str()); e && *e) v = e;
        }
    }

    // "key=value" pairs from the command line win over the file.
    void apply_overrides(const std::vector<std::string>& kv) {
        for (const auto& s : kv) {
            auto eq = s.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + s + "' is not key=value");
            set(std::string(trim(std::string_view(s).substr(0, eq))), std::string(trim(std::string_view(s).substr(eq + 1))));
        }
    }

    template <class T>
    void get(const std::string& key, T& out) const {
        auto it = values_.find(key);
        if (it == values_.end()) return;
        if constexpr (std::is_same_v<T, std::string>) {
            out = it->second;
        } else if constexpr (std::is_same_v<T, bool>) {
            auto v = to_lower(it->second);
            if (v == "true" || v == "1" || v == "yes") out = true;
            else if (v == "false" || v == "0" || v == "no") out = false;
            else throw ConfigError(key + ": not a boolean: " + it->second);
        } else {
            if (!parse_number(it->second, out)) throw ConfigError(key + ": not a number: " + it->second);
        }
    }

    template <class T>
    T value(const std::string& key, T fallback) const {
        get(key, fallback);
        return fallback;
    }

    std::vector<std::string> list(const std::string& key, std::vector<std::string> fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        std::vector<std::string> out;
        for (auto part : split(it->second, ','))
            if (auto t = trim(part); !t.empty()) out.emplace_back(t);
        return out;
    }

    std::vector<std::size_t> size_list(const std::string& key, std::vector<std::size_t> fallback) const {
        if (!has(key)) return fallback;
        std::vector<std::size_t> out;
        for (const auto& s : list(key)) {
            std::size_t v = 0;
            if (!parse_number(s, v)) throw ConfigError(key + ": not a list of integers");
            out.push_back(v);
        }
        return out;
    }

private:
    std::map<std::string, std::string> values_;
};

// ---------------------------------------------------------------------------
// per-stage settings

inline WorldConfig world_config_from(const Config& c) {
    auto w = default_world_config(c.value<std::uint64_t>("seed", 1));
    c.get("synth.seed", w.seed);
    c.get("synth.n_channels", w.n_channels);
    c.get("synth.n_coins", w.n_coins);
    c.get("synth.coins_per_channel_pool", w.coins_per_channel_pool);
    c.get("synth.events_per_channel", w.events_per_channel);
    c.get("synth.pre_pump_drift", w.pre_pump_drift);
    c.get("synth.price_noise", w.price_noise);
    c.get("synth.recency_decay", w.recency_decay);
    c.get("synth.regime_length", w.regime_length);
    c.get("synth.regime_spread", w.regime_spread);
    c.get("synth.taste_pull", w.taste_pull);
    c.get("synth.taste_width", w.taste_width);
    c.get("synth.repeat_prob", w.repeat_prob);
    c.get("synth.sector_boost", w.sector_boost);
    c.get("synth.listing_fraction", w.listing_fraction);
    c.get("synth.eth_listing_fraction", w.eth_listing_fraction);
    c.get("synth.late_listing_fraction", w.late_listing_fraction);
    c.get("synth.delisting_fraction", w.delisting_fraction);
    c.get("synth.eth_channel_prob", w.eth_channel_prob);
    c.get("synth.min_gap_days", w.min_gap_days);
    c.get("synth.max_gap_days", w.max_gap_days);
    c.get("synth.off_pool_prob", w.off_pool_prob);
    c.get("synth.federation_prob", w.federation_prob);
    c.get("synth.cold_start_fraction", w.cold_start_fraction);
    c.get("synth.message_noise", w.message_noise);
    c.get("synth.ambiguous_sessions", w.ambiguous_sessions);
    w.exchanges = c.list("synth.exchanges", w.exchanges);
    w.validate();
    return w;
}

inline LogRegConfig logreg_config_from(const Config& c) {
    LogRegConfig d;
    d.seed = c.value<std::uint64_t>("seed", d.seed);
    c.get("detector.lr", d.lr);
    c.get("detector.epochs", d.epochs);
    c.get("detector.l2", d.l2);
    c.get("detector.seed", d.seed);
    return d;
}

inline EmbedConfig embed_config_from(const Config& c) {
    EmbedConfig e;
    e.seed = c.value<std::uint64_t>("seed", e.seed);
    c.get("embed.d", e.d);
    c.get("embed.window", e.window);
    c.get("embed.negatives", e.negatives);
    c.get("embed.epochs", e.epochs);
    c.get("embed.lr", e.lr);
    c.get("embed.min_count", e.min_count);
    c.get("embed.seed", e.seed);
    return e;
}

inline SnnConfig snn_config_from(const Config& c) {
    SnnConfig s;
    s.seed = c.value<std::uint64_t>("seed", s.seed);
    if (c.has("snn.mode")) s.mode = parse_mode(c.value<std::string>("snn.mode", ""));
    if (c.has("snn.embedding")) s.embedding = parse_embedding_mode(c.value<std::string>("snn.embedding", ""));
    c.get("snn.seq_len", s.seq_len);
    c.get("snn.channel_dim", s.channel_dim);
    c.get("snn.coin_dim", s.coin_dim);
    s.hidden = c.size_list("snn.hidden", s.hidden);
    c.get("snn.lr", s.lr);
    c.get("snn.batch", s.batch);
    c.get("snn.epochs", s.epochs);
    c.get("snn.patience", s.patience);
    c.get("snn.negative_keep", s.negative_keep);
    c.get("snn.freeze_alpha", s.freeze_alpha);
    c.get("snn.seed", s.seed);
    if (s.negative_keep <= 0.0 || s.negative_keep > 1.0) throw ConfigError("snn.negative_keep must be in (0, 1]");
    if (s.batch == 0) throw ConfigError("snn.batch must be positive");
    return s;
}

}  // namespace pnd
