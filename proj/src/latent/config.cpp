#include "latent/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include "latent/core.hpp"

namespace latent {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "root_seed", "out",
        // synth
        "synth.participants", "synth.days", "synth.archetypes", "synth.seed",
        "synth.start_date",
        // ingest
        "ingest.events", "ingest.clinical", "ingest.format", "ingest.tz_offset",
        "ingest.vocabulary", "ingest.lenient",
        // preprocess
        "preprocess.window_min",
        // embed
        "embed.mode", "embed.dim", "embed.import_path",
        // triplets
        "triplets.window_days", "triplets.n", "triplets.margin", "triplets.seed",
        "triplets.onehot_k_lo", "triplets.onehot_k_hi",
        // reduce
        "reduce.perplexity", "reduce.iterations", "reduce.learning_rate",
        "reduce.early_exaggeration", "reduce.exaggeration_iters", "reduce.seed",
        "reduce.kl_log_every",
        // cluster
        "cluster.k", "cluster.select_k_lo", "cluster.select_k_hi", "cluster.restarts",
        "cluster.max_iter", "cluster.tol", "cluster.seed",
        // states
        "states.k", "states.alpha", "states.threshold_quantile", "states.threshold",
        "states.mode", "states.period_months", "states.period_start", "states.max_iter",
        "states.tol",
        // analyze
        "analyze.period_months", "analyze.k_lo", "analyze.k_hi", "analyze.seed",
        // predict
        "predict.sets", "predict.targets", "predict.windows", "predict.lambda",
        "predict.lambda_grid", "predict.bootstrap", "predict.seed",
    };
    return keys;
}

}  // namespace

Config Config::from_string(std::string_view text) {
    Config cfg;
    std::istringstream in{std::string(text)};
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        if (body.front() == '[') {
            if (body.back() != ']') {
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated section header");
            }
            section = std::string(trim(body.substr(1, body.size() - 2)));
            if (section.empty()) {
                throw ConfigError("config line " + std::to_string(line_no) + ": empty section");
            }
            continue;
        }
        auto eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key{trim(body.substr(0, eq))};
        std::string value{trim(body.substr(eq + 1))};
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        }
        std::string full = section.empty() ? key : section + "." + key;
        cfg.entries_[full] = value;
    }
    return cfg;
}

Config Config::from_file(const std::string& path) {
    return from_string(read_file(path));
}

void Config::set(const std::string& key, const std::string& value) {
    entries_[key] = value;
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::string Config::require_string(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) {
        throw ConfigError("missing required config key '" + key + "'");
    }
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' must be a number, got '" + it->second + "'");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    int v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size()) {
        throw ConfigError("config key '" + key + "' must be an integer, got '" + it->second + "'");
    }
    return v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "' must be true/false, got '" + it->second + "'");
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), v);
    if (ec != std::errc{} || p != it->second.data() + it->second.size()) {
        throw ConfigError("config key '" + key + "' must be an unsigned integer, got '" +
                          it->second + "'");
    }
    return v;
}

void Config::validate_known_keys() const {
    for (const auto& [key, value] : entries_) {
        if (!known_keys().count(key)) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

}  // namespace latent
