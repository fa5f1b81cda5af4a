#include "temnet/config.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "temnet/error.hpp"

namespace temnet {

std::vector<MarketMeta> canonical_markets() {
    return {
        {"DJI", "Dow Jones Industrial Average", Zone::America, 1},
        {"NASD", "NASDAQ Composite", Zone::America, 2},
        {"NIKK", "Nikkei 225", Zone::Asia, 3},
        {"HSI", "Hang Seng", Zone::Asia, 4},
        {"SHI", "Shanghai Composite", Zone::Asia, 5},
        {"SZI", "Shenzhen Component", Zone::Asia, 6},
        {"TWII", "Taiwan Weighted", Zone::Asia, 7},
        {"DAX", "DAX", Zone::Europe, 8},
        {"FTSE", "FTSE 100", Zone::Europe, 9},
        {"CAC", "CAC 40", Zone::Europe, 10},
    };
}

namespace {

using nlohmann::json;

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::vector<MarketMeta> parse_markets_inline(const json& arr) {
    std::vector<MarketMeta> out;
    for (const auto& e : arr) {
        MarketMeta mk;
        mk.id = e.at("id").get<std::string>();
        mk.name = e.value("name", mk.id);
        mk.zone = zone_from_string(e.at("zone").get<std::string>());
        mk.order_index = e.at("order").get<int>();
        out.push_back(std::move(mk));
    }
    validate_markets(out);
    return out;
}

std::vector<double> parse_per_market(const json& v, std::size_t m, const char* what) {
    std::vector<double> out;
    if (v.is_number()) {
        out.assign(m, v.get<double>());
    } else if (v.is_array()) {
        out = v.get<std::vector<double>>();
        if (out.size() != m)
            throw ConfigError(std::string(what) + " array must have one entry per market");
    } else {
        throw ConfigError(std::string(what) + " must be a number or an array");
    }
    return out;
}

int market_index(const std::vector<MarketMeta>& markets, const std::string& id) {
    for (std::size_t i = 0; i < markets.size(); ++i)
        if (markets[i].id == id) return static_cast<int>(i);
    throw ConfigError("unknown market id '" + id + "' in coupling spec");
}

SynthSection parse_synth(const json& j, const std::vector<MarketMeta>& markets) {
    const std::size_t m = markets.size();
    SynthSection s;
    s.length = j.value("length", s.length);
    if (s.length < 100) throw ConfigError("synth.length must be >= 100");
    s.seed = j.value("seed", s.seed);
    if (j.contains("start_month")) s.start_month = parse_date(j["start_month"].get<std::string>());
    s.base_price = j.value("base_price", s.base_price);
    s.self_ar = j.contains("self_ar") ? parse_per_market(j["self_ar"], m, "synth.self_ar")
                                      : std::vector<double>(m, 0.0);
    s.noise_std = j.contains("noise_std") ? parse_per_market(j["noise_std"], m, "synth.noise_std")
                                          : std::vector<double>(m, 1.0);
    s.coupling = Matrix(m, m, 0.0);
    if (j.contains("coupling")) {
        const auto& c = j["coupling"];
        if (c.is_array() && !c.empty() && c[0].is_array()) {
            if (c.size() != m) throw ConfigError("synth.coupling matrix must be M x M");
            for (std::size_t r = 0; r < m; ++r) {
                if (c[r].size() != m) throw ConfigError("synth.coupling matrix must be M x M");
                for (std::size_t col = 0; col < m; ++col)
                    s.coupling(r, col) = c[r][col].get<double>();
            }
        } else if (c.is_array()) {
            for (const auto& e : c) {
                const int src = market_index(markets, e.at("source").get<std::string>());
                const int tgt = market_index(markets, e.at("target").get<std::string>());
                s.coupling(src, tgt) = e.at("strength").get<double>();
            }
        } else {
            throw ConfigError("synth.coupling must be a matrix or an edge list");
        }
    }
    return s;
}

} // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }

    RunConfig cfg;
    cfg.config_dir = std::filesystem::absolute(path).parent_path();

    static const std::set<std::string> known = {
        "input",         "markets",       "markets_file",       "missing_policy",
        "window_months", "step_months",   "q",                  "scheme",
        "min_samples",   "miller_madow",  "lag_policy",         "trend_cutoff_months",
        "max_lead_months", "influence_threshold", "pair_band",  "crisis_calendar",
        "output_dir",    "dump_returns",  "synth"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError(path.string() + ": unknown config key '" + it.key() + "'");

    if (j.contains("input")) cfg.input = resolve(cfg.config_dir, j["input"].get<std::string>());
    if (j.contains("markets") && j.contains("markets_file"))
        throw ConfigError("config sets both 'markets' and 'markets_file'");
    if (j.contains("markets")) cfg.markets = parse_markets_inline(j["markets"]);
    if (j.contains("markets_file"))
        cfg.markets = load_market_meta(resolve(cfg.config_dir, j["markets_file"].get<std::string>()));

    if (j.contains("missing_policy"))
        cfg.missing_policy = missing_policy_from_string(j["missing_policy"].get<std::string>());
    cfg.window_months = j.value("window_months", cfg.window_months);
    cfg.step_months = j.value("step_months", cfg.step_months);
    if (cfg.window_months < 1 || cfg.window_months > 600)
        throw ConfigError("window_months out of range 1..600");
    if (cfg.step_months < 1 || cfg.step_months > 600)
        throw ConfigError("step_months out of range 1..600");

    cfg.te.q = j.value("q", cfg.te.q);
    if (cfg.te.q < 2 || cfg.te.q > 64) throw ConfigError("q out of range 2..64");
    if (j.contains("scheme")) cfg.te.scheme = scheme_from_string(j["scheme"].get<std::string>());
    cfg.te.min_samples = j.value("min_samples", cfg.te.min_samples);
    if (cfg.te.min_samples < 2) throw ConfigError("min_samples must be >= 2");
    cfg.te.miller_madow = j.value("miller_madow", cfg.te.miller_madow);

    if (j.contains("lag_policy")) {
        const auto& lp = j["lag_policy"];
        if (lp.is_string()) {
            if (lp.get<std::string>() != "timezone")
                throw ConfigError("lag_policy string must be \"timezone\"");
        } else {
            const auto& tau = lp.at("tau");
            for (int s = 0; s < 3; ++s)
                for (int t = 0; t < 3; ++t) {
                    const int v = tau.at(s).at(t).get<int>();
                    if (v != 0 && v != 1) throw ConfigError("lag policy entries must be 0 or 1");
                    cfg.lag_policy.tau[s][t] = v;
                }
        }
    }

    cfg.trend_cutoff_months = j.value("trend_cutoff_months", cfg.trend_cutoff_months);
    if (cfg.trend_cutoff_months < 2) throw ConfigError("trend_cutoff_months must be >= 2");
    cfg.max_lead_months = j.value("max_lead_months", cfg.max_lead_months);
    if (cfg.max_lead_months < 0) throw ConfigError("max_lead_months must be >= 0");

    if (j.contains("influence_threshold") && !j["influence_threshold"].is_null())
        cfg.influence_threshold = j["influence_threshold"].get<double>();

    if (j.contains("pair_band") && !j["pair_band"].is_null()) {
        const auto& pb = j["pair_band"];
        if (pb.contains("mode") && pb["mode"].get<std::string>() == "keep-above") {
            cfg.pair_band.mode = PairBandConfig::Mode::keep_above;
            cfg.pair_band.k = pb.value("k", 1.0);
        } else {
            cfg.pair_band.mode = PairBandConfig::Mode::band_explicit;
            cfg.pair_band.lo = pb.at("lo").get<double>();
            cfg.pair_band.hi = pb.at("hi").get<double>();
            if (!(cfg.pair_band.lo <= cfg.pair_band.hi))
                throw ConfigError("pair_band.lo must be <= pair_band.hi");
        }
    }

    if (j.contains("crisis_calendar") && !j["crisis_calendar"].is_null())
        cfg.crisis_calendar = resolve(cfg.config_dir, j["crisis_calendar"].get<std::string>());
    if (j.contains("output_dir"))
        cfg.output_dir = resolve(cfg.config_dir, j["output_dir"].get<std::string>());
    cfg.dump_returns = j.value("dump_returns", cfg.dump_returns);

    if (j.contains("synth")) cfg.synth = parse_synth(j["synth"], cfg.markets);
    return cfg;
}

void validate_run_inputs(const RunConfig& cfg) {
    if (cfg.input.empty()) throw ConfigError("config has no 'input' price file");
    if (!std::filesystem::exists(cfg.input))
        throw ConfigError("input file does not exist: " + cfg.input.string());
    if (cfg.crisis_calendar && !std::filesystem::exists(*cfg.crisis_calendar))
        throw ConfigError("crisis calendar does not exist: " + cfg.crisis_calendar->string());
}

} // namespace temnet
