#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "temnet/market.hpp"
#include "temnet/metrics.hpp"
#include "temnet/te.hpp"

namespace temnet {

// The ten-market panel this tool was built around, in canonical order.
std::vector<MarketMeta> canonical_markets();

// The pair-network retention rule: discard |C| inside a band (default
// mu +/- sigma), or keep only |C| >= mu + k*sigma.
struct PairBandConfig {
    enum class Mode { band_default, band_explicit, keep_above };
    Mode mode = Mode::band_default;
    double lo = 0.0;
    double hi = 0.0;
    double k = 1.0;
};

// Parameters of the synthetic VAR(1) panel generator.
struct SynthSection {
    int length = 756; // trading days (21 per synthetic month)
    std::uint64_t seed = 42;
    Date start_month{1992, 1, 1};
    double base_price = 100.0;
    std::vector<double> self_ar;   // per market, aligned with RunConfig::markets
    std::vector<double> noise_std;
    Matrix coupling;               // M x M, (source, target)
};

// One config file drives a run; all defaults mirror the reference setup
// (12-month window, 1-month step, q = 3 quantile bins, the canonical ten
// markets).
struct RunConfig {
    std::filesystem::path config_dir; // directory of the config file
    std::filesystem::path input;
    std::vector<MarketMeta> markets = canonical_markets();
    MissingPolicy missing_policy = MissingPolicy::intersect;
    int window_months = 12;
    int step_months = 1;
    TEOptions te;
    LagPolicy lag_policy;
    int trend_cutoff_months = 12;
    int max_lead_months = 24;
    std::optional<double> influence_threshold; // default: activity grand mean
    PairBandConfig pair_band;
    std::optional<std::filesystem::path> crisis_calendar;
    std::filesystem::path output_dir = "out";
    bool dump_returns = false;
    std::optional<SynthSection> synth;
};

// Parses and validates a JSON config. Relative paths are resolved against the
// config file's directory. Throws ConfigError on unknown values or knobs out
// of range.
RunConfig load_run_config(const std::filesystem::path& path);

// Checks that the files a `run` needs actually exist.
void validate_run_inputs(const RunConfig& cfg);

} // namespace temnet
