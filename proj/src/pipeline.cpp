#include "temnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "temnet/error.hpp"
#include "temnet/metrics.hpp"
#include "temnet/netgraph.hpp"
#include "temnet/parallel.hpp"
#include "temnet/synthetic.hpp"

namespace temnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex_of_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for checksumming");
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string bytes = ss.str();
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
    return buf;
}

namespace {

[[noreturn]] void rethrow_with_stage(const std::string& stage) {
    try {
        throw;
    } catch (const ConfigError& e) {
        throw ConfigError("stage " + stage + ": " + e.what());
    } catch (const InsufficientDataError& e) {
        throw InsufficientDataError("stage " + stage + ": " + e.what());
    } catch (const UndefinedMetricError& e) {
        throw UndefinedMetricError("stage " + stage + ": " + e.what());
    } catch (const DataError& e) {
        throw DataError("stage " + stage + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError("stage " + stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error("stage " + stage + ": " + e.what());
    }
}

json config_echo(const RunConfig& cfg) {
    json markets = json::array();
    for (const auto& mk : cfg.markets)
        markets.push_back({{"id", mk.id},
                           {"name", mk.name},
                           {"zone", to_string(mk.zone)},
                           {"order", mk.order_index}});
    json tau = json::array();
    for (int s = 0; s < 3; ++s)
        tau.push_back({cfg.lag_policy.tau[s][0], cfg.lag_policy.tau[s][1],
                       cfg.lag_policy.tau[s][2]});
    json pb;
    switch (cfg.pair_band.mode) {
        case PairBandConfig::Mode::band_default: pb = "mu +/- sigma"; break;
        case PairBandConfig::Mode::band_explicit:
            pb = {{"lo", cfg.pair_band.lo}, {"hi", cfg.pair_band.hi}};
            break;
        case PairBandConfig::Mode::keep_above: pb = {{"mode", "keep-above"}, {"k", cfg.pair_band.k}}; break;
    }
    json j = {{"input", cfg.input.string()},
              {"markets", markets},
              {"missing_policy", to_string(cfg.missing_policy)},
              {"window_months", cfg.window_months},
              {"step_months", cfg.step_months},
              {"q", cfg.te.q},
              {"scheme", to_string(cfg.te.scheme)},
              {"min_samples", cfg.te.min_samples},
              {"miller_madow", cfg.te.miller_madow},
              {"lag_tau", tau},
              {"trend_cutoff_months", cfg.trend_cutoff_months},
              {"max_lead_months", cfg.max_lead_months},
              {"pair_band", pb},
              {"dump_returns", cfg.dump_returns}};
    if (cfg.influence_threshold) j["influence_threshold"] = *cfg.influence_threshold;
    if (cfg.crisis_calendar) j["crisis_calendar"] = cfg.crisis_calendar->string();
    return j;
}

class ArtifactLog {
public:
    explicit ArtifactLog(fs::path dir) : dir_(std::move(dir)) {}

    void add(const std::string& rel) {
        Artifact a;
        a.path = rel;
        a.bytes = fs::file_size(dir_ / rel);
        a.checksum = fnv1a64_hex_of_file(dir_ / rel);
        artifacts_.push_back(std::move(a));
    }

    std::vector<Artifact> sorted() const {
        auto out = artifacts_;
        std::sort(out.begin(), out.end(),
                  [](const Artifact& a, const Artifact& b) { return a.path < b.path; });
        return out;
    }

private:
    fs::path dir_;
    std::vector<Artifact> artifacts_;
};

void write_manifest(const fs::path& dir, const RunConfig& cfg, const ArtifactLog& log,
                    const std::string& failed_stage) {
    json j;
    j["tool"] = "temnet";
    j["format"] = 1;
    j["status"] = failed_stage.empty() ? "ok" : "failed";
    if (!failed_stage.empty()) j["failed_stage"] = failed_stage;
    j["config"] = config_echo(cfg);
    json arts = json::array();
    for (const auto& a : log.sorted())
        arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"checksum", a.checksum}});
    j["artifacts"] = arts;
    std::ofstream out(dir / "manifest.json");
    if (!out) throw IoError("cannot write manifest in " + dir.string());
    out << j.dump(2) << '\n';
}

void write_activity_csv(const std::vector<MarketMeta>& markets, const Matrix& m,
                        const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "source";
    for (const auto& mk : markets) out << ',' << mk.id;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << markets[r].id;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (std::isnan(m(r, c))) {
                out << ",nan";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
                out << ',' << buf;
            }
        }
        out << '\n';
    }
}

void write_pair_corr_csv(const PairCorrMatrix& corr, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "pair";
    for (const auto& p : corr.pairs) out << ',' << p.id;
    out << '\n';
    char buf[32];
    for (std::size_t r = 0; r < corr.values.rows(); ++r) {
        out << corr.pairs[r].id;
        for (std::size_t c = 0; c < corr.values.cols(); ++c) {
            if (std::isnan(corr.values(r, c))) {
                out << ",nan";
            } else {
                std::snprintf(buf, sizeof buf, "%.17g", corr.values(r, c));
                out << ',' << buf;
            }
        }
        out << '\n';
    }
}

void write_peaks_json(const PeakReport& report, const fs::path& path) {
    json j;
    j["max_lead_months"] = report.max_lead_months;
    json peaks = json::array();
    for (const auto& p : report.peaks)
        peaks.push_back({{"date", to_string(p.date)}, {"value", p.value}});
    j["peaks"] = peaks;
    json matches = json::array();
    for (const auto& m : report.matches)
        matches.push_back({{"event", m.event_id},
                           {"event_start", to_string(m.event_start)},
                           {"peak", to_string(m.peak_date)},
                           {"lead_months", m.lead_months}});
    j["matches"] = matches;
    json up = json::array();
    for (const auto& d : report.unmatched_peaks) up.push_back(to_string(d));
    j["unmatched_peaks"] = up;
    j["unmatched_events"] = report.unmatched_events;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

struct PooledTE {
    std::vector<double> values;
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
};

PooledTE pool_te(const TEMatrixSeries& series) {
    PooledTE p;
    for (const auto& m : series.matrices) {
        const std::size_t sz = m.size();
        for (std::size_t r = 0; r < sz; ++r)
            for (std::size_t c = 0; c < sz; ++c)
                if (m.valid(r, c)) p.values.push_back(m.values(r, c));
    }
    if (p.values.empty()) return p;
    double sum = 0.0;
    for (double v : p.values) sum += v;
    p.mean = sum / p.values.size();
    double ss = 0.0;
    for (double v : p.values) ss += (v - p.mean) * (v - p.mean);
    p.stddev = std::sqrt(ss / p.values.size());
    const auto [mn, mx] = std::minmax_element(p.values.begin(), p.values.end());
    p.min = *mn;
    p.max = *mx;
    return p;
}

void write_te_histogram(const PooledTE& pooled, const fs::path& path, int bins = 40) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "bin_lo,bin_hi,count\n";
    if (pooled.values.empty()) return;
    const double lo = pooled.min, hi = pooled.max;
    const double width = (hi - lo) / bins;
    std::vector<std::size_t> counts(bins, 0);
    for (double v : pooled.values) {
        int b = width > 0.0 ? static_cast<int>((v - lo) / width) : 0;
        counts[std::clamp(b, 0, bins - 1)] += 1;
    }
    char buf[80];
    for (int b = 0; b < bins; ++b) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu", lo + b * width, lo + (b + 1) * width,
                      counts[b]);
        out << buf << '\n';
    }
}

} // namespace

RunResult run_pipeline(const RunConfig& cfg, bool quiet) {
    const fs::path dir = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());

    ArtifactLog log(dir);
    std::string stage = "validate-config";
    const auto note = [&](const std::string& msg) {
        if (!quiet) std::cout << "[temnet] " << msg << '\n';
    };

    try {
        validate_run_inputs(cfg);

        stage = "load-markets";
        CrisisCalendar calendar;
        if (cfg.crisis_calendar) calendar = load_crisis_calendar(*cfg.crisis_calendar);

        stage = "load-prices";
        note("loading " + cfg.input.string());
        const PricePanel panel = load_price_panel(cfg.input, cfg.markets, cfg.missing_policy);
        note("panel: " + std::to_string(panel.market_count()) + " markets x " +
             std::to_string(panel.date_count()) + " dates");

        stage = "log-returns";
        const ReturnPanel returns = compute_log_returns(panel);
        if (cfg.dump_returns) {
            write_returns_csv(returns, dir / "returns.csv");
            log.add("returns.csv");
        }

        stage = "segmentation";
        const SegmentSeries segments =
            segment_by_calendar(returns, cfg.window_months, cfg.step_months);
        note("segments: " + std::to_string(segments.count()));

        stage = "te-series";
        const TEMatrixSeries series = te_series(segments, cfg.lag_policy, cfg.te);
        save_te_series(series, dir / "te_series.txt");
        log.add("te_series.txt");

        stage = "metrics";
        const MetricSeries avi = avi_series(series);
        const MetricSeries asi = asi_series(series);
        write_metric_csv(avi, dir / "avi.csv");
        log.add("avi.csv");
        write_metric_csv(asi, dir / "asi.csv");
        log.add("asi.csv");

        stage = "trend";
        const MetricSeries trend = lowpass_trend(avi, cfg.trend_cutoff_months);
        write_metric_csv(trend, dir / "avi_trend.csv");
        log.add("avi_trend.csv");

        stage = "peaks";
        const PeakReport peaks = detect_peaks(trend, calendar, cfg.max_lead_months);
        write_peaks_json(peaks, dir / "peaks.json");
        log.add("peaks.json");

        stage = "activity";
        const ActivityStats act = activity(series);
        write_activity_csv(cfg.markets, act.a_str, dir / "activity_str.csv");
        log.add("activity_str.csv");
        write_activity_csv(cfg.markets, act.a_flu, dir / "activity_flu.csv");
        log.add("activity_flu.csv");

        stage = "influence-network";
        const InfluenceGraph inet =
            influential_network(act, cfg.markets, cfg.influence_threshold);
        export_graph(inet, GraphFormat::json, dir / "influential_network.json");
        log.add("influential_network.json");
        export_graph(inet, GraphFormat::dot, dir / "influential_network.dot");
        log.add("influential_network.dot");
        export_graph(inet, GraphFormat::graphml, dir / "influential_network.graphml");
        log.add("influential_network.graphml");

        stage = "pair-correlations";
        const PairCorrMatrix corr = pair_correlations(series);
        write_pair_corr_csv(corr, dir / "pair_correlations.csv");
        log.add("pair_correlations.csv");

        stage = "pair-network";
        PairGraph pnet;
        switch (cfg.pair_band.mode) {
            case PairBandConfig::Mode::band_default:
                pnet = influential_pair_network(corr, cfg.markets);
                break;
            case PairBandConfig::Mode::band_explicit:
                pnet = influential_pair_network(corr, cfg.markets,
                                                CorrBand{cfg.pair_band.lo, cfg.pair_band.hi});
                break;
            case PairBandConfig::Mode::keep_above:
                pnet = influential_pair_network_above(corr, cfg.markets, cfg.pair_band.k);
                break;
        }
        export_graph(pnet, GraphFormat::json, dir / "pair_network.json");
        log.add("pair_network.json");
        export_graph(pnet, GraphFormat::dot, dir / "pair_network.dot");
        log.add("pair_network.dot");
        export_graph(pnet, GraphFormat::graphml, dir / "pair_network.graphml");
        log.add("pair_network.graphml");

        stage = "summary";
        const PooledTE pooled = pool_te(series);
        write_te_histogram(pooled, dir / "te_histogram.csv");
        log.add("te_histogram.csv");

        json summary;
        summary["markets"] = cfg.markets.size();
        summary["segments"] = series.count();
        summary["te_pooled"] = {{"count", pooled.values.size()},
                                {"mean", pooled.mean},
                                {"std", pooled.stddev},
                                {"min", pooled.min},
                                {"max", pooled.max}};
        const auto [avi_mn, avi_mx] = std::minmax_element(avi.values.begin(), avi.values.end());
        const auto [asi_mn, asi_mx] = std::minmax_element(asi.values.begin(), asi.values.end());
        summary["avi"] = {{"min", *avi_mn}, {"max", *avi_mx}};
        summary["asi"] = {{"min", *asi_mn}, {"max", *asi_mx}};
        const double r = pearson(avi.values, asi.values);
        if (std::isnan(r))
            summary["avi_asi_pearson"] = nullptr;
        else
            summary["avi_asi_pearson"] = r;
        summary["pair_corr"] = {{"mu", corr.mu}, {"sigma", corr.sigma}};
        summary["influence_edges"] = inet.edges.size();
        summary["influence_threshold"] = inet.threshold;
        std::map<std::string, int> kinds = {{"mutual", 0},
                                            {"europe-america", 0},
                                            {"shared-market", 0},
                                            {"other", 0}};
        int low_band = 0;
        for (const auto& e : pnet.edges) {
            kinds[e.tags.front()] += 1;
            if (std::find(e.tags.begin(), e.tags.end(), "low-band") != e.tags.end()) ++low_band;
        }
        summary["strong_links"] = {{"total", pnet.edges.size()},
                                   {"mutual", kinds["mutual"]},
                                   {"europe-america", kinds["europe-america"]},
                                   {"shared-market", kinds["shared-market"]},
                                   {"other", kinds["other"]},
                                   {"low-band", low_band}};
        json leads = json::array();
        for (const auto& m : peaks.matches)
            leads.push_back({{"event", m.event_id},
                             {"event_start", to_string(m.event_start)},
                             {"peak", to_string(m.peak_date)},
                             {"lead_months", m.lead_months}});
        summary["peak_leads"] = leads;
        summary["unmatched_events"] = peaks.unmatched_events;
        summary["trend_cutoff_months"] = cfg.trend_cutoff_months;
        {
            std::ofstream out(dir / "summary.json");
            if (!out) throw IoError("cannot write summary.json");
            out << summary.dump(2) << '\n';
        }
        log.add("summary.json");

        stage = "manifest";
        write_manifest(dir, cfg, log, "");
    } catch (...) {
        write_manifest(dir, cfg, log, stage);
        rethrow_with_stage(stage);
    }

    RunResult result;
    result.out_dir = dir;
    result.artifacts = log.sorted();
    return result;
}

fs::path synth_panel(const RunConfig& cfg, const fs::path& out_file) {
    if (!cfg.synth) throw ConfigError("config has no 'synth' section");
    const SynthSection& s = *cfg.synth;

    CouplingSpec spec;
    spec.m = static_cast<int>(cfg.markets.size());
    spec.coupling = s.coupling;
    spec.self_ar = s.self_ar;
    spec.noise_std = s.noise_std;
    spec.seed = s.seed;
    for (const auto& mk : cfg.markets) {
        spec.zones.push_back(mk.zone);
        spec.ids.push_back(mk.id);
    }

    const ReturnPanel rp = generate_var_returns(spec, s.length, s.start_month);
    const PricePanel panel = prices_from_returns(rp, s.base_price);
    const fs::path path = out_file.empty() ? cfg.config_dir / "synthetic_prices.csv" : out_file;
    write_prices_csv(panel, path);
    return path;
}

std::string report_text(const fs::path& run_dir) {
    const fs::path manifest_path = run_dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw ConfigError("no manifest.json in " + run_dir.string() + "; not a run directory");
    json manifest;
    {
        std::ifstream in(manifest_path);
        in >> manifest;
    }

    std::ostringstream out;
    out << "run directory: " << run_dir.string() << '\n';
    out << "status: " << manifest.value("status", "?") << '\n';
    if (manifest.contains("failed_stage"))
        out << "failed stage: " << manifest["failed_stage"].get<std::string>() << '\n';
    out << "artifacts: " << manifest["artifacts"].size() << '\n';

    const fs::path summary_path = run_dir / "summary.json";
    if (!fs::exists(summary_path)) return out.str();
    json s;
    {
        std::ifstream in(summary_path);
        in >> s;
    }

    char buf[160];
    out << '\n';
    out << "markets: " << s["markets"].get<int>() << ", segments: " << s["segments"].get<int>()
        << '\n';
    const auto& tp = s["te_pooled"];
    std::snprintf(buf, sizeof buf, "pooled TE: mean %.4f, std %.4f (%zu values)",
                  tp["mean"].get<double>(), tp["std"].get<double>(),
                  tp["count"].get<std::size_t>());
    out << buf << '\n';
    std::snprintf(buf, sizeof buf, "AVI range: [%.4f, %.4f]", s["avi"]["min"].get<double>(),
                  s["avi"]["max"].get<double>());
    out << buf << '\n';
    std::snprintf(buf, sizeof buf, "ASI range: [%.4f, %.4f]", s["asi"]["min"].get<double>(),
                  s["asi"]["max"].get<double>());
    out << buf << '\n';
    if (s["avi_asi_pearson"].is_number()) {
        std::snprintf(buf, sizeof buf, "corr(AVI, ASI): %.4f", s["avi_asi_pearson"].get<double>());
        out << buf << '\n';
    }
    std::snprintf(buf, sizeof buf, "pair correlations: mu %.4f, sigma %.4f",
                  s["pair_corr"]["mu"].get<double>(), s["pair_corr"]["sigma"].get<double>());
    out << buf << '\n';
    out << "influence edges: " << s["influence_edges"].get<int>() << " (threshold ";
    std::snprintf(buf, sizeof buf, "%.6f)", s["influence_threshold"].get<double>());
    out << buf << '\n';

    const fs::path inet_path = run_dir / "influential_network.json";
    if (fs::exists(inet_path)) {
        json inet;
        std::ifstream in(inet_path);
        in >> inet;
        auto edges = inet["edges"];
        std::sort(edges.begin(), edges.end(), [](const json& a, const json& b) {
            return a["weight"].get<double>() > b["weight"].get<double>();
        });
        const std::size_t top = std::min<std::size_t>(5, edges.size());
        if (top > 0) {
            out << "top influence edges:\n";
            for (std::size_t i = 0; i < top; ++i) {
                std::snprintf(buf, sizeof buf, "  %-4s -> %-4s  %.6f",
                              edges[i]["source"].get<std::string>().c_str(),
                              edges[i]["target"].get<std::string>().c_str(),
                              edges[i]["weight"].get<double>());
                out << buf << '\n';
            }
        }
    }

    const auto& links = s["strong_links"];
    out << "strong links: " << links["total"].get<int>();
    out << " (mutual " << links["mutual"].get<int>() << ", europe-america "
        << links["europe-america"].get<int>() << ", shared-market "
        << links["shared-market"].get<int>() << ", other " << links["other"].get<int>() << ")\n";

    out << "peak leads:\n";
    if (s["peak_leads"].empty()) out << "  (none)\n";
    for (const auto& m : s["peak_leads"]) {
        std::snprintf(buf, sizeof buf, "  %-4s start %s  peak %s  lead %2d months",
                      m["event"].get<std::string>().c_str(),
                      m["event_start"].get<std::string>().c_str(),
                      m["peak"].get<std::string>().c_str(), m["lead_months"].get<int>());
        out << buf << '\n';
    }
    if (!s["unmatched_events"].empty()) {
        out << "unmatched events:";
        for (const auto& e : s["unmatched_events"]) out << ' ' << e.get<std::string>();
        out << '\n';
    }
    return out.str();
}

} // namespace temnet
