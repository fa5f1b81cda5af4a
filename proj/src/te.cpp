#include "temnet/te.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "temnet/error.hpp"
#include "temnet/parallel.hpp"

namespace temnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Count of nonzero cells, for the optional Miller-Madow correction.
std::int64_t support_size(const std::vector<std::int64_t>& counts) {
    std::int64_t k = 0;
    for (auto c : counts)
        if (c > 0) ++k;
    return k;
}

} // namespace

BinScheme scheme_from_string(const std::string& s) {
    if (s == "quantile") return BinScheme::quantile;
    if (s == "equal-width" || s == "equal_width") return BinScheme::equal_width;
    throw ConfigError("unknown binning scheme '" + s + "'");
}

std::string to_string(BinScheme s) {
    return s == BinScheme::quantile ? "quantile" : "equal-width";
}

SymbolSeries discretize(std::span<const double> x, int q, BinScheme scheme) {
    if (q < 2) throw ConfigError("bin count must be >= 2, got " + std::to_string(q));
    const std::size_t n = x.size();
    if (n == 0) throw InsufficientDataError("cannot discretize an empty series");

    SymbolSeries out;
    out.q = q;
    out.scheme = scheme;
    out.symbols.resize(n);

    if (scheme == BinScheme::quantile) {
        if (n < static_cast<std::size_t>(q))
            throw InsufficientDataError("quantile binning needs at least q=" +
                                        std::to_string(q) + " values, got " +
                                        std::to_string(n));
        std::vector<double> sorted(x.begin(), x.end());
        std::sort(sorted.begin(), sorted.end());
        // Edge k sits at the k/q empirical quantile; boundary values fall in
        // the lower bin.
        std::vector<double> edges(q - 1);
        for (int k = 1; k < q; ++k) {
            const std::size_t idx = (static_cast<std::size_t>(k) * n + q - 1) / q; // ceil(kn/q)
            edges[k - 1] = sorted[idx - 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            int sym = q - 1;
            for (int k = 0; k < q - 1; ++k) {
                if (x[i] <= edges[k]) { sym = k; break; }
            }
            out.symbols[i] = sym;
        }
    } else {
        const auto [mn_it, mx_it] = std::minmax_element(x.begin(), x.end());
        const double mn = *mn_it, mx = *mx_it;
        if (mn == mx) return out; // constant: all zeros
        for (std::size_t i = 0; i < n; ++i) {
            int sym = static_cast<int>((x[i] - mn) / (mx - mn) * q);
            out.symbols[i] = std::clamp(sym, 0, q - 1);
        }
    }
    return out;
}

double conditional_entropy(const ContingencyTable& table) {
    std::int64_t total = 0;
    for (auto c : table.counts) {
        if (c < 0) throw DataError("negative count in contingency table");
        total += c;
    }
    if (total == 0) throw InsufficientDataError("all-zero contingency table");

    // H(Y|C) = -sum_{y,c} P(y,c) ln P(y|c); zero cells contribute nothing.
    double h = 0.0;
    for (std::size_t c = 0; c < table.nc; ++c) {
        std::int64_t n_c = 0;
        for (std::size_t y = 0; y < table.ny; ++y) n_c += table.at(y, c);
        if (n_c == 0) continue;
        for (std::size_t y = 0; y < table.ny; ++y) {
            const std::int64_t n_yc = table.at(y, c);
            if (n_yc == 0) continue;
            const double p_joint = static_cast<double>(n_yc) / static_cast<double>(total);
            const double p_cond = static_cast<double>(n_yc) / static_cast<double>(n_c);
            h -= p_joint * std::log(p_cond);
        }
    }
    return h;
}

int lag_for_pair(const MarketMeta& source, const MarketMeta& target, const LagPolicy& policy) {
    return policy.lag(source.zone, target.zone);
}

double te_from_symbols(std::span<const int> sx, std::span<const int> sy, int tau, int q,
                       bool miller_madow) {
    if (tau != 0 && tau != 1)
        throw ConfigError("immediate-influence lag must be 0 or 1, got " + std::to_string(tau));
    if (sx.size() != sy.size()) throw DataError("series length mismatch");
    const std::size_t len = sy.size();
    const std::size_t l0 = static_cast<std::size_t>(std::max(tau, 1));
    if (len <= l0) throw InsufficientDataError("series too short for lagged alignment");

    // Joint histogram over the aligned triples (y_l, y_{l-1}, x_{l-tau}).
    const std::size_t nq = static_cast<std::size_t>(q);
    ContingencyTable joint3(nq, nq * nq); // c = y1 * q + x
    ContingencyTable joint2(nq, nq);      // c = y1
    for (std::size_t l = l0; l < len; ++l) {
        const int y = sy[l];
        const int y1 = sy[l - 1];
        const int xt = sx[l - tau];
        ++joint3.at(y, static_cast<std::size_t>(y1) * nq + xt);
        ++joint2.at(y, y1);
    }

    const double h_y_given_y1 = conditional_entropy(joint2);
    const double h_y_given_y1x = conditional_entropy(joint3);
    double te = h_y_given_y1 - h_y_given_y1x;

    if (miller_madow) {
        // H(Y|C) = H(Y,C) - H(C); each Shannon term gets (K-1)/(2N).
        const double n = static_cast<double>(len - l0);
        std::vector<std::int64_t> y1_marg(nq, 0), y1x_marg(nq * nq, 0);
        for (std::size_t y = 0; y < nq; ++y)
            for (std::size_t c = 0; c < nq; ++c) y1_marg[c] += joint2.at(y, c);
        for (std::size_t y = 0; y < nq; ++y)
            for (std::size_t c = 0; c < nq * nq; ++c) y1x_marg[c] += joint3.at(y, c);
        const double corr2 =
            static_cast<double>(support_size(joint2.counts) - support_size(y1_marg)) / (2.0 * n);
        const double corr3 =
            static_cast<double>(support_size(joint3.counts) - support_size(y1x_marg)) / (2.0 * n);
        return te + corr2 - corr3;
    }
    // The plug-in estimate is non-negative in exact arithmetic; clear the
    // rounding dust so callers can rely on te >= 0.
    return te < 0.0 ? 0.0 : te;
}

double transfer_entropy(std::span<const double> x, std::span<const double> y, int tau,
                        const TEOptions& opts) {
    if (x.size() != y.size())
        throw DataError("transfer_entropy: series lengths differ (" + std::to_string(x.size()) +
                        " vs " + std::to_string(y.size()) + ")");
    if (tau != 0 && tau != 1)
        throw ConfigError("immediate-influence lag must be 0 or 1, got " + std::to_string(tau));
    const std::size_t len = x.size();
    const std::size_t lag = static_cast<std::size_t>(std::max(tau, 1));
    if (len < lag + static_cast<std::size_t>(opts.min_samples))
        throw InsufficientDataError("transfer_entropy: " +
                                    std::to_string(len > lag ? len - lag : 0) +
                                    " aligned samples, need " + std::to_string(opts.min_samples));
    const SymbolSeries sx = discretize(x, opts.q, opts.scheme);
    const SymbolSeries sy = discretize(y, opts.q, opts.scheme);
    return te_from_symbols(sx.symbols, sy.symbols, tau, opts.q, opts.miller_madow);
}

bool TEMatrix::valid(std::size_t m, std::size_t n) const {
    return m != n && !std::isnan(values(m, n));
}

TEMatrix te_matrix(const ReturnPanel& rp, const Segment& seg, const LagPolicy& policy,
                   const TEOptions& opts, int threads) {
    const std::size_t m_count = rp.market_count();
    TEMatrix out;
    out.segment_index = seg.index;
    out.end_date = seg.end_date;
    out.values = Matrix(m_count, m_count, kNaN);

    // Discretize each market's segment slice once; the symbols are shared by
    // every pair the market participates in.
    const std::size_t len = seg.length();
    std::vector<std::optional<SymbolSeries>> symbols(m_count);
    for (std::size_t m = 0; m < m_count; ++m) {
        if (len == 0) continue;
        std::span<const double> row(
            rp.returns.data().data() + m * rp.returns.cols() + seg.col_begin, len);
        try {
            symbols[m] = discretize(row, opts.q, opts.scheme);
        } catch (const InsufficientDataError&) {
            // row too short to bin; every cell touching it stays flagged
        }
    }

    parallel_for(m_count * m_count, threads, [&](std::size_t cell) {
        const std::size_t m = cell / m_count;
        const std::size_t n = cell % m_count;
        if (m == n || !symbols[m] || !symbols[n]) return;
        const int tau = lag_for_pair(rp.markets[m], rp.markets[n], policy);
        const std::size_t lag = static_cast<std::size_t>(std::max(tau, 1));
        if (len < lag + static_cast<std::size_t>(opts.min_samples)) return;
        out.values(m, n) =
            te_from_symbols(symbols[m]->symbols, symbols[n]->symbols, tau, opts.q,
                            opts.miller_madow);
    });
    return out;
}

TEMatrixSeries te_series(const SegmentSeries& segs, const LagPolicy& policy,
                         const TEOptions& opts, int threads) {
    if (!segs.panel) throw DataError("segment series is not bound to a return panel");
    if (segs.segments.empty()) throw InsufficientDataError("no segments to analyze");
    const ReturnPanel& rp = *segs.panel;

    TEMatrixSeries out;
    out.matrices.resize(segs.segments.size());
    out.provenance.opts = opts;
    out.provenance.policy = policy;
    out.provenance.window_months = segs.window_months;
    out.provenance.step_months = segs.step_months;
    for (const auto& mk : rp.markets) {
        out.provenance.market_ids.push_back(mk.id);
        out.provenance.zones.push_back(mk.zone);
    }

    parallel_for(segs.segments.size(), threads, [&](std::size_t i) {
        try {
            out.matrices[i] = te_matrix(rp, segs.segments[i], policy, opts, 1);
        } catch (const Error& e) {
            throw DataError("segment " + std::to_string(segs.segments[i].index) + ": " +
                            e.what());
        }
    });
    return out;
}

void save_te_series(const TEMatrixSeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());

    nlohmann::json prov;
    prov["q"] = series.provenance.opts.q;
    prov["scheme"] = to_string(series.provenance.opts.scheme);
    prov["min_samples"] = series.provenance.opts.min_samples;
    prov["miller_madow"] = series.provenance.opts.miller_madow;
    prov["window_months"] = series.provenance.window_months;
    prov["step_months"] = series.provenance.step_months;
    nlohmann::json tau = nlohmann::json::array();
    for (int s = 0; s < 3; ++s)
        tau.push_back({series.provenance.policy.tau[s][0], series.provenance.policy.tau[s][1],
                       series.provenance.policy.tau[s][2]});
    prov["lag_tau"] = tau;
    nlohmann::json mkts = nlohmann::json::array();
    for (std::size_t i = 0; i < series.provenance.market_ids.size(); ++i)
        mkts.push_back({{"id", series.provenance.market_ids[i]},
                        {"zone", to_string(series.provenance.zones[i])}});
    prov["markets"] = mkts;

    out << "temnet-te-series v1\n";
    out << "provenance " << prov.dump() << '\n';
    for (const auto& m : series.matrices) {
        const std::size_t sz = m.size();
        out << "segment " << m.segment_index << ' ' << to_string(m.end_date) << ' ' << sz
            << '\n';
        for (std::size_t r = 0; r < sz; ++r) {
            for (std::size_t c = 0; c < sz; ++c) {
                if (c) out << ' ';
                if (r == c)
                    out << '-';
                else if (std::isnan(m.values(r, c)))
                    out << 'x';
                else
                    out << format_value(m.values(r, c));
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

TEMatrixSeries load_te_series(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "temnet-te-series v1")
        throw DataError(path.string() + ": not a temnet te-series file");
    if (!std::getline(in, line) || line.rfind("provenance ", 0) != 0)
        throw DataError(path.string() + ": missing provenance header");

    TEMatrixSeries out;
    nlohmann::json prov;
    try {
        prov = nlohmann::json::parse(line.substr(11));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad provenance: " + e.what());
    }
    out.provenance.opts.q = prov.at("q").get<int>();
    out.provenance.opts.scheme = scheme_from_string(prov.at("scheme").get<std::string>());
    out.provenance.opts.min_samples = prov.at("min_samples").get<int>();
    out.provenance.opts.miller_madow = prov.at("miller_madow").get<bool>();
    out.provenance.window_months = prov.at("window_months").get<int>();
    out.provenance.step_months = prov.at("step_months").get<int>();
    for (int s = 0; s < 3; ++s)
        for (int t = 0; t < 3; ++t)
            out.provenance.policy.tau[s][t] = prov.at("lag_tau")[s][t].get<int>();
    for (const auto& mk : prov.at("markets")) {
        out.provenance.market_ids.push_back(mk.at("id").get<std::string>());
        out.provenance.zones.push_back(zone_from_string(mk.at("zone").get<std::string>()));
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream hdr(line);
        std::string word;
        int index = 0;
        std::string date_str;
        std::size_t sz = 0;
        hdr >> word >> index >> date_str >> sz;
        if (word != "segment" || !hdr)
            throw DataError(path.string() + ": malformed segment header '" + line + "'");
        TEMatrix m;
        m.segment_index = index;
        m.end_date = parse_date(date_str);
        m.values = Matrix(sz, sz, kNaN);
        for (std::size_t r = 0; r < sz; ++r) {
            if (!std::getline(in, line))
                throw DataError(path.string() + ": truncated matrix in segment " +
                                std::to_string(index));
            std::istringstream row(line);
            for (std::size_t c = 0; c < sz; ++c) {
                std::string tok;
                if (!(row >> tok))
                    throw DataError(path.string() + ": short row in segment " +
                                    std::to_string(index));
                if (tok == "-" || tok == "x") continue; // stays NaN
                m.values(r, c) = std::stod(tok);
            }
        }
        out.matrices.push_back(std::move(m));
    }
    return out;
}

} // namespace temnet
