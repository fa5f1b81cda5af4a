#include "temnet/market.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace temnet {

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

bool is_missing_token(const std::string& t) {
    if (t.empty()) return true;
    static const char* tokens[] = {"NA", "NaN", "nan", "null", "NULL", "na"};
    for (const char* tok : tokens)
        if (t == tok) return true;
    return false;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

char detect_delimiter(const std::string& header) {
    for (char c : {',', ';', '\t'})
        if (header.find(c) != std::string::npos) return c;
    return ',';
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, delim)) out.push_back(trim(tok));
    if (!line.empty() && line.back() == delim) out.push_back("");
    return out;
}

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Zone zone_from_string(const std::string& s) {
    if (s == "Asia" || s == "asia") return Zone::Asia;
    if (s == "Europe" || s == "europe") return Zone::Europe;
    if (s == "America" || s == "america") return Zone::America;
    throw ConfigError("unknown zone '" + s + "' (expected Asia, Europe or America)");
}

std::string to_string(Zone z) {
    switch (z) {
        case Zone::Asia: return "Asia";
        case Zone::Europe: return "Europe";
        case Zone::America: return "America";
    }
    return "?";
}

MissingPolicy missing_policy_from_string(const std::string& s) {
    if (s == "intersect") return MissingPolicy::intersect;
    if (s == "forward-fill" || s == "forward_fill") return MissingPolicy::forward_fill;
    throw ConfigError("unknown missing-data policy '" + s + "'");
}

std::string to_string(MissingPolicy p) {
    return p == MissingPolicy::intersect ? "intersect" : "forward-fill";
}

void validate_markets(const std::vector<MarketMeta>& markets) {
    if (markets.empty()) throw ConfigError("market metadata is empty");
    std::set<std::string> ids;
    std::set<int> orders;
    const int m = static_cast<int>(markets.size());
    for (const auto& mk : markets) {
        if (mk.id.empty()) throw ConfigError("market with empty id");
        if (!ids.insert(mk.id).second)
            throw ConfigError("duplicate market id '" + mk.id + "'");
        if (mk.order_index < 1 || mk.order_index > m || !orders.insert(mk.order_index).second)
            throw ConfigError("order_index values must be a permutation of 1.." +
                              std::to_string(m));
    }
}

std::vector<MarketMeta> load_market_meta(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open market metadata file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    if (!j.contains("markets") || !j["markets"].is_array())
        throw ConfigError(path.string() + ": expected a top-level \"markets\" array");
    std::vector<MarketMeta> out;
    for (const auto& e : j["markets"]) {
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

PricePanel load_price_panel(const std::filesystem::path& source,
                            const std::vector<MarketMeta>& meta, MissingPolicy policy) {
    validate_markets(meta);
    std::ifstream in(source);
    if (!in) throw IoError("cannot open price file " + source.string());

    std::string header;
    if (!std::getline(in, header)) throw DataError(source.string() + ": empty file");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    const char delim = detect_delimiter(header);
    const auto cols = split(header, delim);
    if (cols.empty() || cols[0] != "date")
        throw ConfigError(source.string() + ": header must start with 'date'");

    // Map file columns onto markets; every market needs a column and every
    // non-date column must be a known market.
    std::vector<int> col_market(cols.size(), -1); // column -> index into meta
    std::vector<int> market_col(meta.size(), -1);
    for (std::size_t c = 1; c < cols.size(); ++c) {
        auto it = std::find_if(meta.begin(), meta.end(),
                               [&](const MarketMeta& mk) { return mk.id == cols[c]; });
        if (it == meta.end())
            throw ConfigError(source.string() + ": unknown market column '" + cols[c] + "'");
        col_market[c] = static_cast<int>(it - meta.begin());
        market_col[it - meta.begin()] = static_cast<int>(c);
    }
    for (std::size_t m = 0; m < meta.size(); ++m)
        if (market_col[m] < 0)
            throw ConfigError(source.string() + ": no column for market '" + meta[m].id + "'");

    const std::size_t m_count = meta.size();
    std::vector<Date> dates;
    std::vector<std::vector<double>> raw(m_count); // per market, aligned with dates
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto toks = split(line, delim);
        if (toks.size() != cols.size())
            throw DataError(source.string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(cols.size()) + " fields, got " +
                            std::to_string(toks.size()));
        Date d = parse_date(toks[0]);
        if (!dates.empty() && !(dates.back() < d))
            throw DataError(source.string() + ":" + std::to_string(line_no) +
                            ": dates not strictly increasing at " + toks[0]);
        dates.push_back(d);
        for (std::size_t c = 1; c < toks.size(); ++c) {
            const int m = col_market[c];
            if (is_missing_token(toks[c])) {
                raw[m].push_back(kMissing);
                continue;
            }
            double v = 0.0;
            try {
                v = std::stod(toks[c]);
            } catch (const std::exception&) {
                throw DataError(source.string() + ":" + std::to_string(line_no) +
                                ": unparseable value '" + toks[c] + "' in column " + cols[c]);
            }
            if (!(v > 0.0))
                throw DataError(source.string() + ":" + std::to_string(line_no) +
                                ": non-positive price " + toks[c] + " for market " + cols[c]);
            raw[m].push_back(v);
        }
    }
    if (dates.empty()) throw DataError(source.string() + ": no data rows");

    // Resolve missing cells.
    std::vector<std::size_t> keep;
    if (policy == MissingPolicy::intersect) {
        for (std::size_t t = 0; t < dates.size(); ++t) {
            bool all = true;
            for (std::size_t m = 0; m < m_count; ++m)
                if (std::isnan(raw[m][t])) { all = false; break; }
            if (all) keep.push_back(t);
        }
        if (keep.empty())
            throw DataError(source.string() + ": no date has values for all markets");
    } else {
        for (std::size_t m = 0; m < m_count; ++m) {
            double last = kMissing;
            for (std::size_t t = 0; t < dates.size(); ++t) {
                if (std::isnan(raw[m][t]))
                    raw[m][t] = last;
                else
                    last = raw[m][t];
            }
        }
        // Rows before a market's first observation stay missing and are dropped.
        for (std::size_t t = 0; t < dates.size(); ++t) {
            bool all = true;
            for (std::size_t m = 0; m < m_count; ++m)
                if (std::isnan(raw[m][t])) { all = false; break; }
            if (all) keep.push_back(t);
        }
        if (keep.empty())
            throw DataError(source.string() + ": no usable dates after forward fill");
    }

    // Canonical row order.
    std::vector<std::size_t> order(m_count);
    for (std::size_t m = 0; m < m_count; ++m) order[m] = m;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return meta[a].order_index < meta[b].order_index;
    });

    PricePanel panel;
    panel.dates.reserve(keep.size());
    for (std::size_t t : keep) panel.dates.push_back(dates[t]);
    panel.markets.reserve(m_count);
    panel.prices = Matrix(m_count, keep.size());
    for (std::size_t r = 0; r < m_count; ++r) {
        const std::size_t m = order[r];
        panel.markets.push_back(meta[m]);
        for (std::size_t c = 0; c < keep.size(); ++c) panel.prices(r, c) = raw[m][keep[c]];
    }
    return panel;
}

ReturnPanel compute_log_returns(const PricePanel& panel) {
    const std::size_t m = panel.market_count();
    const std::size_t n = panel.date_count();
    if (n < 2)
        throw InsufficientDataError("need at least two price dates to compute returns, got " +
                                    std::to_string(n));
    ReturnPanel rp;
    rp.markets = panel.markets;
    rp.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    rp.returns = Matrix(m, n - 1);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t t = 0; t + 1 < n; ++t)
            rp.returns(r, t) = std::log(panel.prices(r, t + 1)) - std::log(panel.prices(r, t));
    return rp;
}

SegmentSeries segment_by_calendar(const ReturnPanel& rp, int window_months, int step_months) {
    if (window_months < 1 || step_months < 1)
        throw ConfigError("window_months and step_months must be >= 1");
    if (rp.dates.empty()) throw InsufficientDataError("empty return panel");

    const int first_month = rp.dates.front().month_index();
    const int last_month = rp.dates.back().month_index();
    const int total_months = last_month - first_month + 1;
    if (total_months < window_months)
        throw InsufficientDataError("return panel spans " + std::to_string(total_months) +
                                    " months, shorter than one " +
                                    std::to_string(window_months) + "-month window");

    const int w = (total_months - window_months) / step_months + 1;

    // month_index of each return date, non-decreasing; window bounds found by
    // binary search.
    std::vector<int> month_of(rp.dates.size());
    for (std::size_t t = 0; t < rp.dates.size(); ++t) month_of[t] = rp.dates[t].month_index();

    SegmentSeries out;
    out.panel = &rp;
    out.window_months = window_months;
    out.step_months = step_months;
    out.segments.reserve(w);
    for (int s = 1; s <= w; ++s) {
        const int lo = first_month + (s - 1) * step_months;
        const int hi = lo + window_months - 1; // inclusive month range
        const auto begin_it = std::lower_bound(month_of.begin(), month_of.end(), lo);
        const auto end_it = std::upper_bound(month_of.begin(), month_of.end(), hi);
        Segment seg;
        seg.index = s;
        seg.col_begin = static_cast<std::size_t>(begin_it - month_of.begin());
        seg.col_end = static_cast<std::size_t>(end_it - month_of.begin());
        if (seg.col_begin < seg.col_end) {
            seg.start_date = rp.dates[seg.col_begin];
            seg.end_date = rp.dates[seg.col_end - 1];
        }
        out.segments.push_back(seg);
    }
    return out;
}

void write_returns_csv(const ReturnPanel& rp, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date";
    for (const auto& mk : rp.markets) out << ',' << mk.id;
    out << '\n';
    for (std::size_t t = 0; t < rp.length(); ++t) {
        out << to_string(rp.dates[t]);
        for (std::size_t m = 0; m < rp.market_count(); ++m)
            out << ',' << format_value(rp.returns(m, t));
        out << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

void write_prices_csv(const PricePanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "date";
    for (const auto& mk : panel.markets) out << ',' << mk.id;
    out << '\n';
    for (std::size_t t = 0; t < panel.date_count(); ++t) {
        out << to_string(panel.dates[t]);
        for (std::size_t m = 0; m < panel.market_count(); ++m)
            out << ',' << format_value(panel.prices(m, t));
        out << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

} // namespace temnet
