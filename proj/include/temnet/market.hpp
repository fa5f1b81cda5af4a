#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "temnet/date.hpp"
#include "temnet/error.hpp"
#include "temnet/matrix.hpp"

namespace temnet {

// Trading-session group of a market. Sessions open in this order within one
// calendar day: Asia, then Europe, then America.
enum class Zone { Asia, Europe, America };

Zone zone_from_string(const std::string& s);
std::string to_string(Zone z);

struct MarketMeta {
    std::string id;      // short symbol, e.g. "DJI"
    std::string name;    // display name
    Zone zone = Zone::Asia;
    int order_index = 0; // 1-based position in the canonical ordering
};

// Checks id uniqueness, order_index permutation of 1..M. Throws ConfigError.
void validate_markets(const std::vector<MarketMeta>& markets);

// Reads market metadata from a JSON file: {"markets":[{"id","name","zone","order"}]}.
std::vector<MarketMeta> load_market_meta(const std::filesystem::path& path);

// M aligned daily index series. Row m corresponds to markets[m]; dates are
// strictly increasing and shared by all rows; all prices are positive.
struct PricePanel {
    std::vector<MarketMeta> markets;
    std::vector<Date> dates;  // length T+1
    Matrix prices;            // M x (T+1)

    std::size_t market_count() const { return markets.size(); }
    std::size_t date_count() const { return dates.size(); }
};

// Log-return panel. dates[t] is the date of the LATER price in each difference.
struct ReturnPanel {
    std::vector<MarketMeta> markets;
    std::vector<Date> dates;  // length T
    Matrix returns;           // M x T

    std::size_t market_count() const { return markets.size(); }
    std::size_t length() const { return dates.size(); }
};

// One calendar window over the return panel: columns [col_begin, col_end).
struct Segment {
    int index = 0; // 1-based s
    Date start_date;
    Date end_date;
    std::size_t col_begin = 0;
    std::size_t col_end = 0;

    std::size_t length() const { return col_end - col_begin; }
};

// Windows of `window_months` calendar months stepped by `step_months`.
// Holds views into the panel passed to segment_by_calendar; that panel must
// outlive the series.
struct SegmentSeries {
    const ReturnPanel* panel = nullptr;
    int window_months = 12;
    int step_months = 1;
    std::vector<Segment> segments;

    std::size_t count() const { return segments.size(); }
};

enum class MissingPolicy {
    intersect,    // keep only dates where every market has a value
    forward_fill, // union of dates, last observation carried forward
};

MissingPolicy missing_policy_from_string(const std::string& s);
std::string to_string(MissingPolicy p);

// Loads a delimiter-separated file with header `date,<id1>,...,<idM>` into a
// panel whose rows follow the canonical order_index ordering. Empty cells and
// NA/NaN/null tokens count as missing and are resolved by `policy`.
PricePanel load_price_panel(const std::filesystem::path& source,
                            const std::vector<MarketMeta>& meta,
                            MissingPolicy policy = MissingPolicy::intersect);

// r[m][t] = ln P[m][t+1] - ln P[m][t].
ReturnPanel compute_log_returns(const PricePanel& panel);

// Slices the return panel into calendar windows. Segment s covers all trading
// days whose month falls in the s-th window; W = (total_months - L)/step + 1.
SegmentSeries segment_by_calendar(const ReturnPanel& rp, int window_months = 12,
                                  int step_months = 1);

void write_returns_csv(const ReturnPanel& rp, const std::filesystem::path& path);
void write_prices_csv(const PricePanel& panel, const std::filesystem::path& path);

} // namespace temnet
