#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "temnet/market.hpp"
#include "temnet/matrix.hpp"

namespace temnet {

enum class BinScheme { quantile, equal_width };

BinScheme scheme_from_string(const std::string& s);
std::string to_string(BinScheme s);

// Discretized series: symbols in 0..q-1, as long as the source series.
struct SymbolSeries {
    std::vector<int> symbols;
    int q = 0;
    BinScheme scheme = BinScheme::quantile;
};

// Maps reals to bins. Quantile scheme puts bin edges at the empirical k/q
// quantiles, with boundary values assigned to the lower bin; equal-width
// splits [min, max] into q intervals with max in bin q-1. A constant series
// maps to all zeros.
SymbolSeries discretize(std::span<const double> x, int q, BinScheme scheme);

// Joint counts over (y, conditioning tuple c); counts[y * nc + c].
struct ContingencyTable {
    std::size_t ny = 0;
    std::size_t nc = 0;
    std::vector<std::int64_t> counts;

    ContingencyTable() = default;
    ContingencyTable(std::size_t ny_, std::size_t nc_)
        : ny(ny_), nc(nc_), counts(ny_ * nc_, 0) {}

    std::int64_t& at(std::size_t y, std::size_t c) { return counts[y * nc + c]; }
    std::int64_t at(std::size_t y, std::size_t c) const { return counts[y * nc + c]; }
};

// Plug-in conditional Shannon entropy H(Y|C) = -sum P(y,c) ln P(y|c) in nats,
// with the 0 ln 0 = 0 convention. Throws InsufficientDataError on an all-zero
// table.
double conditional_entropy(const ContingencyTable& table);

// Immediate-influence lag per ordered zone pair. The session order within a
// calendar day is Asia -> Europe -> America: a later-opening market can react
// to an earlier one the same day (tau = 0), every other direction waits a day
// (tau = 1).
struct LagPolicy {
    // tau[source zone][target zone], zone order Asia, Europe, America.
    int tau[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 1, 1}};

    static LagPolicy timezone_default() { return LagPolicy{}; }

    int lag(Zone source, Zone target) const {
        return tau[static_cast<int>(source)][static_cast<int>(target)];
    }
};

int lag_for_pair(const MarketMeta& source, const MarketMeta& target, const LagPolicy& policy);

struct TEOptions {
    int q = 3;
    BinScheme scheme = BinScheme::quantile;
    int min_samples = 30;       // minimum aligned samples per pair
    bool miller_madow = false;  // optional bias correction, off by default
};

// Transfer entropy from symbol sequences, in nats:
//   TE = H(Y|Y1) - H(Y|Y1, Xtau)
// where Y1 is y lagged by one step and Xtau is x lagged by tau in {0, 1}.
// Both entropies use the same aligned sample set l = max(tau,1)+1 .. L.
double te_from_symbols(std::span<const int> sx, std::span<const int> sy, int tau, int q,
                       bool miller_madow = false);

// Discretizes both series and evaluates te_from_symbols. Throws
// InsufficientDataError when fewer than opts.min_samples aligned samples
// remain.
double transfer_entropy(std::span<const double> x, std::span<const double> y, int tau,
                        const TEOptions& opts = {});

// Directed influence matrix for one segment: values(m, n) is the transfer
// entropy from market m to market n. The diagonal and any cell with too few
// samples hold NaN.
struct TEMatrix {
    int segment_index = 0;
    Date end_date;
    Matrix values;

    std::size_t size() const { return values.rows(); }
    bool valid(std::size_t m, std::size_t n) const;
};

struct TEProvenance {
    TEOptions opts;
    LagPolicy policy;
    int window_months = 0;
    int step_months = 0;
    std::vector<std::string> market_ids;
    std::vector<Zone> zones;
};

struct TEMatrixSeries {
    std::vector<TEMatrix> matrices;
    TEProvenance provenance;

    std::size_t count() const { return matrices.size(); }
};

// TE for every ordered market pair within one segment. Cells that cannot be
// estimated are flagged NaN, never silently zeroed. `threads` = 0 picks the
// configured default.
TEMatrix te_matrix(const ReturnPanel& rp, const Segment& seg, const LagPolicy& policy,
                   const TEOptions& opts = {}, int threads = 1);

// One TEMatrix per segment, parallel over segments, order preserved.
TEMatrixSeries te_series(const SegmentSeries& segs, const LagPolicy& policy,
                         const TEOptions& opts = {}, int threads = 0);

// Versioned text serialization: a provenance header plus one record per
// segment (index, end date, M, row-major values; "-" marks the diagonal and
// "x" an invalid cell). Values round-trip exactly.
void save_te_series(const TEMatrixSeries& series, const std::filesystem::path& path);
TEMatrixSeries load_te_series(const std::filesystem::path& path);

} // namespace temnet
