#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "temnet/market.hpp"
#include "temnet/te.hpp"

namespace temnet {

// VAR(1) process with planted lag-1 causal structure:
//   r_t[n] = self_ar[n] * r_{t-1}[n] + sum_m coupling(m, n) * r_{t-1}[m] + eps_t[n]
// coupling(m, n) is the strength of market m's influence on market n.
struct CouplingSpec {
    int m = 0;
    Matrix coupling;                 // M x M, zero diagonal expected
    std::vector<double> self_ar;     // per-market AR(1) coefficient
    std::vector<double> noise_std;   // per-market innovation std, >= 0, not all zero
    std::vector<Zone> zones;
    std::vector<std::string> ids;    // optional; "S1".."SM" when empty
    std::uint64_t seed = 0;
};

// Validates shapes and stationarity (spectral radius of the combined lag
// matrix < 1). Throws ConfigError.
void validate_spec(const CouplingSpec& spec);

// True iff every eigenvalue of `a` lies strictly inside the unit circle,
// decided by iterated squaring of the matrix.
bool spectral_radius_below_one(const Matrix& a);

// Simulates the VAR, discards a 200-step burn-in and attaches a synthetic
// monthly calendar of 21 trading days per month starting at `start_month`.
// Byte-identical output for a fixed seed.
ReturnPanel generate_var_returns(const CouplingSpec& spec, int length,
                                 Date start_month = Date{1992, 1, 1});

// Exponentiates returns into a positive price panel (one extra leading date).
PricePanel prices_from_returns(const ReturnPanel& rp, double base_price = 100.0);

struct EdgeStat {
    int source = 0; // 1-based market index
    int target = 0;
    int wins = 0;   // trials where TE(source->target) > TE(target->source)
    int trials = 0;
    double mean_gap = 0.0; // mean TE(source->target) - TE(target->source)

    double rate() const { return trials > 0 ? double(wins) / trials : 0.0; }
};

struct DirectionalityReport {
    std::vector<EdgeStat> planted; // pairs coupled one way only
    std::vector<EdgeStat> nulls;   // pairs coupled neither way
    int trials = 0;
    int length = 0;
};

// Repeated-trial benchmark of directed-edge recovery with tau = 1. Trial t
// uses seed spec.seed + t; trials run as an independent parallel map.
DirectionalityReport directionality_benchmark(const CouplingSpec& spec, int trials,
                                              int length, const TEOptions& opts = {},
                                              int threads = 0);

} // namespace temnet
