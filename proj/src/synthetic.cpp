#include "temnet/synthetic.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "temnet/error.hpp"
#include "temnet/parallel.hpp"

namespace temnet {

namespace {

constexpr int kBurnIn = 200;
constexpr int kDaysPerMonth = 21;

// Portable Gaussian draws: Box-Muller over mt19937_64 uniforms, so a seed
// pins the panel bytes on every platform.
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

    double operator()() {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    double uniform() { // [0, 1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    std::uint64_t next() { // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

Matrix combined_lag_matrix(const CouplingSpec& spec) {
    const std::size_t m = static_cast<std::size_t>(spec.m);
    Matrix a(m, m, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        a(r, r) = spec.self_ar[r];
        for (std::size_t c = 0; c < m; ++c) a(r, c) += spec.coupling(c, r); // transpose
    }
    return a;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (double v : a.data()) s += v * v;
    return std::sqrt(s);
}

Matrix square(const Matrix& a) {
    const std::size_t n = a.rows();
    Matrix out(n, n, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < n; ++k) {
            const double v = a(r, k);
            if (v == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) out(r, c) += v * a(k, c);
        }
    return out;
}

} // namespace

bool spectral_radius_below_one(const Matrix& a) {
    // rho(A) < 1 iff A^(2^k) -> 0. ||B|| < 1 at any squaring step certifies
    // rho < 1; unbounded growth certifies rho >= 1.
    Matrix b = a;
    for (int iter = 0; iter < 64; ++iter) {
        const double norm = frobenius_norm(b);
        if (!std::isfinite(norm) || norm > 1e12) return false;
        if (norm < 1.0) return true;
        b = square(b);
    }
    return false;
}

void validate_spec(const CouplingSpec& spec) {
    const std::size_t m = static_cast<std::size_t>(spec.m);
    if (spec.m < 1) throw ConfigError("coupling spec needs at least one market");
    if (spec.coupling.rows() != m || spec.coupling.cols() != m)
        throw ConfigError("coupling matrix must be M x M");
    if (spec.self_ar.size() != m || spec.noise_std.size() != m || spec.zones.size() != m)
        throw ConfigError("self_ar, noise_std and zones must each have M entries");
    if (!spec.ids.empty() && spec.ids.size() != m)
        throw ConfigError("ids must be empty or have M entries");
    bool any_noise = false;
    for (double s : spec.noise_std) {
        if (s < 0.0) throw ConfigError("noise_std must be non-negative");
        if (s > 0.0) any_noise = true;
    }
    if (!any_noise) throw ConfigError("at least one market needs positive noise_std");
    if (!spectral_radius_below_one(combined_lag_matrix(spec)))
        throw ConfigError("coupling spec is non-stationary (spectral radius >= 1)");
}

ReturnPanel generate_var_returns(const CouplingSpec& spec, int length, Date start_month) {
    validate_spec(spec);
    if (length < 100)
        throw ConfigError("synthetic panel length must be >= 100, got " +
                          std::to_string(length));

    const std::size_t m = static_cast<std::size_t>(spec.m);
    NormalSource normal(spec.seed);

    ReturnPanel rp;
    rp.markets.reserve(m);
    for (std::size_t i = 0; i < m; ++i) {
        MarketMeta mk;
        mk.id = spec.ids.empty() ? "S" + std::to_string(i + 1) : spec.ids[i];
        mk.name = mk.id;
        mk.zone = spec.zones[i];
        mk.order_index = static_cast<int>(i) + 1;
        rp.markets.push_back(std::move(mk));
    }
    rp.returns = Matrix(m, length);
    rp.dates.reserve(length);
    for (int t = 0; t < length; ++t) {
        Date d = add_months(start_month, t / kDaysPerMonth);
        d.day = t % kDaysPerMonth + 1;
        rp.dates.push_back(d);
    }

    std::vector<double> prev(m, 0.0), cur(m, 0.0);
    for (int t = 0; t < kBurnIn + length; ++t) {
        for (std::size_t n = 0; n < m; ++n) {
            double v = spec.self_ar[n] * prev[n];
            for (std::size_t src = 0; src < m; ++src) v += spec.coupling(src, n) * prev[src];
            v += spec.noise_std[n] * normal();
            cur[n] = v;
        }
        if (t >= kBurnIn)
            for (std::size_t n = 0; n < m; ++n) rp.returns(n, t - kBurnIn) = cur[n];
        std::swap(prev, cur);
    }
    return rp;
}

PricePanel prices_from_returns(const ReturnPanel& rp, double base_price) {
    if (!(base_price > 0.0)) throw ConfigError("base price must be positive");
    PricePanel panel;
    panel.markets = rp.markets;
    const std::size_t m = rp.market_count();
    const std::size_t t_count = rp.length();

    // One extra leading date so that load -> log-returns restores rp's axis.
    Date lead = rp.dates.front();
    if (lead.day > 1) {
        lead.day -= 1;
    } else {
        lead = add_months(lead, -1);
        lead.day = kDaysPerMonth;
    }
    panel.dates.reserve(t_count + 1);
    panel.dates.push_back(lead);
    panel.dates.insert(panel.dates.end(), rp.dates.begin(), rp.dates.end());

    panel.prices = Matrix(m, t_count + 1);
    for (std::size_t r = 0; r < m; ++r) {
        double p = base_price;
        panel.prices(r, 0) = p;
        for (std::size_t t = 0; t < t_count; ++t) {
            p *= std::exp(rp.returns(r, t));
            panel.prices(r, t + 1) = p;
        }
    }
    return panel;
}

DirectionalityReport directionality_benchmark(const CouplingSpec& spec, int trials, int length,
                                              const TEOptions& opts, int threads) {
    validate_spec(spec);
    if (trials < 1) throw ConfigError("trials must be >= 1");

    struct PairSlot {
        int source, target;
        bool planted;
    };
    std::vector<PairSlot> slots;
    for (int a = 1; a <= spec.m; ++a)
        for (int b = a + 1; b <= spec.m; ++b) {
            const double fwd = spec.coupling(a - 1, b - 1);
            const double rev = spec.coupling(b - 1, a - 1);
            if (fwd != 0.0 && rev == 0.0)
                slots.push_back({a, b, true});
            else if (rev != 0.0 && fwd == 0.0)
                slots.push_back({b, a, true});
            else if (fwd == 0.0 && rev == 0.0)
                slots.push_back({a, b, false});
            // coupled both ways: direction is not identifiable, skip
        }

    // Per-trial outcomes; aggregation below is order-independent.
    std::vector<std::vector<int>> wins(trials, std::vector<int>(slots.size(), 0));
    std::vector<std::vector<double>> gaps(trials, std::vector<double>(slots.size(), 0.0));

    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t trial) {
        CouplingSpec trial_spec = spec;
        trial_spec.seed = spec.seed + trial;
        const ReturnPanel rp = generate_var_returns(trial_spec, length);
        for (std::size_t k = 0; k < slots.size(); ++k) {
            const auto row = [&](int market_1based) {
                return std::span<const double>(
                    rp.returns.data().data() + (market_1based - 1) * rp.returns.cols(),
                    rp.returns.cols());
            };
            const double fwd = transfer_entropy(row(slots[k].source), row(slots[k].target), 1,
                                                opts);
            const double rev = transfer_entropy(row(slots[k].target), row(slots[k].source), 1,
                                                opts);
            wins[trial][k] = fwd > rev ? 1 : 0;
            gaps[trial][k] = fwd - rev;
        }
    });

    DirectionalityReport report;
    report.trials = trials;
    report.length = length;
    for (std::size_t k = 0; k < slots.size(); ++k) {
        EdgeStat st;
        st.source = slots[k].source;
        st.target = slots[k].target;
        st.trials = trials;
        double gap_sum = 0.0;
        for (int t = 0; t < trials; ++t) {
            st.wins += wins[t][k];
            gap_sum += gaps[t][k];
        }
        st.mean_gap = gap_sum / trials;
        (slots[k].planted ? report.planted : report.nulls).push_back(st);
    }
    return report;
}

} // namespace temnet
