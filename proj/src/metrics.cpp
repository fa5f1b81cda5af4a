#include "temnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <set>

#include <json.hpp>

#include "temnet/error.hpp"

namespace temnet {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<Date> end_dates_of(const TEMatrixSeries& series) {
    std::vector<Date> out;
    out.reserve(series.count());
    for (const auto& m : series.matrices) out.push_back(m.end_date);
    return out;
}

} // namespace

double average_influence(const TEMatrix& m) {
    const std::size_t sz = m.size();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < sz; ++r)
        for (std::size_t c = 0; c < sz; ++c)
            if (m.valid(r, c)) {
                sum += m.values(r, c);
                ++count;
            }
    if (count == 0)
        throw InsufficientDataError("average_influence: no valid cells in segment " +
                                    std::to_string(m.segment_index));
    return sum / static_cast<double>(count);
}

double asymmetry(const TEMatrix& m) {
    const std::size_t sz = m.size();
    double num = 0.0, den = 0.0;
    for (std::size_t r = 1; r < sz; ++r)
        for (std::size_t c = 0; c < r; ++c) {
            if (!m.valid(r, c) || !m.valid(c, r)) continue;
            const double a = m.values(r, c), b = m.values(c, r);
            num += std::abs(a - b);
            den += a + b;
        }
    if (den == 0.0)
        throw UndefinedMetricError("asymmetry: zero denominator in segment " +
                                   std::to_string(m.segment_index));
    return num / den;
}

MetricSeries avi_series(const TEMatrixSeries& series) {
    MetricSeries out;
    out.kind = MetricKind::avi;
    out.end_dates = end_dates_of(series);
    out.values.reserve(series.count());
    for (const auto& m : series.matrices) out.values.push_back(average_influence(m));
    return out;
}

MetricSeries asi_series(const TEMatrixSeries& series) {
    MetricSeries out;
    out.kind = MetricKind::asi;
    out.end_dates = end_dates_of(series);
    out.values.reserve(series.count());
    for (const auto& m : series.matrices) out.values.push_back(asymmetry(m));
    return out;
}

ActivityStats activity(const TEMatrixSeries& series) {
    const std::size_t w = series.count();
    if (w == 0) throw InsufficientDataError("activity: empty TE series");
    const std::size_t sz = series.matrices.front().size();
    for (const auto& m : series.matrices)
        if (m.size() != sz) throw DataError("activity: inconsistent matrix sizes");

    ActivityStats out;
    out.a_str = Matrix(sz, sz, kNaN);
    out.a_flu = Matrix(sz, sz, kNaN);
    for (std::size_t r = 0; r < sz; ++r)
        for (std::size_t c = 0; c < sz; ++c) {
            if (r == c) continue;
            double sum = 0.0;
            std::size_t count = 0;
            for (const auto& m : series.matrices)
                if (m.valid(r, c)) {
                    sum += m.values(r, c);
                    ++count;
                }
            if (count == 0) continue;
            const double mean = sum / static_cast<double>(count);
            out.a_str(r, c) = mean;
            if (w < 2) continue; // fluctuation undefined for a single segment
            double ss = 0.0;
            for (const auto& m : series.matrices)
                if (m.valid(r, c)) {
                    const double d = m.values(r, c) - mean;
                    ss += d * d;
                }
            out.a_flu(r, c) = std::sqrt(ss / static_cast<double>(count));
        }

    double gsum = 0.0;
    std::size_t gcount = 0;
    for (std::size_t r = 0; r < sz; ++r)
        for (std::size_t c = 0; c < sz; ++c)
            if (r != c && !std::isnan(out.a_str(r, c))) {
                gsum += out.a_str(r, c);
                ++gcount;
            }
    if (gcount == 0) throw InsufficientDataError("activity: no valid pair averages");
    out.grand_mean = gsum / static_cast<double>(gcount);
    return out;
}

MetricSeries lowpass_trend(const MetricSeries& s, int cutoff_months) {
    const std::size_t n = s.size();
    if (n < 4)
        throw InsufficientDataError("lowpass_trend: need at least 4 samples, got " +
                                    std::to_string(n));
    if (cutoff_months < 2)
        throw ConfigError("lowpass_trend: cutoff period below the 2-month resolution");

    double mean = 0.0;
    for (double v : s.values) mean += v;
    mean /= static_cast<double>(n);

    std::vector<double> u(n);
    for (std::size_t t = 0; t < n; ++t) u[t] = s.values[t] - mean;

    // Direct DFT; the series is one value per month, a few hundred points, so
    // O(n^2) with a fixed summation order wins over an FFT dependency.
    const double two_pi = 2.0 * std::acos(-1.0);
    std::vector<std::complex<double>> spectrum(n);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -two_pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += u[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        spectrum[k] = acc;
    }

    // Coefficient k has period n/min(k, n-k) months; drop periods below the
    // cutoff. Integer comparison keeps the decision exact.
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t freq = std::min(k, n - k);
        if (n < static_cast<std::size_t>(cutoff_months) * freq) spectrum[k] = 0.0;
    }

    MetricSeries out;
    out.kind = MetricKind::trend;
    out.end_dates = s.end_dates;
    out.values.resize(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::complex<double> acc(0.0, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            const double ang = two_pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
            acc += spectrum[k] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        out.values[t] = acc.real() / static_cast<double>(n) + mean; // imaginary residue discarded
    }
    return out;
}

CrisisCalendar load_crisis_calendar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open crisis calendar " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path.string() + ": " + e.what());
    }
    CrisisCalendar cal;
    for (const auto& e : j.at("events")) {
        CrisisEvent ev;
        ev.id = e.at("id").get<std::string>();
        ev.start = parse_date(e.at("start").get<std::string>());
        ev.label = e.value("label", "");
        cal.events.push_back(std::move(ev));
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < cal.events.size(); ++i) {
        if (!ids.insert(cal.events[i].id).second)
            throw DataError(path.string() + ": duplicate event id " + cal.events[i].id);
        if (i > 0 && !(cal.events[i - 1].start < cal.events[i].start))
            throw DataError(path.string() + ": event dates not strictly increasing at " +
                            cal.events[i].id);
    }
    return cal;
}

PeakReport detect_peaks(const MetricSeries& trend, const CrisisCalendar& calendar,
                        int max_lead_months) {
    if (trend.size() == 0) throw InsufficientDataError("detect_peaks: empty trend");
    PeakReport report;
    report.max_lead_months = max_lead_months;

    // Strict local maxima; a plateau counts once, at its last index.
    const auto& v = trend.values;
    const std::size_t n = v.size();
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[j + 1] == v[i]) ++j;
        const bool rises = i > 0 && v[i] > v[i - 1];
        const bool falls = j + 1 < n && v[j] > v[j + 1];
        if (rises && falls) report.peaks.push_back({trend.end_dates[j], v[j]});
        i = j + 1;
    }

    std::vector<bool> used(report.peaks.size(), false);
    for (const auto& ev : calendar.events) {
        int best = -1;
        int best_lead = max_lead_months + 1;
        for (std::size_t p = 0; p < report.peaks.size(); ++p) {
            if (used[p]) continue;
            if (ev.start < report.peaks[p].date) continue;
            const int lead = months_between(report.peaks[p].date, ev.start);
            if (lead < 0 || lead > max_lead_months) continue;
            if (lead < best_lead) {
                best_lead = lead;
                best = static_cast<int>(p);
            }
        }
        if (best >= 0) {
            used[best] = true;
            report.matches.push_back({ev.id, ev.start, report.peaks[best].date, best_lead});
        } else {
            report.unmatched_events.push_back(ev.id);
        }
    }
    for (std::size_t p = 0; p < report.peaks.size(); ++p)
        if (!used[p]) report.unmatched_peaks.push_back(report.peaks[p].date);
    return report;
}

double pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) return kNaN;
    const double n = static_cast<double>(a.size());
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma, db = b[i] - mb;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    if (va == 0.0 || vb == 0.0) return kNaN;
    return cov / std::sqrt(va * vb);
}

void write_metric_csv(const MetricSeries& s, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "end_date,value\n";
    char buf[32];
    for (std::size_t i = 0; i < s.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", s.values[i]);
        out << to_string(s.end_dates[i]) << ',' << buf << '\n';
    }
    if (!out) throw IoError("failed while writing " + path.string());
}

} // namespace temnet
