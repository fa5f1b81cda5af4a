#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "temnet/te.hpp"

namespace temnet {

enum class MetricKind { avi, asi, trend };

// Scalar diagnostic per segment, timestamped with the segment's end date.
struct MetricSeries {
    MetricKind kind = MetricKind::avi;
    std::vector<Date> end_dates;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
};

// Mean of the valid off-diagonal entries (invalid cells shrink the
// normalizer). Throws InsufficientDataError when no cell is valid.
double average_influence(const TEMatrix& m);

// Directional imbalance: sum_{m>n} |TE(m,n) - TE(n,m)| over
// sum_{m>n} (TE(m,n) + TE(n,m)), in [0, 1]. Pairs with an invalid cell in
// either direction are excluded. Throws UndefinedMetricError on a zero
// denominator.
double asymmetry(const TEMatrix& m);

MetricSeries avi_series(const TEMatrixSeries& series);
MetricSeries asi_series(const TEMatrixSeries& series);

// Per-ordered-pair time mean (a_str) and population standard deviation
// (a_flu) of the TE series. grand_mean averages a_str over the valid
// off-diagonal cells. A single-segment series leaves a_flu flagged NaN.
struct ActivityStats {
    Matrix a_str;
    Matrix a_flu;
    double grand_mean = 0.0;
};

ActivityStats activity(const TEMatrixSeries& series);

// Hard spectral low-pass: DFT of the mean-removed series, zero every
// coefficient whose period is shorter than cutoff_months, inverse transform,
// re-add the mean. Idempotent, linear, mean-preserving.
MetricSeries lowpass_trend(const MetricSeries& s, int cutoff_months = 12);

struct CrisisEvent {
    std::string id;
    Date start;
    std::string label;
};

struct CrisisCalendar {
    std::vector<CrisisEvent> events; // strictly increasing dates, unique ids
};

// Reads {"events":[{"id","start","label"}]}. Throws ConfigError / DataError.
CrisisCalendar load_crisis_calendar(const std::filesystem::path& path);

struct Peak {
    Date date;
    double value = 0.0;
};

struct PeakMatch {
    std::string event_id;
    Date event_start;
    Date peak_date;
    int lead_months = 0;
};

struct PeakReport {
    std::vector<Peak> peaks;
    std::vector<PeakMatch> matches;
    std::vector<Date> unmatched_peaks;
    std::vector<std::string> unmatched_events;
    int max_lead_months = 24;
};

// Peaks are strict local maxima (plateaus take the last index). Each event
// matches the nearest preceding unmatched peak within max_lead_months; leads
// are whole calendar months and never negative.
PeakReport detect_peaks(const MetricSeries& trend, const CrisisCalendar& calendar,
                        int max_lead_months = 24);

// Pearson correlation coefficient; NaN when either series has zero variance.
double pearson(std::span<const double> a, std::span<const double> b);

void write_metric_csv(const MetricSeries& s, const std::filesystem::path& path);

} // namespace temnet
