#pragma once

#include "localdiff/date.hpp"
#include "localdiff/ingest.hpp"
#include "localdiff/series.hpp"
#include "localdiff/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace localdiff {

struct Filters {
    std::optional<std::string> category;
    std::optional<Channel> channel;
};

/// De-seasoned, baseline-normalized index with construction metadata.
/// Invariant: mean over the baseline dates is 1 within 1e-12.
struct IndexSeries {
    RealSeries series;
    int window_days = 7;
    DateInterval baseline;
    std::string geography;
    std::optional<std::string> category_filter;
    std::optional<Channel> channel_filter;
};

/// Sums amounts per day over the group's authorities for transactions that
/// pass the filters. Days without transactions are zero. The default entry
/// point shards the work across threads when the input is large; the serial
/// variant is the reference implementation and both produce identical
/// integer totals.
DailySeries aggregate_daily(const TaggedTransactions& tagged, const LocalityGroup& group,
                            const Filters& filters, DateInterval span);
DailySeries aggregate_daily_serial(const TaggedTransactions& tagged, const LocalityGroup& group,
                                   const Filters& filters, DateInterval span);

/// Exact elementwise sum of two shard aggregates over the same span/filters.
DailySeries merge_daily(const DailySeries& a, const DailySeries& b);

/// Full pipeline: aggregate both calendar years, K-day moving average,
/// year-over-year ratio (Feb 29 handled per the series rules), baseline
/// normalization. `out_span` is the span of the resulting index.
IndexSeries build_index(const TaggedTransactions& tagged, const LocalityGroup& group,
                        const Filters& filters, int K, DateInterval baseline,
                        DateInterval out_span);

/// Calendar-month spend totals over all transactions (pence, exact).
std::map<MonthKey, std::int64_t> monthly_totals(const std::vector<Transaction>& txns);

/// YoY growth per month: total(m) / total(m minus one year) - 1. Months
/// without a positive prior-year total are omitted.
std::map<MonthKey, double> monthly_yoy_growth(const std::map<MonthKey, std::int64_t>& totals);

double pearson(const std::vector<double>& x, const std::vector<double>& y);

struct CorrelationReport {
    struct Window {
        MonthKey start;
        MonthKey end;
        int n_months = 0;
        double pearson = 0.0;
    };
    std::vector<Window> windows;
};

/// Pearson correlation of own YoY growth against a benchmark series over
/// each window (inclusive month ranges); an empty window list means one
/// window spanning the full overlap. Fewer than 3 overlapping months in a
/// window is an error.
CorrelationReport validate_against_benchmark(
    const std::map<MonthKey, double>& own_growth, const std::map<MonthKey, double>& benchmark,
    const std::vector<std::pair<MonthKey, MonthKey>>& windows = {});

} // namespace localdiff
