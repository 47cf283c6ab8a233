#pragma once

#include "localdiff/date.hpp"
#include "localdiff/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace localdiff {

/// Daily currency totals over a contiguous span. Days with no transactions
/// are explicit zeros. Values are integer pence, so shard merges are exact.
struct DailySeries {
    std::string geography;
    std::optional<std::string> category_filter;
    std::optional<Channel> channel_filter;
    Date start;
    std::vector<std::int64_t> values;

    Date end() const { return start + (static_cast<int>(values.size()) - 1); }
    bool contains(Date d) const { return d >= start && d <= end(); }
    std::int64_t at(Date d) const { return values[static_cast<std::size_t>(d - start)]; }
};

/// Real-valued daily series. A date is "defined" when it lies in the span
/// and is not gap-flagged; gap values are stored as NaN so accidental use
/// shows up rather than silently propagating zeros.
struct RealSeries {
    Date start;
    std::vector<double> values;
    std::vector<std::uint8_t> gap; // empty means no gaps; else parallel to values

    Date end() const { return start + (static_cast<int>(values.size()) - 1); }
    bool contains(Date d) const { return d >= start && d <= end(); }
    bool is_gap(Date d) const {
        return !gap.empty() && gap[static_cast<std::size_t>(d - start)] != 0;
    }
    bool defined(Date d) const { return contains(d) && !is_gap(d); }
    double at(Date d) const { return values[static_cast<std::size_t>(d - start)]; }
    bool has_gaps() const;
};

/// Trailing K-day moving average, K in {7, 14, 28}: MA(d) = mean over
/// [d-K+1, d]. Output starts K-1 days after the input. Window sums over the
/// integer overload are exact; the real overload sums each window directly.
/// Throws input_error for K outside the allowed set or a span shorter than K.
RealSeries moving_average(Date start, const std::vector<std::int64_t>& values, int K);
RealSeries moving_average(Date start, const std::vector<double>& values, int K);
RealSeries moving_average(const DailySeries& s, int K);

/// R(d) = ma_current(d) / ma_prior(same month-day one year earlier). For a
/// Feb 29 the denominator is the mean of the prior-year Feb 28 and Mar 1
/// values. Output covers ma_current's full span. Zero denominators become
/// gaps; a prior-year date absent from ma_prior's span is an error.
RealSeries yoy_deseason(const RealSeries& ma_current, const RealSeries& ma_prior);

/// out(d) = r(d) / mean(r over baseline). Every baseline date must be
/// defined (input_error otherwise); a zero baseline mean is an
/// analysis_error. Gaps outside the baseline pass through.
RealSeries normalize_baseline(const RealSeries& r, DateInterval baseline);

} // namespace localdiff
