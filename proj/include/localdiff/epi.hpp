#pragma once

#include "localdiff/date.hpp"
#include "localdiff/series.hpp"
#include "localdiff/types.hpp"

#include <string>
#include <vector>

namespace localdiff {

/// Smoothed daily cases per 100,000 residents for one locality group.
struct CaseRateSeries {
    std::string group;
    RealSeries series;
    int window_days = 7;
};

struct CaseRateResult {
    CaseRateSeries series;
    std::vector<std::string> warnings; // lenient-mode zero fills
};

/// Pools daily cases over the group's authorities, applies the K-day moving
/// average, and scales by 100,000 / population. `out_span` is the span of
/// the output; the MA consumes K-1 extra days before it. In strict mode a
/// missing (authority, date) observation is an error; lenient mode counts it
/// as zero and records a warning per authority.
CaseRateResult case_rate(const std::vector<CaseRecord>& cases, const LocalityGroup& group,
                         int K, DateInterval out_span, bool strict = true);

} // namespace localdiff
