#include "localdiff/series.hpp"

#include "localdiff/errors.hpp"

#include <cmath>
#include <limits>

namespace localdiff {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_window(int K, std::size_t n) {
    if (K != 7 && K != 14 && K != 28)
        throw input_error("moving average window must be 7, 14 or 28, got " + std::to_string(K));
    if (n < static_cast<std::size_t>(K))
        throw input_error("moving average window " + std::to_string(K) +
                          " exceeds series length " + std::to_string(n));
}

} // namespace

bool RealSeries::has_gaps() const {
    for (auto g : gap)
        if (g) return true;
    return false;
}

RealSeries moving_average(Date start, const std::vector<std::int64_t>& values, int K) {
    check_window(K, values.size());
    RealSeries out;
    out.start = start + (K - 1);
    out.values.reserve(values.size() - K + 1);
    std::int64_t sum = 0;
    for (int i = 0; i < K; ++i) sum += values[static_cast<std::size_t>(i)];
    out.values.push_back(static_cast<double>(sum) / K);
    for (std::size_t i = static_cast<std::size_t>(K); i < values.size(); ++i) {
        sum += values[i] - values[i - static_cast<std::size_t>(K)];
        out.values.push_back(static_cast<double>(sum) / K);
    }
    return out;
}

RealSeries moving_average(Date start, const std::vector<double>& values, int K) {
    check_window(K, values.size());
    RealSeries out;
    out.start = start + (K - 1);
    out.values.reserve(values.size() - K + 1);
    // Direct per-window summation: K is at most 28 and series are short, and
    // fixed left-to-right order keeps results independent of history.
    for (std::size_t last = static_cast<std::size_t>(K) - 1; last < values.size(); ++last) {
        double sum = 0.0;
        for (std::size_t i = last + 1 - static_cast<std::size_t>(K); i <= last; ++i)
            sum += values[i];
        out.values.push_back(sum / K);
    }
    return out;
}

RealSeries moving_average(const DailySeries& s, int K) {
    return moving_average(s.start, s.values, K);
}

RealSeries yoy_deseason(const RealSeries& ma_current, const RealSeries& ma_prior) {
    RealSeries out;
    out.start = ma_current.start;
    const std::size_t n = ma_current.values.size();
    out.values.reserve(n);
    out.gap.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        Date d = ma_current.start + static_cast<int>(i);
        double denom;
        if (d.is_feb29()) {
            Date feb28 = Date::from_ymd(d.year() - 1, 2, 28);
            Date mar01 = Date::from_ymd(d.year() - 1, 3, 1);
            if (!ma_prior.contains(feb28) || !ma_prior.contains(mar01))
                throw input_error("prior-year series missing date " + feb28.to_string() +
                                  " or " + mar01.to_string());
            denom = (ma_prior.at(feb28) + ma_prior.at(mar01)) / 2.0;
        } else {
            Date p = d.prior_year();
            if (!ma_prior.contains(p))
                throw input_error("prior-year series missing date " + p.to_string());
            denom = ma_prior.at(p);
        }
        if (denom == 0.0) {
            out.values.push_back(kNaN);
            out.gap[i] = 1;
        } else {
            out.values.push_back(ma_current.values[i] / denom);
        }
    }
    return out;
}

RealSeries normalize_baseline(const RealSeries& r, DateInterval baseline) {
    if (!baseline.valid()) throw input_error("invalid baseline interval");
    double sum = 0.0;
    for (Date d = baseline.begin; d <= baseline.end; ++d) {
        if (!r.defined(d))
            throw input_error("baseline date missing from series: " + d.to_string());
        sum += r.at(d);
    }
    const double mean = sum / baseline.length();
    if (mean == 0.0) throw analysis_error("baseline mean is zero");
    RealSeries out;
    out.start = r.start;
    out.values.resize(r.values.size());
    out.gap = r.gap;
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        bool g = !r.gap.empty() && r.gap[i];
        out.values[i] = g ? kNaN : r.values[i] / mean;
    }
    return out;
}

} // namespace localdiff
