#include "localdiff/index.hpp"

#include "localdiff/errors.hpp"

#include <algorithm>
#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace localdiff {

namespace {

// Membership bitmap over interned authority ids; ids not in the interner
// cannot appear in the tagged data, so they are simply never hit.
std::vector<std::uint8_t> membership(const TaggedTransactions& tagged,
                                     const LocalityGroup& group) {
    std::vector<std::uint8_t> member(tagged.authorities.size(), 0);
    for (const auto& a : group.authorities)
        if (auto id = tagged.authorities.find(a))
            member[static_cast<std::size_t>(*id)] = 1;
    return member;
}

inline bool passes(const Transaction& t, const Filters& f) {
    if (f.channel && t.channel != *f.channel) return false;
    if (f.category && t.category != *f.category) return false;
    return true;
}

void accumulate(const TaggedTransactions& tagged, const std::vector<std::uint8_t>& member,
                const Filters& filters, DateInterval span, std::size_t begin, std::size_t end,
                std::vector<std::int64_t>& values) {
    for (std::size_t i = begin; i < end; ++i) {
        const auto& t = tagged.txns[i];
        if (!member[static_cast<std::size_t>(tagged.authority[i])]) continue;
        if (!span.contains(t.date)) continue;
        if (!passes(t, filters)) continue;
        values[static_cast<std::size_t>(t.date - span.begin)] += t.amount_pence;
    }
}

DailySeries make_series(const LocalityGroup& group, const Filters& filters, DateInterval span) {
    if (!span.valid()) throw input_error("empty aggregation span");
    DailySeries s;
    s.geography = group.name;
    s.category_filter = filters.category;
    s.channel_filter = filters.channel;
    s.start = span.begin;
    s.values.assign(static_cast<std::size_t>(span.length()), 0);
    return s;
}

} // namespace

DailySeries aggregate_daily_serial(const TaggedTransactions& tagged, const LocalityGroup& group,
                                   const Filters& filters, DateInterval span) {
    DailySeries s = make_series(group, filters, span);
    accumulate(tagged, membership(tagged, group), filters, span, 0, tagged.txns.size(),
               s.values);
    return s;
}

DailySeries aggregate_daily(const TaggedTransactions& tagged, const LocalityGroup& group,
                            const Filters& filters, DateInterval span) {
#ifdef _OPENMP
    const std::size_t n = tagged.txns.size();
    if (n >= 65536 && omp_get_max_threads() > 1) {
        DailySeries s = make_series(group, filters, span);
        const auto member = membership(tagged, group);
        const int nt = omp_get_max_threads();
        std::vector<std::vector<std::int64_t>> locals(
            static_cast<std::size_t>(nt),
            std::vector<std::int64_t>(s.values.size(), 0));
#pragma omp parallel num_threads(nt)
        {
            auto& local = locals[static_cast<std::size_t>(omp_get_thread_num())];
#pragma omp for schedule(static)
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
                const auto ui = static_cast<std::size_t>(i);
                const auto& t = tagged.txns[ui];
                if (!member[static_cast<std::size_t>(tagged.authority[ui])]) continue;
                if (!span.contains(t.date)) continue;
                if (!passes(t, filters)) continue;
                local[static_cast<std::size_t>(t.date - span.begin)] += t.amount_pence;
            }
        }
        // Integer sums: merge order cannot change the result.
        for (const auto& local : locals)
            for (std::size_t j = 0; j < s.values.size(); ++j) s.values[j] += local[j];
        return s;
    }
#endif
    return aggregate_daily_serial(tagged, group, filters, span);
}

DailySeries merge_daily(const DailySeries& a, const DailySeries& b) {
    if (a.start != b.start || a.values.size() != b.values.size())
        throw input_error("merge_daily: span mismatch");
    if (a.geography != b.geography || a.category_filter != b.category_filter ||
        a.channel_filter != b.channel_filter)
        throw input_error("merge_daily: metadata mismatch");
    DailySeries out = a;
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
    return out;
}

IndexSeries build_index(const TaggedTransactions& tagged, const LocalityGroup& group,
                        const Filters& filters, int K, DateInterval baseline,
                        DateInterval out_span) {
    if (!out_span.valid()) throw input_error("empty index span");
    // Prior-year MA is consulted at each output date's calendar twin (both
    // neighbors for a Feb 29), so size the prior aggregation span to cover
    // exactly those dates plus MA warm-up.
    Date prior_min = out_span.begin, prior_max = out_span.begin;
    bool first = true;
    for (Date d = out_span.begin; d <= out_span.end; ++d) {
        Date lo, hi;
        if (d.is_feb29()) {
            lo = Date::from_ymd(d.year() - 1, 2, 28);
            hi = Date::from_ymd(d.year() - 1, 3, 1);
        } else {
            lo = hi = d.prior_year();
        }
        if (first || lo < prior_min) prior_min = lo;
        if (first || hi > prior_max) prior_max = hi;
        first = false;
    }
    DateInterval current_span{out_span.begin - (K - 1), out_span.end};
    DateInterval prior_span{prior_min - (K - 1), prior_max};

    DailySeries cur = aggregate_daily(tagged, group, filters, current_span);
    DailySeries pri = aggregate_daily(tagged, group, filters, prior_span);
    RealSeries ratio = yoy_deseason(moving_average(cur, K), moving_average(pri, K));

    IndexSeries out;
    out.series = normalize_baseline(ratio, baseline);
    out.window_days = K;
    out.baseline = baseline;
    out.geography = group.name;
    out.category_filter = filters.category;
    out.channel_filter = filters.channel;
    return out;
}

std::map<MonthKey, std::int64_t> monthly_totals(const std::vector<Transaction>& txns) {
    std::map<MonthKey, std::int64_t> totals;
    for (const auto& t : txns) totals[MonthKey::of(t.date)] += t.amount_pence;
    return totals;
}

std::map<MonthKey, double> monthly_yoy_growth(const std::map<MonthKey, std::int64_t>& totals) {
    std::map<MonthKey, double> growth;
    for (const auto& [m, total] : totals) {
        auto prior = totals.find(m.prior_year());
        if (prior == totals.end() || prior->second <= 0) continue;
        growth[m] = static_cast<double>(total) / static_cast<double>(prior->second) - 1.0;
    }
    return growth;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw analysis_error("pearson: need two equal-length series of size >= 2");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw analysis_error("pearson: zero variance series");
    return sxy / std::sqrt(sxx * syy);
}

CorrelationReport validate_against_benchmark(
    const std::map<MonthKey, double>& own_growth, const std::map<MonthKey, double>& benchmark,
    const std::vector<std::pair<MonthKey, MonthKey>>& windows) {
    std::vector<std::pair<MonthKey, MonthKey>> spans = windows;
    if (spans.empty()) {
        // Full-overlap window.
        std::optional<MonthKey> lo, hi;
        for (const auto& [m, g] : own_growth) {
            (void)g;
            if (benchmark.count(m)) {
                if (!lo) lo = m;
                hi = m;
            }
        }
        if (!lo) throw analysis_error("no overlapping months with benchmark");
        spans.push_back({*lo, *hi});
    }
    CorrelationReport report;
    for (const auto& [lo, hi] : spans) {
        std::vector<double> own, bench;
        for (const auto& [m, g] : own_growth) {
            if (m < lo || hi < m) continue;
            auto it = benchmark.find(m);
            if (it == benchmark.end()) continue;
            own.push_back(g);
            bench.push_back(it->second);
        }
        if (own.size() < 3)
            throw analysis_error("fewer than 3 overlapping months in window " + lo.to_string() +
                                 ".." + hi.to_string());
        report.windows.push_back({lo, hi, static_cast<int>(own.size()), pearson(own, bench)});
    }
    return report;
}

} // namespace localdiff
