#include "localdiff/epi.hpp"

#include "localdiff/errors.hpp"

#include <unordered_map>
#include <unordered_set>

namespace localdiff {

CaseRateResult case_rate(const std::vector<CaseRecord>& cases, const LocalityGroup& group,
                         int K, DateInterval out_span, bool strict) {
    if (!out_span.valid()) throw input_error("empty case-rate span");
    if (group.population_2019 <= 0)
        throw input_error("group " + group.name + " has non-positive population");
    if (group.authorities.empty())
        throw input_error("group " + group.name + " has no authorities");

    const DateInterval daily_span{out_span.begin - (K - 1), out_span.end};
    const auto n_days = static_cast<std::size_t>(daily_span.length());

    std::unordered_set<std::string> members(group.authorities.begin(), group.authorities.end());
    std::vector<std::int64_t> daily(n_days, 0);
    // seen[authority] = bitmap of observed dates, to detect holes.
    std::unordered_map<std::string, std::vector<std::uint8_t>> seen;
    for (const auto& a : group.authorities) seen[a].assign(n_days, 0);

    for (const auto& rec : cases) {
        if (!members.count(rec.authority)) continue;
        if (!daily_span.contains(rec.date)) continue;
        const auto i = static_cast<std::size_t>(rec.date - daily_span.begin);
        daily[i] += rec.new_cases;
        seen[rec.authority][i] = 1;
    }

    CaseRateResult result;
    for (const auto& a : group.authorities) {
        std::size_t missing = 0;
        Date first_missing;
        const auto& bitmap = seen[a];
        for (std::size_t i = 0; i < n_days; ++i) {
            if (!bitmap[i]) {
                if (missing == 0) first_missing = daily_span.begin + static_cast<int>(i);
                ++missing;
            }
        }
        if (missing == 0) continue;
        if (strict)
            throw input_error("case data missing for authority " + a + " on " +
                              first_missing.to_string() +
                              (missing > 1 ? " and " + std::to_string(missing - 1) + " more dates"
                                           : ""));
        result.warnings.push_back("authority " + a + ": " + std::to_string(missing) +
                                  " missing dates treated as zero (first " +
                                  first_missing.to_string() + ")");
    }

    RealSeries ma = moving_average(daily_span.begin, daily, K);
    const double scale = 100000.0 / static_cast<double>(group.population_2019);
    for (auto& v : ma.values) v *= scale;

    result.series.group = group.name;
    result.series.series = std::move(ma);
    result.series.window_days = K;
    return result;
}

} // namespace localdiff
