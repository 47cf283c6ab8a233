#include "localdiff/pipeline.hpp"

#include "localdiff/errors.hpp"

#include <algorithm>

namespace localdiff {

SpendData load_spend_data(const RunConfig& cfg, const GeoLookup& geo) {
    if (cfg.transactions.empty()) throw input_error("config: transactions path not set");
    ParseOptions opt;
    opt.strict = cfg.strict;
    opt.window = cfg.span;
    ParseResult parsed = parse_transactions(cfg.transactions, opt);

    SpendData out;
    out.parse_issues = std::move(parsed.errors);
    FilterResult filtered = filter_transactions(std::move(parsed.txns));
    out.filter_drops = std::move(filtered.drops);
    if (filtered.kept.empty()) throw input_error("no transactions left after filtering");

    out.data_start = out.data_end = filtered.kept.front().date;
    for (const auto& t : filtered.kept) {
        out.data_start = std::min(out.data_start, t.date);
        out.data_end = std::max(out.data_end, t.date);
    }

    ResolveResult resolved =
        resolve_geography(std::move(filtered.kept), geo, cfg.geography_basis);
    if (cfg.strict && !resolved.excluded.empty())
        throw input_error("transactions row " + std::to_string(resolved.excluded.front().row) +
                          ": " + resolved.excluded.front().reason);
    out.resolve_issues = std::move(resolved.excluded);
    out.tagged = std::move(resolved.tagged);
    return out;
}

Schedule load_schedule(const RunConfig& cfg) {
    if (cfg.lockdowns.empty()) throw input_error("config: lockdowns path not set");
    if (cfg.population.empty()) throw input_error("config: population path not set");
    Schedule out;
    out.lockdowns = parse_lockdowns(cfg.lockdowns);
    out.population = parse_population(cfg.population);
    BuildGroupsResult groups = build_locality_groups(out.lockdowns, out.population);
    out.pairs = std::move(groups.pairs);
    out.skipped = std::move(groups.skipped);
    if (out.pairs.empty()) throw input_error("schedule has no estimable intervention events");
    return out;
}

CaseData load_case_data(const RunConfig& cfg) {
    if (cfg.cases.empty()) throw input_error("config: cases path not set");
    ParseOptions opt;
    opt.strict = cfg.strict;
    CaseParseResult parsed = parse_cases(cfg.cases, opt);
    if (parsed.records.empty()) throw input_error("case file has no usable rows");
    CaseData out;
    out.records = std::move(parsed.records);
    out.parse_issues = std::move(parsed.errors);
    out.data_start = out.data_end = out.records.front().date;
    for (const auto& r : out.records) {
        out.data_start = std::min(out.data_start, r.date);
        out.data_end = std::max(out.data_end, r.date);
    }
    return out;
}

namespace {

int truncated_post_end(const RunConfig& cfg, Date announcement, Date data_end) {
    Date last = data_end;
    if (cfg.span) last = std::min(last, cfg.span->end);
    const int post_end = std::min(7 * cfg.post_weeks - 1, last - announcement);
    if (post_end < 0)
        throw analysis_error("no post-announcement data before " + last.to_string());
    return post_end;
}

} // namespace

DateInterval spend_out_span(const RunConfig& cfg, Date announcement, Date data_end) {
    const int post_end = truncated_post_end(cfg, announcement, data_end);
    DateInterval span{std::min(cfg.baseline.begin, announcement - 7 * cfg.pre_weeks),
                      std::max(cfg.baseline.end, announcement + post_end)};
    return span;
}

DateInterval case_out_span(const RunConfig& cfg, Date announcement, Date data_end) {
    const int post_end = truncated_post_end(cfg, announcement, data_end);
    return {announcement - 7 * cfg.pre_weeks, announcement + post_end};
}

EventUnits PreparedEvent::view() const {
    EventUnits units;
    units.event = event;
    units.announcement = announcement;
    for (const auto& u : treat_units) units.treat_units.push_back({u.name, &u.series, u.weight});
    for (const auto& u : control_units)
        units.control_units.push_back({u.name, &u.series, u.weight});
    return units;
}

namespace {

std::int64_t population_of(const PopulationTable& population, const std::string& authority) {
    auto it = population.find(authority);
    if (it == population.end())
        throw input_error("authority missing from population table: " + authority);
    return it->second.population_2019;
}

// Units for one arm: the group itself, or its member authorities.
template <typename MakeSeries>
void add_units(std::vector<UnitSeries>& dst, const LocalityGroup& group,
               const PopulationTable& population, ClusterKey key, MakeSeries&& make) {
    if (key == ClusterKey::group) {
        dst.push_back({group.name, make(group), static_cast<double>(group.population_2019)});
        return;
    }
    for (const auto& authority : group.authorities) {
        LocalityGroup unit;
        unit.name = authority;
        unit.authorities = {authority};
        unit.population_2019 = population_of(population, authority);
        unit.role = group.role;
        dst.push_back({authority, make(unit), static_cast<double>(unit.population_2019)});
    }
}

} // namespace

PreparedEvent prepare_spend_units(const TaggedTransactions& tagged, const EventPair& pair,
                                  const PopulationTable& population, const RunConfig& cfg,
                                  Date data_end) {
    PreparedEvent out;
    out.event = pair.event.name;
    out.announcement = pair.event.announcement_date;
    const DateInterval span = spend_out_span(cfg, out.announcement, data_end);
    const Filters filters{cfg.spend_category, cfg.spend_channel};
    auto make = [&](const LocalityGroup& g) {
        return build_index(tagged, g, filters, cfg.window_days, cfg.baseline, span).series;
    };
    add_units(out.treat_units, pair.treatment, population, cfg.cluster_key, make);
    add_units(out.control_units, pair.control, population, cfg.cluster_key, make);
    return out;
}

PreparedEvent prepare_case_units(const std::vector<CaseRecord>& cases, const EventPair& pair,
                                 const PopulationTable& population, const RunConfig& cfg,
                                 Date data_end) {
    PreparedEvent out;
    out.event = pair.event.name;
    out.announcement = pair.event.announcement_date;
    const DateInterval span = case_out_span(cfg, out.announcement, data_end);
    auto make = [&](const LocalityGroup& g) {
        CaseRateResult r = case_rate(cases, g, cfg.window_days, span, !cfg.lenient_case_fill);
        for (auto& w : r.warnings) out.warnings.push_back(std::move(w));
        return std::move(r.series.series);
    };
    add_units(out.treat_units, pair.treatment, population, cfg.cluster_key, make);
    add_units(out.control_units, pair.control, population, cfg.cluster_key, make);
    return out;
}

} // namespace localdiff
