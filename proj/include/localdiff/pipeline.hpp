#pragma once

#include "localdiff/config.hpp"
#include "localdiff/epi.hpp"
#include "localdiff/estimator.hpp"
#include "localdiff/index.hpp"
#include "localdiff/ingest.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace localdiff {

/// Transactions after parsing, filtering and geography resolution, with the
/// data-quality trail each stage produced.
struct SpendData {
    TaggedTransactions tagged;
    std::vector<RowIssue> parse_issues;              // 1-based source lines
    std::map<std::string, std::int64_t> filter_drops; // reason -> count
    std::vector<RowIssue> resolve_issues;            // 0-based post-filter rows
    Date data_start;
    Date data_end;
};

SpendData load_spend_data(const RunConfig& cfg, const GeoLookup& geo);

struct Schedule {
    std::vector<LockdownEvent> lockdowns;
    PopulationTable population;
    std::vector<EventPair> pairs;
    std::vector<RowIssue> skipped; // non-intervention / no-control events
};

Schedule load_schedule(const RunConfig& cfg);

struct CaseData {
    std::vector<CaseRecord> records;
    std::vector<RowIssue> parse_issues;
    Date data_start;
    Date data_end;
};

CaseData load_case_data(const RunConfig& cfg);

/// One estimation unit: an outcome series with its population weight.
struct UnitSeries {
    std::string name;
    RealSeries series;
    double weight = 0.0;
};

/// Outcome series for both arms of one event, ready to estimate. Units are
/// the two groups under group clustering, or every member authority under
/// authority clustering.
struct PreparedEvent {
    std::string event;
    Date announcement;
    std::vector<UnitSeries> treat_units;
    std::vector<UnitSeries> control_units;
    std::vector<std::string> warnings; // lenient case-rate zero fills

    /// Borrows the unit series; keep this object alive while estimating.
    EventUnits view() const;
};

/// Series span needed around one event: the estimation window, for the
/// spend index widened to cover the baseline, truncated at the data end
/// (and at the configured span clamp when present).
DateInterval spend_out_span(const RunConfig& cfg, Date announcement, Date data_end);
DateInterval case_out_span(const RunConfig& cfg, Date announcement, Date data_end);

PreparedEvent prepare_spend_units(const TaggedTransactions& tagged, const EventPair& pair,
                                  const PopulationTable& population, const RunConfig& cfg,
                                  Date data_end);
PreparedEvent prepare_case_units(const std::vector<CaseRecord>& cases, const EventPair& pair,
                                 const PopulationTable& population, const RunConfig& cfg,
                                 Date data_end);

} // namespace localdiff
