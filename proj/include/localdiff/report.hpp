#pragma once

#include "localdiff/epi.hpp"
#include "localdiff/estimator.hpp"
#include "localdiff/index.hpp"
#include "localdiff/types.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace localdiff::report {

/// Shortest decimal that round-trips the exact double.
std::string fmt_double(double v);

// Dataset writers. Schemas match the ingest readers byte for byte, so a
// written file re-parses to the same records.
void write_transactions_csv(std::ostream& out, const std::vector<Transaction>& txns);
void write_cases_csv(std::ostream& out, const std::vector<CaseRecord>& records);
void write_lockdowns_csv(std::ostream& out, const std::vector<LockdownEvent>& events);
void write_population_csv(std::ostream& out, const PopulationTable& population);
void write_geo_lookup_csv(std::ostream& out, const GeoLookup& geo);

/// Row issues as JSON lines: {"reason": "...", "row": n}.
void write_issues_jsonl(std::ostream& out, const std::vector<RowIssue>& issues);

/// Series export: `date,value,flag` with flag ok|gap; gap rows carry an
/// empty value. The construction options live in the sidecar.
void write_index_csv(std::ostream& out, const IndexSeries& index);
std::string index_sidecar_json(const IndexSeries& index);

/// Case-rate export: `date,rate`; sidecar carries group and window.
void write_case_rate_csv(std::ostream& out, const CaseRateSeries& rates);
std::string case_rate_sidecar_json(const CaseRateSeries& rates);

/// Full result: every coefficient with estimate, se, p and stars, ordered
/// interactions first (ascending week), then Treat, Constant, day dummies.
std::string did_result_json(const DiDResult& result);

/// One table per (outcome, spec): events as columns, interaction terms as
/// rows, each estimate row followed by its (se) row, blank cells where a
/// truncated window has no term. `fingerprint` goes into a # options line.
void write_did_table(std::ostream& out, const std::vector<DiDResult>& columns,
                     const std::string& fingerprint);

std::string correlation_report_json(const CorrelationReport& report,
                                    const std::string& fingerprint);

} // namespace localdiff::report
