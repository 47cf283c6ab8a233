#pragma once

#include "localdiff/date.hpp"
#include "localdiff/types.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace localdiff {

/// Interns authority codes to dense int32 ids for fast aggregation.
class AuthorityInterner {
public:
    std::int32_t intern(std::string_view code);
    std::optional<std::int32_t> find(std::string_view code) const;
    const std::string& name(std::int32_t id) const { return names_[static_cast<std::size_t>(id)]; }
    std::size_t size() const { return names_.size(); }

private:
    std::map<std::string, std::int32_t, std::less<>> ids_;
    std::vector<std::string> names_;
};

/// Transactions tagged with a resolved authority, as parallel arrays.
struct TaggedTransactions {
    std::vector<Transaction> txns;
    std::vector<std::int32_t> authority; // parallel to txns
    AuthorityInterner authorities;
};

struct ParseOptions {
    bool strict = false;                  // strict: first bad row is fatal
    std::optional<DateInterval> window;   // reject dates outside when set
};

struct ParseResult {
    std::vector<Transaction> txns; // input order preserved
    std::vector<RowIssue> errors;  // row = 1-based physical line number
};

/// Parses transactions.csv. The nine schema columns are located by name and
/// may appear in any order; extra columns are ignored; a missing column is
/// fatal. Malformed rows are skipped and reported (fatal in strict mode).
/// Large inputs are parsed shard-parallel with an order-preserving merge.
ParseResult parse_transactions(const std::string& path, const ParseOptions& opt = {});
ParseResult parse_transactions_text(std::string_view text, const ParseOptions& opt = {});

struct FilterRules {
    std::string currency = "GBP";
    CardType card_type = CardType::consumer_credit;
    std::int64_t amount_cap_pence = 5'000'000; // inclusive: strictly greater is dropped
};

struct FilterResult {
    std::vector<Transaction> kept;
    std::map<std::string, std::int64_t> drops; // reason -> count
};

/// Keeps rows matching currency, card type, and the amount cap. Checks apply
/// in that order and a row counts toward its first failing reason only
/// ("non_gbp", "non_consumer_credit", "over_cap"). Idempotent.
FilterResult filter_transactions(std::vector<Transaction> txns, const FilterRules& rules = {});

enum class GeoBasis { cardholder, merchant };

struct ResolveResult {
    TaggedTransactions tagged;
    std::vector<RowIssue> excluded; // row = 0-based position in the input list
};

/// Tags each transaction with an authority: cardholder basis looks the
/// normalized sector up in the lookup, merchant basis uses the row's own
/// merchant_authority. Unresolvable rows are excluded with a reason
/// ("unmapped_sector", "missing_merchant_authority").
ResolveResult resolve_geography(std::vector<Transaction> txns, const GeoLookup& lookup,
                                GeoBasis basis);

struct CaseParseResult {
    std::vector<CaseRecord> records;
    std::vector<RowIssue> errors;
};

CaseParseResult parse_cases(const std::string& path, const ParseOptions& opt = {});

/// Schedule, population, and geography files are small and load-bearing, so
/// any malformed row in them is fatal rather than skippable.
std::vector<LockdownEvent> parse_lockdowns(const std::string& path);
PopulationTable parse_population(const std::string& path);
GeoLookup parse_geo_lookup(const std::string& path);

/// Benchmark series for validation: `month,yoy_growth`.
std::map<MonthKey, double> parse_benchmark(const std::string& path);

struct EventPair {
    LockdownEvent event;
    LocalityGroup treatment;
    LocalityGroup control;
};

struct BuildGroupsResult {
    std::vector<EventPair> pairs;
    std::vector<RowIssue> skipped; // row = index into the schedule
};

/// One (treatment, control) pair per intervention event with a non-empty
/// control set; member populations are summed exactly. Non-intervention
/// events and events without controls go to the skip list
/// ("not_intervention", "no_control"). An authority absent from the
/// population table is fatal.
BuildGroupsResult build_locality_groups(const std::vector<LockdownEvent>& schedule,
                                        const PopulationTable& population);

} // namespace localdiff
