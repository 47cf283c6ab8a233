#pragma once

#include "localdiff/date.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace localdiff {

enum class CardType { consumer_credit, other };
enum class Channel { online, offline };
enum class WatchlistCategory { concern, enhanced_support, intervention };
enum class GroupRole { treatment, control };

std::optional<CardType> card_type_from_string(std::string_view s);
std::optional<Channel> channel_from_string(std::string_view s);
std::optional<WatchlistCategory> watchlist_category_from_string(std::string_view s);
std::string_view to_string(CardType t);
std::string_view to_string(Channel c);
std::string_view to_string(WatchlistCategory c);

/// One card spend record. Amounts are integer pence and strictly positive.
struct Transaction {
    std::string account_id;
    Date date;
    std::int64_t amount_pence = 0;
    std::string currency;          // ISO code, e.g. "GBP"
    CardType card_type = CardType::other;
    Channel channel = Channel::offline;
    std::string category;          // merchant category, e.g. "food_beverage"
    std::string cardholder_sector; // postcode sector, canonical form
    std::string merchant_authority; // empty when unknown
};

struct CaseRecord {
    std::string authority;
    Date date;
    std::int64_t new_cases = 0;
};

struct LockdownEvent {
    std::string name;
    Date announcement_date;
    WatchlistCategory category = WatchlistCategory::intervention;
    std::vector<std::string> treated_authorities;
    std::vector<std::string> control_authorities; // may be empty
};

struct LocalityGroup {
    std::string name;
    std::vector<std::string> authorities; // non-empty
    std::int64_t population_2019 = 0;     // sum of member-authority populations
    GroupRole role = GroupRole::treatment;
};

struct PopulationEntry {
    std::string region;
    std::int64_t population_2019 = 0;
};

using PopulationTable = std::unordered_map<std::string, PopulationEntry>;

struct GeoLookup {
    std::unordered_map<std::string, std::string> sector_to_authority;
    std::unordered_map<std::string, std::string> authority_to_region;
    std::unordered_map<std::string, std::string> authority_to_urbanclass; // optional
};

/// One rejected or skipped row: `row` is the 1-based physical line in the
/// source file when parsing, or the 0-based position in the input list for
/// in-memory stages. Serialized as JSON lines {"row": n, "reason": "..."}.
struct RowIssue {
    std::size_t row = 0;
    std::string reason;
};

/// Normalizes a postcode sector: trim, uppercase, collapse internal
/// whitespace runs to one space.
std::string normalize_sector(std::string_view raw);

/// Shape check after normalization: one or two letters, a digit, an optional
/// letter-or-digit, a space, a final digit.
bool sector_shape_ok(std::string_view normalized);

} // namespace localdiff
