#include "localdiff/ingest.hpp"

#include "localdiff/csv.hpp"
#include "localdiff/errors.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace localdiff {

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

bool parse_i64(std::string_view s, std::int64_t& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool parse_f64(std::string_view s, double& out) {
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool currency_ok(std::string_view s) {
    if (s.size() != 3) return false;
    for (char c : s)
        if (c < 'A' || c > 'Z') return false;
    return true;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t semi = s.find(';', pos);
        if (semi == std::string_view::npos) semi = s.size();
        auto item = trim(s.substr(pos, semi - pos));
        if (!item.empty()) out.emplace_back(item);
        pos = semi + 1;
    }
    return out;
}

// Column positions of the transaction schema within the header.
struct TxnCols {
    int account_id, date, amount, currency, card_type, channel, category, sector, merchant;
    std::size_t n_header;
};

TxnCols locate_txn_columns(const std::vector<std::string>& header) {
    auto find = [&](std::string_view name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw input_error("missing required column: " + std::string(name));
    };
    TxnCols c{};
    c.account_id = find("account_id");
    c.date = find("date");
    c.amount = find("amount_pence");
    c.currency = find("currency");
    c.card_type = find("card_type");
    c.channel = find("channel");
    c.category = find("category");
    c.sector = find("cardholder_sector");
    c.merchant = find("merchant_authority");
    c.n_header = header.size();
    return c;
}

// Splits a record without quotes into views over the line. Returns false if
// a quote is present (caller falls back to the full splitter).
bool fast_split(std::string_view line, std::vector<std::string_view>& out) {
    if (line.find('"') != std::string_view::npos) return false;
    out.clear();
    std::size_t pos = 0;
    while (true) {
        std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return true;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
}

// Parses one body region of the file; `lineno` is the 1-based line of its
// first row. Appends transactions in input order.
void parse_txn_region(std::string_view body, std::size_t lineno, const TxnCols& cols,
                      const ParseOptions& opt, ParseResult& out) {
    std::vector<std::string_view> views;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t nl = body.find('\n', pos);
        std::size_t end = (nl == std::string_view::npos) ? body.size() : nl;
        std::string_view line = body.substr(pos, end - pos);
        pos = (nl == std::string_view::npos) ? body.size() : nl + 1;
        const std::size_t this_line = lineno++;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;

        if (!fast_split(line, views)) {
            csv::split_record(line, fields);
            views.assign(fields.begin(), fields.end());
        }
        auto reject = [&](const char* reason) { out.errors.push_back({this_line, reason}); };
        if (views.size() != cols.n_header) {
            reject("wrong field count");
            continue;
        }
        auto date = Date::parse(views[static_cast<std::size_t>(cols.date)]);
        if (!date) { reject("bad date"); continue; }
        if (opt.window && !opt.window->contains(*date)) { reject("date outside window"); continue; }
        std::int64_t amount = 0;
        if (!parse_i64(views[static_cast<std::size_t>(cols.amount)], amount)) {
            reject("bad amount");
            continue;
        }
        if (amount <= 0) { reject("non-positive amount"); continue; }
        auto currency = views[static_cast<std::size_t>(cols.currency)];
        if (!currency_ok(currency)) { reject("bad currency"); continue; }
        auto card = card_type_from_string(views[static_cast<std::size_t>(cols.card_type)]);
        if (!card) { reject("bad card_type"); continue; }
        auto channel = channel_from_string(views[static_cast<std::size_t>(cols.channel)]);
        if (!channel) { reject("bad channel"); continue; }
        std::string sector = normalize_sector(views[static_cast<std::size_t>(cols.sector)]);
        if (!sector_shape_ok(sector)) { reject("bad sector"); continue; }

        Transaction t;
        t.account_id = std::string(views[static_cast<std::size_t>(cols.account_id)]);
        t.date = *date;
        t.amount_pence = amount;
        t.currency = std::string(currency);
        t.card_type = *card;
        t.channel = *channel;
        t.category = std::string(views[static_cast<std::size_t>(cols.category)]);
        t.cardholder_sector = std::move(sector);
        t.merchant_authority = std::string(views[static_cast<std::size_t>(cols.merchant)]);
        out.txns.push_back(std::move(t));
    }
}

void throw_if_strict(const ParseOptions& opt, const std::vector<RowIssue>& errors,
                     const char* what) {
    if (opt.strict && !errors.empty())
        throw input_error(std::string(what) + " line " + std::to_string(errors.front().row) +
                          ": " + errors.front().reason);
}

} // namespace

std::int32_t AuthorityInterner::intern(std::string_view code) {
    auto it = ids_.find(code);
    if (it != ids_.end()) return it->second;
    auto id = static_cast<std::int32_t>(names_.size());
    names_.emplace_back(code);
    ids_.emplace(names_.back(), id);
    return id;
}

std::optional<std::int32_t> AuthorityInterner::find(std::string_view code) const {
    auto it = ids_.find(code);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
}

ParseResult parse_transactions(const std::string& path, const ParseOptions& opt) {
    return parse_transactions_text(slurp(path), opt);
}

ParseResult parse_transactions_text(std::string_view text, const ParseOptions& opt) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB &&
        static_cast<unsigned char>(text[2]) == 0xBF)
        text.remove_prefix(3);
    std::size_t header_end = text.find('\n');
    std::string_view header_line = text.substr(0, header_end == std::string_view::npos
                                                      ? text.size()
                                                      : header_end);
    if (!header_line.empty() && header_line.back() == '\r') header_line.remove_suffix(1);
    if (header_line.empty()) throw input_error("empty file (no header)");
    std::vector<std::string> header;
    csv::split_record(header_line, header);
    const TxnCols cols = locate_txn_columns(header);
    std::string_view body = header_end == std::string_view::npos
                                ? std::string_view{}
                                : text.substr(header_end + 1);

    ParseResult result;
#ifdef _OPENMP
    const std::size_t kShardMin = 1 << 20;
    int n_shards = omp_get_max_threads();
    if (body.size() >= kShardMin && n_shards > 1) {
        // Byte-range shards snapped to line boundaries; each shard knows its
        // starting line so the merged report matches a serial parse exactly.
        std::vector<std::size_t> bounds;
        bounds.push_back(0);
        for (int s = 1; s < n_shards; ++s) {
            std::size_t b = body.size() * static_cast<std::size_t>(s) /
                            static_cast<std::size_t>(n_shards);
            std::size_t nl = body.find('\n', b);
            bounds.push_back(nl == std::string_view::npos ? body.size() : nl + 1);
        }
        bounds.push_back(body.size());
        std::vector<std::size_t> start_line(bounds.size(), 2);
        for (std::size_t i = 1; i + 1 < bounds.size(); ++i) {
            std::size_t newlines = static_cast<std::size_t>(
                std::count(body.begin() + static_cast<std::ptrdiff_t>(bounds[i - 1]),
                           body.begin() + static_cast<std::ptrdiff_t>(bounds[i]), '\n'));
            start_line[i] = start_line[i - 1] + newlines;
        }
        std::vector<ParseResult> parts(static_cast<std::size_t>(n_shards));
#pragma omp parallel for schedule(static, 1)
        for (int s = 0; s < n_shards; ++s) {
            auto us = static_cast<std::size_t>(s);
            parse_txn_region(body.substr(bounds[us], bounds[us + 1] - bounds[us]),
                             start_line[us], cols, opt, parts[us]);
        }
        for (auto& p : parts) {
            std::move(p.txns.begin(), p.txns.end(), std::back_inserter(result.txns));
            std::move(p.errors.begin(), p.errors.end(), std::back_inserter(result.errors));
        }
    } else
#endif
    {
        parse_txn_region(body, 2, cols, opt, result);
    }
    throw_if_strict(opt, result.errors, "transactions");
    return result;
}

FilterResult filter_transactions(std::vector<Transaction> txns, const FilterRules& rules) {
    FilterResult r;
    r.kept.reserve(txns.size());
    for (auto& t : txns) {
        if (t.currency != rules.currency) {
            ++r.drops["non_gbp"];
        } else if (t.card_type != rules.card_type) {
            ++r.drops["non_consumer_credit"];
        } else if (t.amount_pence > rules.amount_cap_pence) {
            ++r.drops["over_cap"];
        } else {
            r.kept.push_back(std::move(t));
        }
    }
    return r;
}

ResolveResult resolve_geography(std::vector<Transaction> txns, const GeoLookup& lookup,
                                GeoBasis basis) {
    ResolveResult r;
    r.tagged.txns.reserve(txns.size());
    r.tagged.authority.reserve(txns.size());
    for (std::size_t i = 0; i < txns.size(); ++i) {
        auto& t = txns[i];
        std::int32_t id;
        if (basis == GeoBasis::merchant) {
            if (t.merchant_authority.empty()) {
                r.excluded.push_back({i, "missing_merchant_authority"});
                continue;
            }
            id = r.tagged.authorities.intern(t.merchant_authority);
        } else {
            auto it = lookup.sector_to_authority.find(t.cardholder_sector);
            if (it == lookup.sector_to_authority.end()) {
                r.excluded.push_back({i, "unmapped_sector"});
                continue;
            }
            id = r.tagged.authorities.intern(it->second);
        }
        r.tagged.txns.push_back(std::move(t));
        r.tagged.authority.push_back(id);
    }
    return r;
}

CaseParseResult parse_cases(const std::string& path, const ParseOptions& opt) {
    csv::Table t = csv::read_file(path);
    int c_auth = t.column("authority");
    int c_date = t.column("date");
    int c_cases = t.column("new_cases");
    if (c_auth < 0) throw input_error("missing required column: authority");
    if (c_date < 0) throw input_error("missing required column: date");
    if (c_cases < 0) throw input_error("missing required column: new_cases");

    CaseParseResult r;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.line_numbers[i];
        if (row.size() != t.header.size()) {
            r.errors.push_back({line, "wrong field count"});
            continue;
        }
        if (row[static_cast<std::size_t>(c_auth)].empty()) {
            r.errors.push_back({line, "empty authority"});
            continue;
        }
        auto date = Date::parse(row[static_cast<std::size_t>(c_date)]);
        if (!date) { r.errors.push_back({line, "bad date"}); continue; }
        if (opt.window && !opt.window->contains(*date)) {
            r.errors.push_back({line, "date outside window"});
            continue;
        }
        std::int64_t cases = 0;
        if (!parse_i64(row[static_cast<std::size_t>(c_cases)], cases)) {
            r.errors.push_back({line, "bad cases"});
            continue;
        }
        if (cases < 0) { r.errors.push_back({line, "negative cases"}); continue; }
        r.records.push_back({row[static_cast<std::size_t>(c_auth)], *date, cases});
    }
    throw_if_strict(opt, r.errors, "cases");
    return r;
}

std::vector<LockdownEvent> parse_lockdowns(const std::string& path) {
    csv::Table t = csv::read_file(path);
    int c_name = t.column("name");
    int c_date = t.column("announcement_date");
    int c_cat = t.column("category");
    int c_treat = t.column("treated_authorities");
    int c_ctrl = t.column("control_authorities");
    if (c_name < 0 || c_date < 0 || c_cat < 0 || c_treat < 0 || c_ctrl < 0)
        throw input_error("lockdowns file missing a required column");

    std::vector<LockdownEvent> events;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto fatal = [&](const std::string& why) -> input_error {
            return input_error("lockdowns line " + std::to_string(t.line_numbers[i]) + ": " + why);
        };
        if (row.size() != t.header.size()) throw fatal("wrong field count");
        LockdownEvent e;
        e.name = row[static_cast<std::size_t>(c_name)];
        if (e.name.empty()) throw fatal("empty name");
        auto date = Date::parse(row[static_cast<std::size_t>(c_date)]);
        if (!date) throw fatal("bad announcement_date");
        e.announcement_date = *date;
        auto cat = watchlist_category_from_string(row[static_cast<std::size_t>(c_cat)]);
        if (!cat) throw fatal("bad category");
        e.category = *cat;
        e.treated_authorities = split_list(row[static_cast<std::size_t>(c_treat)]);
        e.control_authorities = split_list(row[static_cast<std::size_t>(c_ctrl)]);
        if (e.treated_authorities.empty()) throw fatal("empty treated authority list");
        std::set<std::string> seen;
        for (const auto& a : e.treated_authorities)
            if (!seen.insert(a).second) throw fatal("duplicate treated authority: " + a);
        for (const auto& a : e.control_authorities) {
            if (!seen.insert(a).second)
                throw fatal("authority appears in both treated and control: " + a);
        }
        events.push_back(std::move(e));
    }
    return events;
}

PopulationTable parse_population(const std::string& path) {
    csv::Table t = csv::read_file(path);
    int c_auth = t.column("authority");
    int c_region = t.column("region");
    int c_pop = t.column("population_2019");
    if (c_auth < 0 || c_region < 0 || c_pop < 0)
        throw input_error("population file missing a required column");
    PopulationTable table;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto fatal = [&](const std::string& why) -> input_error {
            return input_error("population line " + std::to_string(t.line_numbers[i]) + ": " + why);
        };
        if (row.size() != t.header.size()) throw fatal("wrong field count");
        const auto& auth = row[static_cast<std::size_t>(c_auth)];
        if (auth.empty()) throw fatal("empty authority");
        std::int64_t pop = 0;
        if (!parse_i64(row[static_cast<std::size_t>(c_pop)], pop) || pop <= 0)
            throw fatal("bad population for " + auth);
        if (!table.emplace(auth, PopulationEntry{row[static_cast<std::size_t>(c_region)], pop})
                 .second)
            throw fatal("duplicate authority: " + auth);
    }
    return table;
}

GeoLookup parse_geo_lookup(const std::string& path) {
    csv::Table t = csv::read_file(path);
    int c_sector = t.column("sector");
    int c_auth = t.column("authority");
    if (c_sector < 0 || c_auth < 0)
        throw input_error("geo lookup file missing a required column");
    GeoLookup g;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto fatal = [&](const std::string& why) -> input_error {
            return input_error("geo_lookup line " + std::to_string(t.line_numbers[i]) + ": " + why);
        };
        if (row.size() != t.header.size()) throw fatal("wrong field count");
        std::string sector = normalize_sector(row[static_cast<std::size_t>(c_sector)]);
        if (!sector_shape_ok(sector)) throw fatal("bad sector: " + sector);
        const auto& auth = row[static_cast<std::size_t>(c_auth)];
        if (auth.empty()) throw fatal("empty authority for sector " + sector);
        auto [it, inserted] = g.sector_to_authority.emplace(sector, auth);
        if (!inserted && it->second != auth)
            throw fatal("sector " + sector + " maps to two authorities");
    }
    return g;
}

std::map<MonthKey, double> parse_benchmark(const std::string& path) {
    csv::Table t = csv::read_file(path);
    int c_month = t.column("month");
    int c_growth = t.column("yoy_growth");
    if (c_month < 0 || c_growth < 0)
        throw input_error("benchmark file missing a required column");
    std::map<MonthKey, double> out;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        auto fatal = [&](const std::string& why) -> input_error {
            return input_error("benchmark line " + std::to_string(t.line_numbers[i]) + ": " + why);
        };
        if (row.size() != t.header.size()) throw fatal("wrong field count");
        auto month = MonthKey::parse(row[static_cast<std::size_t>(c_month)]);
        if (!month) throw fatal("bad month");
        double growth = 0.0;
        if (!parse_f64(row[static_cast<std::size_t>(c_growth)], growth))
            throw fatal("bad yoy_growth");
        if (!out.emplace(*month, growth).second) throw fatal("duplicate month");
    }
    return out;
}

BuildGroupsResult build_locality_groups(const std::vector<LockdownEvent>& schedule,
                                        const PopulationTable& population) {
    BuildGroupsResult result;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& e = schedule[i];
        std::set<std::string> seen(e.treated_authorities.begin(), e.treated_authorities.end());
        if (seen.size() != e.treated_authorities.size())
            throw input_error("event " + e.name + ": duplicate treated authority");
        for (const auto& a : e.control_authorities)
            if (!seen.insert(a).second)
                throw input_error("event " + e.name +
                                  ": treated and control sets are not disjoint (" + a + ")");
        if (e.category != WatchlistCategory::intervention) {
            result.skipped.push_back({i, "not_intervention"});
            continue;
        }
        if (e.control_authorities.empty()) {
            result.skipped.push_back({i, "no_control"});
            continue;
        }
        auto make_group = [&](const std::vector<std::string>& members, std::string name,
                              GroupRole role) {
            LocalityGroup g;
            g.name = std::move(name);
            g.authorities = members;
            g.role = role;
            for (const auto& a : members) {
                auto it = population.find(a);
                if (it == population.end())
                    throw input_error("authority missing from population table: " + a);
                g.population_2019 += it->second.population_2019;
            }
            return g;
        };
        EventPair pair;
        pair.event = e;
        pair.treatment = make_group(e.treated_authorities, e.name, GroupRole::treatment);
        pair.control =
            make_group(e.control_authorities, e.name + "_control", GroupRole::control);
        result.pairs.push_back(std::move(pair));
    }
    return result;
}

} // namespace localdiff
