#include "localdiff/report.hpp"

#include "localdiff/csv.hpp"
#include "localdiff/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <set>

namespace localdiff::report {

using nlohmann::json;

std::string fmt_double(double v) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

namespace {

std::string fmt_fixed4(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

std::string join_semicolon(const std::vector<std::string>& parts) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += ';';
        out += parts[i];
    }
    return out;
}

} // namespace

void write_transactions_csv(std::ostream& out, const std::vector<Transaction>& txns) {
    out << "account_id,date,amount_pence,currency,card_type,channel,category,"
           "cardholder_sector,merchant_authority\n";
    for (const auto& t : txns) {
        csv::write_record(out, {t.account_id, t.date.to_string(),
                                std::to_string(t.amount_pence), t.currency,
                                std::string(to_string(t.card_type)),
                                std::string(to_string(t.channel)), t.category,
                                t.cardholder_sector, t.merchant_authority});
    }
}

void write_cases_csv(std::ostream& out, const std::vector<CaseRecord>& records) {
    out << "authority,date,new_cases\n";
    for (const auto& r : records)
        csv::write_record(out, {r.authority, r.date.to_string(), std::to_string(r.new_cases)});
}

void write_lockdowns_csv(std::ostream& out, const std::vector<LockdownEvent>& events) {
    out << "name,announcement_date,category,treated_authorities,control_authorities\n";
    for (const auto& e : events) {
        csv::write_record(out, {e.name, e.announcement_date.to_string(),
                                std::string(to_string(e.category)),
                                join_semicolon(e.treated_authorities),
                                join_semicolon(e.control_authorities)});
    }
}

void write_population_csv(std::ostream& out, const PopulationTable& population) {
    out << "authority,region,population_2019\n";
    std::vector<const PopulationTable::value_type*> rows;
    rows.reserve(population.size());
    for (const auto& kv : population) rows.push_back(&kv);
    std::sort(rows.begin(), rows.end(),
              [](const auto* a, const auto* b) { return a->first < b->first; });
    for (const auto* kv : rows)
        csv::write_record(out, {kv->first, kv->second.region,
                                std::to_string(kv->second.population_2019)});
}

void write_geo_lookup_csv(std::ostream& out, const GeoLookup& geo) {
    out << "sector,authority\n";
    std::map<std::string, std::string> sorted(geo.sector_to_authority.begin(),
                                              geo.sector_to_authority.end());
    for (const auto& [sector, authority] : sorted) csv::write_record(out, {sector, authority});
}

void write_issues_jsonl(std::ostream& out, const std::vector<RowIssue>& issues) {
    for (const auto& issue : issues) {
        json j;
        j["row"] = issue.row;
        j["reason"] = issue.reason;
        out << j.dump() << "\n";
    }
}

void write_index_csv(std::ostream& out, const IndexSeries& index) {
    out << "date,value,flag\n";
    const auto& s = index.series;
    for (Date d = s.start; d <= s.end(); ++d) {
        if (s.is_gap(d))
            out << d.to_string() << ",,gap\n";
        else
            out << d.to_string() << "," << fmt_double(s.at(d)) << ",ok\n";
    }
}

std::string index_sidecar_json(const IndexSeries& index) {
    json j;
    j["geography"] = index.geography;
    j["category"] = index.category_filter ? *index.category_filter : "all";
    j["channel"] = index.channel_filter ? std::string(to_string(*index.channel_filter)) : "all";
    j["window_days"] = index.window_days;
    j["baseline_start"] = index.baseline.begin.to_string();
    j["baseline_end"] = index.baseline.end.to_string();
    return j.dump(2) + "\n";
}

void write_case_rate_csv(std::ostream& out, const CaseRateSeries& rates) {
    out << "date,rate\n";
    const auto& s = rates.series;
    for (Date d = s.start; d <= s.end(); ++d)
        out << d.to_string() << "," << fmt_double(s.at(d)) << "\n";
}

std::string case_rate_sidecar_json(const CaseRateSeries& rates) {
    json j;
    j["geography"] = rates.group;
    j["window_days"] = rates.window_days;
    return j.dump(2) + "\n";
}

namespace {

// Interaction week for table ordering; static's single term maps to 1.
int term_week(const std::string& name) {
    if (name == "Treat*After") return 1;
    return std::stoi(name.substr(name.rfind('_') + 1));
}

bool is_interaction(const std::string& name) { return name.rfind("Treat*After", 0) == 0; }

std::vector<const Coefficient*> table_order(const DiDResult& r) {
    std::vector<const Coefficient*> inter, days;
    const Coefficient* treat = nullptr;
    const Coefficient* constant = nullptr;
    for (const auto& c : r.coefficients) {
        if (is_interaction(c.name))
            inter.push_back(&c);
        else if (c.name == "Treat")
            treat = &c;
        else if (c.name == "Constant")
            constant = &c;
        else
            days.push_back(&c);
    }
    std::sort(inter.begin(), inter.end(),
              [](const auto* a, const auto* b) { return term_week(a->name) < term_week(b->name); });
    std::vector<const Coefficient*> out = inter;
    if (treat) out.push_back(treat);
    if (constant) out.push_back(constant);
    out.insert(out.end(), days.begin(), days.end());
    return out;
}

} // namespace

std::string did_result_json(const DiDResult& result) {
    json j;
    j["event"] = result.event;
    j["outcome"] = result.outcome;
    j["spec"] = std::string(to_string(result.spec));
    json coeffs = json::array();
    for (const auto* c : table_order(result)) {
        coeffs.push_back({{"name", c->name},
                          {"estimate", c->estimate},
                          {"se", c->se},
                          {"p", c->p},
                          {"stars", c->stars}});
    }
    j["coefficients"] = coeffs;
    j["n_obs"] = result.n_obs;
    j["n_clusters"] = result.n_clusters;
    j["window"] = {{"pre_weeks", result.pre_weeks}, {"post_weeks", result.post_weeks}};
    j["options"] = {{"cr_variant", std::string(to_string(result.cr))},
                    {"cluster_key", std::string(to_string(result.cluster_key))}};
    return j.dump(2) + "\n";
}

void write_did_table(std::ostream& out, const std::vector<DiDResult>& columns,
                     const std::string& fingerprint) {
    if (columns.empty()) throw input_error("did table: no results");
    for (const auto& r : columns)
        if (r.outcome != columns.front().outcome || r.spec != columns.front().spec)
            throw input_error("did table: mixed outcomes or specs");

    // Union of interaction terms across events, in week order; an event
    // whose truncated window lacks a term gets blank cells in its column.
    std::set<std::pair<int, std::string>> terms;
    for (const auto& r : columns)
        for (const auto& c : r.coefficients)
            if (is_interaction(c.name)) terms.insert({term_week(c.name), c.name});

    out << "# outcome=" << columns.front().outcome << " spec=" << to_string(columns.front().spec)
        << "\n";
    out << "# options: " << fingerprint << "\n";
    std::vector<std::string> header{"term"};
    for (const auto& r : columns) header.push_back(r.event);
    csv::write_record(out, header);

    for (const auto& [week, name] : terms) {
        std::vector<std::string> est_row{name};
        std::vector<std::string> se_row{""};
        for (const auto& r : columns) {
            if (const Coefficient* c = r.find(name)) {
                est_row.push_back(fmt_fixed4(c->estimate) + c->stars);
                se_row.push_back("(" + fmt_fixed4(c->se) + ")");
            } else {
                est_row.emplace_back();
                se_row.emplace_back();
            }
        }
        csv::write_record(out, est_row);
        csv::write_record(out, se_row);
    }

    std::vector<std::string> obs_row{"Observations"}, cl_row{"Clusters"};
    for (const auto& r : columns) {
        obs_row.push_back(std::to_string(r.n_obs));
        cl_row.push_back(std::to_string(r.n_clusters));
    }
    csv::write_record(out, obs_row);
    csv::write_record(out, cl_row);
}

std::string correlation_report_json(const CorrelationReport& report,
                                    const std::string& fingerprint) {
    json j;
    json windows = json::array();
    for (const auto& w : report.windows) {
        windows.push_back({{"start", w.start.to_string()},
                           {"end", w.end.to_string()},
                           {"n_months", w.n_months},
                           {"pearson", w.pearson}});
    }
    j["windows"] = windows;
    j["options"] = fingerprint;
    return j.dump(2) + "\n";
}

} // namespace localdiff::report
