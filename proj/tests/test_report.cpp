#include "localdiff/errors.hpp"
#include "localdiff/ingest.hpp"
#include "localdiff/report.hpp"

#include "helpers.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

using namespace localdiff;
using testutil::date;

namespace {

template <typename F>
std::string capture(F&& write) {
    std::ostringstream out;
    write(out);
    return out.str();
}

Coefficient coef(std::string name, double est, double se, double p, std::string stars) {
    Coefficient c;
    c.name = std::move(name);
    c.estimate = est;
    c.se = se;
    c.p = p;
    c.stars = std::move(stars);
    return c;
}

} // namespace

TEST_CASE("fmt_double survives a strtod round trip") {
    const double cases[] = {0.0,     1.0,          -1.0,        0.1,
                            1.0 / 3, 2.5e17,       -7.25e-9,    1e100,
                            1e-300,  0.1 + 0.2,    3.14159265358979,
                            std::numeric_limits<double>::denorm_min()};
    for (double v : cases) {
        const std::string s = report::fmt_double(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(report::fmt_double(1.0) == "1");
    CHECK(report::fmt_double(0.1) == "0.1");
    CHECK(report::fmt_double(-2.5) == "-2.5");
}

TEST_CASE("transactions csv round trips through the parser") {
    std::vector<Transaction> txns;
    Transaction a = testutil::make_txn("2020-03-04", 120);
    a.account_id = "acct,with comma";
    a.category = "food_beverage";
    a.merchant_authority = "York";
    Transaction b = testutil::make_txn("2020-03-05", 5'000'000);
    b.account_id = "quote\"inside";
    b.currency = "EUR";
    b.card_type = CardType::other;
    b.channel = Channel::online;
    b.merchant_authority = "";
    txns = {a, b};

    const std::string text =
        capture([&](std::ostream& out) { report::write_transactions_csv(out, txns); });
    const ParseResult back = parse_transactions_text(text);
    CHECK(back.errors.empty());
    REQUIRE(back.txns.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back.txns[i].account_id == txns[i].account_id);
        CHECK(back.txns[i].date == txns[i].date);
        CHECK(back.txns[i].amount_pence == txns[i].amount_pence);
        CHECK(back.txns[i].currency == txns[i].currency);
        CHECK(back.txns[i].card_type == txns[i].card_type);
        CHECK(back.txns[i].channel == txns[i].channel);
        CHECK(back.txns[i].category == txns[i].category);
        CHECK(back.txns[i].cardholder_sector == txns[i].cardholder_sector);
        CHECK(back.txns[i].merchant_authority == txns[i].merchant_authority);
    }
}

TEST_CASE("cases csv round trips through the parser") {
    testutil::TempDir dir;
    const std::vector<CaseRecord> records = {{"Leicester", date("2020-06-01"), 24},
                                             {"Oadby and Wigston", date("2020-06-02"), 0}};
    testutil::write_text(dir.file("cases.csv"), capture([&](std::ostream& out) {
                             report::write_cases_csv(out, records);
                         }));
    const CaseParseResult back = parse_cases(dir.file("cases.csv"));
    CHECK(back.errors.empty());
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].authority == "Leicester");
    CHECK(back.records[0].date == records[0].date);
    CHECK(back.records[0].new_cases == 24);
    CHECK(back.records[1].new_cases == 0);
}

TEST_CASE("lockdowns csv round trips through the parser") {
    testutil::TempDir dir;
    LockdownEvent a;
    a.name = "Leicester";
    a.announcement_date = date("2020-06-29");
    a.category = WatchlistCategory::intervention;
    a.treated_authorities = {"Leicester", "Oadby and Wigston"};
    a.control_authorities = {"Nottingham"};
    LockdownEvent b;
    b.name = "Watch only";
    b.announcement_date = date("2020-07-10");
    b.category = WatchlistCategory::concern;
    b.treated_authorities = {"Luton"};
    testutil::write_text(dir.file("lockdowns.csv"), capture([&](std::ostream& out) {
                             report::write_lockdowns_csv(out, {a, b});
                         }));
    const auto back = parse_lockdowns(dir.file("lockdowns.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].name == a.name);
    CHECK(back[0].announcement_date == a.announcement_date);
    CHECK(back[0].category == a.category);
    CHECK(back[0].treated_authorities == a.treated_authorities);
    CHECK(back[0].control_authorities == a.control_authorities);
    CHECK(back[1].category == WatchlistCategory::concern);
    CHECK(back[1].control_authorities.empty());
}

TEST_CASE("population csv round trips and is sorted by authority") {
    testutil::TempDir dir;
    PopulationTable pop;
    pop["Zed"] = {"North", 1000};
    pop["Alpha"] = {"South", 354224};
    const std::string text =
        capture([&](std::ostream& out) { report::write_population_csv(out, pop); });
    CHECK(text.find("Alpha") < text.find("Zed"));
    testutil::write_text(dir.file("population.csv"), text);
    const PopulationTable back = parse_population(dir.file("population.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back.at("Alpha").region == "South");
    CHECK(back.at("Alpha").population_2019 == 354224);
    CHECK(back.at("Zed").population_2019 == 1000);
}

TEST_CASE("geo lookup csv round trips through the parser") {
    testutil::TempDir dir;
    GeoLookup geo;
    geo.sector_to_authority["AL1 2"] = "St Albans";
    geo.sector_to_authority["LE2 4"] = "Leicester";
    testutil::write_text(dir.file("geo.csv"), capture([&](std::ostream& out) {
                             report::write_geo_lookup_csv(out, geo);
                         }));
    const GeoLookup back = parse_geo_lookup(dir.file("geo.csv"));
    CHECK(back.sector_to_authority == geo.sector_to_authority);
}

TEST_CASE("issues serialize as one json object per line") {
    const std::vector<RowIssue> issues = {{3, "bad date"}, {7, "over_cap"}};
    const std::string text =
        capture([&](std::ostream& out) { report::write_issues_jsonl(out, issues); });
    CHECK(text ==
          "{\"reason\":\"bad date\",\"row\":3}\n"
          "{\"reason\":\"over_cap\",\"row\":7}\n");
}

TEST_CASE("index csv marks gaps with empty values") {
    IndexSeries index;
    index.series.start = date("2020-01-01");
    index.series.values = {1.0, std::numeric_limits<double>::quiet_NaN(), 2.5};
    index.series.gap = {0, 1, 0};
    index.geography = "Leicester";
    index.window_days = 7;
    index.baseline = {date("2020-01-08"), date("2020-01-28")};
    const std::string text =
        capture([&](std::ostream& out) { report::write_index_csv(out, index); });
    CHECK(text ==
          "date,value,flag\n"
          "2020-01-01,1,ok\n"
          "2020-01-02,,gap\n"
          "2020-01-03,2.5,ok\n");
}

TEST_CASE("index sidecar carries the construction options") {
    IndexSeries index;
    index.series.start = date("2020-01-01");
    index.series.values = {1.0};
    index.geography = "Leicester";
    index.window_days = 14;
    index.baseline = {date("2020-01-08"), date("2020-01-28")};

    auto parsed = [&] { return nlohmann::json::parse(report::index_sidecar_json(index)); };
    nlohmann::json j = parsed();
    CHECK(j["geography"] == "Leicester");
    CHECK(j["category"] == "all");
    CHECK(j["channel"] == "all");
    CHECK(j["window_days"] == 14);
    CHECK(j["baseline_start"] == "2020-01-08");
    CHECK(j["baseline_end"] == "2020-01-28");

    index.category_filter = "retail";
    index.channel_filter = Channel::offline;
    j = parsed();
    CHECK(j["category"] == "retail");
    CHECK(j["channel"] == "offline");
}

TEST_CASE("case rate csv and sidecar") {
    CaseRateSeries rates;
    rates.group = "Leicester";
    rates.window_days = 7;
    rates.series.start = date("2020-06-01");
    rates.series.values = {7.0, 8.5};
    const std::string text =
        capture([&](std::ostream& out) { report::write_case_rate_csv(out, rates); });
    CHECK(text ==
          "date,rate\n"
          "2020-06-01,7\n"
          "2020-06-02,8.5\n");
    const nlohmann::json j = nlohmann::json::parse(report::case_rate_sidecar_json(rates));
    CHECK(j["geography"] == "Leicester");
    CHECK(j["window_days"] == 7);
}

TEST_CASE("did result json orders interactions first") {
    DiDResult r;
    r.event = "Leicester";
    r.outcome = "spend_index";
    r.spec = DidSpec::dynamic_;
    r.cr = CrVariant::cr1;
    r.cluster_key = ClusterKey::authority;
    r.n_obs = 112;
    r.n_clusters = 4;
    r.pre_weeks = 4;
    r.post_weeks = 2;
    // Deliberately jumbled: the report must sort interactions by week and
    // push the nuisance terms behind them.
    r.coefficients = {coef("Day_-28", 0.01, 0.02, 0.5, ""),
                      coef("Constant", 1.0, 0.1, 0.0001, "***"),
                      coef("Treat*After_2", -0.2, 0.05, 0.0003, "***"),
                      coef("Treat", 0.3, 0.2, 0.2, ""),
                      coef("Treat*After_-3", 0.001, 0.05, 0.9, ""),
                      coef("Treat*After_1", -0.25, 0.04, 0.0001, "***")};

    const nlohmann::json j = nlohmann::json::parse(report::did_result_json(r));
    CHECK(j["event"] == "Leicester");
    CHECK(j["outcome"] == "spend_index");
    CHECK(j["spec"] == "dynamic");
    CHECK(j["n_obs"] == 112);
    CHECK(j["n_clusters"] == 4);
    CHECK(j["window"]["pre_weeks"] == 4);
    CHECK(j["window"]["post_weeks"] == 2);
    CHECK(j["options"]["cr_variant"] == "cr1");
    CHECK(j["options"]["cluster_key"] == "authority");

    REQUIRE(j["coefficients"].size() == 6);
    CHECK(j["coefficients"][0]["name"] == "Treat*After_-3");
    CHECK(j["coefficients"][1]["name"] == "Treat*After_1");
    CHECK(j["coefficients"][2]["name"] == "Treat*After_2");
    CHECK(j["coefficients"][3]["name"] == "Treat");
    CHECK(j["coefficients"][4]["name"] == "Constant");
    CHECK(j["coefficients"][5]["name"] == "Day_-28");
    CHECK(j["coefficients"][1]["estimate"] == -0.25);
    CHECK(j["coefficients"][1]["se"] == 0.04);
    CHECK(j["coefficients"][1]["p"] == 0.0001);
    CHECK(j["coefficients"][1]["stars"] == "***");
}

TEST_CASE("did table lays events out as columns") {
    DiDResult a;
    a.event = "EventA";
    a.outcome = "spend_index";
    a.spec = DidSpec::dynamic_;
    a.n_obs = 112;
    a.n_clusters = 4;
    a.coefficients = {coef("Treat*After_2", -0.25, 0.125, 0.045, "*"),
                      coef("Treat*After_1", 0.1234, 0.0567, 0.0002, "***"),
                      coef("Treat", 0.3, 0.2, 0.2, ""),
                      coef("Constant", 1.0, 0.1, 0.0001, "***")};
    DiDResult b = a;
    b.event = "EventB";
    b.n_obs = 56;
    b.n_clusters = 2;
    // Truncated window: week 2 never entered the design.
    b.coefficients = {coef("Treat*After_1", 0.5, 0.25, 0.05, "")};

    const std::string text = capture(
        [&](std::ostream& out) { report::write_did_table(out, {a, b}, "cr=cr1 key=group"); });
    CHECK(text ==
          "# outcome=spend_index spec=dynamic\n"
          "# options: cr=cr1 key=group\n"
          "term,EventA,EventB\n"
          "Treat*After_1,0.1234***,0.5000\n"
          ",(0.0567),(0.2500)\n"
          "Treat*After_2,-0.2500*,\n"
          ",(0.1250),\n"
          "Observations,112,56\n"
          "Clusters,4,2\n");
}

TEST_CASE("did table rejects mixed outcomes or specs") {
    DiDResult a;
    a.event = "EventA";
    a.outcome = "spend_index";
    a.spec = DidSpec::dynamic_;
    a.coefficients = {coef("Treat*After_1", 0.1, 0.1, 0.3, "")};
    DiDResult b = a;
    b.event = "EventB";
    b.outcome = "case_rate";

    std::ostringstream out;
    CHECK_THROWS_WITH_AS(report::write_did_table(out, {a, b}, "fp"),
                         "did table: mixed outcomes or specs", input_error);
    b.outcome = a.outcome;
    b.spec = DidSpec::static_;
    CHECK_THROWS_WITH_AS(report::write_did_table(out, {a, b}, "fp"),
                         "did table: mixed outcomes or specs", input_error);
    CHECK_THROWS_WITH_AS(report::write_did_table(out, {}, "fp"), "did table: no results",
                         input_error);
}

TEST_CASE("correlation report json") {
    CorrelationReport rep;
    rep.windows.push_back({MonthKey{2020, 1}, MonthKey{2020, 6}, 6, 0.987});
    rep.windows.push_back({MonthKey{2019, 2}, MonthKey{2019, 12}, 11, -0.125});
    const nlohmann::json j =
        nlohmann::json::parse(report::correlation_report_json(rep, "window_days=7"));
    REQUIRE(j["windows"].size() == 2);
    CHECK(j["windows"][0]["start"] == "2020-01");
    CHECK(j["windows"][0]["end"] == "2020-06");
    CHECK(j["windows"][0]["n_months"] == 6);
    CHECK(j["windows"][0]["pearson"] == 0.987);
    CHECK(j["windows"][1]["pearson"] == -0.125);
    CHECK(j["options"] == "window_days=7");
}
