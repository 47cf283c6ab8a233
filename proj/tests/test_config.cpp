#include "localdiff/config.hpp"
#include "localdiff/errors.hpp"
#include "localdiff/pipeline.hpp"
#include "localdiff/synth.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

using namespace localdiff;
using testutil::date;

TEST_CASE("empty config json yields the documented defaults") {
    const RunConfig cfg = config_from_json_text("{}");
    CHECK(cfg.transactions.empty());
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.window_days == 7);
    CHECK(cfg.baseline.begin == date("2020-01-08"));
    CHECK(cfg.baseline.end == date("2020-01-28"));
    CHECK(cfg.pre_weeks == 4);
    CHECK(cfg.post_weeks == 4);
    CHECK(cfg.outcomes == std::vector<std::string>{"spend_index", "case_rate"});
    REQUIRE(cfg.specs.size() == 2);
    CHECK(cfg.specs[0] == DidSpec::static_);
    CHECK(cfg.specs[1] == DidSpec::dynamic_);
    CHECK(cfg.cr == CrVariant::cr1);
    CHECK(cfg.cluster_key == ClusterKey::group);
    CHECK_FALSE(cfg.strict);
    CHECK_FALSE(cfg.lenient_case_fill);
    CHECK(cfg.geography_basis == GeoBasis::cardholder);
    CHECK_FALSE(cfg.spend_category.has_value());
    REQUIRE(cfg.spend_channel.has_value());
    CHECK(*cfg.spend_channel == Channel::offline);
    CHECK_FALSE(cfg.span.has_value());
    CHECK(cfg.benchmark_windows.empty());
}

TEST_CASE("config json sets every knob") {
    const RunConfig cfg = config_from_json_text(R"({
        "transactions": "/abs/t.csv",
        "cases": "c.csv",
        "lockdowns": "l.csv",
        "population": "p.csv",
        "geo_lookup": "g.csv",
        "benchmark": "b.csv",
        "out_dir": "results",
        "window_days": 14,
        "baseline_start": "2019-12-01",
        "baseline_end": "2019-12-21",
        "pre_weeks": 3,
        "post_weeks": 2,
        "outcomes": ["case_rate"],
        "specs": ["dynamic"],
        "cr": "cr0",
        "cluster_key": "authority",
        "strict": true,
        "lenient_case_fill": true,
        "geography_basis": "merchant",
        "spend_category": "retail",
        "spend_channel": "online",
        "span_start": "2019-01-01",
        "span_end": "2020-10-31",
        "benchmark_windows": [{"start": "2020-01", "end": "2020-06"}]
    })");
    CHECK(cfg.transactions == "/abs/t.csv");
    CHECK(cfg.cases == "c.csv");
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.window_days == 14);
    CHECK(cfg.baseline.begin == date("2019-12-01"));
    CHECK(cfg.baseline.end == date("2019-12-21"));
    CHECK(cfg.pre_weeks == 3);
    CHECK(cfg.post_weeks == 2);
    CHECK(cfg.outcomes == std::vector<std::string>{"case_rate"});
    CHECK(cfg.specs == std::vector<DidSpec>{DidSpec::dynamic_});
    CHECK(cfg.cr == CrVariant::cr0);
    CHECK(cfg.cluster_key == ClusterKey::authority);
    CHECK(cfg.strict);
    CHECK(cfg.lenient_case_fill);
    CHECK(cfg.geography_basis == GeoBasis::merchant);
    CHECK(cfg.spend_category == "retail");
    CHECK(cfg.spend_channel == Channel::online);
    REQUIRE(cfg.span.has_value());
    CHECK(cfg.span->begin == date("2019-01-01"));
    CHECK(cfg.span->end == date("2020-10-31"));
    REQUIRE(cfg.benchmark_windows.size() == 1);
    CHECK(cfg.benchmark_windows[0].first == MonthKey{2020, 1});
    CHECK(cfg.benchmark_windows[0].second == MonthKey{2020, 6});
}

TEST_CASE("\"all\" clears the spend filters") {
    const RunConfig cfg =
        config_from_json_text(R"({"spend_category": "all", "spend_channel": "all"})");
    CHECK_FALSE(cfg.spend_category.has_value());
    CHECK_FALSE(cfg.spend_channel.has_value());
}

TEST_CASE("config rejects unknown keys and bad values") {
    CHECK_THROWS_WITH_AS((void)config_from_json_text("{\"windowdays\": 7}"),
                         "config: unknown key \"windowdays\"", input_error);
    CHECK_THROWS_AS((void)config_from_json_text("nope"), input_error);
    CHECK_THROWS_WITH_AS((void)config_from_json_text("[]"), "config must be a JSON object",
                         input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"window_days\": 10}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"window_days\": \"seven\"}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text(
                        "{\"baseline_start\": \"2020-02-01\", \"baseline_end\": \"2020-01-01\"}"),
                    input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"baseline_start\": \"2020-2-1\"}"),
                    input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"pre_weeks\": 0}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"outcomes\": []}"), input_error);
    CHECK_THROWS_WITH_AS((void)config_from_json_text("{\"outcomes\": [\"gdp\"]}"),
                         "config: unknown outcome \"gdp\"", input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"specs\": []}"), input_error);
    CHECK_THROWS_WITH_AS((void)config_from_json_text("{\"specs\": [\"quadratic\"]}"),
                         "config: unknown spec \"quadratic\"", input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"cr\": \"cr2\"}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"cluster_key\": \"region\"}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"geography_basis\": \"both\"}"), input_error);
    CHECK_THROWS_AS((void)config_from_json_text("{\"spend_channel\": \"mail\"}"), input_error);
    CHECK_THROWS_WITH_AS((void)config_from_json_text("{\"span_start\": \"2020-01-01\"}"),
                         "config: span_start and span_end must be given together", input_error);
    CHECK_THROWS_AS((void)config_from_json_text(
                        "{\"span_start\": \"2020-02-01\", \"span_end\": \"2020-01-01\"}"),
                    input_error);
    CHECK_THROWS_AS((void)config_from_json_text(
                        "{\"benchmark_windows\": [{\"start\": \"2020-06\", \"end\": \"2020-01\"}]}"),
                    input_error);
    CHECK_THROWS_AS((void)config_from_json_text(
                        "{\"benchmark_windows\": [{\"start\": \"June\", \"end\": \"2020-07\"}]}"),
                    input_error);
}

TEST_CASE("relative paths resolve against the base directory") {
    const RunConfig cfg = config_from_json_text(
        R"({"transactions": "data/t.csv", "cases": "/abs/c.csv", "out_dir": "results"})",
        "/base");
    CHECK(cfg.transactions == "/base/data/t.csv");
    CHECK(cfg.cases == "/abs/c.csv");
    CHECK(cfg.out_dir == "/base/results");

    // No base directory: paths pass through untouched.
    const RunConfig raw =
        config_from_json_text(R"({"transactions": "data/t.csv"})");
    CHECK(raw.transactions == "data/t.csv");
}

TEST_CASE("load_config resolves against the file's directory") {
    testutil::TempDir dir;
    testutil::write_text(dir.file("config.json"),
                         R"({"transactions": "t.csv", "window_days": 28})");
    const RunConfig cfg = load_config(dir.file("config.json"));
    CHECK(cfg.transactions == dir.file("t.csv"));
    CHECK(cfg.window_days == 28);
    // out_dir was not set, so the default stays relative.
    CHECK(cfg.out_dir == "out");

    CHECK_THROWS_WITH_AS((void)load_config(dir.file("missing.json")),
                         ("cannot open config file: " + dir.file("missing.json")).c_str(),
                         input_error);
}

TEST_CASE("options fingerprint pins the full option set") {
    RunConfig cfg;
    CHECK(options_fingerprint(cfg) ==
          "window_days=7 baseline=2020-01-08..2020-01-28 pre_weeks=4 post_weeks=4 cr=cr1 "
          "cluster_key=group geography=cardholder category=all channel=offline strict=false "
          "case_fill=strict");

    cfg.window_days = 14;
    cfg.baseline = {date("2019-12-01"), date("2019-12-21")};
    cfg.pre_weeks = 3;
    cfg.post_weeks = 2;
    cfg.cr = CrVariant::cr0;
    cfg.cluster_key = ClusterKey::authority;
    cfg.geography_basis = GeoBasis::merchant;
    cfg.spend_category = "retail";
    cfg.spend_channel.reset();
    cfg.strict = true;
    cfg.lenient_case_fill = true;
    CHECK(options_fingerprint(cfg) ==
          "window_days=14 baseline=2019-12-01..2019-12-21 pre_weeks=3 post_weeks=2 cr=cr0 "
          "cluster_key=authority geography=merchant category=retail channel=all strict=true "
          "case_fill=zero");
}

TEST_CASE("spend and case spans follow the window and the data end") {
    RunConfig cfg; // defaults: baseline 2020-01-08..28, pre 4, post 4
    const Date announce = date("2020-07-30");

    DateInterval span = spend_out_span(cfg, announce, date("2020-12-31"));
    CHECK(span.begin == date("2020-01-08")); // baseline reaches further back
    CHECK(span.end == date("2020-08-26"));   // announcement + 27

    // Data ends mid-window: the post side truncates to the data.
    span = spend_out_span(cfg, announce, date("2020-08-10"));
    CHECK(span.end == date("2020-08-10"));

    // A configured span clamp truncates like a data end.
    cfg.span = DateInterval{date("2019-01-01"), date("2020-08-05")};
    span = spend_out_span(cfg, announce, date("2020-12-31"));
    CHECK(span.end == date("2020-08-05"));
    cfg.span.reset();

    // The case span ignores the baseline: it is the estimation window only.
    DateInterval cases = case_out_span(cfg, announce, date("2020-12-31"));
    CHECK(cases.begin == date("2020-07-02"));
    CHECK(cases.end == date("2020-08-26"));

    CHECK_THROWS_WITH_AS((void)spend_out_span(cfg, announce, date("2020-07-29")),
                         "no post-announcement data before 2020-07-29", analysis_error);

    // A baseline that reaches past the truncated window still extends the
    // spend span forward.
    cfg.baseline = {date("2020-08-20"), date("2020-08-30")};
    span = spend_out_span(cfg, announce, date("2020-08-10"));
    CHECK(span.end == date("2020-08-30"));
}

namespace {

/// Two authorities with constant 1.5x year-over-year growth; every index
/// value normalizes to 1 exactly up to rounding.
TaggedTransactions constant_ratio_tagged() {
    std::vector<std::pair<std::string, Transaction>> rows;
    for (Date d = date("2019-01-01"); d <= date("2020-09-30"); ++d) {
        const bool prior = d.year() == 2019;
        rows.push_back({"A", testutil::make_txn(d.to_string().c_str(), prior ? 200 : 300)});
        rows.push_back({"B", testutil::make_txn(d.to_string().c_str(), prior ? 1000 : 1500)});
    }
    return testutil::make_tagged(rows);
}

EventPair event_fixture() {
    EventPair pair;
    pair.event.name = "E1";
    pair.event.announcement_date = Date::from_ymd(2020, 7, 30);
    pair.event.treated_authorities = {"A"};
    pair.event.control_authorities = {"B"};
    pair.treatment = {"E1", {"A"}, 200000, GroupRole::treatment};
    pair.control = {"E1_control", {"B"}, 400000, GroupRole::control};
    return pair;
}

std::vector<CaseRecord> case_fixture() {
    std::vector<CaseRecord> records;
    for (Date d = date("2020-06-20"); d <= date("2020-08-26"); ++d) {
        records.push_back({"A", d, 14});
        records.push_back({"B", d, 28});
    }
    return records;
}

} // namespace

TEST_CASE("prepare_spend_units builds group units with group weights") {
    const TaggedTransactions tagged = constant_ratio_tagged();
    const EventPair pair = event_fixture();
    const PopulationTable population = {{"A", {"R", 200000}}, {"B", {"R", 400000}}};
    RunConfig cfg;

    const PreparedEvent prepared =
        prepare_spend_units(tagged, pair, population, cfg, date("2020-09-30"));
    CHECK(prepared.event == "E1");
    CHECK(prepared.announcement == date("2020-07-30"));
    REQUIRE(prepared.treat_units.size() == 1);
    REQUIRE(prepared.control_units.size() == 1);
    CHECK(prepared.treat_units[0].name == "E1");
    CHECK(prepared.treat_units[0].weight == 200000.0);
    CHECK(prepared.control_units[0].name == "E1_control");
    CHECK(prepared.control_units[0].weight == 400000.0);
    CHECK(prepared.warnings.empty());

    const RealSeries& s = prepared.treat_units[0].series;
    CHECK(s.start == date("2020-01-08"));
    CHECK(s.end() == date("2020-08-26"));
    for (Date d = s.start; d <= s.end(); ++d) {
        REQUIRE(s.defined(d));
        REQUIRE(std::fabs(s.at(d) - 1.0) <= 1e-12);
    }

    const EventUnits view = prepared.view();
    CHECK(view.event == "E1");
    CHECK(view.treat_units[0].name == "E1");
    CHECK(view.treat_units[0].series == &prepared.treat_units[0].series);
    CHECK(view.control_units[0].weight == 400000.0);
}

TEST_CASE("prepare_spend_units splits authority units with table weights") {
    const TaggedTransactions tagged = constant_ratio_tagged();
    const EventPair pair = event_fixture();
    const PopulationTable population = {{"A", {"R", 100000}}, {"B", {"R", 50000}}};
    RunConfig cfg;
    cfg.cluster_key = ClusterKey::authority;

    const PreparedEvent prepared =
        prepare_spend_units(tagged, pair, population, cfg, date("2020-09-30"));
    REQUIRE(prepared.treat_units.size() == 1);
    CHECK(prepared.treat_units[0].name == "A");
    CHECK(prepared.treat_units[0].weight == 100000.0);
    CHECK(prepared.control_units[0].name == "B");
    CHECK(prepared.control_units[0].weight == 50000.0);

    // Single-member groups aggregate identically under either key.
    const PopulationTable group_pop = {{"A", {"R", 100000}}, {"B", {"R", 50000}}};
    RunConfig group_cfg;
    const PreparedEvent by_group =
        prepare_spend_units(tagged, pair, group_pop, group_cfg, date("2020-09-30"));
    CHECK(prepared.treat_units[0].series.values == by_group.treat_units[0].series.values);

    const PopulationTable missing = {{"A", {"R", 100000}}};
    CHECK_THROWS_WITH_AS(
        (void)prepare_spend_units(tagged, pair, missing, cfg, date("2020-09-30")),
        "authority missing from population table: B", input_error);
}

TEST_CASE("prepare_spend_units truncates at the data end") {
    const TaggedTransactions tagged = constant_ratio_tagged();
    const EventPair pair = event_fixture();
    const PopulationTable population = {{"A", {"R", 1}}, {"B", {"R", 1}}};
    RunConfig cfg;
    const PreparedEvent prepared =
        prepare_spend_units(tagged, pair, population, cfg, date("2020-08-10"));
    CHECK(prepared.treat_units[0].series.end() == date("2020-08-10"));
}

TEST_CASE("prepare_case_units pools and scales per group") {
    const std::vector<CaseRecord> cases = case_fixture();
    const EventPair pair = event_fixture();
    const PopulationTable population = {{"A", {"R", 200000}}, {"B", {"R", 400000}}};
    RunConfig cfg;

    const PreparedEvent prepared =
        prepare_case_units(cases, pair, population, cfg, date("2020-08-26"));
    CHECK(prepared.warnings.empty());
    REQUIRE(prepared.treat_units.size() == 1);
    const RealSeries& t = prepared.treat_units[0].series;
    const RealSeries& c = prepared.control_units[0].series;
    CHECK(t.start == date("2020-07-02"));
    CHECK(t.end() == date("2020-08-26"));
    for (Date d = t.start; d <= t.end(); ++d) {
        REQUIRE(t.at(d) == 7.0); // 14 cases / 200k people, per 100k
        REQUIRE(c.at(d) == 7.0); // 28 cases / 400k people
    }
}

TEST_CASE("prepare_case_units surfaces lenient zero fills as warnings") {
    std::vector<CaseRecord> cases = case_fixture();
    // Drop the last three days for authority A.
    cases.erase(std::remove_if(cases.begin(), cases.end(),
                               [](const CaseRecord& r) {
                                   return r.authority == "A" && r.date >= Date::from_ymd(2020, 8, 24);
                               }),
                cases.end());
    const EventPair pair = event_fixture();
    const PopulationTable population = {{"A", {"R", 200000}}, {"B", {"R", 400000}}};

    RunConfig strict_cfg;
    CHECK_THROWS_AS(
        (void)prepare_case_units(cases, pair, population, strict_cfg, date("2020-08-26")),
        input_error);

    RunConfig lenient_cfg;
    lenient_cfg.lenient_case_fill = true;
    const PreparedEvent prepared =
        prepare_case_units(cases, pair, population, lenient_cfg, date("2020-08-26"));
    REQUIRE(prepared.warnings.size() == 1);
    CHECK(prepared.warnings[0] == "authority A: 3 missing dates treated as zero (first 2020-08-24)");
}

TEST_CASE("pipeline loaders wire generated files together") {
    testutil::TempDir dir;
    synth::ScenarioConfig scfg;
    scfg.seed = 11;
    scfg.authorities_per_group = 2;
    scfg.accounts_per_authority = 5;
    scfg.daily_txns_per_authority = 4;
    scfg.contamination_per_day = 3;
    scfg.data_start = date("2019-01-01");
    scfg.data_end = date("2020-08-26");
    scfg.announcement = date("2020-07-30");
    const synth::ScenarioData data = synth::gen_scenario(scfg);
    synth::write_scenario(data, dir.path().string());

    RunConfig cfg;
    cfg.transactions = dir.file("transactions.csv");
    cfg.cases = dir.file("cases.csv");
    cfg.lockdowns = dir.file("lockdowns.csv");
    cfg.population = dir.file("population.csv");
    cfg.geo_lookup = dir.file("geo_lookup.csv");

    const Schedule schedule = load_schedule(cfg);
    REQUIRE(schedule.pairs.size() == 1);
    CHECK(schedule.skipped.empty());
    CHECK(schedule.pairs[0].event.name == "EventA");
    CHECK(schedule.pairs[0].treatment.name == "EventA");
    CHECK(schedule.pairs[0].control.name == "EventA_control");
    CHECK(schedule.pairs[0].treatment.population_2019 == 300000);
    CHECK(schedule.pairs[0].control.population_2019 == 240000);

    const GeoLookup geo = parse_geo_lookup(cfg.geo_lookup);
    const SpendData spend = load_spend_data(cfg, geo);
    CHECK(spend.parse_issues.empty());
    CHECK(spend.resolve_issues.empty());
    const int n_days = date("2020-08-26") - date("2019-01-01") + 1;
    CHECK(spend.filter_drops.at("non_gbp") == 2 * n_days);
    CHECK(spend.filter_drops.at("non_consumer_credit") == 2 * n_days);
    CHECK(spend.filter_drops.at("over_cap") == 2 * n_days);
    CHECK(spend.data_start == date("2019-01-01"));
    CHECK(spend.data_end == date("2020-08-26"));
    CHECK(spend.tagged.txns.size() ==
          data.transactions.size() - static_cast<std::size_t>(6 * n_days));
    CHECK(spend.tagged.authorities.size() == 4);

    const CaseData case_data = load_case_data(cfg);
    CHECK(case_data.parse_issues.empty());
    CHECK(case_data.records.size() == static_cast<std::size_t>(4 * n_days));
    CHECK(case_data.data_start == date("2019-01-01"));
    CHECK(case_data.data_end == date("2020-08-26"));
}
