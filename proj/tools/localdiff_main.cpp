#include "localdiff/config.hpp"
#include "localdiff/errors.hpp"
#include "localdiff/pipeline.hpp"
#include "localdiff/report.hpp"
#include "localdiff/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace localdiff;

namespace {

std::string sanitize(std::string_view name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_')
                   ? c
                   : '_';
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    auto out = open_out(path);
    out << text;
}

void write_issue_file(const fs::path& dir, const char* name,
                      const std::vector<RowIssue>& issues) {
    if (issues.empty()) return;
    auto out = open_out(dir / name);
    report::write_issues_jsonl(out, issues);
    std::cout << "wrote " << (dir / name).string() << " (" << issues.size() << " rows)\n";
}

// Flag overrides shared by the analysis subcommands; flags beat the file.
struct CommonFlags {
    std::string config_path;
    std::string out;
    int window = 7;
    std::vector<std::string> baseline;
    int pre_weeks = 4;
    int post_weeks = 4;
    std::string cr;
    std::string cluster_key;
    bool strict = false;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config_path, "Run configuration JSON")->required();
    sub->add_option("--out", f.out, "Output directory (overrides config)");
    sub->add_option("--window", f.window, "Moving-average window in days")
        ->check(CLI::IsMember({7, 14, 28}));
    sub->add_option("--baseline", f.baseline, "Baseline interval: START END (ISO dates)")
        ->expected(2);
    sub->add_option("--pre-weeks", f.pre_weeks, "Weeks before the announcement");
    sub->add_option("--post-weeks", f.post_weeks, "Weeks after the announcement");
    sub->add_option("--cr", f.cr, "Small-sample correction variant")
        ->check(CLI::IsMember({"cr0", "cr1"}));
    sub->add_option("--cluster-key", f.cluster_key, "Cluster/unit level")
        ->check(CLI::IsMember({"group", "authority"}));
    sub->add_flag("--strict", f.strict, "Abort on the first malformed input row");
}

RunConfig config_for(const CLI::App* sub, const CommonFlags& f) {
    RunConfig cfg = load_config(f.config_path);
    if (sub->count("--out")) cfg.out_dir = f.out;
    if (sub->count("--window")) cfg.window_days = f.window;
    if (sub->count("--baseline")) {
        auto b = Date::parse(f.baseline[0]);
        auto e = Date::parse(f.baseline[1]);
        if (!b || !e) throw input_error("--baseline: bad ISO date");
        cfg.baseline = {*b, *e};
        if (!cfg.baseline.valid()) throw input_error("--baseline: interval is inverted");
    }
    if (sub->count("--pre-weeks")) cfg.pre_weeks = f.pre_weeks;
    if (sub->count("--post-weeks")) cfg.post_weeks = f.post_weeks;
    if (sub->count("--cr")) cfg.cr = f.cr == "cr0" ? CrVariant::cr0 : CrVariant::cr1;
    if (sub->count("--cluster-key"))
        cfg.cluster_key = f.cluster_key == "group" ? ClusterKey::group : ClusterKey::authority;
    if (sub->count("--strict")) cfg.strict = true;
    return cfg;
}

void print_filter_drops(const std::map<std::string, std::int64_t>& drops) {
    if (drops.empty()) return;
    std::cout << "filtered out:";
    for (const auto& [reason, count] : drops) std::cout << " " << reason << "=" << count;
    std::cout << "\n";
}

int cmd_index(const RunConfig& cfg) {
    const GeoLookup geo = parse_geo_lookup(cfg.geo_lookup);
    const Schedule schedule = load_schedule(cfg);
    const SpendData spend = load_spend_data(cfg, geo);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_issue_file(dir, "errors_transactions.jsonl", spend.parse_issues);
    write_issue_file(dir, "errors_geography.jsonl", spend.resolve_issues);
    write_issue_file(dir, "skipped_events.jsonl", schedule.skipped);
    print_filter_drops(spend.filter_drops);

    const std::string cat = cfg.spend_category ? *cfg.spend_category : "all";
    const std::string chan =
        cfg.spend_channel ? std::string(to_string(*cfg.spend_channel)) : "all";
    const Filters filters{cfg.spend_category, cfg.spend_channel};
    for (const auto& pair : schedule.pairs) {
        const DateInterval span =
            spend_out_span(cfg, pair.event.announcement_date, spend.data_end);
        for (const LocalityGroup* group : {&pair.treatment, &pair.control}) {
            IndexSeries index = build_index(spend.tagged, *group, filters, cfg.window_days,
                                            cfg.baseline, span);
            const std::string stem = "index_" + sanitize(group->name) + "_" + sanitize(cat) +
                                     "_" + sanitize(chan) + "_w" +
                                     std::to_string(cfg.window_days);
            {
                auto out = open_out(dir / (stem + ".csv"));
                report::write_index_csv(out, index);
            }
            write_text(dir / (stem + ".meta.json"), report::index_sidecar_json(index));
            std::cout << "wrote " << (dir / (stem + ".csv")).string() << "\n";
        }
    }
    return 0;
}

int cmd_cases(const RunConfig& cfg) {
    const Schedule schedule = load_schedule(cfg);
    const CaseData cases = load_case_data(cfg);

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_issue_file(dir, "errors_cases.jsonl", cases.parse_issues);
    write_issue_file(dir, "skipped_events.jsonl", schedule.skipped);

    for (const auto& pair : schedule.pairs) {
        const DateInterval span =
            case_out_span(cfg, pair.event.announcement_date, cases.data_end);
        for (const LocalityGroup* group : {&pair.treatment, &pair.control}) {
            CaseRateResult rate = case_rate(cases.records, *group, cfg.window_days, span,
                                            !cfg.lenient_case_fill);
            for (const auto& w : rate.warnings) std::cerr << "warning: " << w << "\n";
            const std::string stem = "cases_" + sanitize(group->name) + "_w" +
                                     std::to_string(cfg.window_days);
            {
                auto out = open_out(dir / (stem + ".csv"));
                report::write_case_rate_csv(out, rate.series);
            }
            write_text(dir / (stem + ".meta.json"), report::case_rate_sidecar_json(rate.series));
            std::cout << "wrote " << (dir / (stem + ".csv")).string() << "\n";
        }
    }
    return 0;
}

int cmd_did(const RunConfig& cfg) {
    const Schedule schedule = load_schedule(cfg);
    const bool need_spend =
        std::count(cfg.outcomes.begin(), cfg.outcomes.end(), "spend_index") > 0;
    const bool need_cases = std::count(cfg.outcomes.begin(), cfg.outcomes.end(), "case_rate") > 0;

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_issue_file(dir, "skipped_events.jsonl", schedule.skipped);

    std::optional<GeoLookup> geo;
    std::optional<SpendData> spend;
    std::optional<CaseData> cases;
    if (need_spend) {
        geo = parse_geo_lookup(cfg.geo_lookup);
        spend = load_spend_data(cfg, *geo);
        write_issue_file(dir, "errors_transactions.jsonl", spend->parse_issues);
        write_issue_file(dir, "errors_geography.jsonl", spend->resolve_issues);
        print_filter_drops(spend->filter_drops);
    }
    if (need_cases) {
        cases = load_case_data(cfg);
        write_issue_file(dir, "errors_cases.jsonl", cases->parse_issues);
    }

    std::map<std::pair<std::string, DidSpec>, std::vector<DiDResult>> tables;
    for (const auto& pair : schedule.pairs) {
        for (const auto& outcome : cfg.outcomes) {
            PreparedEvent prepared =
                outcome == "spend_index"
                    ? prepare_spend_units(spend->tagged, pair, schedule.population, cfg,
                                          spend->data_end)
                    : prepare_case_units(cases->records, pair, schedule.population, cfg,
                                         cases->data_end);
            for (const auto& w : prepared.warnings) std::cerr << "warning: " << w << "\n";
            const EventUnits units = prepared.view();
            for (DidSpec spec : cfg.specs) {
                DidOptions options{spec, cfg.cr, cfg.cluster_key, cfg.pre_weeks, cfg.post_weeks};
                DiDResult result = run_did(units, outcome, options);
                const std::string stem = "did_" + sanitize(result.event) + "_" +
                                         sanitize(outcome) + "_" +
                                         std::string(to_string(spec));
                write_text(dir / (stem + ".json"), report::did_result_json(result));
                std::cout << "wrote " << (dir / (stem + ".json")).string() << "\n";
                tables[{outcome, spec}].push_back(std::move(result));
            }
        }
    }
    for (const auto& [key, results] : tables) {
        const std::string stem =
            "did_table_" + sanitize(key.first) + "_" + std::string(to_string(key.second));
        auto out = open_out(dir / (stem + ".csv"));
        report::write_did_table(out, results, options_fingerprint(cfg));
        std::cout << "wrote " << (dir / (stem + ".csv")).string() << "\n";
    }
    return 0;
}

int cmd_validate(const RunConfig& cfg) {
    if (cfg.transactions.empty()) throw input_error("config: transactions path not set");
    if (cfg.benchmark.empty()) throw input_error("config: benchmark path not set");
    ParseOptions opt;
    opt.strict = cfg.strict;
    opt.window = cfg.span;
    ParseResult parsed = parse_transactions(cfg.transactions, opt);
    FilterResult filtered = filter_transactions(std::move(parsed.txns));
    print_filter_drops(filtered.drops);

    const auto own = monthly_yoy_growth(monthly_totals(filtered.kept));
    const auto benchmark = parse_benchmark(cfg.benchmark);
    const CorrelationReport rep =
        validate_against_benchmark(own, benchmark, cfg.benchmark_windows);

    for (const auto& w : rep.windows)
        std::cout << w.start.to_string() << ".." << w.end.to_string() << " n_months=" << w.n_months
                  << " pearson=" << report::fmt_double(w.pearson) << "\n";

    const fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    write_issue_file(dir, "errors_transactions.jsonl", parsed.errors);
    write_text(dir / "validation.json",
               report::correlation_report_json(rep, options_fingerprint(cfg)));
    std::cout << "wrote " << (dir / "validation.json").string() << "\n";
    return 0;
}

int cmd_synth(const std::string& scenario_path, const std::string& out_dir, bool seed_set,
              std::uint64_t seed) {
    synth::ScenarioConfig scenario;
    if (!scenario_path.empty()) {
        std::ifstream in(scenario_path, std::ios::binary);
        if (!in) throw input_error("cannot open scenario file: " + scenario_path);
        std::ostringstream buf;
        buf << in.rdbuf();
        scenario = synth::scenario_from_json_text(buf.str());
    }
    if (seed_set) scenario.seed = seed;

    const synth::ScenarioData data = synth::gen_scenario(scenario);
    synth::write_scenario(data, out_dir);
    write_text(fs::path(out_dir) / "scenario.json",
               synth::scenario_to_json_text(scenario) + "\n");
    std::cout << "wrote " << out_dir << ": " << data.transactions.size() << " transactions, "
              << data.cases.size() << " case rows, " << data.lockdowns.size() << " event(s)\n";
    std::cout << "ground truth: " << (fs::path(out_dir) / "ground_truth.json").string() << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Locality spending indices and lockdown event studies"};
    app.require_subcommand(1);

    CommonFlags f_index, f_cases, f_did, f_validate;
    auto* sub_index = app.add_subcommand("index", "Build de-seasoned spending indices");
    add_common(sub_index, f_index);
    auto* sub_cases = app.add_subcommand("cases", "Build case-rate series");
    add_common(sub_cases, f_cases);
    auto* sub_did = app.add_subcommand("did", "Run event-study estimations");
    add_common(sub_did, f_did);
    auto* sub_validate = app.add_subcommand("validate", "Correlate spending with a benchmark");
    add_common(sub_validate, f_validate);

    std::string scenario_path;
    std::string synth_out = "synth_out";
    std::uint64_t seed = 0;
    auto* sub_synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    sub_synth->add_option("--scenario", scenario_path, "Scenario JSON (defaults used if omitted)");
    sub_synth->add_option("--out", synth_out, "Output directory");
    auto* seed_opt = sub_synth->add_option("--seed", seed, "Override the scenario seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(sub_index)) return cmd_index(config_for(sub_index, f_index));
        if (app.got_subcommand(sub_cases)) return cmd_cases(config_for(sub_cases, f_cases));
        if (app.got_subcommand(sub_did)) return cmd_did(config_for(sub_did, f_did));
        if (app.got_subcommand(sub_validate))
            return cmd_validate(config_for(sub_validate, f_validate));
        if (app.got_subcommand(sub_synth))
            return cmd_synth(scenario_path, synth_out, seed_opt->count() > 0, seed);
    } catch (const input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const analysis_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
