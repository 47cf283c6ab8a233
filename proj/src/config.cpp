#include "localdiff/config.hpp"

#include "localdiff/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace localdiff {

namespace {

using nlohmann::json;

Date parse_date_key(const json& j, const char* key) {
    auto d = Date::parse(j.at(key).get<std::string>());
    if (!d) throw input_error(std::string("config: bad date in ") + key);
    return *d;
}

MonthKey parse_month(const std::string& s, const char* what) {
    auto m = MonthKey::parse(s);
    if (!m) throw input_error(std::string("config: bad month in ") + what + ": " + s);
    return *m;
}

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || base_dir.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

void validate(const RunConfig& cfg) {
    if (cfg.window_days != 7 && cfg.window_days != 14 && cfg.window_days != 28)
        throw input_error("config: window_days must be 7, 14 or 28");
    if (!cfg.baseline.valid()) throw input_error("config: baseline interval is inverted");
    if (cfg.pre_weeks < 1 || cfg.post_weeks < 1)
        throw input_error("config: pre_weeks and post_weeks must be at least 1");
    if (cfg.outcomes.empty()) throw input_error("config: outcomes is empty");
    for (const auto& o : cfg.outcomes)
        if (o != "spend_index" && o != "case_rate")
            throw input_error("config: unknown outcome \"" + o + "\"");
    if (cfg.specs.empty()) throw input_error("config: specs is empty");
    if (cfg.span && !cfg.span->valid()) throw input_error("config: span interval is inverted");
    for (const auto& [a, b] : cfg.benchmark_windows)
        if (b < a) throw input_error("config: benchmark window is inverted");
}

} // namespace

RunConfig config_from_json_text(const std::string& text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw input_error("config must be a JSON object");

    static const std::set<std::string> known = {
        "transactions", "cases", "lockdowns", "population", "geo_lookup", "benchmark",
        "out_dir", "window_days", "baseline_start", "baseline_end", "pre_weeks", "post_weeks",
        "outcomes", "specs", "cr", "cluster_key", "strict", "lenient_case_fill",
        "geography_basis", "spend_category", "spend_channel", "span_start", "span_end",
        "benchmark_windows"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key())) throw input_error("config: unknown key \"" + it.key() + "\"");

    RunConfig cfg;
    try {
        auto path = [&](const char* key, std::string& slot) {
            if (j.contains(key)) slot = resolve_path(j[key].get<std::string>(), base_dir);
        };
        path("transactions", cfg.transactions);
        path("cases", cfg.cases);
        path("lockdowns", cfg.lockdowns);
        path("population", cfg.population);
        path("geo_lookup", cfg.geo_lookup);
        path("benchmark", cfg.benchmark);
        if (j.contains("out_dir"))
            cfg.out_dir = resolve_path(j["out_dir"].get<std::string>(), base_dir);
        if (j.contains("window_days")) cfg.window_days = j["window_days"].get<int>();
        if (j.contains("baseline_start")) cfg.baseline.begin = parse_date_key(j, "baseline_start");
        if (j.contains("baseline_end")) cfg.baseline.end = parse_date_key(j, "baseline_end");
        if (j.contains("pre_weeks")) cfg.pre_weeks = j["pre_weeks"].get<int>();
        if (j.contains("post_weeks")) cfg.post_weeks = j["post_weeks"].get<int>();
        if (j.contains("outcomes")) cfg.outcomes = j["outcomes"].get<std::vector<std::string>>();
        if (j.contains("specs")) {
            cfg.specs.clear();
            for (const auto& s : j["specs"]) {
                const auto name = s.get<std::string>();
                if (name == "static")
                    cfg.specs.push_back(DidSpec::static_);
                else if (name == "dynamic")
                    cfg.specs.push_back(DidSpec::dynamic_);
                else
                    throw input_error("config: unknown spec \"" + name + "\"");
            }
        }
        if (j.contains("cr")) {
            const auto name = j["cr"].get<std::string>();
            if (name == "cr0")
                cfg.cr = CrVariant::cr0;
            else if (name == "cr1")
                cfg.cr = CrVariant::cr1;
            else
                throw input_error("config: cr must be cr0 or cr1");
        }
        if (j.contains("cluster_key")) {
            const auto name = j["cluster_key"].get<std::string>();
            if (name == "group")
                cfg.cluster_key = ClusterKey::group;
            else if (name == "authority")
                cfg.cluster_key = ClusterKey::authority;
            else
                throw input_error("config: cluster_key must be group or authority");
        }
        if (j.contains("strict")) cfg.strict = j["strict"].get<bool>();
        if (j.contains("lenient_case_fill"))
            cfg.lenient_case_fill = j["lenient_case_fill"].get<bool>();
        if (j.contains("geography_basis")) {
            const auto name = j["geography_basis"].get<std::string>();
            if (name == "cardholder")
                cfg.geography_basis = GeoBasis::cardholder;
            else if (name == "merchant")
                cfg.geography_basis = GeoBasis::merchant;
            else
                throw input_error("config: geography_basis must be cardholder or merchant");
        }
        if (j.contains("spend_category")) {
            const auto name = j["spend_category"].get<std::string>();
            if (name == "all")
                cfg.spend_category.reset();
            else
                cfg.spend_category = name;
        }
        if (j.contains("spend_channel")) {
            const auto name = j["spend_channel"].get<std::string>();
            if (name == "all")
                cfg.spend_channel.reset();
            else if (auto c = channel_from_string(name))
                cfg.spend_channel = *c;
            else
                throw input_error("config: spend_channel must be online, offline or all");
        }
        if (j.contains("span_start") || j.contains("span_end")) {
            if (!j.contains("span_start") || !j.contains("span_end"))
                throw input_error("config: span_start and span_end must be given together");
            cfg.span = DateInterval{parse_date_key(j, "span_start"), parse_date_key(j, "span_end")};
        }
        if (j.contains("benchmark_windows")) {
            for (const auto& w : j["benchmark_windows"])
                cfg.benchmark_windows.emplace_back(
                    parse_month(w.at("start").get<std::string>(), "benchmark_windows.start"),
                    parse_month(w.at("end").get<std::string>(), "benchmark_windows.end"));
        }
    } catch (const json::exception& e) {
        throw input_error(std::string("config: bad value type: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str(), std::filesystem::path(path).parent_path().string());
}

std::string options_fingerprint(const RunConfig& cfg) {
    std::ostringstream out;
    out << "window_days=" << cfg.window_days << " baseline=" << cfg.baseline.begin.to_string()
        << ".." << cfg.baseline.end.to_string() << " pre_weeks=" << cfg.pre_weeks
        << " post_weeks=" << cfg.post_weeks << " cr=" << to_string(cfg.cr)
        << " cluster_key=" << to_string(cfg.cluster_key) << " geography="
        << (cfg.geography_basis == GeoBasis::cardholder ? "cardholder" : "merchant")
        << " category=" << (cfg.spend_category ? *cfg.spend_category : "all") << " channel="
        << (cfg.spend_channel ? to_string(*cfg.spend_channel) : "all")
        << " strict=" << (cfg.strict ? "true" : "false")
        << " case_fill=" << (cfg.lenient_case_fill ? "zero" : "strict");
    return out.str();
}

} // namespace localdiff
