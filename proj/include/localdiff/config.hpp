#pragma once

#include "localdiff/date.hpp"
#include "localdiff/estimator.hpp"
#include "localdiff/ingest.hpp"
#include "localdiff/types.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace localdiff {

/// One run, fully specified. Loaded from a JSON file; the CLI layers flag
/// overrides on top (flags > file > defaults), so the file plus the command
/// line reproduce a run exactly.
struct RunConfig {
    std::string transactions;
    std::string cases;
    std::string lockdowns;
    std::string population;
    std::string geo_lookup;
    std::string benchmark; // optional
    std::string out_dir = "out";

    int window_days = 7;
    DateInterval baseline{Date::from_ymd(2020, 1, 8), Date::from_ymd(2020, 1, 28)};
    int pre_weeks = 4;
    int post_weeks = 4;
    std::vector<std::string> outcomes = {"spend_index", "case_rate"};
    std::vector<DidSpec> specs = {DidSpec::static_, DidSpec::dynamic_};
    CrVariant cr = CrVariant::cr1;
    ClusterKey cluster_key = ClusterKey::group;
    bool strict = false;
    // Missing (authority, date) case observations are errors unless this
    // opts into zero-fill with warnings; silent zeros would bias rates down.
    bool lenient_case_fill = false;
    GeoBasis geography_basis = GeoBasis::cardholder;

    // Spend-index filters; channel defaults to offline spending.
    std::optional<std::string> spend_category;
    std::optional<Channel> spend_channel = Channel::offline;

    // Optional hard clamp on the series span; otherwise derived from the
    // schedule and the data.
    std::optional<DateInterval> span;

    // Month windows for benchmark validation; empty = full overlap.
    std::vector<std::pair<MonthKey, MonthKey>> benchmark_windows;
};

/// Parses config JSON. Unknown keys are errors so typos cannot silently
/// fall back to defaults. Relative input paths are resolved against
/// `base_dir` when given.
RunConfig config_from_json_text(const std::string& text, const std::string& base_dir = "");

/// Reads the file and resolves relative paths against its directory.
RunConfig load_config(const std::string& path);

/// One-line option fingerprint stamped into output artifacts.
std::string options_fingerprint(const RunConfig& cfg);

} // namespace localdiff
