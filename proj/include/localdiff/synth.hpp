#pragma once

#include "localdiff/date.hpp"
#include "localdiff/estimator.hpp"
#include "localdiff/linalg.hpp"
#include "localdiff/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace localdiff::synth {

/// SplitMix64: tiny, well-known, and identical across platforms, so fixtures
/// generated from (seed, label) pairs are reproducible anywhere.
struct SplitMix64 {
    std::uint64_t state = 0;

    std::uint64_t next();
    double uniform(); // in (0, 1]
};

/// Independent stream for a data kind: mixes the label hash into the seed.
SplitMix64 substream(std::uint64_t seed, std::string_view label);

/// Standard normals by Box-Muller over a SplitMix64 stream.
struct NormalRng {
    SplitMix64 sm;
    bool has_spare = false;
    double spare = 0.0;

    explicit NormalRng(SplitMix64 s) : sm(s) {}
    double next();
};

std::uint64_t fnv1a(std::string_view bytes);

struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::string event_name = "EventA";
    int authorities_per_group = 4;
    int accounts_per_authority = 50;
    int daily_txns_per_authority = 40;
    std::int64_t population_treated = 150000; // per treated authority
    std::int64_t population_control = 120000; // per control authority
    double group_offset = 1.25; // treated base intensity over control
    double online_share = 0.0;
    std::vector<std::pair<std::string, double>> category_shares = {
        {"retail", 0.6}, {"food_beverage", 0.4}};

    struct Shock {
        Date start;
        Date end;
        double multiplier = 1.0;
    };
    std::vector<Shock> common_shock; // applied to both groups' daily totals

    std::map<int, double> planted_effects; // W in {-3..-1, 1..4} -> delta_W
    double noise_scale = 0.0;              // lognormal sigma on unit-day totals
    int contamination_per_day = 0;         // filter-fodder rows per group-day

    Date data_start = Date::from_ymd(2019, 1, 1);
    Date data_end = Date::from_ymd(2020, 10, 31);
    Date announcement = Date::from_ymd(2020, 7, 30);
    int window_days = 7;
    DateInterval baseline{Date::from_ymd(2020, 1, 8), Date::from_ymd(2020, 1, 28)};
    int pre_weeks = 4;
    int post_weeks = 4;

    std::int64_t amount_median_pence = 1500;
    std::int64_t amount_mean_pence = 3900;

    double case_base_per_100k = 8.0;
    double case_amplitude = 0.4;
    int case_period_days = 90;
};

ScenarioConfig scenario_from_json_text(const std::string& text);
std::string scenario_to_json_text(const ScenarioConfig& cfg); // canonical form

/// Treatment effects actually induced on the index scale, from a replay of
/// the noise-free totals through an independent re-derivation of the index
/// and the balanced-panel closed form. Group mode replays group totals;
/// authority mode replays per-authority indices and takes weighted means.
struct InducedEffects {
    double static_effect = 0.0;
    std::map<int, double> dynamic_effects; // W -> effect, all W != 0 in window
};

struct GroundTruth {
    std::map<int, double> planted_effects;
    InducedEffects group_mode;
    InducedEffects authority_mode;
    std::uint64_t seed = 0;
    std::string config_hash;
};

std::string ground_truth_to_json_text(const GroundTruth& truth);

struct ScenarioData {
    std::vector<Transaction> transactions;
    std::vector<CaseRecord> cases;
    std::vector<LockdownEvent> lockdowns;
    PopulationTable population;
    GeoLookup geo;
    GroundTruth truth;
    std::vector<std::string> treated_authorities;
    std::vector<std::string> control_authorities;
};

/// Deterministic in seed: same config, same bytes. The treated arm's clean
/// (pre-noise) cell totals equal the control arm's times
/// offset * (1 + delta_W) exactly in integer pence, which is what makes
/// zero-noise recovery an exact test rather than a statistical one.
ScenarioData gen_scenario(const ScenarioConfig& cfg);

/// Writes the five input CSVs plus ground_truth.json into `dir`.
void write_scenario(const ScenarioData& data, const std::string& dir);

/// Normal-equations solve by Gaussian elimination with partial pivoting.
/// Deliberately shares nothing with the QR path it checks.
std::vector<double> oracle_ols(const Matrix& X, const std::vector<double>& y,
                               const std::vector<double>& w);

/// Literal-loop sandwich evaluation, same contract as cluster_cov.
Matrix oracle_sandwich(const Matrix& X, const std::vector<double>& residuals,
                       const std::vector<double>& w,
                       const std::vector<std::int32_t>& clusters, CrVariant variant);

} // namespace localdiff::synth
