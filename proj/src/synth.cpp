#include "localdiff/synth.hpp"

#include "localdiff/errors.hpp"
#include "localdiff/report.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

namespace localdiff::synth {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
// Scaled amounts stay below this so no legitimate synthetic row can cross
// the £50k filter cap even after effect and noise multipliers.
constexpr std::int64_t kAmountClip = 4'000'000;
} // namespace

std::uint64_t SplitMix64::next() {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double SplitMix64::uniform() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

SplitMix64 substream(std::uint64_t seed, std::string_view label) {
    SplitMix64 s{seed ^ fnv1a(label)};
    s.next();
    return s;
}

double NormalRng::next() {
    if (has_spare) {
        has_spare = false;
        return spare;
    }
    const double u1 = sm.uniform();
    const double u2 = sm.uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
}

// ---- configuration ----------------------------------------------------

namespace {

using nlohmann::json;

Date require_date(const json& j, const char* key) {
    auto d = Date::parse(j.at(key).get<std::string>());
    if (!d) throw input_error(std::string("scenario: bad date in ") + key);
    return *d;
}

void validate(ScenarioConfig& cfg) {
    if (cfg.authorities_per_group < 1 || cfg.authorities_per_group > 26)
        throw input_error("scenario: authorities_per_group must be in 1..26");
    if (cfg.accounts_per_authority < 1) throw input_error("scenario: accounts_per_authority < 1");
    if (cfg.daily_txns_per_authority < 1)
        throw input_error("scenario: daily_txns_per_authority < 1");
    if (cfg.population_treated <= 0 || cfg.population_control <= 0)
        throw input_error("scenario: populations must be positive");
    if (!(cfg.group_offset > 0.0)) throw input_error("scenario: group_offset must be positive");
    if (cfg.online_share < 0.0 || cfg.online_share > 1.0)
        throw input_error("scenario: online_share outside [0,1]");
    if (cfg.category_shares.empty()) throw input_error("scenario: no categories");
    double share_sum = 0.0;
    for (auto& [name, share] : cfg.category_shares) {
        if (name.empty() || share <= 0.0) throw input_error("scenario: bad category share");
        share_sum += share;
    }
    for (auto& [name, share] : cfg.category_shares) share /= share_sum;
    std::sort(cfg.category_shares.begin(), cfg.category_shares.end());
    for (std::size_t i = 1; i < cfg.category_shares.size(); ++i)
        if (cfg.category_shares[i].first == cfg.category_shares[i - 1].first)
            throw input_error("scenario: duplicate category");
    for (const auto& [w, delta] : cfg.planted_effects) {
        if (w < -3 || w > 4 || w == 0)
            throw input_error("scenario: planted effect week " + std::to_string(w) +
                              " outside {-3..-1, 1..4}");
        if (!(1.0 + delta > 0.0)) throw input_error("scenario: planted effect below -100%");
    }
    if (cfg.noise_scale < 0.0) throw input_error("scenario: negative noise_scale");
    if (cfg.contamination_per_day < 0) throw input_error("scenario: negative contamination");
    for (const auto& s : cfg.common_shock)
        if (s.start > s.end || !(s.multiplier > 0.0))
            throw input_error("scenario: bad common_shock entry");
    if (cfg.data_start > cfg.data_end) throw input_error("scenario: degenerate span");
    if (cfg.window_days != 7 && cfg.window_days != 14 && cfg.window_days != 28)
        throw input_error("scenario: window_days must be 7, 14 or 28");
    if (!cfg.baseline.valid()) throw input_error("scenario: bad baseline");
    if (cfg.pre_weeks < 1 || cfg.post_weeks < 1)
        throw input_error("scenario: pre_weeks and post_weeks must be at least 1");
    if (cfg.amount_median_pence <= 0 || cfg.amount_mean_pence <= cfg.amount_median_pence)
        throw input_error("scenario: need 0 < median < mean for amounts");
    if (cfg.case_base_per_100k < 0.0 || cfg.case_amplitude < 0.0 || cfg.case_amplitude >= 1.0 ||
        cfg.case_period_days < 2)
        throw input_error("scenario: bad case-curve parameters");

    // Span coverage: the index needs K-1 warm-up days before the earliest
    // output date and the full prior-year twin range.
    const int K = cfg.window_days;
    const int post_end = std::min(7 * cfg.post_weeks - 1, cfg.data_end - cfg.announcement);
    if (post_end < 0) throw input_error("scenario: no data after the announcement");
    Date lo = std::min(cfg.baseline.begin, cfg.announcement - 7 * cfg.pre_weeks);
    Date hi = std::max(cfg.baseline.end, cfg.announcement + post_end);
    if (lo - (K - 1) < cfg.data_start)
        throw input_error("scenario: span starts too late for the index at " + lo.to_string());
    Date prior_min = lo, prior_max = lo;
    bool first = true;
    for (Date d = lo; d <= hi; ++d) {
        Date a, b;
        if (d.is_feb29()) {
            a = Date::from_ymd(d.year() - 1, 2, 28);
            b = Date::from_ymd(d.year() - 1, 3, 1);
        } else {
            a = b = d.prior_year();
        }
        if (first || a < prior_min) prior_min = a;
        if (first || b > prior_max) prior_max = b;
        first = false;
    }
    if (prior_min - (K - 1) < cfg.data_start || prior_max > cfg.data_end)
        throw input_error("scenario: span does not cover the prior-year range " +
                          prior_min.to_string() + ".." + prior_max.to_string());
}

} // namespace

ScenarioConfig scenario_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("scenario config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw input_error("scenario config must be a JSON object");

    static const std::set<std::string> known = {
        "seed", "event_name", "authorities_per_group", "accounts_per_authority",
        "daily_txns_per_authority", "population_treated", "population_control", "group_offset",
        "online_share", "category_shares", "common_shock", "planted_effects", "noise_scale",
        "contamination_per_day", "data_start", "data_end", "announcement", "window_days",
        "baseline_start", "baseline_end", "pre_weeks", "post_weeks", "amount_median_pence",
        "amount_mean_pence", "case_base_per_100k", "case_amplitude", "case_period_days"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw input_error("scenario: unknown key \"" + it.key() + "\"");

    ScenarioConfig cfg;
    try {
        if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("event_name")) cfg.event_name = j["event_name"].get<std::string>();
        if (j.contains("authorities_per_group"))
            cfg.authorities_per_group = j["authorities_per_group"].get<int>();
        if (j.contains("accounts_per_authority"))
            cfg.accounts_per_authority = j["accounts_per_authority"].get<int>();
        if (j.contains("daily_txns_per_authority"))
            cfg.daily_txns_per_authority = j["daily_txns_per_authority"].get<int>();
        if (j.contains("population_treated"))
            cfg.population_treated = j["population_treated"].get<std::int64_t>();
        if (j.contains("population_control"))
            cfg.population_control = j["population_control"].get<std::int64_t>();
        if (j.contains("group_offset")) cfg.group_offset = j["group_offset"].get<double>();
        if (j.contains("online_share")) cfg.online_share = j["online_share"].get<double>();
        if (j.contains("category_shares")) {
            cfg.category_shares.clear();
            for (auto it = j["category_shares"].begin(); it != j["category_shares"].end(); ++it)
                cfg.category_shares.emplace_back(it.key(), it.value().get<double>());
        }
        if (j.contains("common_shock")) {
            for (const auto& s : j["common_shock"]) {
                ScenarioConfig::Shock shock;
                shock.start = require_date(s, "start");
                shock.end = require_date(s, "end");
                shock.multiplier = s.at("multiplier").get<double>();
                cfg.common_shock.push_back(shock);
            }
        }
        if (j.contains("planted_effects")) {
            for (auto it = j["planted_effects"].begin(); it != j["planted_effects"].end(); ++it)
                cfg.planted_effects[std::stoi(it.key())] = it.value().get<double>();
        }
        if (j.contains("noise_scale")) cfg.noise_scale = j["noise_scale"].get<double>();
        if (j.contains("contamination_per_day"))
            cfg.contamination_per_day = j["contamination_per_day"].get<int>();
        if (j.contains("data_start")) cfg.data_start = require_date(j, "data_start");
        if (j.contains("data_end")) cfg.data_end = require_date(j, "data_end");
        if (j.contains("announcement")) cfg.announcement = require_date(j, "announcement");
        if (j.contains("window_days")) cfg.window_days = j["window_days"].get<int>();
        if (j.contains("baseline_start")) cfg.baseline.begin = require_date(j, "baseline_start");
        if (j.contains("baseline_end")) cfg.baseline.end = require_date(j, "baseline_end");
        if (j.contains("pre_weeks")) cfg.pre_weeks = j["pre_weeks"].get<int>();
        if (j.contains("post_weeks")) cfg.post_weeks = j["post_weeks"].get<int>();
        if (j.contains("amount_median_pence"))
            cfg.amount_median_pence = j["amount_median_pence"].get<std::int64_t>();
        if (j.contains("amount_mean_pence"))
            cfg.amount_mean_pence = j["amount_mean_pence"].get<std::int64_t>();
        if (j.contains("case_base_per_100k"))
            cfg.case_base_per_100k = j["case_base_per_100k"].get<double>();
        if (j.contains("case_amplitude")) cfg.case_amplitude = j["case_amplitude"].get<double>();
        if (j.contains("case_period_days"))
            cfg.case_period_days = j["case_period_days"].get<int>();
    } catch (const json::exception& e) {
        throw input_error(std::string("scenario: bad value type: ") + e.what());
    } catch (const std::invalid_argument&) {
        throw input_error("scenario: planted_effects keys must be integers");
    }
    validate(cfg);
    return cfg;
}

std::string scenario_to_json_text(const ScenarioConfig& cfg) {
    json j;
    j["seed"] = cfg.seed;
    j["event_name"] = cfg.event_name;
    j["authorities_per_group"] = cfg.authorities_per_group;
    j["accounts_per_authority"] = cfg.accounts_per_authority;
    j["daily_txns_per_authority"] = cfg.daily_txns_per_authority;
    j["population_treated"] = cfg.population_treated;
    j["population_control"] = cfg.population_control;
    j["group_offset"] = cfg.group_offset;
    j["online_share"] = cfg.online_share;
    json shares = json::object();
    for (const auto& [name, share] : cfg.category_shares) shares[name] = share;
    j["category_shares"] = shares;
    json shocks = json::array();
    for (const auto& s : cfg.common_shock)
        shocks.push_back({{"start", s.start.to_string()},
                          {"end", s.end.to_string()},
                          {"multiplier", s.multiplier}});
    j["common_shock"] = shocks;
    json planted = json::object();
    for (const auto& [w, d] : cfg.planted_effects) planted[std::to_string(w)] = d;
    j["planted_effects"] = planted;
    j["noise_scale"] = cfg.noise_scale;
    j["contamination_per_day"] = cfg.contamination_per_day;
    j["data_start"] = cfg.data_start.to_string();
    j["data_end"] = cfg.data_end.to_string();
    j["announcement"] = cfg.announcement.to_string();
    j["window_days"] = cfg.window_days;
    j["baseline_start"] = cfg.baseline.begin.to_string();
    j["baseline_end"] = cfg.baseline.end.to_string();
    j["pre_weeks"] = cfg.pre_weeks;
    j["post_weeks"] = cfg.post_weeks;
    j["amount_median_pence"] = cfg.amount_median_pence;
    j["amount_mean_pence"] = cfg.amount_mean_pence;
    j["case_base_per_100k"] = cfg.case_base_per_100k;
    j["case_amplitude"] = cfg.case_amplitude;
    j["case_period_days"] = cfg.case_period_days;
    return j.dump();
}

// ---- integer apportionment ---------------------------------------------

namespace {

struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;
};

// Snaps a positive factor to 1e-4 granularity; effects are applied at this
// resolution so that exact integer scaling is possible.
Rational snap_rational(double f) {
    auto num = static_cast<std::int64_t>(std::llround(f * 10000.0));
    if (num < 1) throw input_error("scenario: scale factor too small: " + std::to_string(f));
    const std::int64_t g = std::gcd(num, static_cast<std::int64_t>(10000));
    return {num / g, 10000 / g};
}

std::int64_t lcm_checked(std::int64_t a, std::int64_t b) {
    return a / std::gcd(a, b) * b;
}

std::int64_t snap_to_multiple(std::int64_t x, std::int64_t q) {
    const std::int64_t r = x % q;
    return 2 * r >= q ? x + (q - r) : x - r;
}

// Largest-remainder scaling: returns integers >= 1 summing exactly to
// `target`, each close to f * a[i]. Deterministic (fraction ties broken by
// index). Requires target >= a.size().
std::vector<std::int64_t> apportion(const std::vector<std::int64_t>& a, double f,
                                    std::int64_t target) {
    const std::size_t n = a.size();
    std::vector<std::int64_t> out(n);
    std::vector<std::pair<double, std::size_t>> frac(n);
    std::int64_t sum_floor = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = f * static_cast<double>(a[i]);
        const double fl = std::floor(t);
        out[i] = static_cast<std::int64_t>(fl);
        sum_floor += out[i];
        frac[i] = {t - fl, i};
    }
    std::int64_t r = target - sum_floor;
    if (r > 0) {
        const std::int64_t base = r / static_cast<std::int64_t>(n);
        auto extra = static_cast<std::size_t>(r % static_cast<std::int64_t>(n));
        for (auto& v : out) v += base;
        std::sort(frac.begin(), frac.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first > y.first : x.second < y.second;
        });
        for (std::size_t i = 0; i < extra; ++i) ++out[frac[i].second];
    } else if (r < 0) {
        const std::int64_t need = -r;
        const std::int64_t base = need / static_cast<std::int64_t>(n);
        auto extra = static_cast<std::size_t>(need % static_cast<std::int64_t>(n));
        for (auto& v : out) v -= base;
        std::sort(frac.begin(), frac.end(), [](const auto& x, const auto& y) {
            return x.first != y.first ? x.first < y.first : x.second < y.second;
        });
        for (std::size_t i = 0; i < extra; ++i) --out[frac[i].second];
    }
    // Restore amount > 0 by moving pennies from the largest entries.
    for (std::size_t i = 0; i < n; ++i) {
        while (out[i] < 1) {
            std::size_t jmax = 0;
            for (std::size_t j = 1; j < n; ++j)
                if (out[j] > out[jmax]) jmax = j;
            if (out[jmax] <= 1) throw analysis_error("apportion: target too small");
            const std::int64_t move = std::min(out[jmax] - 1, 1 - out[i]);
            out[jmax] -= move;
            out[i] += move;
        }
    }
    return out;
}

} // namespace

// ---- generation --------------------------------------------------------

namespace {

struct CellCounts {
    std::string category;
    int offline = 0;
    int online = 0;
};

std::vector<CellCounts> split_counts(const ScenarioConfig& cfg) {
    const int total = cfg.daily_txns_per_authority;
    const std::size_t nc = cfg.category_shares.size();
    std::vector<CellCounts> cells(nc);
    std::vector<std::pair<double, std::size_t>> frac(nc);
    int assigned = 0;
    for (std::size_t i = 0; i < nc; ++i) {
        const double t = cfg.category_shares[i].second * total;
        const int fl = static_cast<int>(std::floor(t));
        cells[i].category = cfg.category_shares[i].first;
        cells[i].offline = fl; // temporarily the whole category count
        assigned += fl;
        frac[i] = {t - fl, i};
    }
    std::sort(frac.begin(), frac.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (int i = 0; i < total - assigned; ++i)
        ++cells[frac[static_cast<std::size_t>(i)].second].offline;
    for (auto& c : cells) {
        const int cat_total = c.offline;
        c.online = static_cast<int>(std::llround(cfg.online_share * cat_total));
        c.offline = cat_total - c.online;
    }
    return cells;
}

struct Arm {
    char prefix;                           // 'T' or 'C'
    std::vector<std::string> authorities;  // codes
    std::vector<std::string> sectors;      // one per authority
    std::int64_t population;               // per authority
    // clean (pre-noise) totals per authority x day, by channel
    std::vector<std::vector<std::int64_t>> clean_offline;
    std::vector<std::vector<std::int64_t>> clean_online;
};

Arm make_arm(char prefix, int n, std::int64_t pop, std::size_t n_days) {
    Arm arm;
    arm.prefix = prefix;
    arm.population = pop;
    char buf[16];
    for (int j = 0; j < n; ++j) {
        std::snprintf(buf, sizeof buf, "%c%02d", prefix, j + 1);
        arm.authorities.emplace_back(buf);
        std::string sector;
        sector += prefix;
        sector += static_cast<char>('A' + j);
        sector += "1 1";
        arm.sectors.push_back(std::move(sector));
    }
    arm.clean_offline.assign(static_cast<std::size_t>(n),
                             std::vector<std::int64_t>(n_days, 0));
    arm.clean_online = arm.clean_offline;
    return arm;
}

struct Replay {
    // index values per unit over rel_day -pre_days..post_end
    std::vector<std::vector<double>> treat_y;
    std::vector<std::vector<double>> control_y;
    int pre_days = 0;
    int post_end = 0;
};

// Independent re-derivation of the index from integer daily totals: direct
// window sums, calendar-twin ratio, baseline-mean normalization.
std::vector<double> replay_index(const std::vector<std::int64_t>& daily, Date day0,
                                 const ScenarioConfig& cfg, int post_end) {
    const int K = cfg.window_days;
    auto total_at = [&](Date d) -> std::int64_t {
        return daily[static_cast<std::size_t>(d - day0)];
    };
    auto ma = [&](Date d) -> double {
        std::int64_t s = 0;
        for (int i = 0; i < K; ++i) s += total_at(d - i);
        return static_cast<double>(s) / K;
    };
    auto ratio = [&](Date d) -> double {
        double denom;
        if (d.is_feb29())
            denom = (ma(Date::from_ymd(d.year() - 1, 2, 28)) +
                     ma(Date::from_ymd(d.year() - 1, 3, 1))) /
                    2.0;
        else
            denom = ma(d.prior_year());
        if (denom == 0.0) throw analysis_error("replay: zero denominator at " + d.to_string());
        return ma(d) / denom;
    };
    double base_sum = 0.0;
    for (Date d = cfg.baseline.begin; d <= cfg.baseline.end; ++d) base_sum += ratio(d);
    const double base_mean = base_sum / cfg.baseline.length();

    std::vector<double> y;
    for (int t = -7 * cfg.pre_weeks; t <= post_end; ++t)
        y.push_back(ratio(cfg.announcement + t) / base_mean);
    return y;
}

InducedEffects effects_from_replay(const Replay& rep) {
    const auto n_days = rep.treat_y.front().size();
    auto mean_diff_at = [&](std::size_t i) {
        double t = 0.0, c = 0.0;
        for (const auto& y : rep.treat_y) t += y[i];
        for (const auto& y : rep.control_y) c += y[i];
        return t / static_cast<double>(rep.treat_y.size()) -
               c / static_cast<double>(rep.control_y.size());
    };
    std::map<int, std::pair<double, int>> by_week; // W -> (sum, count)
    double pre_sum = 0.0, post_sum = 0.0;
    int pre_n = 0, post_n = 0;
    for (std::size_t i = 0; i < n_days; ++i) {
        const int t = -rep.pre_days + static_cast<int>(i);
        const double d = mean_diff_at(i);
        auto& [sum, count] = by_week[week_bucket(t)];
        sum += d;
        ++count;
        if (t < 0) {
            pre_sum += d;
            ++pre_n;
        } else {
            post_sum += d;
            ++post_n;
        }
    }
    const double base = by_week.at(0).first / by_week.at(0).second;
    InducedEffects out;
    out.static_effect = post_sum / post_n - pre_sum / pre_n;
    for (const auto& [w, agg] : by_week)
        if (w != 0) out.dynamic_effects[w] = agg.first / agg.second - base;
    return out;
}

} // namespace

ScenarioData gen_scenario(const ScenarioConfig& raw_cfg) {
    ScenarioConfig cfg = raw_cfg;
    validate(cfg);

    const auto n_days = static_cast<std::size_t>(cfg.data_end - cfg.data_start + 1);
    const double mu = std::log(static_cast<double>(cfg.amount_median_pence));
    const double sigma = std::sqrt(2.0 * std::log(static_cast<double>(cfg.amount_mean_pence) /
                                                  static_cast<double>(cfg.amount_median_pence)));

    // Per-week scale factors as exact rationals; every clean control total is
    // a multiple of q so treated = f * control holds in integer pence.
    std::map<int, Rational> week_factor;
    Rational offset = snap_rational(cfg.group_offset);
    std::int64_t q = offset.den;
    for (const auto& [w, delta] : cfg.planted_effects) {
        Rational f = snap_rational(cfg.group_offset * (1.0 + delta));
        q = lcm_checked(q, f.den);
        week_factor[w] = f;
    }
    if (q > 100000) throw input_error("scenario: offset/effect granularity too fine");

    auto shock_at = [&](Date d) {
        double m = 1.0;
        for (const auto& s : cfg.common_shock)
            if (s.start <= d && d <= s.end) m *= s.multiplier;
        return m;
    };
    auto factor_for = [&](Date d) -> Rational {
        const int rel = d - cfg.announcement;
        const int w = week_bucket(rel);
        auto it = week_factor.find(w);
        // Planted weeks are -3..4, so prior-year days (rel ~ -365) and days
        // beyond the window fall through to the bare offset.
        return it == week_factor.end() ? offset : it->second;
    };

    ScenarioData data;
    Arm treat = make_arm('T', cfg.authorities_per_group, cfg.population_treated, n_days);
    Arm control = make_arm('C', cfg.authorities_per_group, cfg.population_control, n_days);
    data.treated_authorities = treat.authorities;
    data.control_authorities = control.authorities;

    for (const auto& arm : {std::cref(treat), std::cref(control)}) {
        const char* region = arm.get().prefix == 'T' ? "RT" : "RC";
        for (std::size_t j = 0; j < arm.get().authorities.size(); ++j) {
            const auto& auth = arm.get().authorities[j];
            data.population.emplace(auth, PopulationEntry{region, arm.get().population});
            data.geo.sector_to_authority.emplace(arm.get().sectors[j], auth);
            data.geo.authority_to_region.emplace(auth, region);
        }
    }

    {
        LockdownEvent event;
        event.name = cfg.event_name;
        event.announcement_date = cfg.announcement;
        event.category = WatchlistCategory::intervention;
        event.treated_authorities = treat.authorities;
        event.control_authorities = control.authorities;
        data.lockdowns.push_back(std::move(event));
    }

    const std::vector<CellCounts> cells = split_counts(cfg);
    std::vector<std::int64_t> account_counter(
        static_cast<std::size_t>(2 * cfg.authorities_per_group), 0);

    auto emit = [&](const Arm& arm, std::size_t j, Date d, const std::string& category,
                    Channel channel, const std::vector<std::int64_t>& amounts) {
        auto& counter =
            account_counter[(arm.prefix == 'T' ? 0u : static_cast<std::size_t>(
                                                          cfg.authorities_per_group)) +
                            j];
        for (std::int64_t amount : amounts) {
            Transaction t;
            t.account_id = arm.authorities[j] + "-a" +
                           std::to_string(counter++ % cfg.accounts_per_authority);
            t.date = d;
            t.amount_pence = amount;
            t.currency = "GBP";
            t.card_type = CardType::consumer_credit;
            t.channel = channel;
            t.category = category;
            t.cardholder_sector = arm.sectors[j];
            t.merchant_authority = arm.authorities[j];
            data.transactions.push_back(std::move(t));
        }
    };

    std::vector<std::int64_t> draws;
    for (Date d = cfg.data_start; d <= cfg.data_end; ++d) {
        const auto day_idx = static_cast<std::size_t>(d - cfg.data_start);
        const double shock = shock_at(d);
        const Rational f = factor_for(d);
        for (int j = 0; j < cfg.authorities_per_group; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            const std::string day_tag = std::to_string(j) + "|" + std::to_string(d.serial());
            NormalRng amt_rng(substream(cfg.seed, "amt|" + day_tag));
            double noise_t = 1.0, noise_c = 1.0;
            if (cfg.noise_scale > 0.0) {
                NormalRng noise_rng(substream(cfg.seed, "noise|" + day_tag));
                const double adj = cfg.noise_scale * cfg.noise_scale / 2.0;
                noise_t = std::exp(cfg.noise_scale * noise_rng.next() - adj);
                noise_c = std::exp(cfg.noise_scale * noise_rng.next() - adj);
            }
            for (const auto& cell : cells) {
                for (Channel channel : {Channel::offline, Channel::online}) {
                    const int n = channel == Channel::offline ? cell.offline : cell.online;
                    if (n == 0) continue;
                    draws.clear();
                    std::int64_t base_total = 0;
                    for (int i = 0; i < n; ++i) {
                        const double z = amt_rng.next();
                        auto pence = static_cast<std::int64_t>(
                            std::llround(std::exp(mu + sigma * z)));
                        pence = std::clamp<std::int64_t>(pence, 1, kAmountClip);
                        draws.push_back(pence);
                        base_total += pence;
                    }
                    std::int64_t s_target =
                        snap_to_multiple(std::llround(shock * static_cast<double>(base_total)), q);
                    while (s_target < n) s_target += q;
                    const std::vector<std::int64_t> control_clean =
                        apportion(draws, shock, s_target);
                    const std::int64_t u_target = s_target / f.den * f.num;
                    const std::vector<std::int64_t> treat_clean = apportion(
                        control_clean, static_cast<double>(f.num) / static_cast<double>(f.den),
                        u_target);

                    auto& ctrl_tot = channel == Channel::offline ? control.clean_offline
                                                                 : control.clean_online;
                    auto& trt_tot =
                        channel == Channel::offline ? treat.clean_offline : treat.clean_online;
                    ctrl_tot[uj][day_idx] += s_target;
                    trt_tot[uj][day_idx] += u_target;

                    if (cfg.noise_scale > 0.0) {
                        emit(treat, uj, d, cell.category, channel,
                             apportion(treat_clean, noise_t,
                                       std::llround(noise_t * static_cast<double>(u_target))));
                        emit(control, uj, d, cell.category, channel,
                             apportion(control_clean, noise_c,
                                       std::llround(noise_c * static_cast<double>(s_target))));
                    } else {
                        emit(treat, uj, d, cell.category, channel, treat_clean);
                        emit(control, uj, d, cell.category, channel, control_clean);
                    }
                }
            }
        }
        // Rows that exist only to exercise the filters; never in clean totals.
        if (cfg.contamination_per_day > 0) {
            SplitMix64 ct = substream(cfg.seed, "contam|" + std::to_string(d.serial()));
            for (const auto& arm : {std::cref(treat), std::cref(control)}) {
                for (int i = 0; i < cfg.contamination_per_day; ++i) {
                    const auto uj = static_cast<std::size_t>(
                        static_cast<int>(ct.next() % static_cast<std::uint64_t>(
                                                         cfg.authorities_per_group)));
                    Transaction t;
                    t.account_id = arm.get().authorities[uj] + "-x" + std::to_string(i);
                    t.date = d;
                    t.channel = Channel::offline;
                    t.category = cells.front().category;
                    t.cardholder_sector = arm.get().sectors[uj];
                    t.merchant_authority = arm.get().authorities[uj];
                    switch (i % 3) {
                        case 0:
                            t.currency = "EUR";
                            t.card_type = CardType::consumer_credit;
                            t.amount_pence = 1 + static_cast<std::int64_t>(ct.next() % 10000);
                            break;
                        case 1:
                            t.currency = "GBP";
                            t.card_type = CardType::other;
                            t.amount_pence = 1 + static_cast<std::int64_t>(ct.next() % 10000);
                            break;
                        default:
                            t.currency = "GBP";
                            t.card_type = CardType::consumer_credit;
                            t.amount_pence =
                                5'000'001 + static_cast<std::int64_t>(ct.next() % 100000);
                            break;
                    }
                    data.transactions.push_back(std::move(t));
                }
            }
        }
        // Deterministic case counts, identical per-capita curve in both arms.
        const double phase = static_cast<double>((d - cfg.data_start) % cfg.case_period_days) /
                             cfg.case_period_days;
        const double rate =
            cfg.case_base_per_100k * (1.0 + cfg.case_amplitude * std::sin(kTwoPi * phase));
        for (const auto& arm : {std::cref(treat), std::cref(control)}) {
            const auto cases = static_cast<std::int64_t>(std::llround(
                static_cast<double>(arm.get().population) * rate / 100000.0));
            for (const auto& auth : arm.get().authorities)
                data.cases.push_back({auth, d, std::max<std::int64_t>(cases, 0)});
        }
    }

    // Ground truth: replay the clean offline totals (the default estimation
    // outcome) through the independent index derivation and closed form.
    const int post_end = std::min(7 * cfg.post_weeks - 1, cfg.data_end - cfg.announcement);
    Replay group_rep, auth_rep;
    group_rep.pre_days = auth_rep.pre_days = 7 * cfg.pre_weeks;
    group_rep.post_end = auth_rep.post_end = post_end;
    std::vector<std::int64_t> sum_t(n_days, 0), sum_c(n_days, 0);
    for (int j = 0; j < cfg.authorities_per_group; ++j) {
        const auto uj = static_cast<std::size_t>(j);
        for (std::size_t i = 0; i < n_days; ++i) {
            sum_t[i] += treat.clean_offline[uj][i];
            sum_c[i] += control.clean_offline[uj][i];
        }
        auth_rep.treat_y.push_back(
            replay_index(treat.clean_offline[uj], cfg.data_start, cfg, post_end));
        auth_rep.control_y.push_back(
            replay_index(control.clean_offline[uj], cfg.data_start, cfg, post_end));
    }
    group_rep.treat_y.push_back(replay_index(sum_t, cfg.data_start, cfg, post_end));
    group_rep.control_y.push_back(replay_index(sum_c, cfg.data_start, cfg, post_end));

    data.truth.planted_effects = cfg.planted_effects;
    data.truth.group_mode = effects_from_replay(group_rep);
    data.truth.authority_mode = effects_from_replay(auth_rep);
    data.truth.seed = cfg.seed;
    char hash_buf[20];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(scenario_to_json_text(cfg))));
    data.truth.config_hash = hash_buf;
    return data;
}

std::string ground_truth_to_json_text(const GroundTruth& truth) {
    json j;
    json planted = json::object();
    for (const auto& [w, d] : truth.planted_effects) planted[std::to_string(w)] = d;
    j["planted_effects"] = planted;
    auto induced = [](const InducedEffects& e) {
        json x;
        x["static"] = e.static_effect;
        json dyn = json::object();
        for (const auto& [w, d] : e.dynamic_effects) dyn[std::to_string(w)] = d;
        x["dynamic"] = dyn;
        return x;
    };
    j["induced_index_effects"] =
        json{{"group", induced(truth.group_mode)}, {"authority", induced(truth.authority_mode)}};
    j["seed"] = truth.seed;
    j["config_hash"] = truth.config_hash;
    return j.dump(2) + "\n";
}

void write_scenario(const ScenarioData& data, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir + "/" + name, std::ios::binary);
        if (!out) throw input_error("cannot write " + dir + "/" + name);
        return out;
    };
    {
        auto out = open("transactions.csv");
        report::write_transactions_csv(out, data.transactions);
    }
    {
        auto out = open("cases.csv");
        report::write_cases_csv(out, data.cases);
    }
    {
        auto out = open("lockdowns.csv");
        report::write_lockdowns_csv(out, data.lockdowns);
    }
    {
        auto out = open("population.csv");
        report::write_population_csv(out, data.population);
    }
    {
        auto out = open("geo_lookup.csv");
        report::write_geo_lookup_csv(out, data.geo);
    }
    {
        auto out = open("ground_truth.json");
        out << ground_truth_to_json_text(data.truth);
    }
}

// ---- oracles -----------------------------------------------------------

namespace {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
std::vector<double> gauss_solve(Matrix A, std::vector<double> b) {
    const std::size_t k = A.rows;
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(A(r, col)) > std::fabs(A(pivot, col))) pivot = r;
        if (std::fabs(A(pivot, col)) < 1e-12)
            throw analysis_error("oracle: singular normal equations");
        if (pivot != col) {
            for (std::size_t c = 0; c < k; ++c) std::swap(A(col, c), A(pivot, c));
            std::swap(b[col], b[pivot]);
        }
        for (std::size_t r = col + 1; r < k; ++r) {
            const double m = A(r, col) / A(col, col);
            if (m == 0.0) continue;
            for (std::size_t c = col; c < k; ++c) A(r, c) -= m * A(col, c);
            b[r] -= m * b[col];
        }
    }
    std::vector<double> x(k);
    for (std::size_t rr = k; rr-- > 0;) {
        double s = b[rr];
        for (std::size_t c = rr + 1; c < k; ++c) s -= A(rr, c) * x[c];
        x[rr] = s / A(rr, rr);
    }
    return x;
}

Matrix normal_matrix(const Matrix& X, const std::vector<double>& w) {
    const std::size_t n = X.rows, k = X.cols;
    Matrix A(k, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) A(a, b) += w[i] * X(i, a) * X(i, b);
    return A;
}

} // namespace

std::vector<double> oracle_ols(const Matrix& X, const std::vector<double>& y,
                               const std::vector<double>& w) {
    if (X.rows > 500 || X.cols > 80) throw input_error("oracle_ols: instance too large");
    if (y.size() != X.rows || w.size() != X.rows)
        throw input_error("oracle_ols: length mismatch");
    const std::size_t n = X.rows, k = X.cols;
    std::vector<double> rhs(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a) rhs[a] += w[i] * X(i, a) * y[i];
    return gauss_solve(normal_matrix(X, w), rhs);
}

Matrix oracle_sandwich(const Matrix& X, const std::vector<double>& residuals,
                       const std::vector<double>& w,
                       const std::vector<std::int32_t>& clusters, CrVariant variant) {
    const std::size_t n = X.rows, k = X.cols;
    if (residuals.size() != n || w.size() != n || clusters.size() != n)
        throw input_error("oracle_sandwich: length mismatch");
    std::int32_t gmax = -1;
    for (auto c : clusters) gmax = std::max(gmax, c);
    const auto G = static_cast<std::size_t>(gmax) + 1;
    if (G < 2) throw analysis_error("oracle_sandwich: need two clusters");
    if (n <= k) throw analysis_error("oracle_sandwich: need n > k");

    Matrix A = normal_matrix(X, w);
    // Invert by solving k unit systems; literal and slow on purpose.
    Matrix bread(k, k);
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> unit(k, 0.0);
        unit[c] = 1.0;
        std::vector<double> col = gauss_solve(A, unit);
        for (std::size_t r = 0; r < k; ++r) bread(r, c) = col[r];
    }

    Matrix scores(G, k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < k; ++a)
            scores(static_cast<std::size_t>(clusters[i]), a) += w[i] * residuals[i] * X(i, a);
    Matrix meat(k, k);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) meat(a, b) += scores(g, a) * scores(g, b);

    double factor = 1.0;
    if (variant == CrVariant::cr1)
        factor = (static_cast<double>(G) / (static_cast<double>(G) - 1.0)) *
                 ((static_cast<double>(n) - 1.0) / (static_cast<double>(n) - static_cast<double>(k)));

    Matrix cov(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t a = 0; a < k; ++a)
                for (std::size_t b = 0; b < k; ++b) s += bread(i, a) * meat(a, b) * bread(b, j);
            cov(i, j) = factor * s;
        }
    return cov;
}

} // namespace localdiff::synth
