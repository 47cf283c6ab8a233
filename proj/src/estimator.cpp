#include "localdiff/estimator.hpp"

#include "localdiff/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace localdiff {

int week_bucket(int rel_day) {
    const int a = rel_day + 7;
    int q = a / 7;
    if (a % 7 != 0 && a < 0) --q;
    return q;
}

std::string_view to_string(DidSpec s) {
    return s == DidSpec::static_ ? "static" : "dynamic";
}

std::string_view to_string(CrVariant v) { return v == CrVariant::cr0 ? "cr0" : "cr1"; }

std::string_view to_string(ClusterKey k) {
    return k == ClusterKey::group ? "group" : "authority";
}

Panel build_panel(const std::vector<PanelUnit>& treat_units,
                  const std::vector<PanelUnit>& control_units, Date announcement,
                  int pre_weeks, int post_weeks) {
    if (treat_units.empty() || control_units.empty())
        throw input_error("build_panel: both arms need at least one unit");
    if (pre_weeks < 1 || post_weeks < 1)
        throw input_error("build_panel: pre_weeks and post_weeks must be at least 1");

    std::vector<const PanelUnit*> all;
    for (const auto& u : treat_units) all.push_back(&u);
    for (const auto& u : control_units) all.push_back(&u);
    std::set<std::string> names;
    for (const auto* u : all) {
        if (!u->series) throw input_error("build_panel: unit " + u->name + " has no series");
        if (!(u->weight > 0.0))
            throw input_error("build_panel: unit " + u->name + " has non-positive weight");
        if (!names.insert(u->name).second)
            throw input_error("build_panel: duplicate unit name " + u->name);
    }

    // The post side truncates to the shortest series; anything missing
    // before that is a hole, not a truncation.
    int post_end = 7 * post_weeks - 1;
    for (const auto* u : all)
        post_end = std::min(post_end, u->series->end() - announcement);
    if (post_end < 0)
        throw analysis_error("build_panel: no post-announcement data in unit series");

    const int pre_days = 7 * pre_weeks;
    Panel p;
    p.pre_days = pre_days;
    p.post_days = post_end + 1;
    const auto n_days = static_cast<std::size_t>(pre_days + p.post_days);
    p.treat.reserve(all.size() * n_days);
    std::int32_t cluster = 0;
    for (const auto* u : all) {
        const bool is_treat = cluster < static_cast<std::int32_t>(treat_units.size());
        for (int t = -pre_days; t <= post_end; ++t) {
            Date d = announcement + t;
            if (!u->series->defined(d))
                throw input_error("build_panel: unit " + u->name +
                                  " missing required date " + d.to_string());
            p.treat.push_back(is_treat ? 1 : 0);
            p.rel_day.push_back(t);
            p.date.push_back(d);
            p.outcome.push_back(u->series->at(d));
            p.weight.push_back(u->weight);
            p.cluster.push_back(cluster);
        }
        p.cluster_names.push_back(u->name);
        ++cluster;
    }
    return p;
}

namespace {

std::vector<int> panel_days(const Panel& p) {
    std::vector<int> days;
    days.reserve(static_cast<std::size_t>(p.pre_days + p.post_days));
    for (int t = -p.pre_days; t < p.post_days; ++t) days.push_back(t);
    return days;
}

DesignMatrix assemble(const Panel& p, const std::vector<int>& interactions, bool dynamic) {
    const std::vector<int> days = panel_days(p);
    DesignMatrix dm;
    dm.names.push_back("Constant");
    dm.names.push_back("Treat");
    std::vector<int> dummy_days;
    for (int t : days)
        if (t != -1) {
            dummy_days.push_back(t);
            dm.names.push_back("Day_" + std::to_string(t));
        }
    for (int w : interactions)
        dm.names.push_back(dynamic ? "Treat*After_" + std::to_string(w)
                                   : std::string("Treat*After"));

    const std::size_t k = dm.names.size();
    dm.X = Matrix(p.n(), k);
    for (std::size_t i = 0; i < p.n(); ++i) {
        dm.X(i, 0) = 1.0;
        dm.X(i, 1) = p.treat[i];
        const int t = p.rel_day[i];
        if (t != -1) {
            auto it = std::lower_bound(dummy_days.begin(), dummy_days.end(), t);
            const auto col = 2 + static_cast<std::size_t>(it - dummy_days.begin());
            dm.X(i, col) = 1.0;
        }
        if (p.treat[i]) {
            if (dynamic) {
                const int w = week_bucket(t);
                auto it = std::lower_bound(interactions.begin(), interactions.end(), w);
                if (it != interactions.end() && *it == w) {
                    const auto col =
                        2 + dummy_days.size() + static_cast<std::size_t>(it - interactions.begin());
                    dm.X(i, col) = 1.0;
                }
            } else if (t >= 0) {
                dm.X(i, 2 + dummy_days.size()) = 1.0;
            }
        }
    }
    // Rank check with unit weights; positive weights cannot change the rank.
    std::vector<double> ones(p.n(), 1.0);
    r_factor(dm.X, ones, &dm.names);
    dm.full_rank = true;
    return dm;
}

} // namespace

DesignMatrix design_static(const Panel& panel) {
    return assemble(panel, {0}, false); // single interaction column
}

DesignMatrix design_dynamic(const Panel& panel) {
    std::set<int> weeks;
    for (int t : panel_days(panel)) {
        const int w = week_bucket(t);
        if (w != 0) weeks.insert(w);
    }
    return assemble(panel, std::vector<int>(weeks.begin(), weeks.end()), true);
}

QrWls wls_fit(const DesignMatrix& dm, const std::vector<double>& y,
              const std::vector<double>& w) {
    return qr_wls(dm.X, y, w, &dm.names);
}

Matrix cluster_cov(const DesignMatrix& dm, const std::vector<double>& residuals,
                   const std::vector<double>& w, const std::vector<std::int32_t>& clusters,
                   CrVariant variant) {
    const std::size_t n = dm.X.rows, k = dm.X.cols;
    if (residuals.size() != n || w.size() != n || clusters.size() != n)
        throw analysis_error("cluster_cov: length mismatch");
    std::int32_t max_cluster = -1;
    for (auto c : clusters) {
        if (c < 0) throw analysis_error("cluster_cov: negative cluster id");
        max_cluster = std::max(max_cluster, c);
    }
    const std::size_t G = static_cast<std::size_t>(max_cluster) + 1;
    if (G < 2) throw analysis_error("cluster_cov: at least two clusters required");
    if (n <= k) throw analysis_error("cluster_cov: more parameters than observations");

    Matrix bread = inverse_from_r(r_factor(dm.X, w, &dm.names));

    // s_g = sum over the cluster of w_i e_i x_i; meat = sum of s_g s_g'.
    Matrix scores(G, k);
    for (std::size_t i = 0; i < n; ++i) {
        const double we = w[i] * residuals[i];
        const auto g = static_cast<std::size_t>(clusters[i]);
        for (std::size_t j = 0; j < k; ++j) scores(g, j) += we * dm.X(i, j);
    }
    Matrix meat(k, k);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t a = 0; a < k; ++a) {
            const double sa = scores(g, a);
            if (sa == 0.0) continue;
            for (std::size_t b = 0; b < k; ++b) meat(a, b) += sa * scores(g, b);
        }

    double c = 1.0;
    if (variant == CrVariant::cr1) {
        const auto gd = static_cast<double>(G);
        const auto nd = static_cast<double>(n);
        const auto kd = static_cast<double>(k);
        c = (gd / (gd - 1.0)) * ((nd - 1.0) / (nd - kd));
    }
    Matrix cov = mat_mul(mat_mul(bread, meat), bread);
    for (auto& v : cov.a) v *= c;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            const double v = 0.5 * (cov(i, j) + cov(j, i));
            cov(i, j) = cov(j, i) = v;
        }
    return cov;
}

double normal_p_value(double estimate, double se) {
    if (se <= 0.0) return estimate == 0.0 ? 1.0 : 0.0;
    return std::erfc(std::fabs(estimate / se) / std::sqrt(2.0));
}

std::string stars_for(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

const Coefficient* DiDResult::find(std::string_view name) const {
    for (const auto& c : coefficients)
        if (c.name == name) return &c;
    return nullptr;
}

DiDResult did_fit(const Panel& panel, DidSpec spec, CrVariant cr) {
    DesignMatrix dm = spec == DidSpec::static_ ? design_static(panel) : design_dynamic(panel);
    QrWls fit = wls_fit(dm, panel.outcome, panel.weight);
    Matrix cov = cluster_cov(dm, fit.residuals, panel.weight, panel.cluster, cr);

    DiDResult r;
    r.spec = spec;
    r.cr = cr;
    r.covariance = cov;
    r.n_obs = panel.n();
    r.n_clusters = panel.cluster_names.size();
    r.pre_weeks = panel.pre_days / 7;
    r.post_weeks = (panel.post_days + 6) / 7;
    r.coefficients.reserve(dm.names.size());
    for (std::size_t j = 0; j < dm.names.size(); ++j) {
        Coefficient c;
        c.name = dm.names[j];
        c.estimate = fit.beta[j];
        c.se = std::sqrt(std::max(cov(j, j), 0.0));
        c.p = normal_p_value(c.estimate, c.se);
        c.stars = stars_for(c.p);
        r.coefficients.push_back(std::move(c));
    }
    return r;
}

DiDResult run_did(const EventUnits& units, std::string_view outcome_name,
                  const DidOptions& options) {
    Panel panel = build_panel(units.treat_units, units.control_units, units.announcement,
                              options.pre_weeks, options.post_weeks);
    DiDResult r = did_fit(panel, options.spec, options.cr);
    r.event = units.event;
    r.outcome = std::string(outcome_name);
    r.cluster_key = options.cluster_key;
    return r;
}

} // namespace localdiff
