#pragma once

#include "localdiff/date.hpp"
#include "localdiff/linalg.hpp"
#include "localdiff/series.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace localdiff {

/// Week bucket of an event-relative day: floor((t+7)/7). Days -7..-1 form
/// the omitted base week W=0; the announcement day t=0 opens W=1.
int week_bucket(int rel_day);

/// One outcome series entering a panel. Group-level clustering passes one
/// unit per arm; authority-level clustering passes one unit per member
/// authority. The series pointer must outlive the panel.
struct PanelUnit {
    std::string name;
    const RealSeries* series = nullptr;
    double weight = 0.0; // 2019 resident population
};

/// Stacked (unit, day) observations, balanced across units. Clusters are
/// units; weights are constant within unit.
struct Panel {
    std::vector<std::int8_t> treat; // 1 = treated arm
    std::vector<int> rel_day;
    std::vector<Date> date;
    std::vector<double> outcome;
    std::vector<double> weight;
    std::vector<std::int32_t> cluster;
    std::vector<std::string> cluster_names;
    int pre_days = 0;  // window covers rel_day in [-pre_days, post_days-1]
    int post_days = 0;

    std::size_t n() const { return outcome.size(); }
};

/// Aligns all unit series on the announcement date. The post window is
/// truncated at day granularity when data ends early; a hole anywhere else
/// in the required range is an error naming the date and unit.
Panel build_panel(const std::vector<PanelUnit>& treat_units,
                  const std::vector<PanelUnit>& control_units, Date announcement,
                  int pre_weeks = 4, int post_weeks = 4);

enum class DidSpec { static_, dynamic_ };
std::string_view to_string(DidSpec s);

enum class CrVariant { cr0, cr1 };
std::string_view to_string(CrVariant v);

/// Which unit forms a cluster (and a panel unit): the whole locality group,
/// or each member authority. Two group clusters make the CR variance of the
/// Treat and interaction coefficients degenerate to zero, so group-level
/// inference is reported but not trustworthy; authority clustering is the
/// escape hatch.
enum class ClusterKey { group, authority };
std::string_view to_string(ClusterKey k);

struct DesignMatrix {
    std::vector<std::string> names;
    Matrix X;
    bool full_rank = false;
};

/// Intercept, Treat, day dummies (t = -1 omitted), and Treat*After with
/// After = 1{t >= 0}. Rank-checked; deficiency names the collinear columns.
DesignMatrix design_static(const Panel& panel);

/// As design_static but with one Treat*After_W interaction per week bucket
/// present in the window, W = 0 omitted.
DesignMatrix design_dynamic(const Panel& panel);

QrWls wls_fit(const DesignMatrix& dm, const std::vector<double>& y,
              const std::vector<double>& w);

/// Cluster-robust sandwich covariance. CR1 applies the small-sample factor
/// (G/(G-1)) * ((N-1)/(N-k)); CR0 applies none. Requires at least two
/// clusters and N > k. Output is symmetrized.
Matrix cluster_cov(const DesignMatrix& dm, const std::vector<double>& residuals,
                   const std::vector<double>& w, const std::vector<std::int32_t>& clusters,
                   CrVariant variant);

/// Two-sided p-value from the normal reference: erfc(|z| / sqrt(2)).
double normal_p_value(double estimate, double se);

/// Strict thresholds: *** p<0.001, ** p<0.01, * p<0.05.
std::string stars_for(double p);

struct Coefficient {
    std::string name;
    double estimate = 0.0;
    double se = 0.0;
    double p = 1.0;
    std::string stars;
};

struct DiDResult {
    std::string event;
    std::string outcome;
    DidSpec spec = DidSpec::static_;
    std::vector<Coefficient> coefficients;
    Matrix covariance;
    std::size_t n_obs = 0;
    std::size_t n_clusters = 0;
    int pre_weeks = 0;
    int post_weeks = 0; // weeks actually present after truncation
    CrVariant cr = CrVariant::cr1;
    ClusterKey cluster_key = ClusterKey::group;

    const Coefficient* find(std::string_view name) const;
};

/// Design + fit + covariance on an already built panel.
DiDResult did_fit(const Panel& panel, DidSpec spec, CrVariant cr);

struct EventUnits {
    std::string event;
    Date announcement;
    std::vector<PanelUnit> treat_units;
    std::vector<PanelUnit> control_units;
};

struct DidOptions {
    DidSpec spec = DidSpec::dynamic_;
    CrVariant cr = CrVariant::cr1;
    ClusterKey cluster_key = ClusterKey::group;
    int pre_weeks = 4;
    int post_weeks = 4;
};

DiDResult run_did(const EventUnits& units, std::string_view outcome_name,
                  const DidOptions& options);

} // namespace localdiff
