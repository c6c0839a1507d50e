#ifndef BDLAB_DIAGNOSTICS_HPP
#define BDLAB_DIAGNOSTICS_HPP

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdlab/functionals.hpp"
#include "bdlab/trace.hpp"

namespace bdlab {

/// Outcome of one certificate entry.
struct CheckResult {
    std::string name;
    bool pass = false;
    double worst_slack = 0.0;
    std::vector<std::pair<std::string, double>> constants;
};

/// Density-ratio constants: (r, R) of m0 vs pi, (r_bar, R_bar) of m0 vs m*,
/// and trajectory-wide extrema over the recorded times.
struct RatioBounds {
    double r;
    double R;
    double r_bar;
    double R_bar;
    double r1;
    double R1;
    double r1_bar;
    double R1_bar;
};

/// Warm-start constants from (m0, pi, m*) and trajectory-wide extrema from the
/// trace's ratio columns. The trace must carry the m* ratio columns.
RatioBounds measure_ratio_bounds(const GridMeasure& m0, const GridMeasure& pi, const GridMeasure& m_star,
                                 const FlowTrace& trace);

enum class DissipationChannel { birth_death, wasserstein, wfr };

struct DissipationReport {
    double max_rel_error;
    double spacing;
    std::size_t n_interior;
};

/// Centered difference of V over the uniformly spaced prefix of the trace,
/// compared with -|a|^2, -|grad a|^2 (Wasserstein) or the sum of both (WFR).
DissipationReport dissipation_check(const FlowTrace& trace,
                                    DissipationChannel channel = DissipationChannel::birth_death);

struct PliReport {
    double r1_bar;
    double R1_bar;
    /// 4 R1_bar / (sigma^2 r1_bar).
    double constant;
    /// (2R/(lambda r))^-1 with lambda = sigma^2/2, r = r1_bar, R = R1_bar.
    double kappa;
    std::vector<double> slacks;
    double worst_slack;
    bool pass;
};

PliReport pli_check(const RegularizedEnergy& V, const FlowTrace& trace, double tolerance = 1e-8);

/// Energy G together with its flat derivative (zero m-mean convention).
struct EnergyOracle {
    std::function<double(const GridMeasure&)> eval;
    std::function<Vector(const GridMeasure&)> flat_derivative;
};

EnergyOracle oracle_for(const RegularizedEnergy& V);

struct GeneralPliReport {
    double gap;
    double grad_norm_sq;
    double r;
    double R;
    /// (2R/(lambda r)) |dG/dm|^2 - gap.
    double slack;
    /// |dG/dm|_{L2(m)} chi2(m*|m)^{1/2} - gap.
    double cauchy_schwarz_slack;
    /// |dG/dm|^2 / lambda - gap, only under the chi2-growth hypothesis.
    std::optional<double> chi2_slack;
    bool pass;
    bool cauchy_schwarz_ok;
};

GeneralPliReport general_pli_check(const EnergyOracle& G, const GridMeasure& m_star, const GridMeasure& m,
                                   double lambda, bool chi2_growth = false, double tolerance = 1e-8);

struct GrowthReport {
    double min_slack;
    double max_abs_slack;
    bool pass;
};

/// gap - sigma^2/2 KL(m|m*) over the samples.
GrowthReport quadratic_growth_check(const RegularizedEnergy& V, const GridMeasure& m_star,
                                    const std::vector<GridMeasure>& samples, double tolerance = 1e-8);

struct RateReport {
    double kappa_theory;
    double kappa_fit;
    double lambda;
    double window_begin;
    double window_end;
    std::size_t window_points;
    double worst_envelope_slack;
    bool envelope_ok;
    bool immediate_convergence;
    bool pass;
};

/// Gaps below this are treated as converged to the floating-point floor.
inline constexpr double kGapFloor = 1e-14;

RateReport rate_fit(const FlowTrace& trace, double r_bar, double R_bar, double sigma,
                    double window_lo = 0.1, double window_hi = 0.9);

struct KlBoundReport {
    double bound;
    double max_violation;
    bool pass;
};

/// KL(m_t|pi) <= 2 log R + 4C/sigma^2 at every record.
KlBoundReport kl_bound_check(const FlowTrace& trace, double R, double C, double sigma,
                             double tolerance = 1e-8);

struct RatioEnvelope {
    double R1;
    double r1;
    /// 3C + sigma^2/2 (log R1 + 2 log R), the sup of |a| along the flow.
    double C_V;
};

/// R1 = 1 + exp(log R + C + sigma^2/2 (2 log R + 4C/sigma^2)); r1 = r exp(-4C/sigma^2).
RatioEnvelope ratio_envelope(double r, double R, double C, double sigma);

struct RatioEnvelopeReport {
    RatioEnvelope envelope;
    double observed_min;
    double observed_max;
    bool pass;
};

RatioEnvelopeReport ratio_envelope_check(const FlowTrace& trace, double r, double R, double C, double sigma);

}  // namespace bdlab

#endif  // BDLAB_DIAGNOSTICS_HPP
