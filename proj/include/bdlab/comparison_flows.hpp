#ifndef BDLAB_COMPARISON_FLOWS_HPP
#define BDLAB_COMPARISON_FLOWS_HPP

#include <string>

#include "bdlab/birth_death_flow.hpp"

namespace bdlab {

// Finite-volume discretizations of divergence-form flows. Cell volumes are the
// trapezoid weights and the two outer faces carry zero flux, so quadrature
// mass is conserved up to rounding before the final renormalization.

/// Largest admissible dt for wasserstein_step: h^2 / (sigma^2 + 2h max|grad a|).
double wasserstein_max_dt(const RegularizedEnergy& V, const FlowState& state);

/// d_t m = div(grad a(m, .) m) with upwind mobility and face-centered gradients.
FlowState wasserstein_step(const RegularizedEnergy& V, const FlowState& state, double dt);

/// Energy chi2(m|pi), drift 2(m/pi - 1) - chi2(m|pi), dissipation int |grad drift|^2 dpi.
FlowState make_chi2_state(const ReferenceMeasure& pi, double t, GridMeasure m);

/// Largest dt keeping the explicit chi2 step monotone (diagonal coefficient in [0, 1]).
double chi2_flow_max_dt(const ReferenceMeasure& pi, const FlowState& state);

/// d_t m = div(grad abar(m, .) pi); same scheme as wasserstein_step with pi as mobility.
FlowState chi2_flow_step(const ReferenceMeasure& pi, const FlowState& state, double dt);

enum class SplitOrder { transport_first, reaction_first };

/// Lie splitting of the Wasserstein-Fisher-Rao flow: one transport step and one
/// explicit birth-death step.
FlowState wfr_step(const RegularizedEnergy& V, const FlowState& state, double dt,
                   SplitOrder order = SplitOrder::transport_first);

struct WFRDissipation {
    double t;
    double langevin_term;     // |grad a|^2 in L2(m)
    double birth_death_term;  // |a|^2 in L2(m)
};

WFRDissipation dissipation_split(const RegularizedEnergy& V, const GridMeasure& m, double t = 0.0);

struct FunctionalInequalityForm {
    double lhs;
    double rhs;
    double ratio() const { return lhs / rhs; }
};

/// lhs = int |grad log(m/pi)|^2 dm, rhs = KL(m|pi).
FunctionalInequalityForm logsobolev_form(const GridMeasure& m, const GridMeasure& pi);
/// lhs = int |grad (m/pi)|^2 dpi, rhs = chi2(m|pi).
FunctionalInequalityForm poincare_form(const GridMeasure& m, const GridMeasure& pi);

enum class FlowKind { birth_death, wasserstein, wfr };

FlowKind flow_kind_from_name(const std::string& name);
std::string to_string(FlowKind kind);

/// Runs one flow with fixed dt, recording the dissipation split in every row.
FlowTrace run_comparison_flow(FlowKind kind, const RegularizedEnergy& V, const GridMeasure& m0, double dt,
                              double t_end, int record_every, const GridMeasure* m_star = nullptr,
                              bool keep_measures = false);

}  // namespace bdlab

#endif  // BDLAB_COMPARISON_FLOWS_HPP
