#ifndef BDLAB_BIRTH_DEATH_FLOW_HPP
#define BDLAB_BIRTH_DEATH_FLOW_HPP

#include <optional>
#include <vector>

#include "bdlab/functionals.hpp"
#include "bdlab/trace.hpp"

namespace bdlab {

/// Measure at time t with cached energy, flat derivative and drift.
struct FlowState {
    double t = 0.0;
    GridMeasure m;
    double V_value = 0.0;
    double a_norm_sq = 0.0;
    Vector flat_grad;
    Vector drift;
};

FlowState make_state(const RegularizedEnergy& V, double t, GridMeasure m);

enum class Integrator { exponential, euler };

struct FlowConfig {
    RegularizedEnergy V;
    GridMeasure m0;
    double dt;
    double t_end;
    Integrator integrator = Integrator::exponential;
    int record_every = 1;
};

/// Frozen-drift exponential step: the log-linear part of the flow is solved
/// exactly over dt, dF/dm is held at its value at the start of the step, and
/// renormalization supplies the x-independent constant.
FlowState step_exponential(const RegularizedEnergy& V, const FlowState& state, double dt);

/// m <- m (1 - dt a), renormalized. Requires dt * max|a| < 1.
FlowState step_euler(const RegularizedEnergy& V, const FlowState& state, double dt);

struct RecordOptions {
    const GridMeasure* m_star = nullptr;
    bool keep_measures = false;
};

/// Minimizer reference for gap and KL(m|m*) columns.
struct MinimizerRef {
    const GridMeasure* m_star = nullptr;
    double V_star = 0.0;
};

MinimizerRef minimizer_ref(const RegularizedEnergy& V, const GridMeasure* m_star);

/// Diagnostics row for a state.
FlowRecord make_record(const RegularizedEnergy& V, const FlowState& state, const MinimizerRef& ref);

FlowTrace run_flow(const FlowConfig& config, const RecordOptions& options = {});

/// Number of steps of size dt covering t_end; throws unless t_end/dt is integral to 1e-9.
long step_count(double dt, double t_end);

struct PicardResult {
    Vector times;
    /// iterates[n][j] is m^(n) at times[j]; iterates[0] is the constant path at m0.
    std::vector<std::vector<GridMeasure>> iterates;
    /// tv_T_distances[n-1] = TV_T(m^(n), m^(n-1)).
    std::vector<double> tv_T_distances;
    /// tv_T_distances[k+1] / tv_T_distances[k].
    std::vector<double> contraction_ratios;
};

/// Picard iteration in path space on a uniform mesh of n_time points over [0, T].
PicardResult picard_solve(const RegularizedEnergy& V, const GridMeasure& m0, double T, int n_time,
                          int n_iters);

/// Integral over [0, T] of TV(mu_t, nu_t), by trapezoid on the mesh.
double tv_path_distance(const Vector& times, const std::vector<GridMeasure>& mu,
                        const std::vector<GridMeasure>& nu);

/// Closed-form F = 0 solution: geometric mixture with exponent exp(-sigma^2 t / 2).
GridMeasure oracle_flow_F0(const GridMeasure& m0, const GridMeasure& pi, double sigma, double t);

}  // namespace bdlab

#endif  // BDLAB_BIRTH_DEATH_FLOW_HPP
