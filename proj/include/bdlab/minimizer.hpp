#ifndef BDLAB_MINIMIZER_HPP
#define BDLAB_MINIMIZER_HPP

#include <vector>

#include "bdlab/functionals.hpp"

namespace bdlab {

struct MinimizerResult {
    GridMeasure m_star;
    /// Sup-norm of the self-consistency defect in log space, modulo constants.
    double residual;
    int iterations;
    bool converged;
};

/// Normalized exp(-(2/sigma^2)(dF/dm(m, .) + U)).
GridMeasure gibbs_map(const RegularizedEnergy& V, const GridMeasure& m);

/// Sup-norm distance between two log-densities after removing their grid means.
double log_residual(const GridMeasure& a, const GridMeasure& b);

/// Damped log-domain fixed-point iteration started at pi:
/// log m <- (1 - damping) log m + damping log gibbs_map(m), renormalized.
MinimizerResult solve_mstar(const RegularizedEnergy& V, double tol = 1e-10, int max_iters = 200,
                            double damping = 0.5);

struct OptimalityReport {
    double drift_std;
    bool drift_constant;
    /// min over samples of V(m) - V(m*).
    double min_energy_margin;
    bool minimal;
    /// min over samples of V(m) - V(m*) - sigma^2/2 KL(m|m*).
    double min_growth_slack;
    bool growth_ok;

    bool pass() const { return drift_constant && minimal && growth_ok; }
};

OptimalityReport optimality_check(const RegularizedEnergy& V, const MinimizerResult& result,
                                  const std::vector<GridMeasure>& samples);

}  // namespace bdlab

#endif  // BDLAB_MINIMIZER_HPP
