#include "bdlab/minimizer.hpp"

#include <algorithm>
#include <cmath>

namespace bdlab {

GridMeasure gibbs_map(const RegularizedEnergy& V, const GridMeasure& m) {
    const double sigma_sq = V.sigma() * V.sigma();
    Vector log_values = V.pi().log_density() - (2.0 / sigma_sq) * flat_derivative(V.F(), m);
    if (!log_values.allFinite()) throw Error(ErrorCode::non_finite_value, "gibbs exponent is not finite");
    return GridMeasure::from_log_density(m.grid_ptr(), log_values);
}

double log_residual(const GridMeasure& a, const GridMeasure& b) {
    require_same_grid(a, b);
    const Grid& grid = a.grid();
    const double length = grid.weights().sum();
    const Vector diff = a.log_density() - b.log_density();
    if (!diff.allFinite()) return kInf;
    const double mean = grid.integrate(diff) / length;
    return (diff.array() - mean).abs().maxCoeff();
}

MinimizerResult solve_mstar(const RegularizedEnergy& V, double tol, int max_iters, double damping) {
    if (!(tol > 0.0) || max_iters < 1 || !(damping > 0.0 && damping <= 1.0))
        throw Error(ErrorCode::invalid_argument, "solve_mstar needs tol > 0, max_iters >= 1, damping in (0, 1]");
    GridMeasure m = V.pi();
    double residual = kInf;
    for (int k = 1; k <= max_iters; ++k) {
        const GridMeasure g = gibbs_map(V, m);
        residual = log_residual(m, g);
        if (residual <= tol) return MinimizerResult{m, residual, k, true};
        Vector log_next = (1.0 - damping) * m.log_density() + damping * g.log_density();
        m = GridMeasure::from_log_density(m.grid_ptr(), log_next);
    }
    return MinimizerResult{m, residual, max_iters, false};
}

OptimalityReport optimality_check(const RegularizedEnergy& V, const MinimizerResult& result,
                                  const std::vector<GridMeasure>& samples) {
    const GridMeasure& m_star = result.m_star;
    const Vector a = drift_a(V, m_star);
    const double mean = m_star.expect(a);
    const double drift_std = std::sqrt(std::max(0.0, m_star.expect((a.array() - mean).square().matrix())));

    OptimalityReport out{};
    out.drift_std = drift_std;
    out.drift_constant = drift_std <= std::max(10.0 * result.residual * V.sigma() * V.sigma(), 1e-10);
    out.min_energy_margin = kInf;
    out.min_growth_slack = kInf;
    const double v_star = eval_V(V, m_star);
    for (const GridMeasure& m : samples) {
        const double gap = eval_V(V, m) - v_star;
        out.min_energy_margin = std::min(out.min_energy_margin, gap);
        out.min_growth_slack = std::min(out.min_growth_slack, gap - V.half_sigma_sq() * kl(m, m_star));
    }
    out.minimal = samples.empty() || out.min_energy_margin > 0.0;
    out.growth_ok = samples.empty() || out.min_growth_slack >= -1e-8;
    return out;
}

}  // namespace bdlab
