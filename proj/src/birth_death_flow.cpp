#include "bdlab/birth_death_flow.hpp"

#include <cmath>
#include <sstream>

namespace bdlab {

FlowState make_state(const RegularizedEnergy& V, double t, GridMeasure m) {
    ValueAndGradient vg = eval_F_with_derivative(V.F(), m);
    Vector drift = drift_a(V, m, vg.flat_grad);
    const double value = vg.value + V.half_sigma_sq() * kl(m, V.pi());
    const double a_norm_sq = m.expect(drift.cwiseAbs2());
    return FlowState{t, std::move(m), value, a_norm_sq, std::move(vg.flat_grad), std::move(drift)};
}

FlowState step_exponential(const RegularizedEnergy& V, const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    const double sigma_sq = V.sigma() * V.sigma();
    const double lambda = std::exp(-0.5 * sigma_sq * dt);
    const double one_minus = -std::expm1(-0.5 * sigma_sq * dt);
    Vector log_next = lambda * state.m.log_density() +
                      one_minus * (V.pi().log_density() - (2.0 / sigma_sq) * state.flat_grad);
    if (!log_next.allFinite()) throw Error(ErrorCode::non_finite_value, "exponential step produced non-finite log-density");
    return make_state(V, state.t + dt, GridMeasure::from_log_density(state.m.grid_ptr(), log_next));
}

FlowState step_euler(const RegularizedEnergy& V, const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    const double peak = state.drift.cwiseAbs().maxCoeff();
    if (!(dt * peak < 1.0)) {
        std::ostringstream os;
        os << "dt * max|a| = " << dt * peak << " >= 1";
        throw Error(ErrorCode::positivity_violation, os.str());
    }
    Vector next = state.m.density().cwiseProduct((1.0 - dt * state.drift.array()).matrix());
    return make_state(V, state.t + dt, GridMeasure::from_density(state.m.grid_ptr(), next));
}

MinimizerRef minimizer_ref(const RegularizedEnergy& V, const GridMeasure* m_star) {
    if (m_star == nullptr) return {};
    return MinimizerRef{m_star, eval_V(V, *m_star)};
}

FlowRecord make_record(const RegularizedEnergy& V, const FlowState& state, const MinimizerRef& ref) {
    FlowRecord r;
    r.t = state.t;
    r.V = state.V_value;
    r.kl_pi = kl(state.m, V.pi());
    r.a_norm_sq = state.a_norm_sq;
    const RatioRange vs_pi = density_ratio_bounds(state.m, V.pi());
    r.ratio_min_pi = vs_pi.r;
    r.ratio_max_pi = vs_pi.R;
    r.boundary_mass = boundary_mass(state.m);
    if (ref.m_star != nullptr) {
        r.gap = state.V_value - ref.V_star;
        r.kl_mstar = kl(state.m, *ref.m_star);
        const RatioRange vs_star = density_ratio_bounds(state.m, *ref.m_star);
        r.ratio_min_mstar = vs_star.r;
        r.ratio_max_mstar = vs_star.R;
    }
    return r;
}

long step_count(double dt, double t_end) {
    if (!(dt > 0.0) || !(t_end > 0.0) || dt > t_end)
        throw Error(ErrorCode::invalid_argument, "need 0 < dt <= t_end");
    const double ratio = t_end / dt;
    const long n = std::lround(ratio);
    if (std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw Error(ErrorCode::invalid_argument, "t_end must be an integer multiple of dt");
    return n;
}

FlowTrace run_flow(const FlowConfig& config, const RecordOptions& options) {
    const RegularizedEnergy& V = config.V;
    if (config.record_every < 1) throw Error(ErrorCode::invalid_argument, "record_every must be >= 1");
    if (!config.m0.strictly_positive())
        throw Error(ErrorCode::zero_density_node, "initial measure must be positive on every node");
    const long n_steps = step_count(config.dt, config.t_end);
    const MinimizerRef ref = minimizer_ref(V, options.m_star);

    FlowState state = make_state(V, 0.0, config.m0);
    FlowTrace trace;
    auto record = [&]() {
        trace.records.push_back(make_record(V, state, ref));
        if (options.keep_measures) trace.measures.push_back(state.m);
    };
    record();
    for (long k = 1; k <= n_steps; ++k) {
        state = config.integrator == Integrator::exponential ? step_exponential(V, state, config.dt)
                                                             : step_euler(V, state, config.dt);
        state.t = static_cast<double>(k) * config.dt;
        if (k % config.record_every == 0 || k == n_steps) record();
    }
    return trace;
}

double tv_path_distance(const Vector& times, const std::vector<GridMeasure>& mu, const std::vector<GridMeasure>& nu) {
    const Index n = times.size();
    if (static_cast<Index>(mu.size()) != n || static_cast<Index>(nu.size()) != n)
        throw Error(ErrorCode::invalid_argument, "paths do not match the time mesh");
    double sum = 0.0;
    for (Index j = 0; j + 1 < n; ++j) {
        sum += 0.5 * (times[j + 1] - times[j]) *
               (tv(mu[static_cast<std::size_t>(j)], nu[static_cast<std::size_t>(j)]) +
                tv(mu[static_cast<std::size_t>(j + 1)], nu[static_cast<std::size_t>(j + 1)]));
    }
    return sum;
}

PicardResult picard_solve(const RegularizedEnergy& V, const GridMeasure& m0, double T, int n_time, int n_iters) {
    if (!(T > 0.0) || n_time < 8 || n_iters < 2)
        throw Error(ErrorCode::invalid_argument, "picard needs T > 0, n_time >= 8, n_iters >= 2");
    if (!m0.strictly_positive()) throw Error(ErrorCode::zero_density_node, "picard start must be positive");
    require_same_grid(m0, V.pi());

    const double sigma_sq = V.sigma() * V.sigma();
    const double dt = T / (n_time - 1);
    const double step_decay = std::exp(-0.5 * sigma_sq * dt);

    PicardResult result;
    result.times.resize(n_time);
    for (int j = 0; j < n_time; ++j) result.times[j] = j * dt;
    result.iterates.emplace_back(static_cast<std::size_t>(n_time), m0);

    const Vector& log_m0 = m0.log_density();
    const Vector& log_pi = V.pi().log_density();
    for (int n = 1; n <= n_iters; ++n) {
        const std::vector<GridMeasure>& previous = result.iterates.back();
        std::vector<GridMeasure> path;
        path.reserve(static_cast<std::size_t>(n_time));
        // memory[x] = int_0^{t_j} exp(-sigma^2 (t_j - s)/2) dF/dm(m_s^(n-1), x) ds, trapezoid in s.
        Vector memory = Vector::Zero(m0.size());
        Vector grad_prev = flat_derivative(V.F(), previous[0]);
        for (int j = 0; j < n_time; ++j) {
            if (j > 0) {
                const Vector grad = flat_derivative(V.F(), previous[static_cast<std::size_t>(j)]);
                memory = step_decay * memory + 0.5 * dt * (step_decay * grad_prev + grad);
                grad_prev = grad;
            }
            const double t = result.times[j];
            const double decay = std::exp(-0.5 * sigma_sq * t);
            Vector log_m = decay * log_m0 - std::expm1(-0.5 * sigma_sq * t) * log_pi - memory;
            path.push_back(GridMeasure::from_log_density(m0.grid_ptr(), log_m));
        }
        result.tv_T_distances.push_back(tv_path_distance(result.times, path, previous));
        result.iterates.push_back(std::move(path));
    }
    for (std::size_t k = 0; k + 1 < result.tv_T_distances.size(); ++k) {
        const double d = result.tv_T_distances[k];
        result.contraction_ratios.push_back(d > 0.0 ? result.tv_T_distances[k + 1] / d : 0.0);
    }
    return result;
}

GridMeasure oracle_flow_F0(const GridMeasure& m0, const GridMeasure& pi, double sigma, double t) {
    if (!(t >= 0.0)) throw Error(ErrorCode::invalid_argument, "oracle time must be nonnegative");
    return geometric_mixture(m0, pi, std::exp(-0.5 * sigma * sigma * t));
}

}  // namespace bdlab
