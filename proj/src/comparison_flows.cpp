#include "bdlab/comparison_flows.hpp"

#include <algorithm>
#include <sstream>

namespace bdlab {

namespace {

Vector face_gradient(const Grid& grid, const Vector& f) {
    const Index n = f.size();
    return (f.tail(n - 1) - f.head(n - 1)) / grid.h();
}

// One explicit finite-volume step of d_t m = div(grad(potential) * mobility):
// velocity -grad(potential) on faces, mobility taken from the donor cell.
Vector transport_update(const Grid& grid, const Vector& m, const Vector& potential, const Vector& mobility,
                        double dt) {
    const Index n = m.size();
    const Vector grad = face_gradient(grid, potential);
    Vector flux(n + 1);
    flux[0] = 0.0;
    flux[n] = 0.0;
    for (Index i = 0; i + 1 < n; ++i) {
        const double velocity = -grad[i];
        flux[i + 1] = velocity * (velocity > 0.0 ? mobility[i] : mobility[i + 1]);
    }
    const Vector& w = grid.weights();
    Vector next(n);
    for (Index i = 0; i < n; ++i) next[i] = m[i] - dt * (flux[i + 1] - flux[i]) / w[i];
    return next;
}

void require_positive(const Vector& m, const char* what) {
    for (Index i = 0; i < m.size(); ++i) {
        if (!(m[i] > 0.0)) {
            std::ostringstream os;
            os << what << " produced a nonpositive density at node " << i;
            throw Error(ErrorCode::positivity_violation, os.str());
        }
    }
}

}  // namespace

double wasserstein_max_dt(const RegularizedEnergy& V, const FlowState& state) {
    const Grid& grid = state.m.grid();
    const double h = grid.h();
    const double peak = face_gradient(grid, state.drift).cwiseAbs().maxCoeff();
    return h * h / (V.sigma() * V.sigma() + 2.0 * h * peak);
}

FlowState wasserstein_step(const RegularizedEnergy& V, const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    const double limit = wasserstein_max_dt(V, state);
    if (dt > limit) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds transport limit " << limit;
        throw Error(ErrorCode::cfl_violation, os.str());
    }
    const Grid& grid = state.m.grid();
    Vector next = transport_update(grid, state.m.density(), state.drift, state.m.density(), dt);
    require_positive(next, "wasserstein step");
    return make_state(V, state.t + dt, GridMeasure::from_density(state.m.grid_ptr(), next));
}

FlowState make_chi2_state(const ReferenceMeasure& pi, double t, GridMeasure m) {
    const GridMeasure& ref = pi.measure;
    const double energy = chi2(m, ref);
    Vector drift = 2.0 * (m.density().cwiseQuotient(ref.density()).array() - 1.0) - energy;
    const Vector grad = gradient(m.grid(), drift);
    const double dissipation = ref.expect(grad.cwiseAbs2());
    return FlowState{t, std::move(m), energy, dissipation, Vector(), std::move(drift)};
}

double chi2_flow_max_dt(const ReferenceMeasure& pi, const FlowState& state) {
    const Grid& grid = state.m.grid();
    const Vector& p = pi.measure.density();
    const Vector& w = grid.weights();
    const Index n = p.size();
    double worst = 0.0;
    for (Index i = 0; i < n; ++i) {
        double faces = 0.0;
        if (i > 0) faces += std::max(p[i - 1], p[i]);
        if (i + 1 < n) faces += std::max(p[i], p[i + 1]);
        worst = std::max(worst, 2.0 * faces / (grid.h() * w[i] * p[i]));
    }
    return 1.0 / worst;
}

FlowState chi2_flow_step(const ReferenceMeasure& pi, const FlowState& state, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::invalid_argument, "dt must be positive");
    const double limit = chi2_flow_max_dt(pi, state);
    if (dt > limit) {
        std::ostringstream os;
        os << "dt = " << dt << " exceeds chi2-flow limit " << limit;
        throw Error(ErrorCode::cfl_violation, os.str());
    }
    const Grid& grid = state.m.grid();
    Vector next = transport_update(grid, state.m.density(), state.drift, pi.measure.density(), dt);
    require_positive(next, "chi2 flow step");
    return make_chi2_state(pi, state.t + dt, GridMeasure::from_density(state.m.grid_ptr(), next));
}

FlowState wfr_step(const RegularizedEnergy& V, const FlowState& state, double dt, SplitOrder order) {
    FlowState next = order == SplitOrder::transport_first
                         ? step_euler(V, wasserstein_step(V, state, dt), dt)
                         : wasserstein_step(V, step_euler(V, state, dt), dt);
    next.t = state.t + dt;
    return next;
}

WFRDissipation dissipation_split(const RegularizedEnergy& V, const GridMeasure& m, double t) {
    const Vector a = drift_a(V, m);
    const Vector grad = gradient(m.grid(), a);
    return WFRDissipation{t, m.expect(grad.cwiseAbs2()), m.expect(a.cwiseAbs2())};
}

FunctionalInequalityForm logsobolev_form(const GridMeasure& m, const GridMeasure& pi) {
    require_same_grid(m, pi);
    if (!m.strictly_positive() || !pi.strictly_positive())
        throw Error(ErrorCode::zero_density_node, "log-Sobolev form needs positive densities");
    const Vector grad = gradient(m.grid(), m.log_density() - pi.log_density());
    return {m.expect(grad.cwiseAbs2()), kl(m, pi)};
}

FunctionalInequalityForm poincare_form(const GridMeasure& m, const GridMeasure& pi) {
    require_same_grid(m, pi);
    if (!pi.strictly_positive()) throw Error(ErrorCode::zero_density_node, "Poincare form needs pi > 0");
    const Vector grad = gradient(m.grid(), m.density().cwiseQuotient(pi.density()));
    return {pi.expect(grad.cwiseAbs2()), chi2(m, pi)};
}

FlowKind flow_kind_from_name(const std::string& name) {
    if (name == "birth_death") return FlowKind::birth_death;
    if (name == "wasserstein") return FlowKind::wasserstein;
    if (name == "wfr") return FlowKind::wfr;
    throw Error(ErrorCode::config_parse, "unknown flow '" + name + "'");
}

std::string to_string(FlowKind kind) {
    switch (kind) {
        case FlowKind::birth_death: return "birth_death";
        case FlowKind::wasserstein: return "wasserstein";
        case FlowKind::wfr: return "wfr";
    }
    return "unknown";
}

FlowTrace run_comparison_flow(FlowKind kind, const RegularizedEnergy& V, const GridMeasure& m0, double dt,
                              double t_end, int record_every, const GridMeasure* m_star, bool keep_measures) {
    if (record_every < 1) throw Error(ErrorCode::invalid_argument, "record_every must be >= 1");
    const long n_steps = step_count(dt, t_end);
    const MinimizerRef ref = minimizer_ref(V, m_star);
    FlowState state = make_state(V, 0.0, m0);
    FlowTrace trace;
    auto record = [&]() {
        FlowRecord r = make_record(V, state, ref);
        const Vector grad = gradient(state.m.grid(), state.drift);
        r.langevin_term = state.m.expect(grad.cwiseAbs2());
        r.birth_death_term = state.a_norm_sq;
        trace.records.push_back(r);
        if (keep_measures) trace.measures.push_back(state.m);
    };
    record();
    for (long k = 1; k <= n_steps; ++k) {
        switch (kind) {
            case FlowKind::birth_death: state = step_exponential(V, state, dt); break;
            case FlowKind::wasserstein: state = wasserstein_step(V, state, dt); break;
            case FlowKind::wfr: state = wfr_step(V, state, dt); break;
        }
        state.t = static_cast<double>(k) * dt;
        if (k % record_every == 0 || k == n_steps) record();
    }
    return trace;
}

}  // namespace bdlab
