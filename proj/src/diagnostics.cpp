#include "bdlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace bdlab {

RatioBounds measure_ratio_bounds(const GridMeasure& m0, const GridMeasure& pi, const GridMeasure& m_star,
                                 const FlowTrace& trace) {
    const RatioRange vs_pi = density_ratio_bounds(m0, pi);
    const RatioRange vs_star = density_ratio_bounds(m0, m_star);
    RatioBounds b{vs_pi.r, vs_pi.R, vs_star.r, vs_star.R, vs_pi.r, vs_pi.R, vs_star.r, vs_star.R};
    for (const FlowRecord& rec : trace.records) {
        if (!rec.ratio_min_mstar || !rec.ratio_max_mstar)
            throw Error(ErrorCode::invalid_argument, "trace lacks ratios against m*");
        b.r1 = std::min(b.r1, rec.ratio_min_pi);
        b.R1 = std::max(b.R1, rec.ratio_max_pi);
        b.r1_bar = std::min(b.r1_bar, *rec.ratio_min_mstar);
        b.R1_bar = std::max(b.R1_bar, *rec.ratio_max_mstar);
    }
    return b;
}

DissipationReport dissipation_check(const FlowTrace& trace, DissipationChannel channel) {
    const auto& rec = trace.records;
    if (rec.size() < 5) throw Error(ErrorCode::trace_too_short, "dissipation check needs at least 5 records");
    const double spacing = rec[1].t - rec[0].t;
    std::size_t uniform = 2;
    while (uniform < rec.size() && std::abs(rec[uniform].t - rec[uniform - 1].t - spacing) <= 1e-9 * spacing)
        ++uniform;
    if (uniform < 5) throw Error(ErrorCode::trace_too_short, "fewer than 5 uniformly spaced records");

    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < uniform; ++k) {
        const double derivative = (rec[k + 1].V - rec[k - 1].V) / (2.0 * spacing);
        double dissipation = channel == DissipationChannel::wasserstein ? 0.0 : rec[k].a_norm_sq;
        if (channel != DissipationChannel::birth_death) {
            if (!rec[k].langevin_term) throw Error(ErrorCode::invalid_argument, "trace lacks the Langevin term");
            dissipation += *rec[k].langevin_term;
        }
        const double err = std::abs(derivative + dissipation) / std::max(std::abs(dissipation), 1e-12);
        worst = std::max(worst, err);
    }
    return DissipationReport{worst, spacing, uniform - 2};
}

PliReport pli_check(const RegularizedEnergy& V, const FlowTrace& trace, double tolerance) {
    PliReport out{};
    out.r1_bar = kInf;
    out.R1_bar = 0.0;
    for (const FlowRecord& rec : trace.records) {
        if (!rec.ratio_min_mstar || !rec.ratio_max_mstar || !rec.gap)
            throw Error(ErrorCode::invalid_argument, "PLI check needs gap and m* ratio columns");
        out.r1_bar = std::min(out.r1_bar, *rec.ratio_min_mstar);
        out.R1_bar = std::max(out.R1_bar, *rec.ratio_max_mstar);
    }
    if (!(out.r1_bar > 0.0) || !std::isfinite(out.R1_bar))
        throw Error(ErrorCode::ratio_unbounded, "trajectory ratio against m* is not bounded away from 0 and inf");
    const double sigma_sq = V.sigma() * V.sigma();
    const double lambda = 0.5 * sigma_sq;
    out.constant = 4.0 * out.R1_bar / (sigma_sq * out.r1_bar);
    out.kappa = 1.0 / (2.0 * out.R1_bar / (lambda * out.r1_bar));
    out.worst_slack = kInf;
    for (const FlowRecord& rec : trace.records) {
        const double slack = out.constant * rec.a_norm_sq - *rec.gap;
        out.slacks.push_back(slack);
        out.worst_slack = std::min(out.worst_slack, slack);
    }
    out.pass = out.worst_slack >= -tolerance;
    return out;
}

EnergyOracle oracle_for(const RegularizedEnergy& V) {
    return EnergyOracle{[&V](const GridMeasure& m) { return eval_V(V, m); },
                        [&V](const GridMeasure& m) { return drift_a(V, m); }};
}

GeneralPliReport general_pli_check(const EnergyOracle& G, const GridMeasure& m_star, const GridMeasure& m,
                                   double lambda, bool chi2_growth, double tolerance) {
    if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "growth constant must be positive");
    const RatioRange range = density_ratio_bounds(m, m_star);
    if (!(range.r > 0.0)) throw Error(ErrorCode::ratio_unbounded, "m vanishes where m* does not");
    const Vector grad = G.flat_derivative(m);
    GeneralPliReport out{};
    out.r = range.r;
    out.R = range.R;
    out.gap = G.eval(m) - G.eval(m_star);
    out.grad_norm_sq = m.expect(grad.cwiseAbs2());
    out.slack = (2.0 * range.R / (lambda * range.r)) * out.grad_norm_sq - out.gap;
    out.cauchy_schwarz_slack = std::sqrt(out.grad_norm_sq) * std::sqrt(chi2(m_star, m)) - out.gap;
    if (chi2_growth) out.chi2_slack = out.grad_norm_sq / lambda - out.gap;
    out.pass = out.slack >= -tolerance && (!out.chi2_slack || *out.chi2_slack >= -tolerance);
    out.cauchy_schwarz_ok = out.cauchy_schwarz_slack >= -tolerance;
    return out;
}

GrowthReport quadratic_growth_check(const RegularizedEnergy& V, const GridMeasure& m_star,
                                    const std::vector<GridMeasure>& samples, double tolerance) {
    GrowthReport out{kInf, 0.0, true};
    const double v_star = eval_V(V, m_star);
    for (const GridMeasure& m : samples) {
        const double slack = eval_V(V, m) - v_star - V.half_sigma_sq() * kl(m, m_star);
        out.min_slack = std::min(out.min_slack, slack);
        out.max_abs_slack = std::max(out.max_abs_slack, std::abs(slack));
    }
    if (samples.empty()) out.min_slack = 0.0;
    out.pass = out.min_slack >= -tolerance;
    return out;
}

RateReport rate_fit(const FlowTrace& trace, double r_bar, double R_bar, double sigma, double window_lo,
                    double window_hi) {
    const auto& rec = trace.records;
    if (rec.empty() || !rec.front().gap) throw Error(ErrorCode::invalid_argument, "rate fit needs a gap column");
    RateReport out{};
    out.lambda = 0.5 * sigma * sigma;
    out.kappa_theory = sigma * sigma * r_bar / (4.0 * R_bar);
    const double t_end = rec.back().t;
    out.window_begin = window_lo * t_end;
    out.window_end = window_hi * t_end;

    const double gap0 = *rec.front().gap;
    out.worst_envelope_slack = kInf;
    for (const FlowRecord& r : rec) {
        const double envelope = std::max(gap0, 0.0) * std::exp(-out.kappa_theory * r.t) * (1.0 + 1e-6) + kGapFloor;
        out.worst_envelope_slack = std::min(out.worst_envelope_slack, envelope - *r.gap);
    }
    out.envelope_ok = out.worst_envelope_slack >= 0.0;

    if (gap0 < kGapFloor) {
        out.immediate_convergence = true;
        out.kappa_fit = kInf;
        out.pass = out.envelope_ok;
        return out;
    }

    // Least-squares slope of -log(gap) against t on the window, stopping at the floor.
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t count = 0;
    for (const FlowRecord& r : rec) {
        if (r.t < out.window_begin || r.t > out.window_end) continue;
        if (*r.gap < kGapFloor) break;
        const double y = -std::log(*r.gap);
        st += r.t;
        sy += y;
        stt += r.t * r.t;
        sty += r.t * y;
        ++count;
    }
    out.window_points = count;
    if (count < 2) {
        out.immediate_convergence = true;
        out.kappa_fit = kInf;
    } else {
        const double n = static_cast<double>(count);
        out.kappa_fit = (n * sty - st * sy) / (n * stt - st * st);
    }
    out.pass = out.envelope_ok && out.kappa_fit >= out.kappa_theory;
    return out;
}

KlBoundReport kl_bound_check(const FlowTrace& trace, double R, double C, double sigma, double tolerance) {
    KlBoundReport out{};
    out.bound = 2.0 * std::log(R) + 4.0 * C / (sigma * sigma);
    out.max_violation = -kInf;
    for (const FlowRecord& r : trace.records) out.max_violation = std::max(out.max_violation, r.kl_pi - out.bound);
    out.pass = out.max_violation <= tolerance;
    return out;
}

RatioEnvelope ratio_envelope(double r, double R, double C, double sigma) {
    const double sigma_sq = sigma * sigma;
    const double log_R = std::log(R);
    const double kl_cap = 2.0 * log_R + 4.0 * C / sigma_sq;
    RatioEnvelope env{};
    env.R1 = 1.0 + std::exp(log_R + C + 0.5 * sigma_sq * kl_cap);
    env.r1 = r * std::exp(-4.0 * C / sigma_sq);
    env.C_V = 3.0 * C + 0.5 * sigma_sq * (std::log(env.R1) + 2.0 * log_R);
    return env;
}

RatioEnvelopeReport ratio_envelope_check(const FlowTrace& trace, double r, double R, double C, double sigma) {
    RatioEnvelopeReport out{ratio_envelope(r, R, C, sigma), kInf, 0.0, true};
    for (const FlowRecord& rec : trace.records) {
        out.observed_min = std::min(out.observed_min, rec.ratio_min_pi);
        out.observed_max = std::max(out.observed_max, rec.ratio_max_pi);
    }
    out.pass = out.observed_max <= out.envelope.R1 && out.observed_min >= out.envelope.r1;
    return out;
}

}  // namespace bdlab
