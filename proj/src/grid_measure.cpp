#include "bdlab/grid_measure.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

namespace bdlab {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_bounds: return "invalid-bounds";
        case ErrorCode::negative_density: return "negative-density";
        case ErrorCode::non_finite_value: return "non-finite-value";
        case ErrorCode::zero_mass: return "zero-mass";
        case ErrorCode::std_nonpositive: return "std-nonpositive";
        case ErrorCode::grid_mismatch: return "grid-mismatch";
        case ErrorCode::ratio_unbounded: return "ratio-unbounded";
        case ErrorCode::zero_density_node: return "zero-density-node";
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::bound_violation: return "bound-violation";
        case ErrorCode::positivity_violation: return "positivity-violation";
        case ErrorCode::cfl_violation: return "cfl-violation";
        case ErrorCode::trace_too_short: return "trace-too-short";
        case ErrorCode::gap_nonpositive: return "gap-nonpositive";
        case ErrorCode::config_parse: return "config-parse";
        case ErrorCode::io: return "io";
    }
    return "unknown";
}

Grid::Grid(double x_min, double x_max, Index n) : x_min_(x_min), x_max_(x_max), n_(n) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max) || n < 3) {
        std::ostringstream os;
        os << "grid [" << x_min << ", " << x_max << "] with " << n << " nodes";
        throw Error(ErrorCode::invalid_bounds, os.str());
    }
    h_ = (x_max - x_min) / static_cast<double>(n - 1);
    nodes_.resize(n);
    for (Index i = 0; i < n; ++i) nodes_[i] = x_min + static_cast<double>(i) * h_;
    nodes_[n - 1] = x_max;
    weights_ = Vector::Constant(n, h_);
    weights_[0] = weights_[n - 1] = 0.5 * h_;
}

GridPtr build_grid(double x_min, double x_max, Index n) {
    return std::make_shared<const Grid>(x_min, x_max, n);
}

GridMeasure GridMeasure::from_density(GridPtr grid, const Vector& values) {
    if (values.size() != grid->size())
        throw Error(ErrorCode::grid_mismatch, "density length differs from grid size");
    for (Index i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw Error(ErrorCode::non_finite_value, "density value");
        if (values[i] < 0.0) throw Error(ErrorCode::negative_density, "density value below zero");
    }
    const double mass = grid->integrate(values);
    if (!(mass > 0.0)) throw Error(ErrorCode::zero_mass, "density integrates to zero");
    Vector density = values / mass;
    Vector log_density = density.unaryExpr([](double v) { return v > 0.0 ? std::log(v) : -kInf; });
    return GridMeasure(std::move(grid), std::move(density), std::move(log_density));
}

GridMeasure GridMeasure::from_log_density(GridPtr grid, const Vector& log_values) {
    if (log_values.size() != grid->size())
        throw Error(ErrorCode::grid_mismatch, "log-density length differs from grid size");
    double top = -kInf;
    for (Index i = 0; i < log_values.size(); ++i) {
        const double v = log_values[i];
        if (std::isnan(v) || v == kInf) throw Error(ErrorCode::non_finite_value, "log-density value");
        top = std::max(top, v);
    }
    if (top == -kInf) throw Error(ErrorCode::zero_mass, "log-density is -inf everywhere");
    Vector shifted = log_values.array() - top;
    const double log_mass = std::log(grid->integrate(shifted.array().exp().matrix()));
    Vector log_density = shifted.array() - log_mass;
    Vector density = log_density.array().exp();
    return GridMeasure(std::move(grid), std::move(density), std::move(log_density));
}

GridMeasure measure_from_density(const GridPtr& grid, const Vector& values) {
    return GridMeasure::from_density(grid, values);
}

GridMeasure gaussian_measure(const GridPtr& grid, double mean, double std) {
    if (!(std > 0.0) || !std::isfinite(std))
        throw Error(ErrorCode::std_nonpositive, "gaussian standard deviation must be positive");
    if (mean - 6.0 * std < grid->x_min() || mean + 6.0 * std > grid->x_max()) {
        std::cerr << "warning: N(" << mean << ", " << std << "^2) is cut off within 6 std by ["
                  << grid->x_min() << ", " << grid->x_max() << "]\n";
    }
    const Vector& x = grid->nodes();
    Vector log_values = -(x.array() - mean).square() / (2.0 * std * std);
    return GridMeasure::from_log_density(grid, log_values);
}

ReferenceMeasure make_reference(const GridPtr& grid, const Vector& potential) {
    if (potential.size() != grid->size())
        throw Error(ErrorCode::grid_mismatch, "potential length differs from grid size");
    if (!potential.allFinite()) throw Error(ErrorCode::non_finite_value, "reference potential");
    const double u_min = potential.minCoeff();
    const double log_z =
        -u_min + std::log(grid->integrate((-(potential.array() - u_min)).exp().matrix()));
    Vector log_density = -potential.array() - log_z;
    return ReferenceMeasure{potential, GridMeasure::from_log_density(grid, log_density), log_z};
}

void require_same_grid(const GridMeasure& a, const GridMeasure& b) {
    if (!a.grid().same_as(b.grid())) throw Error(ErrorCode::grid_mismatch, "measures live on different grids");
}

double kl(const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const Vector& w = m.grid().weights();
    const Vector& p = m.density();
    const Vector& q = m_prime.density();
    const Vector& lp = m.log_density();
    const Vector& lq = m_prime.log_density();
    double sum = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (q[i] == 0.0) return kInf;
        sum += w[i] * p[i] * (lp[i] - lq[i]);
    }
    return sum;
}

double chi2(const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const Vector& w = m.grid().weights();
    const Vector& p = m.density();
    const Vector& q = m_prime.density();
    double sum = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        if (q[i] == 0.0) {
            if (p[i] > 0.0) return kInf;
            continue;
        }
        const double d = p[i] - q[i];
        sum += w[i] * d * d / q[i];
    }
    return sum;
}

namespace {

// |m - m'| evaluated through the log ratio when both are positive, so that
// nearly identical measures do not lose their difference to cancellation.
double abs_difference(double p, double q, double lp, double lq) {
    if (p > 0.0 && q > 0.0) return std::min(p, q) * std::abs(std::expm1(std::abs(lp - lq)));
    return std::abs(p - q);
}

}  // namespace

double l1_distance(const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const Vector& w = m.grid().weights();
    double sum = 0.0;
    for (Index i = 0; i < m.size(); ++i) {
        sum += w[i] * abs_difference(m.density()[i], m_prime.density()[i], m.log_density()[i],
                                     m_prime.log_density()[i]);
    }
    return sum;
}

double tv(const GridMeasure& m, const GridMeasure& m_prime) {
    return std::min(1.0, 0.5 * l1_distance(m, m_prime));
}

double fisher_rao_distance(const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const Vector d = m.density().cwiseSqrt() - m_prime.density().cwiseSqrt();
    return m.grid().integrate(d.cwiseAbs2());
}

RatioRange density_ratio_bounds(const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const Vector& p = m.density();
    const Vector& q = m_prime.density();
    double r = kInf;
    double R = -kInf;
    for (Index i = 0; i < p.size(); ++i) {
        if (q[i] == 0.0) {
            if (p[i] > 0.0) throw Error(ErrorCode::ratio_unbounded, "m > 0 where m' = 0");
            continue;
        }
        const double ratio = p[i] / q[i];
        r = std::min(r, ratio);
        R = std::max(R, ratio);
    }
    if (R < 0.0) throw Error(ErrorCode::zero_mass, "reference measure vanishes on every node");
    return {r, R};
}

DivergenceReport divergence_report(const GridMeasure& m, const GridMeasure& m_prime) {
    const RatioRange range = density_ratio_bounds(m, m_prime);
    return DivergenceReport{kl(m, m_prime),  kl(m_prime, m),  chi2(m, m_prime),
                            chi2(m_prime, m), tv(m, m_prime), fisher_rao_distance(m, m_prime),
                            range.r,          range.R};
}

DragomirCheck dragomir_check(const GridMeasure& m, const GridMeasure& m_prime, double tolerance) {
    DragomirCheck out{};
    out.report = divergence_report(m, m_prime);
    const DivergenceReport& d = out.report;
    const double r = d.ratio_min;
    const double R = d.ratio_max;
    const double neglog = f_divergence(m, m_prime, [](double t) { return -std::log(t); });

    const double s_rev = d.kl_fwd / r - d.kl_rev;
    const double s_chi = 2.0 * R * d.kl_fwd - d.chi2_fwd;
    const double s_neg_lo = neglog - d.kl_fwd / R;
    const double s_neg_hi = d.kl_fwd / r - neglog;
    const double s_chi_lo = d.chi2_fwd - 2.0 * r * d.kl_fwd;
    const double s_chi_hi = 2.0 * R * d.kl_fwd - d.chi2_fwd;

    out.reverse_kl_ok = s_rev >= -tolerance;
    out.chi2_ok = s_chi >= -tolerance;
    out.neglog_sandwich_ok = s_neg_lo >= -tolerance && s_neg_hi >= -tolerance;
    out.chi2_sandwich_ok = s_chi_lo >= -tolerance && s_chi_hi >= -tolerance;
    out.worst_slack = std::min({s_rev, s_chi, s_neg_lo, s_neg_hi, s_chi_lo, s_chi_hi});
    return out;
}

GridMeasure geometric_mixture(const GridMeasure& m0, const GridMeasure& pi, double lambda) {
    require_same_grid(m0, pi);
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw Error(ErrorCode::invalid_argument, "mixture exponent outside [0, 1]");
    if (!m0.strictly_positive() || !pi.strictly_positive())
        throw Error(ErrorCode::zero_density_node, "geometric mixture needs positive densities");
    if (lambda == 1.0) return m0;
    if (lambda == 0.0) return pi;
    Vector log_values = (1.0 - lambda) * pi.log_density() + lambda * m0.log_density();
    return GridMeasure::from_log_density(m0.grid_ptr(), log_values);
}

double boundary_mass(const GridMeasure& m) {
    const Index n = m.size();
    const Index k = std::max<Index>(1, n / 64);
    const Vector masses = m.masses();
    return masses.head(k).sum() + masses.tail(k).sum();
}

Vector gradient(const Grid& grid, const Vector& f) {
    const Index n = grid.size();
    const double h = grid.h();
    Vector g(n);
    g[0] = (f[1] - f[0]) / h;
    g[n - 1] = (f[n - 1] - f[n - 2]) / h;
    g.segment(1, n - 2) = (f.tail(n - 2) - f.head(n - 2)) / (2.0 * h);
    return g;
}

}  // namespace bdlab
