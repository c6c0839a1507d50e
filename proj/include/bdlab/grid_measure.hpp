#ifndef BDLAB_GRID_MEASURE_HPP
#define BDLAB_GRID_MEASURE_HPP

#include <cmath>
#include <limits>
#include <memory>
#include <utility>

#include <Eigen/Dense>

#include "bdlab/error.hpp"

namespace bdlab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Uniform 1-D grid on [x_min, x_max] with trapezoid quadrature weights.
class Grid {
public:
    Grid(double x_min, double x_max, Index n);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    Index size() const { return n_; }
    double h() const { return h_; }
    const Vector& nodes() const { return nodes_; }
    const Vector& weights() const { return weights_; }

    double integrate(const Vector& f) const { return weights_.dot(f); }

    bool same_as(const Grid& other) const {
        return n_ == other.n_ && x_min_ == other.x_min_ && x_max_ == other.x_max_;
    }

private:
    double x_min_;
    double x_max_;
    Index n_;
    double h_;
    Vector nodes_;
    Vector weights_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr build_grid(double x_min, double x_max, Index n);

/// Probability density on a Grid, normalized to unit quadrature mass.
///
/// The log-density is kept alongside the density so that log-domain
/// integrators and divergences never round-trip through exp/log. Nodes with
/// zero density carry -inf in the log-density.
class GridMeasure {
public:
    static GridMeasure from_density(GridPtr grid, const Vector& values);
    /// Normalizes exp(log_values) without leaving the log domain. Entries may be -inf.
    static GridMeasure from_log_density(GridPtr grid, const Vector& log_values);

    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    const Vector& density() const { return density_; }
    const Vector& log_density() const { return log_density_; }
    Index size() const { return density_.size(); }

    double mass() const { return grid_->integrate(density_); }
    /// Quadrature expectation of f under this measure.
    double expect(const Vector& f) const {
        return grid_->weights().cwiseProduct(density_).dot(f);
    }
    /// Point masses w_i * m_i.
    Vector masses() const { return grid_->weights().cwiseProduct(density_); }
    bool strictly_positive() const { return (density_.array() > 0.0).all(); }

private:
    GridMeasure(GridPtr grid, Vector density, Vector log_density)
        : grid_(std::move(grid)), density_(std::move(density)), log_density_(std::move(log_density)) {}

    GridPtr grid_;
    Vector density_;
    Vector log_density_;
};

GridMeasure measure_from_density(const GridPtr& grid, const Vector& values);
GridMeasure gaussian_measure(const GridPtr& grid, double mean, double std);

/// pi proportional to exp(-U) on the grid.
struct ReferenceMeasure {
    Vector potential;
    GridMeasure measure;
    double log_z;
};

ReferenceMeasure make_reference(const GridPtr& grid, const Vector& potential);

void require_same_grid(const GridMeasure& a, const GridMeasure& b);

double kl(const GridMeasure& m, const GridMeasure& m_prime);
double chi2(const GridMeasure& m, const GridMeasure& m_prime);
double tv(const GridMeasure& m, const GridMeasure& m_prime);
double fisher_rao_distance(const GridMeasure& m, const GridMeasure& m_prime);
/// Sum of weights * |m - m'|, i.e. twice the total variation.
double l1_distance(const GridMeasure& m, const GridMeasure& m_prime);

/// I_f(m|m') = integral of f(m/m') m'. Nodes where both densities vanish are
/// skipped; mass of m where m' vanishes gives +inf.
template <class Fn>
double f_divergence(const GridMeasure& m, const GridMeasure& m_prime, Fn&& f) {
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
        sum += w[i] * f(p[i] / q[i]) * q[i];
    }
    return sum;
}

struct RatioRange {
    double r;
    double R;
};

/// Extrema of m/m' over nodes where m' > 0.
RatioRange density_ratio_bounds(const GridMeasure& m, const GridMeasure& m_prime);

struct DivergenceReport {
    double kl_fwd;
    double kl_rev;
    double chi2_fwd;
    double chi2_rev;
    double tv;
    double fisher_rao;
    double ratio_min;
    double ratio_max;
};

DivergenceReport divergence_report(const GridMeasure& m, const GridMeasure& m_prime);

struct DragomirCheck {
    DivergenceReport report;
    bool reverse_kl_ok;     // KL(m'|m) <= KL(m|m') / r
    bool chi2_ok;           // chi2(m|m') <= 2R KL(m|m')
    bool neglog_sandwich_ok;  // KL/R <= I_{-log} <= KL/r
    bool chi2_sandwich_ok;    // 2r KL <= chi2 <= 2R KL
    double worst_slack;

    bool all() const { return reverse_kl_ok && chi2_ok && neglog_sandwich_ok && chi2_sandwich_ok; }
};

DragomirCheck dragomir_check(const GridMeasure& m, const GridMeasure& m_prime,
                             double tolerance = 1e-10);

/// Normalized pi^(1-lambda) m0^lambda.
GridMeasure geometric_mixture(const GridMeasure& m0, const GridMeasure& pi, double lambda);

/// Quadrature mass carried by the outer 1/64 of the window on each side.
double boundary_mass(const GridMeasure& m);

/// Central differences in the interior, one-sided at the two end nodes.
Vector gradient(const Grid& grid, const Vector& f);

}  // namespace bdlab

#endif  // BDLAB_GRID_MEASURE_HPP
