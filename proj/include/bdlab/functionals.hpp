#ifndef BDLAB_FUNCTIONALS_HPP
#define BDLAB_FUNCTIONALS_HPP

#include <cstdint>
#include <string>
#include <variant>

#include "bdlab/grid_measure.hpp"

namespace bdlab {

struct ZeroFunctional {};

/// F(m) = integral of f dm.
struct LinearPotential {
    Vector f;
};

/// F(m) = 1/2 double integral of K dm dm, K symmetric.
struct QuadraticInteraction {
    Matrix kernel;
};

/// F(m) = mean over k of 1/2 (<phi_k, m> - y_k)^2, features stored row-wise.
struct MeanFieldLearner {
    Matrix features;
    Vector targets;
};

/// Flat-differentiable energy on measures of a fixed grid, with the sup bounds
/// C on |dF/dm| and C2 on |d2F/dm2| computed at construction.
class EnergyFunctional {
public:
    using Variant = std::variant<ZeroFunctional, LinearPotential, QuadraticInteraction, MeanFieldLearner>;

    static EnergyFunctional zero(GridPtr grid);
    static EnergyFunctional linear(GridPtr grid, Vector f);
    static EnergyFunctional interaction(GridPtr grid, Matrix kernel);
    static EnergyFunctional learner(GridPtr grid, Matrix features, Vector targets);

    const Variant& variant() const { return variant_; }
    const Grid& grid() const { return *grid_; }
    const GridPtr& grid_ptr() const { return grid_; }
    double bound_C() const { return bound_c_; }
    double bound_C2() const { return bound_c2_; }
    bool is_zero() const { return std::holds_alternative<ZeroFunctional>(variant_); }
    std::string kind() const;

private:
    EnergyFunctional(GridPtr grid, Variant v, double c, double c2)
        : grid_(std::move(grid)), variant_(std::move(v)), bound_c_(c), bound_c2_(c2) {}

    GridPtr grid_;
    Variant variant_;
    double bound_c_;
    double bound_c2_;
};

double eval_F(const EnergyFunctional& F, const GridMeasure& m);

struct ValueAndGradient {
    double value;
    Vector flat_grad;
};

/// F(m) and dF/dm(m, .) from a single pass (one kernel product for interactions).
ValueAndGradient eval_F_with_derivative(const EnergyFunctional& F, const GridMeasure& m);

/// dF/dm(m, .) on the nodes, shifted to zero m-mean. Throws bound_violation
/// if the result exceeds bound_C.
Vector flat_derivative(const EnergyFunctional& F, const GridMeasure& m);

/// |F(m') - F(m) - int_0^1 int dF/dm(m + l (m' - m)) (m' - m) dl| with the
/// l-integral taken by composite trapezoid on n_lambda panels.
double flat_derivative_defcheck(const EnergyFunctional& F, const GridMeasure& m,
                                const GridMeasure& m_prime, int n_lambda);

/// int dF/dm(m)(m - m') - (F(m) - F(m')); nonnegative for convex F.
double convexity_check(const EnergyFunctional& F, const GridMeasure& m, const GridMeasure& m_prime);

/// V(m) = F(m) + sigma^2/2 KL(m | pi).
class RegularizedEnergy {
public:
    RegularizedEnergy(EnergyFunctional F, ReferenceMeasure pi, double sigma);

    const EnergyFunctional& F() const { return F_; }
    const ReferenceMeasure& reference() const { return pi_; }
    const GridMeasure& pi() const { return pi_.measure; }
    double sigma() const { return sigma_; }
    double half_sigma_sq() const { return 0.5 * sigma_ * sigma_; }

private:
    EnergyFunctional F_;
    ReferenceMeasure pi_;
    double sigma_;
};

double eval_V(const RegularizedEnergy& V, const GridMeasure& m);

/// a(m,x) = dF/dm(m,x) + sigma^2/2 log(m/pi) - sigma^2/2 KL(m|pi).
Vector drift_a(const RegularizedEnergy& V, const GridMeasure& m);
/// Same as drift_a, reusing an already computed flat derivative.
Vector drift_a(const RegularizedEnergy& V, const GridMeasure& m, const Vector& flat_grad);

// Presets addressable by name.

/// "tanh" or "x".
Vector potential_preset(const Grid& grid, const std::string& name);
/// "tanh-psd" (0.1 tanh x tanh y) or "xy".
Matrix kernel_preset(const Grid& grid, const std::string& name);
/// 16-point synthetic regression with features 0.5 tanh(z_k x) drawn from seed.
MeanFieldLearner learner_preset(const Grid& grid, std::uint64_t seed, int n_data = 16);
/// "zero", "linear:<potential>", "interaction:<kernel>", "learner:<seed>".
EnergyFunctional functional_from_name(const GridPtr& grid, const std::string& name);

}  // namespace bdlab

#endif  // BDLAB_FUNCTIONALS_HPP
