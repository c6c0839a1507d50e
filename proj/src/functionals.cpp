#include "bdlab/functionals.hpp"

#include <algorithm>
#include <sstream>

#include "bdlab/rng.hpp"

namespace bdlab {

namespace {

void require_grid(const EnergyFunctional& F, const GridMeasure& m) {
    if (!F.grid().same_as(m.grid()))
        throw Error(ErrorCode::grid_mismatch, "measure does not live on the functional's grid");
}

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double oscillation(const Vector& f) { return f.maxCoeff() - f.minCoeff(); }

}  // namespace

EnergyFunctional EnergyFunctional::zero(GridPtr grid) {
    return EnergyFunctional(std::move(grid), ZeroFunctional{}, 0.0, 0.0);
}

EnergyFunctional EnergyFunctional::linear(GridPtr grid, Vector f) {
    if (f.size() != grid->size()) throw Error(ErrorCode::grid_mismatch, "potential length");
    if (!f.allFinite()) throw Error(ErrorCode::non_finite_value, "linear potential");
    const double c = oscillation(f);
    return EnergyFunctional(std::move(grid), LinearPotential{std::move(f)}, c, 0.0);
}

EnergyFunctional EnergyFunctional::interaction(GridPtr grid, Matrix kernel) {
    const Index n = grid->size();
    if (kernel.rows() != n || kernel.cols() != n) throw Error(ErrorCode::grid_mismatch, "kernel shape");
    if (!kernel.allFinite()) throw Error(ErrorCode::non_finite_value, "interaction kernel");
    if ((kernel - kernel.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw Error(ErrorCode::invalid_argument, "interaction kernel is not symmetric");
    // (Km)(x) and the double integral both lie in [min K, max K].
    const double c = kernel.maxCoeff() - kernel.minCoeff();
    const double c2 = kernel.cwiseAbs().maxCoeff();
    return EnergyFunctional(std::move(grid), QuadraticInteraction{std::move(kernel)}, c, c2);
}

EnergyFunctional EnergyFunctional::learner(GridPtr grid, Matrix features, Vector targets) {
    if (features.cols() != grid->size() || features.rows() != targets.size() || targets.size() == 0)
        throw Error(ErrorCode::grid_mismatch, "learner features/targets shape");
    if (!features.allFinite() || !targets.allFinite())
        throw Error(ErrorCode::non_finite_value, "learner data");
    const double n_data = static_cast<double>(targets.size());
    // |p_k - y_k| is bounded by the worst feature extreme; |phi_k - <phi_k, m>| by its oscillation.
    double c = 0.0;
    for (Index k = 0; k < features.rows(); ++k) {
        const double hi = features.row(k).maxCoeff();
        const double lo = features.row(k).minCoeff();
        const double residual = std::max(std::abs(hi - targets[k]), std::abs(lo - targets[k]));
        c += residual * (hi - lo);
    }
    c /= n_data;
    const double c2 = ((features.transpose() * features) / n_data).cwiseAbs().maxCoeff();
    return EnergyFunctional(std::move(grid), MeanFieldLearner{std::move(features), std::move(targets)}, c,
                            c2);
}

std::string EnergyFunctional::kind() const {
    return std::visit(Overloaded{[](const ZeroFunctional&) { return std::string("zero"); },
                                 [](const LinearPotential&) { return std::string("linear"); },
                                 [](const QuadraticInteraction&) { return std::string("interaction"); },
                                 [](const MeanFieldLearner&) { return std::string("learner"); }},
                      variant_);
}

ValueAndGradient eval_F_with_derivative(const EnergyFunctional& F, const GridMeasure& m) {
    require_grid(F, m);
    const Index n = m.size();
    ValueAndGradient out = std::visit(
        Overloaded{
            [&](const ZeroFunctional&) { return ValueAndGradient{0.0, Vector::Zero(n)}; },
            [&](const LinearPotential& lp) {
                const double mean = m.expect(lp.f);
                return ValueAndGradient{mean, (lp.f.array() - mean).matrix()};
            },
            [&](const QuadraticInteraction& qi) {
                const Vector q = m.masses();
                Vector km = qi.kernel * q;
                const double both = q.dot(km);
                km.array() -= both;
                return ValueAndGradient{0.5 * both, std::move(km)};
            },
            [&](const MeanFieldLearner& ml) {
                const double n_data = static_cast<double>(ml.targets.size());
                const Vector residual = ml.features * m.masses() - ml.targets;
                Vector grad = ml.features.transpose() * residual / n_data;
                grad.array() -= m.expect(grad);
                return ValueAndGradient{0.5 * residual.squaredNorm() / n_data, std::move(grad)};
            }},
        F.variant());
    const double peak = out.flat_grad.cwiseAbs().maxCoeff();
    if (peak > F.bound_C() + 1e-10) {
        std::ostringstream os;
        os << "|dF/dm| = " << peak << " exceeds C = " << F.bound_C();
        throw Error(ErrorCode::bound_violation, os.str());
    }
    return out;
}

double eval_F(const EnergyFunctional& F, const GridMeasure& m) {
    require_grid(F, m);
    return std::visit(Overloaded{[&](const ZeroFunctional&) { return 0.0; },
                                 [&](const LinearPotential& lp) { return m.expect(lp.f); },
                                 [&](const QuadraticInteraction& qi) {
                                     const Vector q = m.masses();
                                     return 0.5 * q.dot(qi.kernel * q);
                                 },
                                 [&](const MeanFieldLearner& ml) {
                                     const Vector residual = ml.features * m.masses() - ml.targets;
                                     return 0.5 * residual.squaredNorm() /
                                            static_cast<double>(ml.targets.size());
                                 }},
                      F.variant());
}

Vector flat_derivative(const EnergyFunctional& F, const GridMeasure& m) {
    return eval_F_with_derivative(F, m).flat_grad;
}

double flat_derivative_defcheck(const EnergyFunctional& F, const GridMeasure& m, const GridMeasure& m_prime,
                                int n_lambda) {
    require_same_grid(m, m_prime);
    if (n_lambda < 8) throw Error(ErrorCode::invalid_argument, "n_lambda must be at least 8");
    const Vector direction = m_prime.density() - m.density();
    const Vector& w = m.grid().weights();
    double integral = 0.0;
    for (int j = 0; j <= n_lambda; ++j) {
        const double lambda = static_cast<double>(j) / n_lambda;
        const Vector mixed = m.density() + lambda * direction;
        const GridMeasure m_lambda = GridMeasure::from_density(m.grid_ptr(), mixed.cwiseMax(0.0));
        const double g = w.cwiseProduct(flat_derivative(F, m_lambda)).dot(direction);
        integral += (j == 0 || j == n_lambda) ? 0.5 * g : g;
    }
    integral /= n_lambda;
    return std::abs(eval_F(F, m_prime) - eval_F(F, m) - integral);
}

double convexity_check(const EnergyFunctional& F, const GridMeasure& m, const GridMeasure& m_prime) {
    require_same_grid(m, m_prime);
    const ValueAndGradient at_m = eval_F_with_derivative(F, m);
    const Vector diff = m.density() - m_prime.density();
    const double linear_term = m.grid().weights().cwiseProduct(at_m.flat_grad).dot(diff);
    return linear_term - (at_m.value - eval_F(F, m_prime));
}

RegularizedEnergy::RegularizedEnergy(EnergyFunctional F, ReferenceMeasure pi, double sigma)
    : F_(std::move(F)), pi_(std::move(pi)), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorCode::invalid_argument, "sigma must be > 0");
    if (!F_.grid().same_as(pi_.measure.grid()))
        throw Error(ErrorCode::grid_mismatch, "functional and reference measure grids differ");
}

double eval_V(const RegularizedEnergy& V, const GridMeasure& m) {
    const double divergence = kl(m, V.pi());
    if (divergence == kInf) return kInf;
    return eval_F(V.F(), m) + V.half_sigma_sq() * divergence;
}

Vector drift_a(const RegularizedEnergy& V, const GridMeasure& m, const Vector& flat_grad) {
    if (!m.strictly_positive()) throw Error(ErrorCode::zero_density_node, "drift needs m > 0 on every node");
    require_same_grid(m, V.pi());
    const Vector log_ratio = m.log_density() - V.pi().log_density();
    const double divergence = m.expect(log_ratio);
    return flat_grad + V.half_sigma_sq() * (log_ratio.array() - divergence).matrix();
}

Vector drift_a(const RegularizedEnergy& V, const GridMeasure& m) {
    return drift_a(V, m, flat_derivative(V.F(), m));
}

Vector potential_preset(const Grid& grid, const std::string& name) {
    const Vector& x = grid.nodes();
    if (name == "tanh") return x.array().tanh();
    if (name == "x") return x;
    throw Error(ErrorCode::config_parse, "unknown potential preset '" + name + "'");
}

Matrix kernel_preset(const Grid& grid, const std::string& name) {
    const Vector& x = grid.nodes();
    if (name == "tanh-psd") {
        const Vector t = x.array().tanh();
        return 0.1 * t * t.transpose();
    }
    if (name == "xy") return x * x.transpose();
    throw Error(ErrorCode::config_parse, "unknown kernel preset '" + name + "'");
}

MeanFieldLearner learner_preset(const Grid& grid, std::uint64_t seed, int n_data) {
    CounterRng rng(seed, 0x1ea7);
    const Vector& x = grid.nodes();
    MeanFieldLearner out{Matrix(n_data, grid.size()), Vector(n_data)};
    for (int k = 0; k < n_data; ++k) {
        const double z = rng.uniform(-2.0, 2.0);
        out.features.row(k) = 0.5 * (z * x.array()).tanh().matrix().transpose();
        out.targets[k] = 0.3 * std::tanh(1.5 * z) + 0.02 * (rng.uniform() - 0.5);
    }
    return out;
}

EnergyFunctional functional_from_name(const GridPtr& grid, const std::string& name) {
    if (name == "zero") return EnergyFunctional::zero(grid);
    const auto colon = name.find(':');
    const std::string head = name.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : name.substr(colon + 1);
    if (head == "linear") return EnergyFunctional::linear(grid, potential_preset(*grid, arg));
    if (head == "interaction") return EnergyFunctional::interaction(grid, kernel_preset(*grid, arg));
    if (head == "learner") {
        std::uint64_t seed = 0;
        try {
            seed = std::stoull(arg);
        } catch (const std::exception&) {
            throw Error(ErrorCode::config_parse, "learner preset needs an integer seed: '" + name + "'");
        }
        MeanFieldLearner data = learner_preset(*grid, seed);
        return EnergyFunctional::learner(grid, std::move(data.features), std::move(data.targets));
    }
    throw Error(ErrorCode::config_parse, "unknown functional '" + name + "'");
}

}  // namespace bdlab
