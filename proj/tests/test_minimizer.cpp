#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "test_support.hpp"

using namespace bdlab;
using namespace bdlab::testing;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return ErrorCode::io;
}

std::vector<GridMeasure> perturbations(const GridMeasure& m, std::uint64_t seed0, int count = 20) {
    std::vector<GridMeasure> out;
    for (int k = 0; k < count; ++k) out.push_back(random_measure(m, seed0 + k, 1.0));
    return out;
}

}  // namespace

TEST_CASE("gibbs map for F = 0 returns pi") {
    GridPtr g = standard_grid();
    RegularizedEnergy V(EnergyFunctional::zero(g), gaussian_reference(g), 0.7);
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto m = random_measure(V.pi(), s, 1.5);
        CHECK(max_abs_diff(gibbs_map(V, m).density(), V.pi().density()) <= 1e-14);
    }
}

TEST_CASE("gibbs map for a linear potential does not depend on m") {
    GridPtr g = standard_grid();
    RegularizedEnergy V(functional_from_name(g, "linear:tanh"), gaussian_reference(g), 1.0);
    auto a = gibbs_map(V, random_measure(V.pi(), 1, 1.5));
    auto b = gibbs_map(V, random_measure(V.pi(), 2, 1.5));
    CHECK(max_abs_diff(a.density(), b.density()) <= 1e-13);
    // Closed form: pi exp(-2 tanh) normalized.
    Vector expected = (V.pi().log_density().array() - 2.0 * g->nodes().array().tanh()).matrix();
    auto oracle = GridMeasure::from_log_density(g, expected);
    CHECK(max_abs_diff(a.density(), oracle.density()) <= 1e-13);
}

TEST_CASE("solve_mstar for F = 0 converges immediately to pi") {
    GridPtr g = standard_grid();
    for (double sigma : {0.5, 1.0, 3.0}) {
        RegularizedEnergy V(EnergyFunctional::zero(g), gaussian_reference(g), sigma);
        auto r = solve_mstar(V);
        CHECK(r.converged);
        CHECK(r.iterations == 1);
        CHECK(r.residual <= 1e-12);
        CHECK(max_abs_diff(r.m_star.density(), V.pi().density()) == 0.0);
    }
}

TEST_CASE("solve_mstar with f(x) = x and sigma = sqrt 2 gives N(-1, 1)") {
    GridPtr g = standard_grid();
    RegularizedEnergy V(functional_from_name(g, "linear:x"), gaussian_reference(g), std::sqrt(2.0));
    auto r = solve_mstar(V, 1e-10);
    CHECK(r.converged);
    CHECK(r.residual <= 1e-8);
    CHECK(max_abs_diff(r.m_star.density(), gaussian_measure(g, -1.0, 1.0).density()) <= 1e-8);
}

TEST_CASE("solve_mstar on the kernel and learner presets") {
    for (const char* name : {"interaction-psd", "learner-toy", "linear-tilt"}) {
        CAPTURE(name);
        auto setup = preset_setup(name);
        auto r = solve_mstar(setup.V, 1e-10, 200);
        CHECK(r.converged);
        CHECK(r.residual <= 1e-8);
        CHECK(r.iterations <= 200);
        CHECK(std::abs(r.m_star.mass() - 1.0) <= 1e-10);
        CHECK(r.m_star.strictly_positive());
        // Fixed point: gibbs_map(m*) = m* up to the residual.
        CHECK(log_residual(r.m_star, gibbs_map(setup.V, r.m_star)) <= 1e-8);
        // Stable under one extra undamped iteration.
        auto next = gibbs_map(setup.V, r.m_star);
        CHECK(log_residual(next, gibbs_map(setup.V, next)) <= std::max(2.0 * r.residual, 1e-14));
    }
}

TEST_CASE("interaction-psd minimizer is pi by symmetry") {
    auto setup = preset_setup("interaction-psd");
    auto r = solve_mstar(setup.V);
    CHECK(max_abs_diff(r.m_star.density(), setup.V.pi().density()) <= 1e-12);
}

TEST_CASE("non-convergence is reported") {
    auto setup = preset_setup("learner-toy");
    auto r = solve_mstar(setup.V, 1e-14, 2);
    CHECK_FALSE(r.converged);
    CHECK(r.iterations == 2);
    CHECK(r.residual > 1e-14);
    CHECK(code_of([&] { solve_mstar(setup.V, 0.0); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { solve_mstar(setup.V, 1e-8, 10, 1.5); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { solve_mstar(setup.V, 1e-8, 0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("optimality check") {
    GridPtr g = standard_grid();
    RegularizedEnergy V0(EnergyFunctional::zero(g), gaussian_reference(g), 1.0);
    auto r0 = solve_mstar(V0);
    auto rep0 = optimality_check(V0, r0, perturbations(r0.m_star, 10));
    CHECK(rep0.drift_std <= 1e-10);
    CHECK(rep0.pass());

    for (const std::string& name : preset_names()) {
        CAPTURE(name);
        auto setup = preset_setup(name);
        auto r = solve_mstar(setup.V);
        auto rep = optimality_check(setup.V, r, perturbations(r.m_star, 100));
        CHECK(rep.drift_constant);
        CHECK(rep.drift_std <= 10.0 * std::max(r.residual, 1e-12) * setup.V.sigma() * setup.V.sigma());
        CHECK(rep.minimal);
        CHECK(rep.min_energy_margin > 0.0);
        CHECK(rep.min_growth_slack >= -1e-8);
        CHECK(rep.pass());
    }
}

TEST_CASE("log_residual ignores additive constants") {
    GridPtr g = standard_grid(65);
    auto a = gaussian_measure(g, 0.0, 1.0);
    CHECK(log_residual(a, a) == 0.0);
    auto b = gaussian_measure(g, 0.1, 1.0);
    CHECK(log_residual(a, b) > 0.0);
    CHECK(log_residual(a, b) == doctest::Approx(log_residual(b, a)));
}
