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

std::vector<EnergyFunctional> preset_functionals(const GridPtr& g) {
    return {functional_from_name(g, "zero"), functional_from_name(g, "linear:tanh"),
            functional_from_name(g, "interaction:tanh-psd"), functional_from_name(g, "learner:7")};
}

}  // namespace

TEST_CASE("eval_F examples") {
    GridPtr g = standard_grid();
    auto n1 = gaussian_measure(g, 1.0, 1.0);
    CHECK(eval_F(EnergyFunctional::zero(g), n1) == 0.0);
    CHECK(std::abs(eval_F(functional_from_name(g, "linear:x"), n1) - 1.0) <= 1e-6);
    CHECK(std::abs(eval_F(functional_from_name(g, "interaction:xy"), n1) - 0.5) <= 1e-6);

    // Learner: mean over data of 1/2 (<phi_k, m> - y_k)^2, recomputed by hand.
    auto F = functional_from_name(g, "learner:3");
    const auto& L = std::get<MeanFieldLearner>(F.variant());
    const Vector pred = L.features * n1.masses();
    const double loss = 0.5 * (pred - L.targets).squaredNorm() / static_cast<double>(L.targets.size());
    CHECK(eval_F(F, n1) == doctest::Approx(loss).epsilon(1e-13));
    CHECK(L.features.rows() == 16);
}

TEST_CASE("flat_derivative examples") {
    GridPtr g = standard_grid();
    auto n0 = gaussian_measure(g, 0.0, 1.0);
    auto n1 = gaussian_measure(g, 1.0, 1.0);
    CHECK(flat_derivative(EnergyFunctional::zero(g), n1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(flat_derivative(functional_from_name(g, "linear:x"), n0), g->nodes()) <= 1e-6);
    const Vector expected = g->nodes().array() - 1.0;
    CHECK(max_abs_diff(flat_derivative(functional_from_name(g, "interaction:xy"), n1), expected) <= 1e-5);
}

TEST_CASE("flat derivatives and drifts have zero mean") {
    GridPtr g = standard_grid(513);
    auto ref = gaussian_reference(g);
    for (const auto& F : preset_functionals(g)) {
        RegularizedEnergy V(F, ref, 0.8);
        for (std::uint64_t s = 0; s < 5; ++s) {
            auto m = random_measure(ref.measure, 40 + s, 1.5);
            CHECK(std::abs(m.expect(flat_derivative(F, m))) <= 1e-12);
            CHECK(std::abs(m.expect(drift_a(V, m))) <= 1e-10);
        }
    }
}

TEST_CASE("defcheck residuals") {
    GridPtr g = standard_grid();
    auto n0 = gaussian_measure(g, 0.0, 1.0);
    auto n1 = gaussian_measure(g, 1.0, 1.0);
    CHECK(flat_derivative_defcheck(EnergyFunctional::zero(g), n0, n1, 8) == 0.0);
    CHECK(flat_derivative_defcheck(functional_from_name(g, "linear:tanh"), n0, n1, 8) <= 1e-12);
    CHECK(flat_derivative_defcheck(functional_from_name(g, "interaction:xy"), n0, n1, 64) <= 1e-8);
    CHECK(code_of([&] { flat_derivative_defcheck(EnergyFunctional::zero(g), n0, n1, 4); }) ==
          ErrorCode::invalid_argument);

    // Every preset, 10 seeded pairs, 128 panels.
    auto ref = gaussian_reference(g);
    for (const auto& F : preset_functionals(g))
        for (std::uint64_t s = 0; s < 10; ++s) {
            auto a = random_measure(ref.measure, 300 + s, 1.5);
            auto b = random_measure(ref.measure, 400 + s, 1.5);
            CHECK(flat_derivative_defcheck(F, a, b, 128) <= 1e-6);
        }
}

TEST_CASE("defcheck is exact for quadratic energies at few panels") {
    GridPtr g = standard_grid(257);
    auto ref = gaussian_reference(g);
    auto a = random_measure(ref.measure, 1, 1.5);
    auto b = random_measure(ref.measure, 2, 1.5);
    CHECK(flat_derivative_defcheck(functional_from_name(g, "learner:11"), a, b, 8) <= 1e-12);
    CHECK(flat_derivative_defcheck(functional_from_name(g, "interaction:tanh-psd"), a, b, 8) <= 1e-12);
}

TEST_CASE("convexity") {
    GridPtr g = standard_grid(513);
    auto ref = gaussian_reference(g);
    auto n0 = ref.measure;
    CHECK(convexity_check(functional_from_name(g, "interaction:xy"), n0, n0) == doctest::Approx(0.0));
    for (std::uint64_t s = 0; s < 10; ++s) {
        auto a = random_measure(ref.measure, 500 + s, 1.5);
        auto b = random_measure(ref.measure, 600 + s, 1.5);
        CHECK(std::abs(convexity_check(functional_from_name(g, "linear:x"), a, b)) <= 1e-12);
        CHECK(convexity_check(functional_from_name(g, "interaction:xy"), a, b) >= 0.0);
        for (const auto& F : preset_functionals(g)) CHECK(convexity_check(F, a, b) >= -1e-10);
    }
}

TEST_CASE("bounds C and C2") {
    GridPtr g = standard_grid(513);
    auto zero = EnergyFunctional::zero(g);
    CHECK(zero.bound_C() == 0.0);
    CHECK(zero.bound_C2() == 0.0);

    auto lin = functional_from_name(g, "linear:tanh");
    CHECK(lin.bound_C() == doctest::Approx(2.0 * std::tanh(8.0)));
    CHECK(lin.bound_C2() == 0.0);

    auto inter = functional_from_name(g, "interaction:tanh-psd");
    CHECK(inter.bound_C() == doctest::Approx(0.2 * std::tanh(8.0) * std::tanh(8.0)));
    CHECK(inter.bound_C2() == doctest::Approx(0.1 * std::tanh(8.0) * std::tanh(8.0)));

    // Observed sup |dF/dm| never exceeds C.
    auto ref = gaussian_reference(g);
    for (const auto& F : preset_functionals(g))
        for (std::uint64_t s = 0; s < 10; ++s) {
            auto m = random_measure(ref.measure, 700 + s, 2.0);
            CHECK(flat_derivative(F, m).cwiseAbs().maxCoeff() <= F.bound_C() + 1e-10);
        }
    // Point masses at the window edges realize the extremes.
    Vector spike = Vector::Zero(g->size());
    spike[0] = 1.0;
    auto edge = measure_from_density(g, spike);
    CHECK(flat_derivative(lin, edge).cwiseAbs().maxCoeff() <= lin.bound_C() + 1e-10);
    CHECK(flat_derivative(inter, edge).cwiseAbs().maxCoeff() <= inter.bound_C() + 1e-10);
}

TEST_CASE("interaction kernel symmetry") {
    GridPtr g = standard_grid(33);
    Matrix K = kernel_preset(*g, "tanh-psd");
    CHECK((K - K.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    K(0, 1) += 1e-9;
    CHECK(code_of([&] { EnergyFunctional::interaction(g, K); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { EnergyFunctional::interaction(g, Matrix::Zero(3, 3)); }) == ErrorCode::grid_mismatch);
}

TEST_CASE("functional names") {
    GridPtr g = standard_grid(65);
    CHECK(functional_from_name(g, "zero").is_zero());
    CHECK(functional_from_name(g, "linear:x").kind() == "linear");
    CHECK(functional_from_name(g, "interaction:tanh-psd").kind() == "interaction");
    CHECK(functional_from_name(g, "learner:5").kind() == "learner");
    for (const char* bad : {"", "linear", "linear:nope", "interaction:nope", "learner:x", "quadratic"})
        CHECK(code_of([&] { functional_from_name(g, bad); }) == ErrorCode::config_parse);
}

TEST_CASE("learner preset is a pure function of the seed") {
    GridPtr g = standard_grid(65);
    auto a = learner_preset(*g, 9);
    auto b = learner_preset(*g, 9);
    auto c = learner_preset(*g, 10);
    CHECK((a.features.array() == b.features.array()).all());
    CHECK((a.targets.array() == b.targets.array()).all());
    CHECK_FALSE((a.targets.array() == c.targets.array()).all());
    CHECK(a.features.cwiseAbs().maxCoeff() <= 0.5);
}

TEST_CASE("eval_V examples") {
    GridPtr g = standard_grid();
    auto ref = gaussian_reference(g);
    RegularizedEnergy V0(EnergyFunctional::zero(g), ref, 1.0);
    CHECK(eval_V(V0, ref.measure) == 0.0);
    CHECK(std::abs(eval_V(V0, gaussian_measure(g, 1.0, 1.0)) - 0.25) <= 1e-6);
    RegularizedEnergy Vx(functional_from_name(g, "linear:x"), ref, 1.0);
    CHECK(std::abs(eval_V(Vx, ref.measure)) <= 1e-6);
    CHECK(code_of([&] { RegularizedEnergy(EnergyFunctional::zero(g), ref, 0.0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("drift_a examples") {
    GridPtr g = standard_grid();
    auto ref = gaussian_reference(g);
    RegularizedEnergy V0(EnergyFunctional::zero(g), ref, 1.0);
    CHECK(drift_a(V0, ref.measure).cwiseAbs().maxCoeff() <= 1e-14);

    auto n1 = gaussian_measure(g, 1.0, 1.0);
    const Vector expected = 0.5 * (g->nodes().array() - 0.5) - 0.25;
    CHECK(max_abs_diff(drift_a(V0, n1), expected) <= 1e-5);

    Vector v = n1.density();
    v[7] = 0.0;
    auto hole = measure_from_density(g, v);
    CHECK(code_of([&] { drift_a(V0, hole); }) == ErrorCode::zero_density_node);
}
