#ifndef BDLAB_TEST_SUPPORT_HPP
#define BDLAB_TEST_SUPPORT_HPP

#include <cmath>
#include <numbers>

#include "bdlab/experiment.hpp"
#include "bdlab/rng.hpp"

namespace bdlab::testing {

inline double normal_pdf(double x, double mean, double std) {
    const double z = (x - mean) / std;
    return std::exp(-0.5 * z * z) / (std * std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline GridPtr standard_grid(Index n = 1025) { return build_grid(-8.0, 8.0, n); }

/// pi = N(mean, std^2) through the potential (x - mean)^2 / (2 std^2).
inline ReferenceMeasure gaussian_reference(const GridPtr& grid, double mean = 0.0, double std = 1.0) {
    const Vector u = (grid->nodes().array() - mean).square() / (2.0 * std * std);
    return make_reference(grid, u);
}

inline double max_abs_diff(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

/// A preset's energy and initial measure at the default resolution.
inline ExperimentSetup preset_setup(const std::string& name) { return build_setup(preset_config(name)); }

/// Positive density pi * exp(g) with sup|g| <= amplitude.
inline GridMeasure random_measure(const GridMeasure& base, std::uint64_t seed, double amplitude = 1.0) {
    return random_log_perturbation(base, seed, 0x7e57, amplitude);
}

}  // namespace bdlab::testing

#endif  // BDLAB_TEST_SUPPORT_HPP
