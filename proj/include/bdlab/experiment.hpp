#ifndef BDLAB_EXPERIMENT_HPP
#define BDLAB_EXPERIMENT_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "bdlab/birth_death_flow.hpp"
#include "bdlab/comparison_flows.hpp"
#include "bdlab/diagnostics.hpp"
#include "bdlab/minimizer.hpp"

namespace bdlab {

using json = nlohmann::json;

struct GridSpec {
    double x_min = -8.0;
    double x_max = 8.0;
    Index n = 1025;
};

struct FlowSpec {
    std::string integrator = "exponential";
    double dt = 1e-3;
    double t_end = 4.0;
    int record_every = 10;
};

struct PicardSpec {
    double T = 1.0;
    int n_time = 64;
};

struct ExperimentConfig {
    std::string preset;
    GridSpec grid;
    /// "gaussian:<mean>:<std>" gives U(x) = (x - mean)^2 / (2 std^2).
    std::string reference_potential = "gaussian:0:1";
    std::string functional = "zero";
    double sigma = 1.0;
    /// "gaussian:<mean>:<std>", "random:<seed>" or "pi".
    std::string m0 = "gaussian:1:1";
    FlowSpec flow;
    PicardSpec picard;
    std::vector<std::string> checks;
    std::uint64_t seed = 0;
    std::string output_dir;
};

const std::vector<std::string>& preset_names();
const std::vector<std::string>& check_names();

/// Throws config_parse for an unknown name.
ExperimentConfig preset_config(const std::string& name);

/// A "preset" key is applied first; every other key overrides it.
ExperimentConfig config_from_json(const json& j);
json config_to_json(const ExperimentConfig& config);
/// Throws config_parse on unreadable or malformed files.
ExperimentConfig load_config(const std::filesystem::path& path);

/// Rejects out-of-range values with config_parse.
void validate_config(const ExperimentConfig& config);

/// output_dir, placed under $BDLAB_OUTPUT_ROOT when that is set and the path is relative.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

/// pi exp(g) normalized, g a sum of low-frequency cosines and sines with sup|g| <= amplitude.
GridMeasure random_log_perturbation(const GridMeasure& base, std::uint64_t seed, std::uint64_t stream,
                                    double amplitude);

/// Everything a run needs, built from a config.
struct ExperimentSetup {
    GridPtr grid;
    RegularizedEnergy V;
    GridMeasure m0;
};

ExperimentSetup build_setup(const ExperimentConfig& config);
Integrator integrator_from_name(const std::string& name);

struct Certificate {
    std::vector<CheckResult> checks;
    std::optional<RateReport> rate;
    std::vector<std::string> notes;

    bool pass() const;
    json to_json() const;
};

/// Runs the requested checks against a completed trace.
Certificate evaluate_checks(const ExperimentConfig& config, const ExperimentSetup& setup,
                            const MinimizerResult& mstar, const FlowTrace& trace);

struct ExperimentResult {
    int exit_code = 0;
    std::string message;
    std::optional<MinimizerResult> mstar;
    FlowTrace trace;
    std::optional<Certificate> certificate;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailure = 1;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitRuntimeError = 3;

/// Solves for m*, runs the flow, evaluates the checks and, when write_outputs
/// is set, writes trace.csv, trace_extra.csv, mstar.csv, certificate.json and
/// config_resolved.json into the output directory.
ExperimentResult run_experiment(const ExperimentConfig& config, bool write_outputs = true);

/// "key=v1,v2;key=v3" over sigma, n, x_min, x_max, dt, t_end, record_every, seed.
/// An empty spec yields no points.
std::vector<std::vector<std::pair<std::string, std::string>>> parse_sweep_grid(const std::string& spec);

struct SweepResult {
    int exit_code = 0;
    std::size_t n_points = 0;
    std::size_t n_failed = 0;
};

/// One experiment per grid point in <output_dir>/point_<k>, plus summary.csv.
SweepResult sweep(const ExperimentConfig& base, const std::string& grid_spec);

struct ComparisonResult {
    int exit_code = 0;
    std::vector<FlowKind> flows;
    std::vector<FlowTrace> traces;
    /// Per flow: the gap never increases between records (tolerance 1e-12).
    std::vector<bool> monotone;
    /// WFR gap <= birth-death gap + 1e-8 at matched times, when both ran.
    std::optional<bool> wfr_dominates;
};

/// Runs the flows from the same m0 with matched record times and writes compare.csv
/// and compare.json. Transport flows subdivide dt to stay within the CFL limit.
ComparisonResult compare_flows(const ExperimentConfig& config, const std::vector<FlowKind>& flows,
                               bool write_outputs = true);

/// Solves for m* and writes mstar.csv and mstar.json.
int run_mstar(const ExperimentConfig& config);

/// Picard iteration on the config's picard block; writes picard.csv.
int run_picard(const ExperimentConfig& config, int n_iters);

/// Re-evaluates the certificate from the files of a finished run and prints it.
int check_directory(const std::filesystem::path& dir);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string mstar_csv(const GridMeasure& m_star);
GridMeasure read_mstar_csv(const GridPtr& grid, std::istream& is);

}  // namespace bdlab

#endif  // BDLAB_EXPERIMENT_HPP
