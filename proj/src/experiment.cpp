#include "bdlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "bdlab/rng.hpp"

namespace bdlab {

namespace fs = std::filesystem;

namespace {

constexpr double kDissipationTolerance = 1e-2;
constexpr double kOracleTolerance = 1e-10;
constexpr double kMinimizerResidual = 1e-8;
constexpr double kMinimizerDriftStd = 1e-7;
constexpr int kGrowthSamples = 20;
constexpr std::uint64_t kWarmStartStream = 0x5eed;
constexpr std::uint64_t kGrowthStream = 0x9a0;

const std::vector<std::string> kDefaultChecks = {"pli",  "dissipation",    "quadratic_growth", "kl_bound",
                                                 "rate", "ratio_envelope", "minimizer"};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw Error(ErrorCode::config_parse, "bad number '" + text + "' in " + what);
    return v;
}

long long parse_integer(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size())
        throw Error(ErrorCode::config_parse, "bad integer '" + text + "' in " + what);
    return v;
}

// "gaussian:<mean>:<std>" -> (mean, std)
std::pair<double, double> parse_gaussian(const std::string& spec, const std::string& what) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3 || parts[0] != "gaussian")
        throw Error(ErrorCode::config_parse, what + " must look like gaussian:<mean>:<std>, got '" + spec + "'");
    const double mean = parse_real(parts[1], what);
    const double std = parse_real(parts[2], what);
    if (!(std > 0.0)) throw Error(ErrorCode::config_parse, what + " needs a positive std");
    return {mean, std};
}

CheckResult make_check(std::string name, bool pass, double slack,
                       std::vector<std::pair<std::string, double>> constants) {
    return CheckResult{std::move(name), pass, slack, std::move(constants)};
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::vector<GridMeasure> growth_samples(const GridMeasure& m_star, std::uint64_t seed) {
    std::vector<GridMeasure> samples;
    samples.reserve(kGrowthSamples);
    for (int k = 0; k < kGrowthSamples; ++k)
        samples.push_back(random_log_perturbation(m_star, seed, kGrowthStream + static_cast<std::uint64_t>(k), 1.5));
    return samples;
}

void report_error(const Error& e) {
    std::cerr << "bdlab: error [" << to_string(e.code()) << "]: " << e.what() << '\n';
}

std::string to_json_text(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"f0-gaussian", "linear-tilt", "interaction-psd", "learner-toy"};
    return names;
}

const std::vector<std::string>& check_names() {
    static const std::vector<std::string> names = {"pli",  "dissipation",    "quadratic_growth", "kl_bound",
                                                   "rate", "ratio_envelope", "oracle_f0",        "minimizer"};
    return names;
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;
    c.preset = name;
    c.checks = kDefaultChecks;
    c.output_dir = "runs/" + name;
    if (name == "f0-gaussian") {
        c.functional = "zero";
        c.checks.push_back("oracle_f0");
    } else if (name == "linear-tilt") {
        c.functional = "linear:tanh";
    } else if (name == "interaction-psd") {
        c.functional = "interaction:tanh-psd";
    } else if (name == "learner-toy") {
        c.functional = "learner:7";
        c.m0 = "gaussian:0.5:1";
    } else {
        throw Error(ErrorCode::config_parse, "unknown preset '" + name + "'");
    }
    return c;
}

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw Error(ErrorCode::config_parse, "config must be a JSON object");
    try {
        ExperimentConfig c;
        if (j.contains("preset") && !j.at("preset").is_null()) {
            c = preset_config(j.at("preset").get<std::string>());
        } else {
            c.checks = kDefaultChecks;
            c.output_dir = "runs/custom";
        }
        for (const auto& [key, value] : j.items()) {
            if (key == "preset") {
            } else if (key == "grid") {
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "x_min") c.grid.x_min = gv.get<double>();
                    else if (gk == "x_max") c.grid.x_max = gv.get<double>();
                    else if (gk == "n") c.grid.n = gv.get<Index>();
                    else throw Error(ErrorCode::config_parse, "unknown key grid." + gk);
                }
            } else if (key == "reference_potential") {
                c.reference_potential = value.get<std::string>();
            } else if (key == "functional") {
                c.functional = value.get<std::string>();
            } else if (key == "sigma") {
                c.sigma = value.get<double>();
            } else if (key == "m0") {
                c.m0 = value.get<std::string>();
            } else if (key == "flow") {
                for (const auto& [fk, fv] : value.items()) {
                    if (fk == "integrator") c.flow.integrator = fv.get<std::string>();
                    else if (fk == "dt") c.flow.dt = fv.get<double>();
                    else if (fk == "t_end") c.flow.t_end = fv.get<double>();
                    else if (fk == "record_every") c.flow.record_every = fv.get<int>();
                    else throw Error(ErrorCode::config_parse, "unknown key flow." + fk);
                }
            } else if (key == "picard") {
                for (const auto& [pk, pv] : value.items()) {
                    if (pk == "T") c.picard.T = pv.get<double>();
                    else if (pk == "n_time") c.picard.n_time = pv.get<int>();
                    else throw Error(ErrorCode::config_parse, "unknown key picard." + pk);
                }
            } else if (key == "checks") {
                c.checks = value.get<std::vector<std::string>>();
            } else if (key == "seed") {
                c.seed = value.get<std::uint64_t>();
            } else if (key == "output_dir") {
                c.output_dir = value.get<std::string>();
            } else {
                throw Error(ErrorCode::config_parse, "unknown key '" + key + "'");
            }
        }
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_parse, e.what());
    }
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["preset"] = c.preset.empty() ? json(nullptr) : json(c.preset);
    j["grid"] = {{"x_min", c.grid.x_min}, {"x_max", c.grid.x_max}, {"n", c.grid.n}};
    j["reference_potential"] = c.reference_potential;
    j["functional"] = c.functional;
    j["sigma"] = c.sigma;
    j["m0"] = c.m0;
    j["flow"] = {{"integrator", c.flow.integrator},
                 {"dt", c.flow.dt},
                 {"t_end", c.flow.t_end},
                 {"record_every", c.flow.record_every}};
    j["picard"] = {{"T", c.picard.T}, {"n_time", c.picard.n_time}};
    j["checks"] = c.checks;
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorCode::config_parse, "cannot read config " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::config_parse, path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

void validate_config(const ExperimentConfig& c) {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::config_parse, msg); };
    if (!(c.grid.x_min < c.grid.x_max) || !std::isfinite(c.grid.x_min) || !std::isfinite(c.grid.x_max))
        fail("grid needs finite x_min < x_max");
    if (c.grid.n < 5) fail("grid.n must be at least 5");
    if (!(c.sigma > 0.0) || !std::isfinite(c.sigma)) fail("sigma must be positive");
    if (!(c.flow.dt > 0.0) || !(c.flow.t_end > 0.0)) fail("flow.dt and flow.t_end must be positive");
    if (c.flow.record_every < 1) fail("flow.record_every must be at least 1");
    const double steps = c.flow.t_end / c.flow.dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        fail("flow.t_end must be an integer multiple of flow.dt");
    integrator_from_name(c.flow.integrator);
    if (!(c.picard.T > 0.0) || c.picard.n_time < 8) fail("picard needs T > 0 and n_time >= 8");
    for (const std::string& name : c.checks)
        if (std::find(check_names().begin(), check_names().end(), name) == check_names().end())
            fail("unknown check '" + name + "'");
    parse_gaussian(c.reference_potential, "reference_potential");
    if (c.output_dir.empty()) fail("output_dir must not be empty");
}

fs::path resolve_output_dir(const ExperimentConfig& config) {
    fs::path dir(config.output_dir);
    if (const char* root = std::getenv("BDLAB_OUTPUT_ROOT"); root != nullptr && *root != '\0' && dir.is_relative())
        dir = fs::path(root) / dir;
    return dir;
}

GridMeasure random_log_perturbation(const GridMeasure& base, std::uint64_t seed, std::uint64_t stream,
                                    double amplitude) {
    constexpr int kModes = 4;
    const Grid& grid = base.grid();
    CounterRng rng(seed, stream);
    const double omega = 2.0 * std::numbers::pi / (grid.x_max() - grid.x_min());
    const Vector u = grid.nodes().array() - grid.x_min();
    Vector g = Vector::Zero(grid.size());
    for (int j = 1; j <= kModes; ++j) {
        const double c = rng.uniform(-1.0, 1.0) * amplitude / (2 * kModes);
        const double s = rng.uniform(-1.0, 1.0) * amplitude / (2 * kModes);
        g.array() += c * (j * omega * u.array()).cos() + s * (j * omega * u.array()).sin();
    }
    return GridMeasure::from_log_density(base.grid_ptr(), base.log_density() + g);
}

Integrator integrator_from_name(const std::string& name) {
    if (name == "exponential") return Integrator::exponential;
    if (name == "euler") return Integrator::euler;
    throw Error(ErrorCode::config_parse, "unknown integrator '" + name + "'");
}

ExperimentSetup build_setup(const ExperimentConfig& c) {
    validate_config(c);
    GridPtr grid = build_grid(c.grid.x_min, c.grid.x_max, c.grid.n);
    const auto [u_mean, u_std] = parse_gaussian(c.reference_potential, "reference_potential");
    const Vector potential = (grid->nodes().array() - u_mean).square() / (2.0 * u_std * u_std);
    ReferenceMeasure reference = make_reference(grid, potential);
    EnergyFunctional F = functional_from_name(grid, c.functional);

    std::optional<GridMeasure> m0;
    if (c.m0 == "pi") {
        m0 = reference.measure;
    } else if (c.m0.rfind("random:", 0) == 0) {
        const auto seed = parse_integer(c.m0.substr(7), "m0");
        if (seed < 0) throw Error(ErrorCode::config_parse, "m0 random seed must be nonnegative");
        m0 = random_log_perturbation(reference.measure, static_cast<std::uint64_t>(seed), kWarmStartStream, 1.5);
    } else {
        const auto [mean, std] = parse_gaussian(c.m0, "m0");
        m0 = gaussian_measure(grid, mean, std);
    }
    RegularizedEnergy V(std::move(F), std::move(reference), c.sigma);
    return ExperimentSetup{grid, std::move(V), std::move(*m0)};
}

bool Certificate::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

json Certificate::to_json() const {
    json j;
    j["pass"] = pass();
    json list = json::array();
    for (const CheckResult& c : checks) {
        json constants = json::object();
        for (const auto& [k, v] : c.constants) constants[k] = number_or_null(v);
        list.push_back({{"check_name", c.name},
                        {"pass", c.pass},
                        {"worst_slack", number_or_null(c.worst_slack)},
                        {"constants_used", constants}});
    }
    j["checks"] = list;
    if (rate) {
        j["rate"] = {{"kappa_theory", number_or_null(rate->kappa_theory)},
                     {"kappa_fit", number_or_null(rate->kappa_fit)},
                     {"lambda", rate->lambda},
                     {"window", {rate->window_begin, rate->window_end}},
                     {"window_points", rate->window_points},
                     {"immediate_convergence", rate->immediate_convergence}};
    }
    j["notes"] = notes;
    return j;
}

Certificate evaluate_checks(const ExperimentConfig& config, const ExperimentSetup& setup,
                            const MinimizerResult& mstar, const FlowTrace& trace) {
    const RegularizedEnergy& V = setup.V;
    const GridMeasure& pi = V.pi();
    const GridMeasure& m_star = mstar.m_star;
    const double sigma = V.sigma();
    const double C = V.F().bound_C();
    Certificate cert;
    std::optional<std::vector<GridMeasure>> samples;
    auto get_samples = [&]() -> const std::vector<GridMeasure>& {
        if (!samples) samples = growth_samples(m_star, config.seed);
        return *samples;
    };

    for (const std::string& name : config.checks) {
        if (name == "pli") {
            const PliReport rep = pli_check(V, trace);
            cert.checks.push_back(make_check(name, rep.pass, rep.worst_slack,
                                             {{"r1_bar", rep.r1_bar},
                                              {"R1_bar", rep.R1_bar},
                                              {"constant", rep.constant},
                                              {"kappa", rep.kappa}}));
            cert.notes.push_back("pli: trajectory ratio extrema are taken over the recorded times only");
        } else if (name == "dissipation") {
            const DissipationReport rep = dissipation_check(trace);
            cert.checks.push_back(make_check(name, rep.max_rel_error <= kDissipationTolerance,
                                             kDissipationTolerance - rep.max_rel_error,
                                             {{"max_rel_error", rep.max_rel_error},
                                              {"spacing", rep.spacing},
                                              {"tolerance", kDissipationTolerance}}));
        } else if (name == "quadratic_growth") {
            const GrowthReport rep = quadratic_growth_check(V, m_star, get_samples());
            cert.checks.push_back(make_check(
                name, rep.pass, rep.min_slack,
                {{"lambda", V.half_sigma_sq()}, {"max_abs_slack", rep.max_abs_slack}, {"samples", kGrowthSamples}}));
        } else if (name == "kl_bound") {
            const RatioRange range = density_ratio_bounds(setup.m0, pi);
            const KlBoundReport rep = kl_bound_check(trace, range.R, C, sigma);
            cert.checks.push_back(
                make_check(name, rep.pass, -rep.max_violation, {{"R", range.R}, {"C", C}, {"bound", rep.bound}}));
        } else if (name == "rate") {
            const RatioRange bar = density_ratio_bounds(setup.m0, m_star);
            const RateReport rep = rate_fit(trace, bar.r, bar.R, sigma);
            cert.checks.push_back(make_check(name, rep.pass, rep.worst_envelope_slack,
                                             {{"r_bar", bar.r},
                                              {"R_bar", bar.R},
                                              {"kappa_theory", rep.kappa_theory},
                                              {"kappa_fit", rep.kappa_fit},
                                              {"lambda", rep.lambda}}));
            cert.rate = rep;
        } else if (name == "ratio_envelope") {
            const RatioRange range = density_ratio_bounds(setup.m0, pi);
            const RatioEnvelopeReport rep = ratio_envelope_check(trace, range.r, range.R, C, sigma);
            const double slack =
                std::min(rep.envelope.R1 - rep.observed_max, rep.observed_min - rep.envelope.r1);
            cert.checks.push_back(make_check(name, rep.pass, slack,
                                             {{"r", range.r},
                                              {"R", range.R},
                                              {"C", C},
                                              {"r1", rep.envelope.r1},
                                              {"R1", rep.envelope.R1},
                                              {"C_V", rep.envelope.C_V},
                                              {"observed_min", rep.observed_min},
                                              {"observed_max", rep.observed_max}}));
        } else if (name == "oracle_f0") {
            if (!V.F().is_zero()) throw Error(ErrorCode::config_parse, "oracle_f0 applies only to functional 'zero'");
            double worst_l1 = 0.0;
            double worst_v = 0.0;
            for (std::size_t k = 0; k < trace.records.size(); ++k) {
                const FlowRecord& rec = trace.records[k];
                const GridMeasure oracle = oracle_flow_F0(setup.m0, pi, sigma, rec.t);
                worst_v = std::max(worst_v, std::abs(eval_V(V, oracle) - rec.V) / std::max(1.0, std::abs(rec.V)));
                if (k < trace.measures.size()) worst_l1 = std::max(worst_l1, l1_distance(trace.measures[k], oracle));
            }
            const double worst = std::max(worst_l1, worst_v);
            cert.checks.push_back(make_check(name, worst <= kOracleTolerance, kOracleTolerance - worst,
                                             {{"max_l1", worst_l1},
                                              {"max_rel_energy_error", worst_v},
                                              {"tolerance", kOracleTolerance}}));
            if (trace.measures.empty())
                cert.notes.push_back("oracle_f0: densities not available, compared energies only");
        } else if (name == "minimizer") {
            const OptimalityReport rep = optimality_check(V, mstar, get_samples());
            const bool pass = mstar.residual <= kMinimizerResidual && rep.drift_std <= kMinimizerDriftStd &&
                              rep.minimal && rep.growth_ok;
            cert.checks.push_back(make_check(
                name, pass, std::min(kMinimizerResidual - mstar.residual, kMinimizerDriftStd - rep.drift_std),
                {{"residual", mstar.residual},
                 {"iterations", mstar.iterations},
                 {"drift_std", rep.drift_std},
                 {"min_energy_margin", rep.min_energy_margin}}));
        } else {
            throw Error(ErrorCode::config_parse, "unknown check '" + name + "'");
        }
    }
    return cert;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error(ErrorCode::io, "cannot write " + tmp.string());
        os << contents;
        if (!os.flush()) throw Error(ErrorCode::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string mstar_csv(const GridMeasure& m_star) {
    std::ostringstream os;
    os << "node,x,density\n";
    const Vector& x = m_star.grid().nodes();
    for (Index i = 0; i < m_star.size(); ++i)
        os << i << ',' << format_double(x[i]) << ',' << format_double(m_star.density()[i]) << '\n';
    return os.str();
}

GridMeasure read_mstar_csv(const GridPtr& grid, std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || trim(line) != "node,x,density")
        throw Error(ErrorCode::io, "mstar.csv: unexpected header");
    Vector density(grid->size());
    Index count = 0;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto fields = split(trim(line), ',');
        if (fields.size() != 3) throw Error(ErrorCode::io, "mstar.csv: malformed row");
        const auto node = parse_integer(fields[0], "mstar.csv");
        if (node != count || count >= grid->size()) throw Error(ErrorCode::io, "mstar.csv: rows out of order");
        density[count++] = parse_real(fields[2], "mstar.csv");
    }
    if (count != grid->size()) throw Error(ErrorCode::grid_mismatch, "mstar.csv length differs from the grid");
    return GridMeasure::from_density(grid, density);
}

ExperimentResult run_experiment(const ExperimentConfig& config, bool write_outputs) {
    ExperimentResult result;
    std::optional<ExperimentSetup> setup;
    try {
        setup = build_setup(config);
    } catch (const Error& e) {
        report_error(e);
        result.exit_code = kExitConfigError;
        result.message = e.what();
        return result;
    }
    try {
        result.mstar = solve_mstar(setup->V);
        FlowConfig fc{setup->V, setup->m0, config.flow.dt, config.flow.t_end,
                      integrator_from_name(config.flow.integrator), config.flow.record_every};
        const bool keep = std::find(config.checks.begin(), config.checks.end(), "oracle_f0") != config.checks.end();
        result.trace = run_flow(fc, RecordOptions{&result.mstar->m_star, keep});
        result.certificate = evaluate_checks(config, *setup, *result.mstar, result.trace);
        result.exit_code = result.certificate->pass() ? kExitOk : kExitCheckFailure;

        if (write_outputs) {
            const fs::path dir = resolve_output_dir(config);
            std::ostringstream trace_csv, extra_csv;
            write_trace_csv(trace_csv, result.trace);
            write_trace_extra_csv(extra_csv, result.trace);
            write_file_atomic(dir / "trace.csv", trace_csv.str());
            write_file_atomic(dir / "trace_extra.csv", extra_csv.str());
            write_file_atomic(dir / "mstar.csv", mstar_csv(result.mstar->m_star));
            write_file_atomic(dir / "certificate.json", to_json_text(result.certificate->to_json()));
            write_file_atomic(dir / "config_resolved.json", to_json_text(config_to_json(config)));
        }
    } catch (const Error& e) {
        report_error(e);
        result.exit_code = e.code() == ErrorCode::config_parse ? kExitConfigError : kExitRuntimeError;
        result.message = e.what();
    } catch (const std::exception& e) {
        std::cerr << "bdlab: error: " << e.what() << '\n';
        result.exit_code = kExitRuntimeError;
        result.message = e.what();
    }
    return result;
}

namespace {

const std::vector<std::string> kSweepKeys = {"sigma", "n", "x_min", "x_max", "dt", "t_end", "record_every", "seed"};

void apply_override(ExperimentConfig& c, const std::string& key, const std::string& value) {
    if (key == "sigma") c.sigma = parse_real(value, key);
    else if (key == "n") c.grid.n = static_cast<Index>(parse_integer(value, key));
    else if (key == "x_min") c.grid.x_min = parse_real(value, key);
    else if (key == "x_max") c.grid.x_max = parse_real(value, key);
    else if (key == "dt") c.flow.dt = parse_real(value, key);
    else if (key == "t_end") c.flow.t_end = parse_real(value, key);
    else if (key == "record_every") c.flow.record_every = static_cast<int>(parse_integer(value, key));
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_integer(value, key));
    else throw Error(ErrorCode::config_parse, "cannot sweep over '" + key + "'");
}

}  // namespace

std::vector<std::vector<std::pair<std::string, std::string>>> parse_sweep_grid(const std::string& spec) {
    std::vector<std::vector<std::pair<std::string, std::string>>> points;
    if (trim(spec).empty()) return points;
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const std::string& axis : split(spec, ';')) {
        if (trim(axis).empty()) continue;
        const auto eq = axis.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::config_parse, "sweep axis '" + axis + "' lacks '='");
        const std::string key = trim(axis.substr(0, eq));
        if (std::find(kSweepKeys.begin(), kSweepKeys.end(), key) == kSweepKeys.end())
            throw Error(ErrorCode::config_parse, "cannot sweep over '" + key + "'");
        std::vector<std::string> values;
        for (const std::string& v : split(axis.substr(eq + 1), ',')) {
            if (trim(v).empty()) throw Error(ErrorCode::config_parse, "empty value in sweep axis '" + key + "'");
            values.push_back(trim(v));
        }
        if (values.empty()) throw Error(ErrorCode::config_parse, "sweep axis '" + key + "' has no values");
        axes.emplace_back(key, std::move(values));
    }
    if (axes.empty()) return points;
    points.emplace_back();
    for (const auto& [key, values] : axes) {
        std::vector<std::vector<std::pair<std::string, std::string>>> next;
        for (const auto& p : points)
            for (const std::string& v : values) {
                auto q = p;
                q.emplace_back(key, v);
                next.push_back(std::move(q));
            }
        points = std::move(next);
    }
    return points;
}

SweepResult sweep(const ExperimentConfig& base, const std::string& grid_spec) {
    SweepResult out;
    std::vector<std::vector<std::pair<std::string, std::string>>> points;
    try {
        points = parse_sweep_grid(grid_spec);
    } catch (const Error& e) {
        report_error(e);
        out.exit_code = kExitConfigError;
        return out;
    }
    const fs::path root = resolve_output_dir(base);
    std::vector<std::string> keys;
    if (!points.empty())
        for (const auto& kv : points.front()) keys.push_back(kv.first);

    std::ostringstream summary;
    summary << "point";
    for (const auto& k : keys) summary << ',' << k;
    summary << ",exit_code,kappa_theory,kappa_fit";
    for (const auto& check : base.checks) summary << ",worst_slack_" << check;
    summary << '\n';

    for (std::size_t p = 0; p < points.size(); ++p) {
        ExperimentConfig cfg = base;
        cfg.output_dir = (root / ("point_" + std::to_string(p))).string();
        int code = kExitConfigError;
        std::optional<Certificate> cert;
        try {
            for (const auto& [k, v] : points[p]) apply_override(cfg, k, v);
            ExperimentResult r = run_experiment(cfg);
            code = r.exit_code;
            cert = std::move(r.certificate);
        } catch (const Error& e) {
            report_error(e);
        }
        if (code != kExitOk) ++out.n_failed;
        summary << p;
        for (const auto& kv : points[p]) summary << ',' << kv.second;
        summary << ',' << code << ',';
        if (cert && cert->rate) summary << format_double(cert->rate->kappa_theory) << ','
                                        << format_double(cert->rate->kappa_fit);
        else summary << ',';
        for (const auto& check : base.checks) {
            summary << ',';
            if (!cert) continue;
            for (const CheckResult& c : cert->checks)
                if (c.name == check) summary << format_double(c.worst_slack);
        }
        summary << '\n';
    }
    out.n_points = points.size();
    write_file_atomic(root / "summary.csv", summary.str());
    out.exit_code = out.n_failed == 0 ? kExitOk : kExitCheckFailure;
    return out;
}

namespace {

FlowTrace run_transport_flow(FlowKind kind, const RegularizedEnergy& V, const GridMeasure& m0, double dt,
                             double t_end, int record_every, const GridMeasure* m_star, long& substeps) {
    const FlowState s0 = make_state(V, 0.0, m0);
    substeps = std::max<long>(1, static_cast<long>(std::ceil(dt / (0.5 * wasserstein_max_dt(V, s0)))));
    for (int attempt = 0;; ++attempt) {
        try {
            return run_comparison_flow(kind, V, m0, dt / static_cast<double>(substeps), t_end,
                                       record_every * static_cast<int>(substeps), m_star);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::cfl_violation || attempt >= 6) throw;
            substeps *= 2;
        }
    }
}

}  // namespace

ComparisonResult compare_flows(const ExperimentConfig& config, const std::vector<FlowKind>& flows,
                               bool write_outputs) {
    ComparisonResult out;
    out.flows = flows;
    std::optional<ExperimentSetup> setup;
    try {
        if (flows.size() < 2 || flows.size() > 3)
            throw Error(ErrorCode::config_parse, "compare needs two or three flows");
        setup = build_setup(config);
    } catch (const Error& e) {
        report_error(e);
        out.exit_code = kExitConfigError;
        return out;
    }
    try {
        const MinimizerResult mstar = solve_mstar(setup->V);
        json per_flow = json::array();
        for (FlowKind kind : flows) {
            long substeps = 1;
            if (kind == FlowKind::birth_death)
                out.traces.push_back(run_comparison_flow(kind, setup->V, setup->m0, config.flow.dt,
                                                         config.flow.t_end, config.flow.record_every,
                                                         &mstar.m_star));
            else
                out.traces.push_back(run_transport_flow(kind, setup->V, setup->m0, config.flow.dt, config.flow.t_end,
                                                        config.flow.record_every, &mstar.m_star, substeps));
            const auto& recs = out.traces.back().records;
            bool mono = true;
            for (std::size_t k = 1; k < recs.size(); ++k) mono = mono && *recs[k].gap <= *recs[k - 1].gap + 1e-12;
            out.monotone.push_back(mono);
            per_flow.push_back({{"flow", to_string(kind)},
                                {"dt", config.flow.dt / static_cast<double>(substeps)},
                                {"monotone", mono}});
        }
        const std::size_t n_rec = out.traces.front().records.size();
        for (const FlowTrace& t : out.traces)
            if (t.records.size() != n_rec) throw Error(ErrorCode::invalid_argument, "record times do not match");

        auto index_of = [&](FlowKind k) -> std::optional<std::size_t> {
            for (std::size_t i = 0; i < flows.size(); ++i)
                if (flows[i] == k) return i;
            return std::nullopt;
        };
        const auto bd = index_of(FlowKind::birth_death);
        const auto wfr = index_of(FlowKind::wfr);
        if (bd && wfr) {
            bool dom = true;
            for (std::size_t k = 0; k < n_rec; ++k)
                dom = dom && *out.traces[*wfr].records[k].gap <= *out.traces[*bd].records[k].gap + 1e-8;
            out.wfr_dominates = dom;
        }

        const bool ok = std::all_of(out.monotone.begin(), out.monotone.end(), [](bool b) { return b; }) &&
                        out.wfr_dominates.value_or(true);
        out.exit_code = ok ? kExitOk : kExitCheckFailure;

        if (write_outputs) {
            std::ostringstream csv;
            csv << 't';
            for (FlowKind k : flows) csv << ",gap_" << to_string(k);
            for (FlowKind k : flows) csv << ",langevin_" << to_string(k) << ",birth_death_" << to_string(k);
            csv << '\n';
            for (std::size_t r = 0; r < n_rec; ++r) {
                csv << format_double(out.traces.front().records[r].t);
                for (const FlowTrace& t : out.traces) csv << ',' << format_double(*t.records[r].gap);
                for (const FlowTrace& t : out.traces)
                    csv << ',' << format_double(*t.records[r].langevin_term) << ','
                        << format_double(*t.records[r].birth_death_term);
                csv << '\n';
            }
            json j;
            j["flows"] = per_flow;
            j["wfr_dominates"] = out.wfr_dominates ? json(*out.wfr_dominates) : json(nullptr);
            j["pass"] = ok;
            const fs::path dir = resolve_output_dir(config);
            write_file_atomic(dir / "compare.csv", csv.str());
            write_file_atomic(dir / "compare.json", to_json_text(j));
        }
    } catch (const Error& e) {
        report_error(e);
        out.exit_code = e.code() == ErrorCode::config_parse ? kExitConfigError : kExitRuntimeError;
    }
    return out;
}

int run_mstar(const ExperimentConfig& config) {
    std::optional<ExperimentSetup> setup;
    try {
        setup = build_setup(config);
    } catch (const Error& e) {
        report_error(e);
        return kExitConfigError;
    }
    try {
        const MinimizerResult r = solve_mstar(setup->V);
        const OptimalityReport rep = optimality_check(setup->V, r, {});
        const bool ok = r.residual <= kMinimizerResidual;
        json j = {{"residual", r.residual},
                  {"iterations", r.iterations},
                  {"converged", r.converged},
                  {"drift_std", rep.drift_std},
                  {"V_star", eval_V(setup->V, r.m_star)},
                  {"pass", ok}};
        const fs::path dir = resolve_output_dir(config);
        write_file_atomic(dir / "mstar.csv", mstar_csv(r.m_star));
        write_file_atomic(dir / "mstar.json", to_json_text(j));
        std::cout << j.dump(2) << '\n';
        return ok ? kExitOk : kExitCheckFailure;
    } catch (const Error& e) {
        report_error(e);
        return kExitRuntimeError;
    }
}

int run_picard(const ExperimentConfig& config, int n_iters) {
    std::optional<ExperimentSetup> setup;
    try {
        setup = build_setup(config);
        if (n_iters < 2) throw Error(ErrorCode::config_parse, "picard needs at least 2 iterations");
    } catch (const Error& e) {
        report_error(e);
        return kExitConfigError;
    }
    try {
        const PicardResult r = picard_solve(setup->V, setup->m0, config.picard.T, config.picard.n_time, n_iters);
        std::ostringstream csv;
        csv << "iteration,tv_T_distance,contraction_ratio\n";
        for (std::size_t n = 0; n < r.tv_T_distances.size(); ++n) {
            csv << n + 1 << ',' << format_double(r.tv_T_distances[n]) << ',';
            if (n >= 1) csv << format_double(r.contraction_ratios[n - 1]);
            csv << '\n';
        }
        write_file_atomic(resolve_output_dir(config) / "picard.csv", csv.str());
        std::cout << csv.str();
        return kExitOk;
    } catch (const Error& e) {
        report_error(e);
        return kExitRuntimeError;
    }
}

int check_directory(const fs::path& dir) {
    std::optional<ExperimentConfig> config;
    std::optional<ExperimentSetup> setup;
    try {
        config = load_config(dir / "config_resolved.json");
        setup = build_setup(*config);
    } catch (const Error& e) {
        report_error(e);
        return kExitConfigError;
    }
    try {
        std::ifstream trace_is(dir / "trace.csv");
        std::ifstream mstar_is(dir / "mstar.csv");
        if (!trace_is || !mstar_is) throw Error(ErrorCode::io, "missing trace.csv or mstar.csv in " + dir.string());
        std::ifstream extra_is(dir / "trace_extra.csv");
        const FlowTrace trace = read_trace_csv(trace_is, extra_is ? &extra_is : nullptr);
        GridMeasure m_star = read_mstar_csv(setup->grid, mstar_is);
        const double residual = log_residual(m_star, gibbs_map(setup->V, m_star));
        const MinimizerResult mstar{std::move(m_star), residual, 0, residual <= kMinimizerResidual};
        const Certificate cert = evaluate_checks(*config, *setup, mstar, trace);
        std::cout << cert.to_json().dump(2) << '\n';
        return cert.pass() ? kExitOk : kExitCheckFailure;
    } catch (const Error& e) {
        report_error(e);
        return e.code() == ErrorCode::config_parse ? kExitConfigError : kExitRuntimeError;
    }
}

}  // namespace bdlab
