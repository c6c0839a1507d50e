// bdlab: run, sweep and check birth-death flow experiments.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bdlab/experiment.hpp"

namespace {

// A config argument is either a JSON file or a bare preset name.
bdlab::ExperimentConfig config_arg(const std::string& arg) {
    for (const std::string& name : bdlab::preset_names())
        if (arg == name) return bdlab::preset_config(name);
    return bdlab::load_config(arg);
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto end = s.find(',', start);
        out.push_back(s.substr(start, end == std::string::npos ? std::string::npos : end - start));
        if (end == std::string::npos) break;
        start = end + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fisher-Rao birth-death flow lab"};
    app.require_subcommand(1);

    std::string config_path;
    std::string grid_spec;
    std::string flows_spec = "birth_death,wfr";
    std::string out_dir;
    std::string check_dir;
    int iters = 8;

    auto* run = app.add_subcommand("run", "run one experiment and write its certificate");
    run->add_option("config", config_path, "JSON config file or preset name")->required();
    run->add_option("-o,--output-dir", out_dir, "override output_dir");

    auto* sw = app.add_subcommand("sweep", "run one experiment per parameter grid point");
    sw->add_option("config", config_path, "JSON config file or preset name")->required();
    sw->add_option("--grid", grid_spec, "e.g. \"sigma=0.5,1,2;n=257,513\"")->required();
    sw->add_option("-o,--output-dir", out_dir, "override output_dir");

    auto* ms = app.add_subcommand("mstar", "solve the Gibbs fixed point");
    ms->add_option("config", config_path, "JSON config file or preset name")->required();
    ms->add_option("-o,--output-dir", out_dir, "override output_dir");

    auto* pc = app.add_subcommand("picard", "Picard iteration in path space");
    pc->add_option("config", config_path, "JSON config file or preset name")->required();
    pc->add_option("--iters", iters, "number of Picard iterations")->check(CLI::Range(2, 1000));
    pc->add_option("-o,--output-dir", out_dir, "override output_dir");

    auto* cmp = app.add_subcommand("compare", "compare flows from the same initial measure");
    cmp->add_option("config", config_path, "JSON config file or preset name")->required();
    cmp->add_option("--flows", flows_spec, "two or three of birth_death,wasserstein,wfr");
    cmp->add_option("-o,--output-dir", out_dir, "override output_dir");

    auto* chk = app.add_subcommand("check", "re-run diagnostics on a finished run directory");
    chk->add_option("output_dir", check_dir, "directory written by 'run'")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : bdlab::kExitConfigError;
    }

    if (chk->parsed()) return bdlab::check_directory(check_dir);

    bdlab::ExperimentConfig config;
    std::vector<bdlab::FlowKind> flows;
    try {
        config = config_arg(config_path);
        if (!out_dir.empty()) config.output_dir = out_dir;
        if (cmp->parsed())
            for (const std::string& f : split_commas(flows_spec)) flows.push_back(bdlab::flow_kind_from_name(f));
    } catch (const bdlab::Error& e) {
        std::cerr << "bdlab: error [" << bdlab::to_string(e.code()) << "]: " << e.what() << '\n';
        return bdlab::kExitConfigError;
    }

    if (run->parsed()) {
        const bdlab::ExperimentResult r = bdlab::run_experiment(config);
        if (r.certificate) std::cout << r.certificate->to_json().dump(2) << '\n';
        return r.exit_code;
    }
    if (sw->parsed()) {
        const bdlab::SweepResult r = bdlab::sweep(config, grid_spec);
        std::cout << r.n_points << " points, " << r.n_failed << " failed\n";
        return r.exit_code;
    }
    if (ms->parsed()) return bdlab::run_mstar(config);
    if (pc->parsed()) return bdlab::run_picard(config, iters);
    if (cmp->parsed()) {
        const bdlab::ComparisonResult r = bdlab::compare_flows(config, flows);
        for (std::size_t i = 0; i < r.monotone.size(); ++i)
            std::cout << bdlab::to_string(r.flows[i]) << " monotone: " << (r.monotone[i] ? "yes" : "no") << '\n';
        if (r.wfr_dominates) std::cout << "wfr below birth_death: " << (*r.wfr_dominates ? "yes" : "no") << '\n';
        return r.exit_code;
    }
    return bdlab::kExitConfigError;
}
