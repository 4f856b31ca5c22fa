#include <CLI11.hpp>

#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include "cavcool/scenario.hpp"
#include "cavcool/sweep.hpp"

namespace {

cavcool::Json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cavcool::ConfigError("config", "cannot open '" + path + "'");
    try {
        return cavcool::Json::parse(in);
    } catch (const cavcool::Json::exception& e) {
        throw cavcool::ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
}

cavcool::ScenarioConfig resolve_scenario(const std::string& config_path,
                                         const std::string& preset_name, double tol) {
    cavcool::ScenarioConfig cfg;
    if (!config_path.empty()) {
        cfg = cavcool::parse_scenario_config(load_json(config_path));
    } else if (!preset_name.empty()) {
        cfg = cavcool::preset(preset_name);
    } else {
        throw cavcool::ConfigError("config", "either --config or --preset is required");
    }
    if (tol > 0.0) cfg.fit.tol = tol;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cavcool: collective cavity-cooling simulator and analysis toolkit"};
    app.require_subcommand(1);

    std::string config_path, preset_name, out_dir = "out";
    double tol = 0.0;
    int jobs = 0;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config_path, "JSON scenario config file");
        sub->add_option("--preset", preset_name, "built-in preset (fig2a, fig2b)");
        sub->add_option("--tol", tol, "override fit tolerance");
        if (with_out) sub->add_option("--out", out_dir, "output directory");
    };

    CLI::App* run = app.add_subcommand("run", "simulate one scenario, write CSV + JSON report");
    add_common(run, true);
    CLI::App* sweep =
        app.add_subcommand("sweep", "run a parameter sweep, write an aggregate CSV");
    sweep->add_option("--config", config_path, "JSON sweep spec file")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--jobs", jobs, "parallel grid points (capped by CAVCOOL_JOBS)");
    CLI::App* rates = app.add_subcommand("rates", "print couplings, predicted rates, regime");
    add_common(rates, false);
    CLI::App* oracle = app.add_subcommand(
        "oracle-compare", "clamped moment ODE vs linear bosonic covariance oracle");
    add_common(oracle, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const auto art = cavcool::run_scenario(
                resolve_scenario(config_path, preset_name, tol), out_dir);
            std::cout << "trajectory: " << art.csv_path << "\n"
                      << "report:     " << art.json_path << "\n"
                      << (art.report.pass ? "PASS" : "FAIL") << ": fitted rate "
                      << art.report.fit.rate << " vs analytic " << art.report.analytic_rate
                      << " (rel err " << art.report.relative_error << ", tol "
                      << art.report.tolerance << ")\n";
            return art.exit_code;
        }
        if (sweep->parsed()) {
            cavcool::SweepSpec spec = cavcool::parse_sweep_spec(load_json(config_path));
            if (jobs > 0) spec.jobs = jobs;
            const int code = cavcool::run_sweep(spec, out_dir);
            std::cout << "sweep CSV: " << out_dir << "/sweep.csv\n";
            return code;
        }
        if (rates->parsed()) {
            std::cout << cavcool::rates_payload(resolve_scenario(config_path, preset_name, tol))
                             .dump(2)
                      << "\n";
            return 0;
        }
        if (oracle->parsed()) {
            const auto j = cavcool::oracle_compare(
                resolve_scenario(config_path, preset_name, tol), out_dir);
            std::cout << j.dump(2) << "\n";
            return 0;
        }
    } catch (const cavcool::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
