#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "lsc/runner.hpp"

namespace {

std::string default_scenario_dir() {
    if (const char* env = std::getenv("LSC_SCENARIO_DIR")) return env;
#ifdef LSC_SCENARIO_DIR_DEFAULT
    return LSC_SCENARIO_DIR_DEFAULT;
#else
    return "scenarios";
#endif
}

std::string resolve_scenario(const std::string& arg) {
    namespace fs = std::filesystem;
    if (fs::exists(arg)) return arg;
    const fs::path candidate = fs::path(default_scenario_dir()) / (arg + ".json");
    if (fs::exists(candidate)) return candidate.string();
    return arg;  // let the loader report the error
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"2D quasi-static multi-body frictional contact solver on level sets"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    int steps_override = -1;
    double h_override = -1.0;
    std::string advect = "";
    int log_level = 1;

    CLI::App* run = app.add_subcommand("run", "Run a scenario");
    run->add_option("scenario", scenario_path, "Scenario file or built-in name")->required();
    run->add_option("--out", out_dir, "Output directory (default: out/<name>, env LSC_OUT)");
    run->add_option("--steps", steps_override, "Override the step count");
    run->add_option("--grid-h", h_override, "Override the grid spacing");
    run->add_option("--advect", advect, "Advection scheme: weno5 | upwind");
    run->add_option("--log-level", log_level, "0 silent, 1 steps, 2 iterations");

    CLI::App* list = app.add_subcommand("list-scenarios", "List built-in scenarios");

    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "Validate a scenario file");
    validate->add_option("scenario", validate_path, "Scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (list->parsed()) {
            for (const std::string& name : lsc::list_scenarios(default_scenario_dir()))
                std::cout << name << "\n";
            return 0;
        }
        if (validate->parsed()) {
            lsc::load_scenario(resolve_scenario(validate_path));
            std::cout << "ok\n";
            return 0;
        }

        lsc::Scenario sc = lsc::load_scenario(resolve_scenario(scenario_path));
        lsc::RunnerOptions opt;
        if (!out_dir.empty())
            opt.out_dir = out_dir;
        else if (const char* env = std::getenv("LSC_OUT"))
            opt.out_dir = std::filesystem::path(env) / sc.name;
        else
            opt.out_dir = std::filesystem::path("out") / sc.name;
        if (steps_override > 0) opt.steps_override = steps_override;
        if (h_override > 0) opt.h_override = h_override;
        if (advect == "weno5") opt.advect_override = lsc::AdvectScheme::Weno5;
        else if (advect == "upwind") opt.advect_override = lsc::AdvectScheme::Upwind;
        else if (!advect.empty()) {
            std::cerr << "error: --advect must be weno5 or upwind\n";
            return 2;
        }
        opt.log_level = log_level;

        lsc::Runner runner(std::move(sc), opt);
        const auto reports = runner.run();
        std::cout << "completed " << reports.size() << " steps; outputs in " << opt.out_dir
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
