// sgcsim.cpp — Command-line front end: sgcsim <command> [--config ...] [--out ...]
//
// Exit codes: 0 success, 1 invalid input or config, 2 numerical failure.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgc/config.hpp"
#include "sgc/errors.hpp"
#include "sgc/run.hpp"

namespace {

constexpr int exit_validation = 1;
constexpr int exit_numerical = 2;

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"sgcsim — SGC in 57Fe thin-film x-ray cavities"};
    app.set_version_flag("--version", std::string("sgcsim ") + sgc::sgcsim_version);

    std::string command;
    std::optional<std::string> config_path;
    std::optional<std::string> out_dir;
    std::optional<std::string> preset;
    std::optional<std::string> sgc_switch;
    std::optional<std::string> grid_spec;
    bool print_config = false;

    app.add_option("command", command, "levels | spectrum | time | measure | oracle | fit")->required();
    app.add_option("--config", config_path, "JSON run configuration (defaults if omitted)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (overrides outputs.directory)");
    app.add_option("--preset", preset, "geometry preset: faraday | half_faraday | voigt45, or all for one run per preset");
    app.add_option("--sgc", sgc_switch, "switch both SGC contributions on or off")
        ->check(CLI::IsMember({"on", "off"}));
    app.add_option("--grid", grid_spec, "detuning grid min:max:n in gamma (use --grid=-80:80:4000)");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_validation;
    }

    try {
        const sgc::Command cmd = sgc::command_from_string(command);
        sgc::RunConfig config = config_path ? sgc::load_config(*config_path) : sgc::parse_config("");
        const bool batch = preset && *preset == "all";
        if (preset && !batch) sgc::apply_preset(config, *preset);
        if (sgc_switch) sgc::apply_sgc_switch(config, *sgc_switch);
        if (grid_spec) config.grid = sgc::parse_grid_spec(*grid_spec);
        if (out_dir) config.outputs.directory = *out_dir;
        config.validate();

        if (print_config) {
            std::cout << sgc::dump_config(config);
            return 0;
        }
        const std::vector<sgc::RunResult> results =
            batch ? sgc::run_preset_batch(config, cmd, config.outputs.directory)
                  : std::vector<sgc::RunResult>{sgc::run(config, cmd, config.outputs.directory)};
        for (const auto& result : results) {
            for (const auto& w : result.warnings) std::cerr << "sgcsim: warning: " << w << '\n';
            for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
        }
        return 0;
    } catch (const sgc::ValidationError& e) {
        std::cerr << "sgcsim: invalid input: " << e.what() << '\n';
        return exit_validation;
    } catch (const sgc::NumericalError& e) {
        std::cerr << "sgcsim: numerical failure: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "sgcsim: error: " << e.what() << '\n';
        return exit_numerical;
    }
}
