// run.hpp — Command execution: config in, CSV/SVG artifacts and summary.json out

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "sgc/config.hpp"

namespace sgc {

enum class Command { levels, spectrum, time, measure, oracle, fit };

std::string_view to_string(Command command);
Command command_from_string(std::string_view name);

struct RunResult {
    std::string summary;                       // summary.json contents
    std::vector<std::filesystem::path> files;  // everything written, in order
    std::vector<std::string> warnings;         // non-fatal advisories, also listed in summary.json
};

// Executes one command and writes its artifacts plus config.json (the effective
// configuration) and summary.json into out_dir. Outputs depend only on the config.
RunResult run(const RunConfig& config, Command command, const std::filesystem::path& out_dir);

// Runs the command once per named geometry preset (faraday, half_faraday,
// voigt45), each into out_dir/<preset>/, for side-by-side comparison.
std::vector<RunResult> run_preset_batch(const RunConfig& config, Command command,
                                        const std::filesystem::path& out_dir);

} // namespace sgc
