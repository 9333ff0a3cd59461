// io.hpp — CSV serialization with provenance headers and static SVG plots

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sgc/response.hpp"

namespace sgc {

inline constexpr const char* spectrum_csv_header =
    "delta_gamma, re_r_ss, im_r_ss, re_r_ps, im_r_ps, re_r_sp, im_r_sp, re_r_pp, im_r_pp, I_crossed, I_direct";
inline constexpr const char* time_csv_header = "t_gamma, intensity";

// Comment lines ("# key: value") placed above the header row of every CSV.
struct Provenance {
    std::string config_hash;
    std::string command;
};

std::string spectrum_csv(const Spectrum& spectrum, const Provenance& provenance);
std::string time_csv(const TimeResponse& response, const Provenance& provenance);

// Generic numeric table: `columns` names, one vector per column of equal length.
std::string table_csv(std::span<const std::string> columns, std::span<const std::vector<double>> data,
                      const Provenance& provenance);

// Writes the file atomically enough for our purposes (truncate + write); throws
// ValidationError when the path cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view content);

struct Curve {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool dashed{false};
};

struct PlotStyle {
    std::string title;
    std::string x_label{"detuning / gamma"};
    std::string y_label{"intensity (arb. units)"};
    bool log_y{false};
};

// One SVG document with all curves on shared axes. Empty input is a ValidationError.
std::string render_svg(std::span<const Curve> curves, const PlotStyle& style);

} // namespace sgc
