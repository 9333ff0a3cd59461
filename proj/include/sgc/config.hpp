// config.hpp — Run configuration: JSON schema, defaults, validation and hashing
//
// Units: frequencies and rates in gamma, times in 1/gamma, magnetic field in T,
// thicknesses in nm, angles in mrad (grazing) or degrees (misalignment).

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sgc/hyperfine.hpp"
#include "sgc/layer_oracle.hpp"
#include "sgc/liouvillian.hpp"
#include "sgc/response.hpp"

namespace sgc {

inline constexpr const char* sgcsim_version = "1.0.0";

struct TimeGridConfig {
    double half_width{512.0};  // spectral half width of the Fourier grid
    int points{65536};
    bool tail_correction{true};

    void validate() const;
};

struct MeasureConfig {
    Grid analyzer{-60.0, 60.0, 241};  // analyzer line positions
};

struct OracleConfig {
    oracle::LayerStack stack{oracle::reference_cavity()};
    std::optional<double> angle_mrad;  // unset: first-order mode located by scan
    double scan_min_mrad{1.5};
    double scan_max_mrad{6.0};
    int scan_points{2000};
    Grid detuning{-50.0, 50.0, 1001};

    void validate() const;
};

struct OutputConfig {
    std::string directory{"out"};
    bool csv{true};
    bool svg{true};
};

struct RunConfig {
    NuclearSpecies species{NuclearSpecies::fe57()};
    GeometryConfig geometry{GeometryConfig::from_preset(GeometryPreset::half_faraday)};
    CavityParams cavity;
    DriveConfig drive;
    DetectionConfig detection;
    Grid grid;
    TimeGridConfig time_grid;
    MeasureConfig measure;
    Toggles toggles;
    DipOptions dips;
    OracleConfig oracle;
    OutputConfig outputs;

    void validate() const;
};

// Parses JSON text. Missing keys take defaults, unknown keys and type errors
// throw ValidationError naming the key path (e.g. "geometry.in_polarization").
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical JSON of the effective configuration (sorted keys, every field present).
std::string dump_config(const RunConfig& config);

// SHA-256 of the canonical config without the outputs section, lowercase hex.
std::string config_hash(const RunConfig& config);

// Command-line overrides.
void apply_preset(RunConfig& config, std::string_view preset);
void apply_sgc_switch(RunConfig& config, std::string_view on_off);
Grid parse_grid_spec(std::string_view spec);  // "min:max:n"

} // namespace sgc
