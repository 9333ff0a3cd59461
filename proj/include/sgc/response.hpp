// response.hpp — Reflectivity spectra, detection channels, dips and time-domain signals

#pragma once

#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sgc/hyperfine.hpp"
#include "sgc/liouvillian.hpp"

namespace sgc {

enum class DetectionMode { crossed_polarimeter, direct_monochromator };

std::string_view to_string(DetectionMode mode);
DetectionMode detection_mode_from_string(std::string_view name);

struct AnalyzerLine {
    double width{1.0};  // FWHM in gamma
    double depth{0.1};  // effective optical depth; resonant intensity transmission exp(-depth)
};

struct TimeGate {
    double start{0.0};
    double stop{std::numeric_limits<double>::infinity()};

    bool contains(double t) const { return t >= start && t <= stop; }
};

struct DetectionConfig {
    DetectionMode mode{DetectionMode::crossed_polarimeter};
    double extinction{1e-10};
    std::optional<AnalyzerLine> analyzer;
    std::optional<TimeGate> time_gate;

    void validate() const;
};

inline constexpr const char* channel_crossed = "I_crossed";
inline constexpr const char* channel_direct = "I_direct";

const char* channel_name(DetectionMode mode);

struct ChannelIntensity {
    double crossed{};
    double direct{};

    double operator[](DetectionMode mode) const
    {
        return mode == DetectionMode::crossed_polarimeter ? crossed : direct;
    }
};

// r = r_c + i A C^† M^{-1} C over (sigma, pi) output x input.
Matrix2c reflection_matrix(const LevelScheme& scheme, const CavityParams& cavity, double delta,
                           const Toggles& toggles = {});

// Same quantity assembled from the coherences of linear_response for unit sigma
// and pi drives: r e = r_c e − (i A / Ω) C^† ρ(e).
Matrix2c reflection_from_coherences(const LevelScheme& scheme, const CavityParams& cavity,
                                    double delta, const Toggles& toggles = {});

// Crossed: |e⊥^† r e|² + extinction |e^† r e|². Direct: |r e|².
ChannelIntensity channel_intensity(const Matrix2c& r, const DetectionConfig& detection,
                                   const CVec2& in_polarization);

struct Grid {
    double min{-80.0};
    double max{80.0};
    int points{4000};

    std::vector<double> values() const;
    void validate() const;
};

// N uniformly spaced points on [-half_width, half_width) for Fourier work.
std::vector<double> fft_grid(double half_width, int points);

struct Spectrum {
    std::vector<double> detunings;
    std::vector<Matrix2c> matrices;
    std::map<std::string, std::vector<double>> channels;
    CVec2 in_polarization{1.0, 0.0};
    Matrix2c r_c{Matrix2c::Zero()};
    double extinction{1e-10};

    std::size_t size() const { return detunings.size(); }
    // Channel intensity produced by r_c alone.
    double baseline(const std::string& channel) const;
    const std::vector<double>& channel(const std::string& name) const;
};

Spectrum spectrum_sweep(const LevelScheme& scheme, const CavityParams& cavity,
                        const DetectionConfig& detection, std::span<const double> grid,
                        const Toggles& toggles = {});

struct DipOptions {
    double prominence_fraction{0.05};  // of the global maximum
    double baseline_fraction{0.05};    // "reaches the baseline" tolerance, relative to the lower adjacent peak
};

struct Dip {
    double position{};
    double value{};
    double depth{};           // value − baseline
    double width{};           // full width at half depth below the lower adjacent peak
    double prominence{};
    double relative_depth{};  // depth / (lower adjacent peak − baseline)
    bool reaches_baseline{};
};

struct Peak {
    double position{};
    double height{};
    double prominence{};
};

std::vector<Dip> find_dips(std::span<const double> x, std::span<const double> y, double baseline,
                           const DipOptions& options = {});
std::vector<Dip> find_dips(const Spectrum& spectrum, const std::string& channel,
                           const DipOptions& options = {});

std::vector<Peak> find_peaks(std::span<const double> x, std::span<const double> y,
                             double prominence_fraction = 0.05);

// Strict local minima (plateaus count once) with their topographic prominence.
std::vector<std::pair<std::size_t, double>> local_minima(std::span<const double> y);

struct TimeResponseOptions {
    // Subtract a fitted single-pole asymptote before the FFT and add its exact
    // transform back, which removes the 1/ω truncation ripple.
    bool tail_correction{true};
};

struct TimeResponse {
    std::vector<double> t;
    std::vector<double> intensity;  // detection channel, gate applied
    std::vector<double> sigma;      // |E_sigma(t)|², ungated
    std::vector<double> pi;         // |E_pi(t)|², ungated
    double edge_residual{};         // max |r − r_c| at the grid edges
};

TimeResponse time_response(const Spectrum& spectrum, const DetectionConfig& detection,
                           const TimeResponseOptions& options = {});

// Field transform E(t_n) = (dω/2π) Σ_k f_k e^{−i ω_k t_n} on a uniform grid.
std::vector<std::complex<double>> causal_transform(std::span<const double> omega,
                                                   std::span<const std::complex<double>> f,
                                                   bool tail_correction);

struct MeasuredSpectrum {
    std::vector<double> analyzer_detunings;
    std::vector<double> intensity;   // gated delayed counts with the analyzer in the beam
    double reference{};              // gated counts without analyzer
    std::vector<double> absorption;  // reference − intensity
};

// Moving single-line absorber scan: E(ω) = (r − r_c) T(ω; δ) + r_c (T − 1), integrated
// over the time gate. `spectrum` must be on a uniform fft grid.
MeasuredSpectrum simulate_measurement(const Spectrum& spectrum, const DetectionConfig& detection,
                                      std::span<const double> analyzer_detunings);

// Single-line analyzer amplitude transmission at detuning ω for line position δ.
std::complex<double> analyzer_transmission(const AnalyzerLine& line, double omega, double delta);

} // namespace sgc
