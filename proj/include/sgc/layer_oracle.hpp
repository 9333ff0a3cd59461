// layer_oracle.hpp — Scalar Parratt reflectivity of the Pd/C/Fe cavity
//
// Independent of the effective-nucleus model: the stack is described by
// refractive-index decrements and a single-line nuclear susceptibility, and
// the reflectivity comes from the standard recursion over interfaces.

#pragma once

#include <complex>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sgc::oracle {

using cd = std::complex<double>;

// Resonant contribution of a nuclear layer to the susceptibility.
struct NuclearLine {
    double strength{};   // S, susceptibility units times gamma
    double width{1.0};   // FWHM in gamma
};

struct Layer {
    std::string name;
    double thickness_nm{std::numeric_limits<double>::infinity()};
    double delta{};  // n = 1 − δ + iβ
    double beta{};
    std::optional<NuclearLine> nuclear;
};

struct LayerStack {
    std::vector<Layer> layers;  // top to bottom, vacuum above; last entry is the substrate
    double wavelength_nm{};

    void validate() const;
};

// χ_N(Δ) = −S / (Δ + i·width/2).
cd nuclear_susceptibility(double detuning, const NuclearLine& line);

cd parratt_reflectivity(const LayerStack& stack, double angle_mrad, double detuning);

// Electronic constants at 14.4 keV (approximate tabulated values).
struct Material {
    double delta;
    double beta;
};
Material palladium();
Material carbon();
Material iron();
Material silicon();

// Pd(5)/C/56Fe/57Fe/56Fe/C/Pd(20) on Si with the guide layer totalling 40 nm.
LayerStack reference_cavity(double fe57_strength = 1.14e-4);

// Stack with the nuclear lines removed (electronic reflectivity only).
LayerStack without_resonances(LayerStack stack);

struct AngleScanMinimum {
    double angle_mrad{};
    double reflectivity{};
};

// Lowest-angle local minimum of the electronic |r|² within [lo, hi] that dips at least
// 10% below its shoulders (the first guided mode), refined by golden section.
AngleScanMinimum find_mode_angle(const LayerStack& stack, double lo_mrad, double hi_mrad, int points = 2000);

// Effective single-line model r(Δ) = r_c + i a / (Δ + Δ_LS + i(1 + γ_S)/2), a complex.
struct EffectiveLine {
    double gamma_s{};
    double delta_ls{};
    cd r_c{};
    cd amplitude{};  // |a| is the amplitude scale, arg(a) its phase

    cd operator()(double detuning) const;
};

struct CavityFit {
    EffectiveLine params;
    double relative_residual{};  // ||r_fit − r|| / ||r − r_c||, over the fit grid
    int iterations{};
};

// Least-squares fit of EffectiveLine to sampled r(Δ).
CavityFit fit_cavity_params(std::span<const double> detunings, std::span<const cd> r);

} // namespace sgc::oracle
