// liouvillian.hpp — Effective-nucleus master equation with superradiance and SGC
//
// The ensemble-cavity system is represented in linear response by a single
// effective nucleus: one collective ground state |G> and one excited state
// |e_t> per hyperfine transition t. The cavity enters through the coupling
// matrix G_{tt'} = Σ_p c̃_{t,p} conj(c̃_{t',p}); its diagonal gives the
// superradiant widths and Lamb shifts, its off-diagonal entries the
// spontaneously generated coherences.
//
// Units: energies and rates in gamma, times in 1/gamma, hbar = 1.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sgc/hyperfine.hpp"

namespace sgc {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;
using Matrix2c = Eigen::Matrix2cd;

struct CavityParams {
    double gamma_s{27.0};
    double delta_ls{1.0};
    Matrix2c r_c{Matrix2c::Zero()};       // background reflection over (sigma, pi)
    std::optional<double> amplitude_scale; // defaults to gamma_s / 2
    bool couple_sigma{true};
    bool couple_pi{true};

    double amplitude() const { return amplitude_scale.value_or(0.5 * gamma_s); }
    void validate() const;
};

struct Toggles {
    bool sgc_dissipative{true};
    bool sgc_hamiltonian{true};
    bool sr{true};

    static Toggles all_on() { return {}; }
    static Toggles sgc_off() { return {false, false, true}; }
};

struct DriveConfig {
    double rabi{1e-3};
    CVec2 polarization{1.0, 0.0};

    // Throws on invalid input; returns false when rabi is outside the linear regime.
    bool validate() const;
};

// n x 2 matrix of sqrt(p_g)-weighted couplings; columns of uncoupled
// polarizations are zero.
Eigen::MatrixX2cd coupling_matrix(const LevelScheme& scheme, const CavityParams& cavity);

// G = C C^† (Hermitian, PSD, rank <= number of coupled polarizations).
MatrixXcd g_matrix(const LevelScheme& scheme, const CavityParams& cavity);

// M_{tt'} = (Δ − Δ_t + i/2) δ_{tt'} + Δ_LS G^H_{tt'} + i (γ_S/2) G^D_{tt'}, where the
// toggles decide which parts of G enter G^H and G^D.
MatrixXcd response_kernel(const LevelScheme& scheme, const CavityParams& cavity,
                          const Toggles& toggles, double delta);

// Solve M ρ = −Ω b with b_t = c̃_t · polarization. Fast path for the coherences.
VectorXcd linear_response(const LevelScheme& scheme, const CavityParams& cavity,
                          const DriveConfig& drive, double delta,
                          const Toggles& toggles = {});

// Superoperators act on column-stacked density matrices of the 1 + n level
// effective nucleus (index 0 is |G>, index 1 + t is |e_t>).
struct Liouvillian {
    int levels{0};
    double delta{0.0};
    Toggles toggles;

    MatrixXcd coherent;   // -i[H_0, .]: level detunings and diagonal Lamb shifts
    MatrixXcd drive;      // -i[H_drive, .], linear in the Rabi amplitude
    MatrixXcd se;         // natural decay, rate 1 on every transition
    MatrixXcd sr;         // collective decay with rates γ_S diag(G)
    MatrixXcd sgc;        // off-diagonal completion of the collective dissipator
    MatrixXcd sgc_shift;  // -i[off-diagonal Lamb shift, .]

    int dimension() const { return levels * levels; }
    MatrixXcd undriven() const;
    MatrixXcd total() const;
};

Liouvillian assemble_liouvillian(const LevelScheme& scheme, const CavityParams& cavity,
                                 const DriveConfig& drive, const Toggles& toggles, double delta);

// Lindblad dissipator Σ_{jk} rates_{jk} (L_k ρ L_j^† − ½{L_j^† L_k, ρ}) as a matrix.
MatrixXcd dissipator(std::span<const MatrixXcd> jumps, const MatrixXcd& rates);

VectorXcd vectorize(const MatrixXcd& rho);
MatrixXcd unvectorize(const VectorXcd& v, int levels);

struct SteadyState {
    MatrixXcd rho;
    double residual{0.0};  // ||L0 ρ1 + L_drive ρ0|| relative to the source norm

    // ρ_{e_t, G} for every transition.
    VectorXcd coherences() const;
    double excited_population() const;
};

// Perturbative steady state ρ0 + ρ1 + ρ2 in the drive. The optical coherences
// are exact at first order; ρ2 carries the O(Ω²) excited populations.
SteadyState steady_state(const Liouvillian& liouvillian);

struct TimeEvolveOptions {
    double abs_tol{1e-12};
    double rel_tol{1e-12};
    double initial_step{1e-4};
    double min_step{1e-14};
};

// Integrates ∂t ρ = L ρ and returns ρ at every time in t_grid (ascending, >= 0).
std::vector<MatrixXcd> time_evolve(const MatrixXcd& generator, const MatrixXcd& rho0,
                                   std::span<const double> t_grid,
                                   const TimeEvolveOptions& options = {});

} // namespace sgc
