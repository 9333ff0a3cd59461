// hyperfine.hpp — 57Fe Zeeman level scheme and cavity-polarization couplings
//
// Lab frame: k0 is the beam direction, pi the surface normal and
// sigma = k0 x pi. Vec3 components are stored in the right-handed order
// (k0, pi, sigma); use frame::make() to build vectors by name.

#pragma once

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace sgc {

using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using CVec2 = Eigen::Vector2cd;  // (sigma, pi) components

namespace frame {
inline Vec3 k0() { return {1.0, 0.0, 0.0}; }
inline Vec3 pi() { return {0.0, 1.0, 0.0}; }
inline Vec3 sigma() { return {0.0, 0.0, 1.0}; }
inline Vec3 make(double k0_comp, double sigma_comp, double pi_comp)
{
    return {k0_comp, pi_comp, sigma_comp};
}
} // namespace frame

// Half-integer quantum number stored as twice its value.
struct HalfInt {
    int twice{0};

    constexpr double value() const { return 0.5 * twice; }
    constexpr HalfInt operator-() const { return {-twice}; }
    friend constexpr auto operator<=>(HalfInt, HalfInt) = default;
};

inline constexpr HalfInt half(int twice) { return {twice}; }

struct NuclearSpecies {
    HalfInt ground_spin{1};
    HalfInt excited_spin{3};
    double g_ground{};
    double g_excited{};
    double gamma_ev{};          // natural linewidth; the global frequency unit
    double transition_kev{};
    double magneton_ev_per_t{};
    std::string multipolarity{"M1"};

    static NuclearSpecies fe57();
    void validate() const;
};

enum class GeometryPreset { faraday, half_faraday, voigt45, custom };

std::string_view to_string(GeometryPreset preset);
GeometryPreset preset_from_string(std::string_view name);

struct Misalignment {
    Vec3 axis{frame::pi()};
    double angle_deg{0.0};
};

struct GeometryConfig {
    Vec3 b_hat{frame::k0()};
    double b_tesla{33.3};
    CVec2 in_polarization{1.0, 0.0};
    GeometryPreset preset{GeometryPreset::custom};
    std::optional<Misalignment> misalignment;

    static GeometryConfig from_preset(GeometryPreset preset, double b_tesla = 33.3);

    // b_hat after the optional misalignment rotation.
    Vec3 effective_b_hat() const;
    void validate() const;
};

// ê_{-1}, ê_0, ê_{+1} with ê_0 = b_hat and ê_{±1} = ∓(ê_a ± i ê_b)/√2.
struct SphericalBasis {
    CVec3 minus;
    CVec3 zero;
    CVec3 plus;

    const CVec3& operator[](int q) const;
};

SphericalBasis spherical_basis(const Vec3& b_hat);

// General <j1 m1; j2 m2 | J M> (Condon-Shortley), all arguments as twice the value.
double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M);

// <1/2 m_g; 1 q | 3/2 m_g + q>; zero for forbidden combinations.
double clebsch_gordan(HalfInt m_g, int q);

// Line position of m_g -> m_e relative to the unsplit resonance, in units of gamma.
double zeeman_detuning(const NuclearSpecies& species, double b_tesla, HalfInt m_g, HalfInt m_e);

// Projection of cg·ê_q onto (sigma, pi); the k0 component does not couple.
CVec2 transition_coupling(const GeometryConfig& geometry, int q, double cg);
CVec2 transition_coupling(const SphericalBasis& basis, int q, double cg);

struct Level {
    enum class Branch { ground, excited };
    Branch branch{Branch::ground};
    HalfInt m;
    double energy_shift{};  // gamma units
};

struct Transition {
    HalfInt m_g;
    HalfInt m_e;
    int q{};
    double cg{};
    double detuning{};
    CVec2 coupling{CVec2::Zero()};
    double ground_population{0.5};

    // sqrt(ground_population) * coupling, the amplitude seen by the cavity.
    CVec2 weighted_coupling() const;
    bool is_dark(double tol = 1e-12) const { return coupling.norm() <= tol; }
};

struct LevelScheme {
    NuclearSpecies species;
    GeometryConfig geometry;
    std::vector<Level> levels;
    std::vector<Transition> transitions;

    std::size_t size() const { return transitions.size(); }
};

// 2 ground + 4 excited levels, 6 transitions sorted by (detuning, m_g, q).
LevelScheme build_level_scheme(const NuclearSpecies& species, const GeometryConfig& geometry);

} // namespace sgc
