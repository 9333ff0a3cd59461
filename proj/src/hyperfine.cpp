// hyperfine.cpp — Zeeman levels, Clebsch-Gordan amplitudes and polarization projections

#include "sgc/hyperfine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "sgc/constants.hpp"
#include "sgc/errors.hpp"

namespace sgc {

namespace {

constexpr double unit_tol = 1e-12;

double factorial(int n)
{
    return std::tgamma(static_cast<double>(n) + 1.0);
}

void require_unit(const Vec3& v, const char* what)
{
    if (!std::isfinite(v.norm()) || std::abs(v.norm() - 1.0) > unit_tol) {
        throw ValidationError(std::string(what) + " must be a unit vector");
    }
}

} // namespace

NuclearSpecies NuclearSpecies::fe57()
{
    NuclearSpecies s;
    s.g_ground = constants::fe57_g_ground;
    s.g_excited = constants::fe57_g_excited;
    s.gamma_ev = constants::fe57_gamma_ev;
    s.transition_kev = constants::fe57_transition_kev;
    s.magneton_ev_per_t = constants::nuclear_magneton_ev_per_t;
    return s;
}

void NuclearSpecies::validate() const
{
    if (!(gamma_ev > 0.0)) throw ValidationError("species.gamma_ev must be > 0");
    if (!(transition_kev > 0.0)) throw ValidationError("species.transition_kev must be > 0");
    if (!(magneton_ev_per_t > 0.0)) throw ValidationError("species.magneton_ev_per_t must be > 0");
    if (ground_spin.twice != 1 || excited_spin.twice != 3) {
        throw ValidationError("only the 1/2 -> 3/2 M1 scheme is supported");
    }
}

std::string_view to_string(GeometryPreset preset)
{
    switch (preset) {
    case GeometryPreset::faraday: return "faraday";
    case GeometryPreset::half_faraday: return "half_faraday";
    case GeometryPreset::voigt45: return "voigt45";
    case GeometryPreset::custom: return "custom";
    }
    return "custom";
}

GeometryPreset preset_from_string(std::string_view name)
{
    if (name == "faraday") return GeometryPreset::faraday;
    if (name == "half_faraday") return GeometryPreset::half_faraday;
    if (name == "voigt45") return GeometryPreset::voigt45;
    if (name == "custom") return GeometryPreset::custom;
    throw ValidationError("unknown geometry preset '" + std::string(name) + "'");
}

GeometryConfig GeometryConfig::from_preset(GeometryPreset preset, double b_tesla)
{
    GeometryConfig g;
    g.preset = preset;
    g.b_tesla = b_tesla;
    switch (preset) {
    case GeometryPreset::faraday: g.b_hat = frame::k0(); break;
    case GeometryPreset::half_faraday: g.b_hat = (frame::k0() + frame::sigma()).normalized(); break;
    case GeometryPreset::voigt45: g.b_hat = frame::sigma(); break;
    case GeometryPreset::custom: break;
    }
    return g;
}

Vec3 GeometryConfig::effective_b_hat() const
{
    if (!misalignment || misalignment->angle_deg == 0.0) return b_hat;
    const double angle = misalignment->angle_deg * std::numbers::pi / 180.0;
    Vec3 rotated = Eigen::AngleAxisd(angle, misalignment->axis.normalized()) * b_hat;
    return rotated.normalized();
}

void GeometryConfig::validate() const
{
    require_unit(b_hat, "geometry.b_hat");
    if (!(b_tesla >= 0.0) || !std::isfinite(b_tesla)) {
        throw ValidationError("geometry.b_tesla must be >= 0 (direction lives in b_hat)");
    }
    if (std::abs(in_polarization.norm() - 1.0) > unit_tol) {
        throw ValidationError("geometry.in_polarization must have unit norm");
    }
    if (misalignment && misalignment->axis.norm() == 0.0) {
        throw ValidationError("geometry.misalignment.axis must be nonzero");
    }
}

const CVec3& SphericalBasis::operator[](int q) const
{
    switch (q) {
    case -1: return minus;
    case 0: return zero;
    case 1: return plus;
    default: throw ValidationError("spherical index q must be in {-1, 0, 1}");
    }
}

SphericalBasis spherical_basis(const Vec3& b_hat)
{
    require_unit(b_hat, "b_hat");
    // sigma as the reference transverse axis pins ê_{+1} ∝ sigma + i k0 for b_hat = pi.
    const Vec3 ref = std::abs(b_hat.dot(frame::sigma())) < 0.9 ? frame::sigma() : frame::k0();
    const Vec3 ea = (ref - ref.dot(b_hat) * b_hat).normalized();
    const Vec3 eb = b_hat.cross(ea);

    const std::complex<double> i{0.0, 1.0};
    const double s = std::numbers::sqrt2 / 2.0;
    SphericalBasis basis;
    basis.zero = b_hat.cast<std::complex<double>>();
    basis.plus = -s * (ea.cast<std::complex<double>>() + i * eb.cast<std::complex<double>>());
    basis.minus = s * (ea.cast<std::complex<double>>() - i * eb.cast<std::complex<double>>());
    return basis;
}

double clebsch_gordan(int two_j1, int two_m1, int two_j2, int two_m2, int two_J, int two_M)
{
    if (two_m1 + two_m2 != two_M) return 0.0;
    if (std::abs(two_m1) > two_j1 || std::abs(two_m2) > two_j2 || std::abs(two_M) > two_J) return 0.0;
    if (two_J > two_j1 + two_j2 || two_J < std::abs(two_j1 - two_j2)) return 0.0;
    if ((two_j1 + two_m1) % 2 || (two_j2 + two_m2) % 2 || (two_J + two_M) % 2) return 0.0;

    // Racah's closed form; every factorial argument below is an integer.
    const int a = (two_j1 + two_j2 - two_J) / 2;
    const int b = (two_j1 - two_m1) / 2;
    const int c = (two_j2 + two_m2) / 2;
    const int d = (two_J - two_j2 + two_m1) / 2;
    const int e = (two_J - two_j1 - two_m2) / 2;

    const double pref = std::sqrt(
        (two_J + 1) * factorial((two_J + two_j1 - two_j2) / 2) * factorial((two_J - two_j1 + two_j2) / 2)
        * factorial(a) / factorial((two_j1 + two_j2 + two_J) / 2 + 1));
    const double norm = std::sqrt(
        factorial((two_J + two_M) / 2) * factorial((two_J - two_M) / 2)
        * factorial((two_j1 - two_m1) / 2) * factorial((two_j1 + two_m1) / 2)
        * factorial((two_j2 - two_m2) / 2) * factorial((two_j2 + two_m2) / 2));

    double sum = 0.0;
    for (int k = std::max({0, -d, -e}); k <= std::min({a, b, c}); ++k) {
        const double denom = factorial(k) * factorial(a - k) * factorial(b - k) * factorial(c - k)
                             * factorial(d + k) * factorial(e + k);
        sum += ((k % 2) ? -1.0 : 1.0) / denom;
    }
    return pref * norm * sum;
}

double clebsch_gordan(HalfInt m_g, int q)
{
    if (std::abs(q) > 1) return 0.0;
    const int two_me = m_g.twice + 2 * q;
    if (std::abs(two_me) > 3 || std::abs(m_g.twice) > 1) return 0.0;
    return clebsch_gordan(1, m_g.twice, 2, 2 * q, 3, two_me);
}

double zeeman_detuning(const NuclearSpecies& species, double b_tesla, HalfInt m_g, HalfInt m_e)
{
    if (!(b_tesla >= 0.0)) throw ValidationError("magnetic field magnitude must be >= 0");
    const double mu_b = species.magneton_ev_per_t * b_tesla;
    return (-species.g_excited * mu_b * m_e.value() + species.g_ground * mu_b * m_g.value())
           / species.gamma_ev;
}

CVec2 transition_coupling(const SphericalBasis& basis, int q, double cg)
{
    const CVec3& e = basis[q];
    // sigma and pi are real, so ê_q · conj(p̂) is a plain component read.
    return cg * CVec2(e(2), e(1));
}

CVec2 transition_coupling(const GeometryConfig& geometry, int q, double cg)
{
    return transition_coupling(spherical_basis(geometry.effective_b_hat()), q, cg);
}

CVec2 Transition::weighted_coupling() const
{
    return std::sqrt(ground_population) * coupling;
}

LevelScheme build_level_scheme(const NuclearSpecies& species, const GeometryConfig& geometry)
{
    species.validate();
    geometry.validate();

    LevelScheme scheme;
    scheme.species = species;
    scheme.geometry = geometry;

    const double mu_b = species.magneton_ev_per_t * geometry.b_tesla / species.gamma_ev;
    for (int two_m = -species.ground_spin.twice; two_m <= species.ground_spin.twice; two_m += 2) {
        scheme.levels.push_back({Level::Branch::ground, half(two_m), -species.g_ground * mu_b * 0.5 * two_m});
    }
    for (int two_m = -species.excited_spin.twice; two_m <= species.excited_spin.twice; two_m += 2) {
        scheme.levels.push_back({Level::Branch::excited, half(two_m), -species.g_excited * mu_b * 0.5 * two_m});
    }

    const SphericalBasis basis = spherical_basis(geometry.effective_b_hat());
    for (int two_mg = -1; two_mg <= 1; two_mg += 2) {
        for (int q = -1; q <= 1; ++q) {
            Transition t;
            t.m_g = half(two_mg);
            t.m_e = half(two_mg + 2 * q);
            t.q = q;
            t.cg = clebsch_gordan(t.m_g, q);
            t.detuning = zeeman_detuning(species, geometry.b_tesla, t.m_g, t.m_e);
            t.coupling = transition_coupling(basis, q, t.cg);
            t.ground_population = 0.5;
            scheme.transitions.push_back(t);
        }
    }
    std::sort(scheme.transitions.begin(), scheme.transitions.end(), [](const Transition& a, const Transition& b) {
        return std::tie(a.detuning, a.m_g, a.q) < std::tie(b.detuning, b.m_g, b.q);
    });
    return scheme;
}

} // namespace sgc
