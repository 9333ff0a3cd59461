// constants.hpp — Physical constants and 57Fe defaults

#pragma once

namespace sgc::constants {

// Nuclear magneton in eV/T.
inline constexpr double nuclear_magneton_ev_per_t = 3.1525e-8;

// 57Fe 14.4 keV M1 line.
inline constexpr double fe57_g_ground = 0.1812;
inline constexpr double fe57_g_excited = -0.1033;
inline constexpr double fe57_gamma_ev = 4.66e-9;
inline constexpr double fe57_transition_kev = 14.4125;

// Hyperfine field of alpha-Fe at the 57Fe site.
inline constexpr double fe_hyperfine_field_t = 33.3;

// hc in keV*nm, for the x-ray wavelength.
inline constexpr double hc_kev_nm = 1.239841984;

} // namespace sgc::constants
