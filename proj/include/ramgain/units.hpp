#pragma once

#include <cmath>
#include <numbers>

// Unit conventions: external interfaces speak dBm / dB / nm / THz,
// the integrator works in watts and 1/km. P_dBm = 10*log10(P_mW).

namespace ramgain::units {

inline constexpr double kSpeedOfLightNmThz = 299792.458;  // c in nm*THz

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watt_to_dbm(double watt) { return 10.0 * std::log10(watt * 1e3); }

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

/// Power attenuation dB/km -> exponential coefficient 1/km (P = P0 exp(-a z)).
inline double atten_db_to_inv_km(double db_per_km) {
  return db_per_km * std::numbers::ln10 / 10.0;
}

inline double wavelength_nm_to_freq_thz(double nm) { return kSpeedOfLightNmThz / nm; }

inline double freq_thz_to_wavelength_nm(double thz) { return kSpeedOfLightNmThz / thz; }

}  // namespace ramgain::units
