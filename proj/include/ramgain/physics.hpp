#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ramgain/profiles.hpp"

namespace ramgain {

enum class Direction { forward, backward };
enum class WaveKind { signal, pump };

/// Per-frequency attenuation override (exact-frequency match, see
/// FiberSpec::attenuation_db_per_km).
struct AttenOverride {
  double freq_thz;
  double atten_db_per_km;
};

/// Fiber geometry, loss, and the triangular Raman efficiency spectrum:
/// linear rise from zero offset to the peak at raman_peak_shift_thz, linear
/// fall to zero at 1.5x the shift, scaled by freq_high/reference_pump_freq.
struct FiberSpec {
  double length_km = 80.0;
  double atten_db_per_km = 0.2;
  double raman_peak_efficiency = 0.39;  // 1/(W km) at the reference pump frequency
  double raman_peak_shift_thz = 13.2;
  double reference_pump_freq_thz = 206.0;
  std::vector<AttenOverride> atten_overrides;

  /// Scalar default unless an override lies within 1e-9 THz of `freq_thz`.
  double attenuation_db_per_km(double freq_thz) const;
  void validate() const;
};

/// One optical wave for the integrator; unifies signals and pumps.
struct Wave {
  double freq_thz = 0.0;
  double input_power_w = 0.0;
  Direction direction = Direction::forward;
  WaveKind kind = WaveKind::signal;
};

/// Signal frequency comb; channel i sits at start + i * spacing.
struct ChannelGrid {
  int n_ch = 200;
  double start_freq_thz = 186.0;
  double spacing_ghz = 50.0;

  double freq_thz(int i) const { return start_freq_thz + i * spacing_ghz * 1e-3; }
  std::vector<double> frequencies_thz() const;
  void validate() const;
};

struct RamanPump {
  double wavelength_nm;
  double power_w;
};

/// Ordered pump list; the order is fixed and significant (it is the NN
/// input ordering). All pumps share one propagation direction.
struct PumpSet {
  std::vector<RamanPump> pumps;
  Direction direction = Direction::backward;

  static PumpSet defaults();  // 1426/1440/1454/1472/1496 nm, zero power
  std::vector<double> powers_w() const;
  PumpSet with_powers(std::span<const double> powers_w) const;
  void validate() const;
};

struct PropagationOptions {
  double step_m = 50.0;
  double boundary_tol_db = 1e-4;  // shooting convergence, max per-wave mismatch
  int max_shooting_iterations = 50;
  double relaxation = 0.5;  // applied in dB to the backward-wave guesses
};

/// SRS power coupling from a (higher-frequency) donor at freq_high_thz onto
/// a receiver at freq_low_thz, in 1/(W km). Zero for non-positive offsets.
double raman_efficiency(double freq_high_thz, double freq_low_thz, const FiberSpec& fiber);

/// Integrates the coupled SRS power-evolution ODEs
///   dP_i/dz = s_i [ -a_i P_i + P_i sum_{f_j>f_i} C_R(f_j,f_i) P_j
///                             - P_i sum_{f_j<f_i} (f_i/f_j) C_R(f_i,f_j) P_j ]
/// over the fiber and returns each wave's power (W) at its exit end:
/// z = L for forward waves, z = 0 for backward ones. Same-direction wave
/// sets take a single fixed-step RK4 pass; mixed sets are solved by
/// iterative shooting on the backward-wave powers at z = 0.
///
/// Attenuation is handled by an exact integrating factor, so a coupling-free
/// run reproduces a_i * L loss to rounding regardless of step size.
///
/// Throws NonConvergence if the shooting cap is exceeded and NumericBlowup
/// if any power drops below -1e-12 W or becomes non-finite.
std::vector<double> propagate(const FiberSpec& fiber, const std::vector<Wave>& waves,
                              const PropagationOptions& opts = {});

/// Single RK4 pass used by propagate and by the direction-symmetry tests:
/// takes the full power state at the starting end (z = 0 when forward, z = L
/// otherwise) and returns the state at the opposite end.
std::vector<double> integrate_pass(const FiberSpec& fiber, const std::vector<Wave>& waves,
                                   std::span<const double> start_powers_w, double step_m,
                                   bool from_near_end);

/// Net gain per channel: output dBm minus launch dBm, from a propagate run
/// over signals + pumps.
GainProfile net_gain(const FiberSpec& fiber, const ChannelGrid& grid, const PumpSet& pumps,
                     const LaunchProfile& launch, const PropagationOptions& opts = {});

}  // namespace ramgain
