#include "ramgain/physics.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "ramgain/errors.hpp"
#include "ramgain/units.hpp"

namespace ramgain {

double FiberSpec::attenuation_db_per_km(double freq_thz) const {
  for (const auto& o : atten_overrides) {
    if (std::abs(o.freq_thz - freq_thz) < 1e-9) return o.atten_db_per_km;
  }
  return atten_db_per_km;
}

void FiberSpec::validate() const {
  if (!(length_km > 0.0)) throw ConfigError("fiber length_km must be > 0");
  if (!(atten_db_per_km > 0.0)) throw ConfigError("fiber atten_db_per_km must be > 0");
  if (raman_peak_efficiency < 0.0) throw ConfigError("raman_peak_efficiency must be >= 0");
  if (!(raman_peak_shift_thz > 0.0)) throw ConfigError("raman_peak_shift_thz must be > 0");
}

std::vector<double> ChannelGrid::frequencies_thz() const {
  std::vector<double> f(static_cast<std::size_t>(n_ch));
  for (int i = 0; i < n_ch; ++i) f[static_cast<std::size_t>(i)] = freq_thz(i);
  return f;
}

void ChannelGrid::validate() const {
  if (n_ch < 1) throw ConfigError("grid n_ch must be >= 1");
  if (!(start_freq_thz > 0.0)) throw ConfigError("grid start_freq_thz must be > 0");
  if (!(spacing_ghz > 0.0)) throw ConfigError("grid spacing_ghz must be > 0");
}

PumpSet PumpSet::defaults() {
  PumpSet p;
  p.pumps = {{1426.0, 0.0}, {1440.0, 0.0}, {1454.0, 0.0}, {1472.0, 0.0}, {1496.0, 0.0}};
  p.direction = Direction::backward;
  return p;
}

std::vector<double> PumpSet::powers_w() const {
  std::vector<double> out;
  out.reserve(pumps.size());
  for (const auto& p : pumps) out.push_back(p.power_w);
  return out;
}

PumpSet PumpSet::with_powers(std::span<const double> powers_w) const {
  if (powers_w.size() != pumps.size())
    throw DimensionMismatch("pump power count " + std::to_string(powers_w.size()) +
                            " != pump count " + std::to_string(pumps.size()));
  PumpSet out = *this;
  for (std::size_t i = 0; i < pumps.size(); ++i) out.pumps[i].power_w = powers_w[i];
  return out;
}

void PumpSet::validate() const {
  for (const auto& p : pumps) {
    if (!(p.wavelength_nm > 0.0)) throw ConfigError("pump wavelength must be > 0");
    if (p.power_w < 0.0) throw ConfigError("pump power must be >= 0");
  }
}

double raman_efficiency(double freq_high_thz, double freq_low_thz, const FiberSpec& fiber) {
  const double df = freq_high_thz - freq_low_thz;
  if (df <= 0.0) return 0.0;
  const double peak = fiber.raman_peak_shift_thz;
  double tri;
  if (df <= peak) {
    tri = df / peak;
  } else if (df < 1.5 * peak) {
    tri = (1.5 * peak - df) / (0.5 * peak);
  } else {
    return 0.0;
  }
  return fiber.raman_peak_efficiency * tri * (freq_high_thz / fiber.reference_pump_freq_thz);
}

namespace {

constexpr double kNegativePowerTol = -1e-12;  // W

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct CoupledSystem {
  MatrixXd coupling;  // (i,j): growth-rate contribution of P_j on wave i, 1/(W km)
  VectorXd alpha;     // 1/km
  VectorXd sign;      // +1 forward, -1 backward
  std::vector<double> step_widths_km;  // full steps, plus a remainder step if any
  double length_km = 0.0;

  Index size() const { return alpha.size(); }
  // half-step grid columns: step j spans columns 2j .. 2j+2
  Index n_cols() const { return 2 * static_cast<Index>(step_widths_km.size()) + 1; }
};

CoupledSystem build_system(const FiberSpec& fiber, const std::vector<Wave>& waves,
                           double step_m) {
  const auto n = static_cast<Index>(waves.size());
  CoupledSystem sys;
  sys.coupling.setZero(n, n);
  sys.alpha.resize(n);
  sys.sign.resize(n);
  sys.length_km = fiber.length_km;
  for (Index i = 0; i < n; ++i) {
    const Wave& wi = waves[static_cast<std::size_t>(i)];
    sys.alpha(i) = units::atten_db_to_inv_km(fiber.attenuation_db_per_km(wi.freq_thz));
    sys.sign(i) = wi.direction == Direction::forward ? 1.0 : -1.0;
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const Wave& wj = waves[static_cast<std::size_t>(j)];
      if (wj.freq_thz > wi.freq_thz) {
        sys.coupling(i, j) = raman_efficiency(wj.freq_thz, wi.freq_thz, fiber);
      } else if (wj.freq_thz < wi.freq_thz) {
        sys.coupling(i, j) =
            -(wi.freq_thz / wj.freq_thz) * raman_efficiency(wi.freq_thz, wj.freq_thz, fiber);
      }
    }
  }
  const double h = step_m * 1e-3;
  const auto n_full = static_cast<long>(std::floor(fiber.length_km / h + 1e-9));
  const double rem = fiber.length_km - h * static_cast<double>(n_full);
  sys.step_widths_km.assign(static_cast<std::size_t>(n_full), h);
  if (rem > 1e-12 * fiber.length_km) sys.step_widths_km.push_back(rem);
  return sys;
}

/// One RK4 sweep across the fiber for the waves selected by `active`,
/// traversed in their propagation direction (`downstream` true: z 0 -> L).
/// All other waves are read frozen from `field`, which holds powers on the
/// half-step grid; the active trajectories are written back into `field`
/// (cubic-Hermite estimates at the midpoints). Attenuation is factored out
/// exactly per step so a coupling-free wave loses exactly alpha*L.
/// Returns the active waves' powers at the traversal end.
VectorXd rk4_sweep(const CoupledSystem& sys, const std::vector<Index>& active,
                   const VectorXd& start_powers, bool downstream, MatrixXd& field) {
  const Index n = sys.size();
  const auto na = static_cast<Index>(active.size());
  const auto m = static_cast<Index>(sys.step_widths_km.size());

  MatrixXd m_act(na, n);
  VectorXd alpha_a(na), sign_a(na);
  for (Index a = 0; a < na; ++a) {
    m_act.row(a) = sys.coupling.row(active[static_cast<std::size_t>(a)]);
    alpha_a(a) = sys.alpha(active[static_cast<std::size_t>(a)]);
    sign_a(a) = sys.sign(active[static_cast<std::size_t>(a)]);
  }

  VectorXd q = start_powers;  // integrating-factor state: P_active = atten .* q
  VectorXd atten = VectorXd::Ones(na);
  VectorXd k1(na), k2(na), k3(na), k4(na), stage(na), c(na), pfull(n);

  // c = M_act * P_full(col), with active entries of P_full replaced by the
  // in-flight stage powers.
  auto coupling_at = [&](Index col, const VectorXd& qs, const VectorXd& as, VectorXd& out) {
    pfull = field.col(col);
    for (Index a = 0; a < na; ++a)
      pfull(active[static_cast<std::size_t>(a)]) = as(a) * qs(a);
    out.noalias() = m_act * pfull;
  };

  auto write_active = [&](Index col, const VectorXd& values) {
    for (Index a = 0; a < na; ++a) field(active[static_cast<std::size_t>(a)], col) = values(a);
  };

  VectorXd p_prev(na), dp_prev(na), p_here(na), dp_here(na);
  Index pending_mid = -1;
  double pending_h = 0.0;

  for (Index s = 0; s < m; ++s) {
    const Index j = downstream ? s : m - 1 - s;
    const double w = sys.step_widths_km[static_cast<std::size_t>(j)];
    const double h = downstream ? w : -w;
    const Index col0 = downstream ? 2 * j : 2 * j + 2;
    const Index col1 = 2 * j + 1;
    const Index col2 = downstream ? 2 * j + 2 : 2 * j;

    const VectorXd a0 = atten;
    const VectorXd f_half = (-(sign_a.array() * alpha_a.array()) * (h / 2.0)).exp();
    const VectorXd ah = a0.cwiseProduct(f_half);
    const VectorXd a1 = ah.cwiseProduct(f_half);

    coupling_at(col0, q, a0, c);
    k1.array() = sign_a.array() * q.array() * c.array();
    p_here.array() = a0.array() * q.array();
    dp_here.array() = sign_a.array() * p_here.array() * (c.array() - alpha_a.array());
    if (s == 0) write_active(col0, p_here);  // launch-end boundary values
    if (pending_mid >= 0) {
      write_active(pending_mid,
                   0.5 * (p_prev + p_here) + (pending_h / 8.0) * (dp_prev - dp_here));
    }
    p_prev = p_here;
    dp_prev = dp_here;

    stage = q + (h / 2.0) * k1;
    coupling_at(col1, stage, ah, c);
    k2.array() = sign_a.array() * stage.array() * c.array();
    stage = q + (h / 2.0) * k2;
    coupling_at(col1, stage, ah, c);
    k3.array() = sign_a.array() * stage.array() * c.array();
    stage = q + h * k3;
    coupling_at(col2, stage, a1, c);
    k4.array() = sign_a.array() * stage.array() * c.array();

    q += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    atten = a1;

    for (Index a = 0; a < na; ++a) {
      const double pw = atten(a) * q(a);
      if (!std::isfinite(pw) || pw < kNegativePowerTol)
        throw NumericBlowup("power of wave " +
                            std::to_string(active[static_cast<std::size_t>(a)]) + " became " +
                            std::to_string(pw) + " W during propagation");
      if (pw < 0.0) q(a) = 0.0;
    }

    p_here.array() = atten.array() * q.array();
    write_active(col2, p_here);
    pending_mid = col1;
    pending_h = h;
  }

  // resolve the last midpoint with a derivative at the final column
  const Index last_col = downstream ? sys.n_cols() - 1 : 0;
  coupling_at(last_col, q, atten, c);
  p_here.array() = atten.array() * q.array();
  dp_here.array() = sign_a.array() * p_here.array() * (c.array() - alpha_a.array());
  if (pending_mid >= 0) {
    write_active(pending_mid, 0.5 * (p_prev + p_here) + (pending_h / 8.0) * (dp_prev - dp_here));
  }

  return atten.cwiseProduct(q);
}

void validate_waves(const std::vector<Wave>& waves, double step_m) {
  if (waves.empty()) throw std::invalid_argument("propagate: need at least one wave");
  if (!(step_m > 0.0)) throw std::invalid_argument("propagate: step_m must be > 0");
  for (const auto& w : waves) {
    if (!(w.freq_thz > 0.0)) throw std::invalid_argument("propagate: wave freq_thz must be > 0");
    if (w.input_power_w < 0.0)
      throw std::invalid_argument("propagate: input powers must be >= 0");
    if (w.kind == WaveKind::signal && w.direction != Direction::forward)
      throw std::invalid_argument("propagate: signals are always forward");
  }
}

/// Attenuation-only profile of one wave over the half-step grid, decaying
/// away from its launch end.
void seed_attenuation_profile(const CoupledSystem& sys, Index i, double input_w,
                              MatrixXd& field) {
  const bool fwd = sys.sign(i) > 0;
  double z = 0.0;
  Index col = 0;
  auto put = [&](double zz) {
    const double dist = fwd ? zz : sys.length_km - zz;
    field(i, col++) = input_w * std::exp(-sys.alpha(i) * dist);
  };
  put(0.0);
  for (double w : sys.step_widths_km) {
    put(z + w / 2.0);
    put(z + w);
    z += w;
  }
}

double mismatch_db(double got_w, double want_w) {
  if (got_w <= 0.0 && want_w <= 0.0) return 0.0;
  if (got_w <= 0.0 || want_w <= 0.0) return std::numeric_limits<double>::infinity();
  return std::abs(10.0 * std::log10(got_w / want_w));
}

}  // namespace

std::vector<double> integrate_pass(const FiberSpec& fiber, const std::vector<Wave>& waves,
                                   std::span<const double> start_powers_w, double step_m,
                                   bool from_near_end) {
  validate_waves(waves, step_m);
  if (start_powers_w.size() != waves.size())
    throw DimensionMismatch("integrate_pass: state size != wave count");
  const CoupledSystem sys = build_system(fiber, waves, step_m);
  std::vector<Index> all(waves.size());
  for (std::size_t i = 0; i < waves.size(); ++i) all[i] = static_cast<Index>(i);
  MatrixXd field = MatrixXd::Zero(sys.size(), sys.n_cols());
  VectorXd p0 = Eigen::Map<const VectorXd>(start_powers_w.data(),
                                           static_cast<Index>(start_powers_w.size()));
  VectorXd out = rk4_sweep(sys, all, p0, from_near_end, field);
  return {out.data(), out.data() + out.size()};
}

std::vector<double> propagate(const FiberSpec& fiber, const std::vector<Wave>& waves,
                              const PropagationOptions& opts) {
  validate_waves(waves, opts.step_m);
  fiber.validate();
  const auto n = static_cast<Index>(waves.size());
  const CoupledSystem sys = build_system(fiber, waves, opts.step_m);

  std::vector<Index> fwd_idx, bwd_idx;
  for (Index i = 0; i < n; ++i)
    (sys.sign(i) > 0 ? fwd_idx : bwd_idx).push_back(i);

  VectorXd inputs(n);
  for (Index i = 0; i < n; ++i) inputs(i) = waves[static_cast<std::size_t>(i)].input_power_w;

  MatrixXd field = MatrixXd::Zero(n, sys.n_cols());

  auto gather = [&](const std::vector<Index>& idx) {
    VectorXd v(static_cast<Index>(idx.size()));
    for (Index a = 0; a < v.size(); ++a) v(a) = inputs(idx[static_cast<std::size_t>(a)]);
    return v;
  };

  if (fwd_idx.empty() || bwd_idx.empty()) {
    // Same-direction set: one pass from the common launch end.
    const bool downstream = bwd_idx.empty();
    const auto& idx = downstream ? fwd_idx : bwd_idx;
    VectorXd out = rk4_sweep(sys, idx, gather(idx), downstream, field);
    return {out.data(), out.data() + out.size()};
  }

  // Mixed directions. Forward waves are integrated downstream against a
  // frozen backward field and vice versa (each set in its own stable
  // direction); the backward profile estimate starts attenuation-only and is
  // relaxed in dB after every round trip. Convergence is measured at the
  // z = 0 boundary: the backward waves' recomputed exit powers against the
  // previous estimate.
  for (Index i : bwd_idx) seed_attenuation_profile(sys, i, inputs(i), field);

  const VectorXd fwd_in = gather(fwd_idx);
  const VectorXd bwd_in = gather(bwd_idx);
  const auto nb = static_cast<Index>(bwd_idx.size());

  for (int iter = 0; iter < opts.max_shooting_iterations; ++iter) {
    VectorXd fwd_out = rk4_sweep(sys, fwd_idx, fwd_in, true, field);

    MatrixXd prev_bwd(nb, field.cols());
    for (Index a = 0; a < nb; ++a) prev_bwd.row(a) = field.row(bwd_idx[static_cast<std::size_t>(a)]);

    VectorXd bwd_out = rk4_sweep(sys, bwd_idx, bwd_in, false, field);

    double worst = 0.0;
    for (Index a = 0; a < nb; ++a)
      worst = std::max(worst, mismatch_db(bwd_out(a), prev_bwd(a, 0)));

    if (worst < opts.boundary_tol_db) {
      // One more downstream pass so the reported forward outputs see the
      // accepted backward profile.
      fwd_out = rk4_sweep(sys, fwd_idx, fwd_in, true, field);
      std::vector<double> out(static_cast<std::size_t>(n));
      for (std::size_t a = 0; a < fwd_idx.size(); ++a)
        out[static_cast<std::size_t>(fwd_idx[a])] = fwd_out(static_cast<Index>(a));
      for (std::size_t a = 0; a < bwd_idx.size(); ++a)
        out[static_cast<std::size_t>(bwd_idx[a])] = bwd_out(static_cast<Index>(a));
      return out;
    }

    // dB-domain relaxation of the backward profile toward the new sweep
    for (Index a = 0; a < nb; ++a) {
      const Index i = bwd_idx[static_cast<std::size_t>(a)];
      for (Index col = 0; col < field.cols(); ++col) {
        const double prev = prev_bwd(a, col);
        const double raw = field(i, col);
        if (prev <= 0.0 || raw <= 0.0) continue;  // raw stays (zero-power waves)
        field(i, col) = prev * std::pow(raw / prev, opts.relaxation);
      }
    }
  }
  throw NonConvergence("propagate: boundary iteration exceeded " +
                       std::to_string(opts.max_shooting_iterations) + " iterations");
}

GainProfile net_gain(const FiberSpec& fiber, const ChannelGrid& grid, const PumpSet& pumps,
                     const LaunchProfile& launch, const PropagationOptions& opts) {
  grid.validate();
  pumps.validate();
  if (static_cast<int>(launch.size()) != grid.n_ch)
    throw DimensionMismatch("net_gain: launch profile length " + std::to_string(launch.size()) +
                            " != n_ch " + std::to_string(grid.n_ch));

  std::vector<Wave> waves;
  waves.reserve(launch.size() + pumps.pumps.size());
  for (int i = 0; i < grid.n_ch; ++i) {
    waves.push_back({grid.freq_thz(i),
                     units::dbm_to_watt(launch.per_channel_dbm[static_cast<std::size_t>(i)]),
                     Direction::forward, WaveKind::signal});
  }
  for (const auto& p : pumps.pumps) {
    waves.push_back({units::wavelength_nm_to_freq_thz(p.wavelength_nm), p.power_w,
                     pumps.direction, WaveKind::pump});
  }

  const std::vector<double> out = propagate(fiber, waves, opts);
  GainProfile g;
  g.net_gain_db.resize(launch.size());
  for (std::size_t i = 0; i < launch.size(); ++i)
    g.net_gain_db[i] = units::watt_to_dbm(out[i]) - launch.per_channel_dbm[i];
  return g;
}

}  // namespace ramgain
