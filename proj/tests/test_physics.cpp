#include <cmath>
#include <vector>

#include "doctest.h"
#include "ramgain/errors.hpp"
#include "ramgain/physics.hpp"
#include "ramgain/rng.hpp"
#include "ramgain/units.hpp"

using namespace ramgain;

namespace {

LaunchProfile flat_profile(double total_dbm, int n_ch) {
  LaunchProfile lp;
  lp.per_channel_dbm.assign(static_cast<std::size_t>(n_ch),
                            total_dbm - 10.0 * std::log10(static_cast<double>(n_ch)));
  return lp;
}

LaunchProfile rippled_profile(double total_dbm, double ripple_db, int n_ch, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> off(static_cast<std::size_t>(n_ch));
  for (auto& o : off) o = rng.uniform(-ripple_db / 2, ripple_db / 2);
  double sum_mw = 0;
  for (double o : off) sum_mw += std::pow(10.0, o / 10.0);
  const double flat = total_dbm - 10.0 * std::log10(sum_mw);
  LaunchProfile lp;
  for (double o : off) lp.per_channel_dbm.push_back(flat + o);
  return lp;
}

// 10-THz-wide test comb with fewer channels than the default grid
ChannelGrid small_grid(int n_ch) {
  ChannelGrid g;
  g.n_ch = n_ch;
  g.start_freq_thz = 186.0;
  g.spacing_ghz = 10000.0 / n_ch;
  return g;
}

}  // namespace

TEST_CASE("raman efficiency triangle") {
  FiberSpec fiber;
  const double ref = fiber.reference_pump_freq_thz;

  CHECK(raman_efficiency(ref, ref, fiber) == 0.0);               // no self-interaction
  CHECK(raman_efficiency(ref, ref + 1.0, fiber) == 0.0);         // negative offset
  CHECK(raman_efficiency(ref, ref - 13.2, fiber) ==
        doctest::Approx(fiber.raman_peak_efficiency).epsilon(1e-12));  // peak
  CHECK(raman_efficiency(ref, ref - 6.6, fiber) ==
        doctest::Approx(0.5 * fiber.raman_peak_efficiency).epsilon(1e-12));  // ramp midpoint
  CHECK(raman_efficiency(ref, ref - 19.8, fiber) == 0.0);        // end of falling edge
  CHECK(raman_efficiency(ref, ref - 25.0, fiber) == 0.0);        // beyond
  // falling edge midpoint
  CHECK(raman_efficiency(ref, ref - 16.5, fiber) ==
        doctest::Approx(0.5 * fiber.raman_peak_efficiency).epsilon(1e-12));
  // pump-frequency scaling
  CHECK(raman_efficiency(ref * 1.02, ref * 1.02 - 13.2, fiber) ==
        doctest::Approx(1.02 * fiber.raman_peak_efficiency).epsilon(1e-12));
}

TEST_CASE("attenuation-only propagation is exact") {
  FiberSpec fiber;  // 0.2 dB/km * 80 km = 16 dB
  std::vector<Wave> waves{{193.0, 1e-3, Direction::forward, WaveKind::signal}};

  for (double step_m : {50.0, 250.0, 1000.0}) {
    PropagationOptions opts;
    opts.step_m = step_m;
    const auto out = propagate(fiber, waves, opts);
    const double loss_db = units::linear_to_db(out[0] / 1e-3);
    CHECK(std::abs(loss_db + 16.0) < 1e-9);
  }

  // with couplings zeroed every wave in a crowded set attenuates exactly
  FiberSpec uncoupled = fiber;
  uncoupled.raman_peak_efficiency = 0.0;
  std::vector<Wave> many;
  for (int i = 0; i < 10; ++i)
    many.push_back({186.0 + i, 1e-3 * (i + 1), Direction::forward, WaveKind::signal});
  many.push_back({206.0, 0.1, Direction::backward, WaveKind::pump});
  PropagationOptions opts;
  opts.step_m = 1000.0;
  const auto out = propagate(uncoupled, many, opts);
  for (std::size_t i = 0; i < many.size(); ++i) {
    const double loss_db = units::linear_to_db(out[i] / many[i].input_power_w);
    CHECK(std::abs(loss_db + 16.0) < 1e-9);
  }
}

TEST_CASE("per-wave attenuation overrides") {
  FiberSpec fiber;
  fiber.atten_overrides.push_back({190.0, 0.3});
  std::vector<Wave> waves{{190.0, 1e-3, Direction::forward, WaveKind::signal},
                          {195.0, 1e-3, Direction::forward, WaveKind::signal}};
  fiber.raman_peak_efficiency = 0.0;
  const auto out = propagate(fiber, waves);
  CHECK(units::linear_to_db(out[0] / 1e-3) == doctest::Approx(-24.0).epsilon(1e-9));
  CHECK(units::linear_to_db(out[1] / 1e-3) == doctest::Approx(-16.0).epsilon(1e-9));
}

TEST_CASE("undepleted-pump on-off gain matches the effective-length formula") {
  FiberSpec fiber;
  const double f_pump = 206.0;
  const double f_probe = f_pump - 13.2;
  const double p0 = 0.25;
  const double probe_w = units::dbm_to_watt(-40.0);

  auto run = [&](double pump_w, Direction dir) {
    std::vector<Wave> waves{{f_pump, pump_w, dir, WaveKind::pump},
                            {f_probe, probe_w, Direction::forward, WaveKind::signal}};
    return propagate(fiber, waves)[1];
  };

  const double alpha = units::atten_db_to_inv_km(fiber.atten_db_per_km);
  const double l_eff = (1.0 - std::exp(-alpha * fiber.length_km)) / alpha;
  const double analytic = std::exp(raman_efficiency(f_pump, f_probe, fiber) * p0 * l_eff);

  SUBCASE("forward pump") {
    const double on_off = run(p0, Direction::forward) / run(0.0, Direction::forward);
    CHECK(std::abs(on_off / analytic - 1.0) < 0.01);
  }
  SUBCASE("backward pump") {
    const double on_off = run(p0, Direction::backward) / run(0.0, Direction::backward);
    CHECK(std::abs(on_off / analytic - 1.0) < 0.01);
  }
}

TEST_CASE("photon number is conserved when loss vanishes") {
  FiberSpec fiber;
  fiber.atten_db_per_km = 1e-30;  // lossless limit; the spec keeps alpha > 0
  std::vector<Wave> waves;
  for (int i = 0; i < 30; ++i)
    waves.push_back({186.0 + 0.33 * i, 2e-3, Direction::forward, WaveKind::signal});
  waves.push_back({206.0, 0.2, Direction::forward, WaveKind::pump});
  waves.push_back({208.0, 0.1, Direction::forward, WaveKind::pump});

  const auto out = propagate(fiber, waves);
  double n_in = 0.0, n_out = 0.0;
  for (std::size_t i = 0; i < waves.size(); ++i) {
    n_in += waves[i].input_power_w / waves[i].freq_thz;
    n_out += out[i] / waves[i].freq_thz;
  }
  CHECK(std::abs(n_out / n_in - 1.0) < 1e-6);
}

TEST_CASE("photon count never increases under loss") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(50);
  LaunchProfile lp = flat_profile(14.0, 50);
  std::vector<Wave> waves;
  for (int i = 0; i < grid.n_ch; ++i)
    waves.push_back({grid.freq_thz(i), units::dbm_to_watt(lp.per_channel_dbm[i]),
                     Direction::forward, WaveKind::signal});
  const auto out = propagate(fiber, waves);
  double n_in = 0.0, n_out = 0.0;
  for (std::size_t i = 0; i < waves.size(); ++i) {
    n_in += waves[i].input_power_w / waves[i].freq_thz;
    n_out += out[i] / waves[i].freq_thz;
  }
  CHECK(n_out < n_in);
}

TEST_CASE("step halving leaves net gain unchanged at 1e-4 dB") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(50);
  PumpSet pumps = PumpSet::defaults();
  const std::vector<double> pw{0.01, 0.16, 0.12, 0.19, 0.13};

  LaunchProfile lp = rippled_profile(14.0, 3.0, grid.n_ch, 42);

  SUBCASE("forward pumps") {
    PumpSet fp = pumps.with_powers(pw);
    fp.direction = Direction::forward;
    PropagationOptions coarse, fine;
    coarse.step_m = 50.0;
    fine.step_m = 25.0;
    const auto g1 = net_gain(fiber, grid, fp, lp, coarse);
    const auto g2 = net_gain(fiber, grid, fp, lp, fine);
    for (int i = 0; i < grid.n_ch; ++i)
      CHECK(std::abs(g1.net_gain_db[i] - g2.net_gain_db[i]) < 1e-4);
  }
  SUBCASE("counter pumps, iteration tolerance tightened below the step error") {
    PumpSet bp = pumps.with_powers(pw);
    PropagationOptions coarse, fine;
    coarse.step_m = 50.0;
    coarse.boundary_tol_db = 1e-7;
    fine = coarse;
    fine.step_m = 25.0;
    const auto g1 = net_gain(fiber, grid, bp, lp, coarse);
    const auto g2 = net_gain(fiber, grid, bp, lp, fine);
    for (int i = 0; i < grid.n_ch; ++i)
      CHECK(std::abs(g1.net_gain_db[i] - g2.net_gain_db[i]) < 1e-4);
  }
}

TEST_CASE("backward pump re-simulated forward reproduces its input") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(40);
  LaunchProfile lp = flat_profile(14.0, grid.n_ch);

  std::vector<Wave> waves;
  for (int i = 0; i < grid.n_ch; ++i)
    waves.push_back({grid.freq_thz(i), units::dbm_to_watt(lp.per_channel_dbm[i]),
                     Direction::forward, WaveKind::signal});
  const double pump_in = 0.2;
  waves.push_back({units::wavelength_nm_to_freq_thz(1454.0), pump_in, Direction::backward,
                   WaveKind::pump});

  PropagationOptions opts;
  const auto out = propagate(fiber, waves, opts);

  // rebuild the z=0 state and run one coupled pass up the fiber
  std::vector<double> z0(waves.size());
  for (std::size_t i = 0; i + 1 < waves.size(); ++i) z0[i] = waves[i].input_power_w;
  z0.back() = out.back();
  const auto at_far = integrate_pass(fiber, waves, z0, opts.step_m, true);

  const double mismatch_db = std::abs(units::watt_to_dbm(at_far.back()) -
                                      units::watt_to_dbm(pump_in));
  CHECK(mismatch_db < opts.boundary_tol_db);
}

TEST_CASE("single pump gain is monotone in pump power") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(40);
  LaunchProfile lp = flat_profile(-40.0 + 10.0 * std::log10(40.0), grid.n_ch);  // -40 dBm/ch

  PumpSet pumps = PumpSet::defaults();
  pumps.direction = Direction::forward;

  Rng rng(7);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<double> base(5);
    for (auto& p : base) p = rng.uniform(0.0, 0.12);
    const auto g0 = net_gain(fiber, grid, pumps.with_powers(base), lp);
    for (int k = 0; k < 5; ++k) {
      auto up = base;
      up[static_cast<std::size_t>(k)] += 0.05;
      const auto g1 = net_gain(fiber, grid, pumps.with_powers(up), lp);
      for (int i = 0; i < grid.n_ch; ++i)
        CHECK(g1.net_gain_db[i] >= g0.net_gain_db[i] - 1e-9);
    }
  }
}

TEST_CASE("net gain of a single unpumped channel is the fiber loss") {
  FiberSpec fiber;
  ChannelGrid grid;
  grid.n_ch = 1;
  grid.start_freq_thz = 191.0;
  PumpSet pumps = PumpSet::defaults();  // all pump powers zero
  LaunchProfile lp;
  lp.per_channel_dbm = {14.0};
  const auto g = net_gain(fiber, grid, pumps, lp);
  CHECK(std::abs(g.net_gain_db[0] + 16.0) < 1e-6);
}

TEST_CASE("strong launch with limited pumps keeps net gain negative") {
  FiberSpec fiber;
  ChannelGrid grid;  // full 200-channel default grid
  PumpSet pumps = PumpSet::defaults().with_powers(std::vector<double>{0.01, 0.16, 0.12, 0.19, 0.13});
  LaunchProfile lp = rippled_profile(23.0, 3.0, grid.n_ch, 11);
  const auto g = net_gain(fiber, grid, pumps, lp);
  REQUIRE(g.size() == 200);
  for (double v : g.net_gain_db) CHECK(v < 0.0);
}

TEST_CASE("gain profile barely moves when the launch shape changes") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(50);
  PumpSet pumps = PumpSet::defaults().with_powers(std::vector<double>{0.01, 0.16, 0.12, 0.19, 0.13});
  const auto g1 = net_gain(fiber, grid, pumps, rippled_profile(14.0, 3.0, grid.n_ch, 100));
  const auto g2 = net_gain(fiber, grid, pumps, rippled_profile(14.0, 3.0, grid.n_ch, 200));
  for (int i = 0; i < grid.n_ch; ++i)
    CHECK(std::abs(g1.net_gain_db[i] - g2.net_gain_db[i]) < 0.05);
}

TEST_CASE("propagate rejects bad inputs") {
  FiberSpec fiber;
  CHECK_THROWS_AS(propagate(fiber, {}), std::invalid_argument);

  std::vector<Wave> neg{{193.0, -1e-3, Direction::forward, WaveKind::signal}};
  CHECK_THROWS_AS(propagate(fiber, neg), std::invalid_argument);

  std::vector<Wave> bwd_signal{{193.0, 1e-3, Direction::backward, WaveKind::signal}};
  CHECK_THROWS_AS(propagate(fiber, bwd_signal), std::invalid_argument);

  std::vector<Wave> ok{{193.0, 1e-3, Direction::forward, WaveKind::signal}};
  PropagationOptions bad_step;
  bad_step.step_m = 0.0;
  CHECK_THROWS_AS(propagate(fiber, ok, bad_step), std::invalid_argument);
}

TEST_CASE("iteration cap raises NonConvergence") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(20);
  PumpSet pumps = PumpSet::defaults().with_powers(std::vector<double>{0.2, 0.2, 0.2, 0.2, 0.2});
  LaunchProfile lp = flat_profile(23.0, grid.n_ch);
  PropagationOptions opts;
  opts.max_shooting_iterations = 1;
  CHECK_THROWS_AS(net_gain(fiber, grid, pumps, lp, opts), NonConvergence);
}

TEST_CASE("wild steps blow up loudly instead of going negative") {
  FiberSpec fiber;
  fiber.raman_peak_efficiency = 3.0;  // exaggerated coupling
  std::vector<Wave> waves{{206.0, 5.0, Direction::forward, WaveKind::pump},
                          {192.8, 2.0, Direction::forward, WaveKind::signal}};
  PropagationOptions opts;
  opts.step_m = 80000.0;  // one step across the whole fiber
  CHECK_THROWS_AS(propagate(fiber, waves, opts), NumericBlowup);
}

TEST_CASE("net gain validates profile length") {
  FiberSpec fiber;
  ChannelGrid grid = small_grid(8);
  PumpSet pumps = PumpSet::defaults();
  LaunchProfile lp = flat_profile(14.0, 7);
  CHECK_THROWS_AS(net_gain(fiber, grid, pumps, lp), DimensionMismatch);
}
