#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "ramgain/errors.hpp"
#include "ramgain/units.hpp"

namespace ramgain {

/// Per-channel launch powers at the fiber entrance, index-aligned with the
/// channel grid. total_dbm / ripple_db are derived, not stored.
struct LaunchProfile {
  std::vector<double> per_channel_dbm;

  std::size_t size() const { return per_channel_dbm.size(); }

  double total_dbm() const {
    double sum_mw = 0.0;
    for (double p : per_channel_dbm) sum_mw += std::pow(10.0, p / 10.0);
    return 10.0 * std::log10(sum_mw);
  }

  double ripple_db() const {
    if (per_channel_dbm.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(per_channel_dbm.begin(), per_channel_dbm.end());
    return *hi - *lo;
  }
};

/// Per-channel net gain in dB: output power minus launch power. Negative
/// when the Raman gain under-compensates fiber attenuation.
struct GainProfile {
  std::vector<double> net_gain_db;

  std::size_t size() const { return net_gain_db.size(); }
  double operator[](std::size_t i) const { return net_gain_db[i]; }
};

}  // namespace ramgain
