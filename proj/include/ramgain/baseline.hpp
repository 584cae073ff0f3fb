#pragma once

#include <span>
#include <string>
#include <vector>

#include "ramgain/dataset.hpp"
#include "ramgain/mlp.hpp"
#include "ramgain/physics.hpp"
#include "ramgain/provenance.hpp"

namespace ramgain {

/// Conventional full-input model: one NN whose input concatenates the pump
/// powers (fixed wavelength order) with the per-channel launch powers in
/// ascending channel-frequency order.
struct BaselineModel {
  Mlp nn;  // [n_pumps + n_ch, 200, n_ch]
  ChannelGrid grid;
  std::vector<double> pump_wavelengths_nm;
};

struct BaselineTraining {
  BaselineModel model;
  double heldout_rmse_db = 0.0;
  TrainResult result;
};

/// Trains on features (pump_powers_w ++ per_channel_dbm) -> net_gain_db over
/// records spanning all total powers; 80/20 split derived from config.seed.
BaselineTraining train_conventional(const std::vector<SampleRecord>& records,
                                    const ChannelGrid& grid, const TrainConfig& config);

GainProfile predict_conventional(const BaselineModel& model,
                                 std::span<const double> pump_powers_w,
                                 const LaunchProfile& launch);

void save_baseline(const BaselineModel& model, const std::string& path,
                   const Provenance& prov = {});
BaselineModel load_baseline(const std::string& path);

}  // namespace ramgain
