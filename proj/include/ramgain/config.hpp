#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "ramgain/dataset.hpp"
#include "ramgain/mlp.hpp"
#include "ramgain/physics.hpp"
#include "ramgain/provenance.hpp"

namespace ramgain {

/// Full run configuration: physics defaults, dataset generation parameters,
/// and training hyperparameters. Loading overlays a (possibly partial) JSON
/// file onto the defaults and validates the result.
struct RunConfig {
  FiberSpec fiber;
  ChannelGrid grid;
  PumpSet pumps = PumpSet::defaults();
  double p_ref_dbm = 14.0;
  double ripple_db = 3.0;
  double pump_power_min_w = 0.0;
  double pump_power_max_w = 0.2;
  std::vector<double> ds2_total_dbm = {15, 16, 17, 18, 19, 20, 21, 22, 23};
  std::vector<double> validation_total_dbm = {14, 15, 16, 17, 18, 19, 20, 21, 22, 23};
  PropagationOptions propagation;
  TrainConfig train;
  int threads = 0;

  void validate() const;

  DatasetParams dataset_params() const;
  std::vector<double> pump_wavelengths_nm() const;

  /// Canonical JSON form (sorted keys); the digest hashes exactly this.
  nlohmann::json to_json() const;
  std::string digest() const;

  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::string& path);
  static RunConfig defaults() { return {}; }
};

}  // namespace ramgain
