#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ramgain/dataset.hpp"
#include "ramgain/mlp.hpp"
#include "ramgain/physics.hpp"
#include "ramgain/profiles.hpp"
#include "ramgain/provenance.hpp"

namespace ramgain {

/// Affine transfer between a gain profile and the base profile at the
/// reference total power: offset (dB), per-channel-index tilt (dB), and
/// dimensionless scale.
struct TransferCoeffs {
  double b1 = 0.0;
  double b2 = 0.0;
  double b3 = 1.0;
};

struct TransferFit {
  TransferCoeffs coeffs;
  double residual_rmse_db = 0.0;
  /// g_base was collinear with [1, n]; b3 was fixed to 1 and (b1, b2) refit.
  bool rank_deficient = false;
};

/// Ordinary least squares of g against [1, n, g_base] with n = (1..N),
/// solved by column-pivoted QR. Profiles must have equal lengths >= 3.
TransferFit fit_transfer_coeffs(const GainProfile& g, const GainProfile& g_base);

/// Element-wise g[i] = b1 + b2 * (i+1) + b3 * g_base[i].
GainProfile apply_transfer(const TransferCoeffs& coeffs, const GainProfile& g_base);

/// The three-step predictor: base-gain NN (pumps -> profile at p_ref), a
/// coefficient NN (pumps, total - p_ref -> transfer coeffs), and the affine
/// transfer above. Prediction consumes only the TOTAL launch power, never
/// the per-channel profile.
struct GreyboxModel {
  Mlp nn1;  // [n_pumps, 200, n_ch]
  Mlp nn2;  // [n_pumps + 1, 50, 30, 3]
  double p_ref_dbm = 14.0;
  ChannelGrid grid;
  std::vector<double> pump_wavelengths_nm;

  std::int64_t parameters() const { return nn1.parameters() + nn2.parameters(); }
};

struct Nn1Training {
  Mlp model;
  double heldout_rmse_db = 0.0;
  TrainResult result;
};

/// Trains the base model on ds1 (all records at p_ref); the 80/20 split is
/// derived from config.seed. Hidden width 200.
Nn1Training train_nn1(const std::vector<SampleRecord>& ds1, double p_ref_dbm,
                      const TrainConfig& config);

struct Nn2Training {
  Mlp model;
  double heldout_rmse_db = 0.0;  // over the 3 coefficient outputs
  int dropped_rank_deficient = 0;
  TrainResult result;
};

/// Labels each ds2 record with the coefficients fitted against its ds1
/// partner's gain (paired by sample_id; pump powers must match), then trains
/// on features (pump_powers_w, total_dbm - p_ref_dbm). The base profile used
/// for the labels is the ds1 oracle gain; pass nn1 to use its prediction
/// instead (experimental alternative). Rank-deficient fits are dropped.
Nn2Training train_nn2(const std::vector<SampleRecord>& ds2,
                      const std::vector<SampleRecord>& ds1, double p_ref_dbm,
                      const TrainConfig& config, const Mlp* nn1_base = nullptr);

/// Step i: base profile from nn1; step ii: coefficients from nn2;
/// step iii: affine transfer.
GainProfile predict(const GreyboxModel& model, std::span<const double> pump_powers_w,
                    double total_launch_dbm);

void save_greybox(const GreyboxModel& model, const std::string& path, const Provenance& prov = {});
GreyboxModel load_greybox(const std::string& path);

}  // namespace ramgain
