#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ramgain/baseline.hpp"
#include "ramgain/dataset.hpp"
#include "ramgain/greybox.hpp"
#include "ramgain/profiles.hpp"
#include "ramgain/provenance.hpp"

namespace ramgain {

struct EvalReport {
  std::vector<double> per_sample_rmse_db;
  double mean_rmse_db = 0.0;
  double max_rmse_db = 0.0;
  double percentile_90_db = 0.0;
  int dataset_size = 0;  // oracle-call budget the model was trained with
  std::string method_tag; // "greybox" | "conventional"
  std::uint64_t seed = 0;
  std::string config_digest;
};

/// Root mean square error between two equal-length profiles, in dB.
double rmse_db(const GainProfile& pred, const GainProfile& truth);

/// Empirical CDF: sorted values paired with cumulative fractions ending at 1.
std::vector<std::pair<double, double>> empirical_cdf(std::span<const double> errors);

/// Percentile by linear interpolation between order statistics at rank
/// p/100 * (n-1); percentile(x, 100) is the max.
double percentile(std::span<const double> errors, double p);

EvalReport evaluate_greybox(const GreyboxModel& model,
                            const std::vector<SampleRecord>& validation);
EvalReport evaluate_conventional(const BaselineModel& model,
                                 const std::vector<SampleRecord>& validation);

struct SweepParams {
  double p_ref_dbm = 14.0;
  ChannelGrid grid;
  std::vector<double> pump_wavelengths_nm;
  TrainConfig train;
  std::string config_digest = "0000000000000000";
};

/// Trained-model pair for one dataset-size budget.
struct SweepCell {
  int dataset_size = 0;
  GreyboxModel greybox;
  BaselineModel conventional;
  EvalReport greybox_report;
  EvalReport conventional_report;
};

/// For each (even) budget B: takes B/2 nested-subsampled (ds1, ds2) pairs,
/// trains the grey-box scheme on them and the conventional model on the
/// union of the same records, then evaluates both on the shared validation
/// set. Subsets are prefixes of one seeded shuffle, so larger budgets
/// contain smaller ones.
std::vector<SweepCell> sweep(const std::vector<SampleRecord>& ds1,
                             const std::vector<SampleRecord>& ds2,
                             const std::vector<SampleRecord>& validation,
                             const std::vector<int>& dataset_sizes, std::uint64_t master_seed,
                             const SweepParams& params);

/// summary.json plus flat errors.csv / cdf.csv tables under out_dir.
void write_report(const std::vector<EvalReport>& reports, const std::string& out_dir,
                  const Provenance& prov = {});

/// Scalar metrics back from summary.json (per-sample errors stay in the CSV).
std::vector<EvalReport> load_report_summary(const std::string& path);

}  // namespace ramgain
