#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ramgain/physics.hpp"
#include "ramgain/profiles.hpp"
#include "ramgain/provenance.hpp"

namespace ramgain {

enum class DatasetTag { ds1, ds2, validation };

std::string to_string(DatasetTag tag);
DatasetTag dataset_tag_from_string(const std::string& s);

/// One oracle-labelled sample. ds2 records pair with the ds1 record of the
/// same sample_id and carry identical pump powers.
struct SampleRecord {
  std::int64_t sample_id = 0;
  std::vector<double> pump_powers_w;
  LaunchProfile launch;
  GainProfile gain;
  DatasetTag tag = DatasetTag::ds1;
  std::uint64_t rng_seed = 0;
};

/// Everything sample generation needs besides the sample count and seed.
struct DatasetParams {
  FiberSpec fiber;
  ChannelGrid grid;
  PumpSet pump_template;  // wavelengths + direction; powers are drawn per sample
  double p_ref_dbm = 14.0;
  double ripple_db = 3.0;
  double pump_power_min_w = 0.0;
  double pump_power_max_w = 0.2;
  std::vector<double> ds2_total_dbm_choices = {15, 16, 17, 18, 19, 20, 21, 22, 23};
  std::vector<double> validation_total_dbm_choices = {14, 15, 16, 17, 18, 19, 20, 21, 22, 23};
  PropagationOptions propagation;
  int threads = 0;  // 0 = hardware concurrency
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Random ripple around a flat level, then a uniform dB shift (which
/// preserves the ripple exactly) placing the mW-sum at total_dbm.
LaunchProfile gen_launch_profile(double total_dbm, double ripple_db, int n_ch,
                                 std::uint64_t seed);

/// Pump powers i.i.d. uniform on [pump_power_min_w, pump_power_max_w], fresh
/// rippled profile at p_ref_dbm, oracle-labelled net gain. Per-sample seeds
/// come from derive_seed(master, sample_id, tag), so generation order (and
/// thread scheduling) cannot change the result.
std::vector<SampleRecord> gen_dataset1(const DatasetParams& params, int n_samples,
                                       std::uint64_t seed, const ProgressFn& progress = {});

/// One record per ds1 record: identical pump powers, total launch power
/// drawn from ds2_total_dbm_choices, fresh rippled profile.
std::vector<SampleRecord> gen_dataset2(const DatasetParams& params,
                                       const std::vector<SampleRecord>& ds1, std::uint64_t seed,
                                       const ProgressFn& progress = {});

/// Independent validation samples: fresh pumps, totals drawn from
/// validation_total_dbm_choices.
std::vector<SampleRecord> gen_validation(const DatasetParams& params, int n_samples,
                                         std::uint64_t seed, const ProgressFn& progress = {});

/// Line-delimited records, one self-describing object per line, preceded by
/// a header object. load(save(x)) is the identity on every field at full
/// float precision, and files are byte-identical across reruns.
void save_dataset(const std::vector<SampleRecord>& records, const std::string& path,
                  const Provenance& prov = {});
std::vector<SampleRecord> load_dataset(const std::string& path);

/// Deterministic shuffled split; a pure function of (n, test_fraction, seed).
/// Index lists are returned sorted; no index appears in both.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double test_fraction, std::uint64_t seed);

}  // namespace ramgain
